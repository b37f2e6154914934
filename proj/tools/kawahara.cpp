#include <iostream>
#include <regex>

#include "CLI11.hpp"
#include "kawahara/cli.hpp"

namespace kc = kawahara::cli;

int main(int argc, char** argv) {
  CLI::App app{"Symmetry analysis and exact solutions of generalized Kawahara equations"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string config_path;
  std::optional<double> rtol;
  std::string grid, case_tag, subalgebra, out_dir;

  for (const auto& name : kc::command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("config", config_path, "job configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--rtol", rtol, "ODE relative tolerance (default 1e-8, atol = rtol/100)");
    sub->add_option("--grid", grid, "output grid size NTxNX (default 21x21)");
    sub->add_option("--case", case_tag, "require this classification case");
    sub->add_option("--subalgebra", subalgebra, "subalgebra label for reduce");
    sub->add_option("--out-dir", out_dir, "directory for the JSON report and CSV files");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kc::config_error;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  kc::Overrides ov;
  ov.rtol = rtol;
  if (!case_tag.empty()) ov.case_tag = case_tag;
  if (!subalgebra.empty()) ov.subalgebra = subalgebra;
  if (!out_dir.empty()) ov.out_dir = out_dir;
  if (!grid.empty()) {
    std::smatch m;
    static const std::regex pattern(R"((\d+)[xX](\d+))");
    if (!std::regex_match(grid, m, pattern)) {
      std::cerr << "error: --grid expects NTxNX, e.g. 41x81\n";
      return kc::config_error;
    }
    ov.grid = std::make_pair(std::stoi(m[1]), std::stoi(m[2]));
  }

  kc::CommandResult result;
  try {
    result = kc::run(command, kc::load_config(config_path), ov);
  } catch (const kc::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kc::config_error;
  }

  std::cout << kc::to_text(result.report);
  if (result.report.contains("error")) std::cerr << "error: " << result.report["error"].get<std::string>() << '\n';
  if (result.report.contains("classification") && result.report["classification"].contains("summary"))
    std::cerr << result.report["classification"]["summary"].get<std::string>() << '\n';
  if (ov.out_dir) {
    try {
      kc::write_outputs(result, command, *ov.out_dir);
    } catch (const std::exception& e) {
      std::cerr << "error: cannot write outputs: " << e.what() << '\n';
      return kc::config_error;
    }
  }
  return result.exit_code;
}
