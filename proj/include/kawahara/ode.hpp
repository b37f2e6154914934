#pragma once

// Dormand-Prince 5(4) integration with dense output.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kawahara {

using State = std::vector<double>;
// dy = f(w, y); dy is presized.
using Rhs = std::function<void(double, const double*, double*)>;

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double initial_step = 0.0;  // 0 selects automatically
  double max_step = 0.0;      // 0 means the span length
  std::size_t max_steps = 1000000;
};

enum class OdeStatus { success, step_underflow, max_steps };

inline const char* to_string(OdeStatus s) {
  switch (s) {
    case OdeStatus::success:
      return "success";
    case OdeStatus::step_underflow:
      return "step size underflow";
    default:
      return "maximum number of steps exceeded";
  }
}

struct OdeStats {
  std::size_t steps = 0;
  std::size_t rejections = 0;
  std::size_t rhs_evaluations = 0;
};

namespace dp5 {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct Step {
  State y1;                 // 5th-order solution
  State err;                // embedded error estimate
  State k1_next;            // f(w + h, y1), reused as k1 of the next step
  std::array<State, 5> r;   // dense-output coefficients
  bool finite = true;
};

// One step from (w, y) with k1 = f(w, y) known.
inline Step step(const Rhs& f, double w, const State& y, const State& k1, double h, OdeStats& st) {
  const std::size_t d = y.size();
  Step out;
  State k2(d), k3(d), k4(d), k5(d), k6(d), k7(d), tmp(d);
  out.y1.resize(d);
  for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * a21 * k1[i];
  f(w + c2 * h, tmp.data(), k2.data());
  for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
  f(w + c3 * h, tmp.data(), k3.data());
  for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  f(w + c4 * h, tmp.data(), k4.data());
  for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  f(w + c5 * h, tmp.data(), k5.data());
  for (std::size_t i = 0; i < d; ++i)
    tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
  f(w + h, tmp.data(), k6.data());
  for (std::size_t i = 0; i < d; ++i)
    out.y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
  f(w + h, out.y1.data(), k7.data());
  st.rhs_evaluations += 6;
  out.err.resize(d);
  for (auto& r : out.r) r.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double dy = out.y1[i] - y[i], bspl = h * k1[i] - dy;
    out.r[0][i] = y[i];
    out.r[1][i] = dy;
    out.r[2][i] = bspl;
    out.r[3][i] = dy - h * k7[i] - bspl;
    out.r[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
    if (!std::isfinite(out.y1[i]) || !std::isfinite(out.err[i]) || !std::isfinite(k7[i])) out.finite = false;
  }
  out.k1_next = std::move(k7);
  return out;
}

}  // namespace dp5

class ODESolution {
 public:
  std::size_t dimension() const { return dim_; }
  double start() const { return mesh_.front(); }
  double target() const { return target_; }
  double reached() const { return mesh_.back(); }
  OdeStatus status() const { return status_; }
  bool success() const { return status_ == OdeStatus::success; }
  const std::string& message() const { return message_; }
  const OdeStats& stats() const { return stats_; }
  const std::vector<double>& mesh() const { return mesh_; }
  const std::vector<State>& states() const { return states_; }

  bool contains(double w) const {
    const double a = std::min(start(), reached()), b = std::max(start(), reached());
    return w >= a && w <= b;
  }

  // Dense output; exact stored states at mesh nodes.
  State operator()(double w) const { return eval(w, false); }
  // Derivative of the dense-output polynomial.
  State derivative(double w) const { return eval(w, true); }

 private:
  friend ODESolution integrate(const Rhs&, const State&, double, double, const OdeOptions&);
  friend ODESolution integrate_fixed(const Rhs&, const State&, double, double, std::size_t);

  State eval(double w, bool deriv) const {
    if (!contains(w)) throw std::out_of_range("ODESolution: w outside the integrated span");
    const bool fwd = reached() >= start();
    std::size_t k;
    if (fwd) {
      k = static_cast<std::size_t>(std::upper_bound(mesh_.begin(), mesh_.end(), w) - mesh_.begin());
    } else {
      k = static_cast<std::size_t>(
          std::upper_bound(mesh_.begin(), mesh_.end(), w, std::greater<double>()) - mesh_.begin());
    }
    if (!deriv) {
      if (k > 0 && mesh_[k - 1] == w) return states_[k - 1];
    }
    if (mesh_.size() == 1) {
      if (deriv) throw std::out_of_range("ODESolution: empty span");
      return states_[0];
    }
    std::size_t s = k == 0 ? 0 : k - 1;
    if (s >= dense_.size()) s = dense_.size() - 1;
    const double h = mesh_[s + 1] - mesh_[s];
    const double th = (w - mesh_[s]) / h, th1 = 1.0 - th;
    const auto& r = dense_[s];
    State out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      const double A = r[3][i] + th1 * r[4][i];
      const double B = r[2][i] + th * A;
      const double C = r[1][i] + th1 * B;
      if (!deriv) {
        out[i] = r[0][i] + th * C;
      } else {
        const double dA = -r[4][i];
        const double dB = A + th * dA;
        const double dC = -B + th1 * dB;
        out[i] = (C + th * dC) / h;
      }
    }
    return out;
  }

  std::size_t dim_ = 0;
  double target_ = 0.0;
  std::vector<double> mesh_;
  std::vector<State> states_;
  std::vector<std::array<State, 5>> dense_;
  OdeStats stats_;
  OdeStatus status_ = OdeStatus::success;
  std::string message_;
};

namespace detail {

inline double error_norm(const State& err, const State& y0, const State& y1, double rtol, double atol) {
  double s = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double sk = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double e = err[i] / sk;
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(err.size()));
}

inline double initial_step(const Rhs& f, double w0, const State& y0, const State& f0, double dir, double hmax,
                           double rtol, double atol, OdeStats& st) {
  const std::size_t d = y0.size();
  double dnf = 0.0, dny = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double sk = atol + rtol * std::abs(y0[i]);
    dnf += (f0[i] / sk) * (f0[i] / sk);
    dny += (y0[i] / sk) * (y0[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, hmax);
  State y1(d), f1(d);
  for (std::size_t i = 0; i < d; ++i) y1[i] = y0[i] + dir * h * f0[i];
  f(w0 + dir * h, y1.data(), f1.data());
  ++st.rhs_evaluations;
  double der2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double sk = atol + rtol * std::abs(y0[i]);
    der2 += ((f1[i] - f0[i]) / sk) * ((f1[i] - f0[i]) / sk);
  }
  der2 = std::sqrt(der2) / h;
  const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.2);
  double out = std::min({100.0 * std::abs(h), h1, hmax});
  if (!std::isfinite(out) || out <= 0.0) out = std::min(1e-6, hmax);
  return out;
}

}  // namespace detail

// Adaptive integration from w0 to w1 (either direction) with PI step control.
inline ODESolution integrate(const Rhs& f, const State& y0, double w0, double w1, const OdeOptions& opt = {}) {
  if (!(opt.rtol >= 1e-13)) throw std::invalid_argument("integrate: rtol must be at least 1e-13");
  if (!(opt.atol > 0.0)) throw std::invalid_argument("integrate: atol must be positive");
  if (y0.empty()) throw std::invalid_argument("integrate: empty initial state");
  ODESolution sol;
  sol.dim_ = y0.size();
  sol.target_ = w1;
  sol.mesh_.push_back(w0);
  sol.states_.push_back(y0);
  if (w0 == w1) return sol;
  const double dir = w1 > w0 ? 1.0 : -1.0;
  const double span = std::abs(w1 - w0);
  const double hmax = opt.max_step > 0.0 ? std::min(opt.max_step, span) : span;
  State y = y0, k1(y0.size());
  f(w0, y.data(), k1.data());
  ++sol.stats_.rhs_evaluations;
  double h = opt.initial_step > 0.0 ? std::min(opt.initial_step, hmax)
                                    : detail::initial_step(f, w0, y0, k1, dir, hmax, opt.rtol, opt.atol, sol.stats_);
  constexpr double beta = 0.04, safe = 0.9, expo1 = 0.2 - beta * 0.75;
  constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
  double facold = 1e-4;
  double w = w0;
  bool last_rejected = false;
  while (true) {
    if (sol.stats_.steps + sol.stats_.rejections >= opt.max_steps) {
      sol.status_ = OdeStatus::max_steps;
      sol.message_ = "maximum number of steps exceeded at w = " + std::to_string(w);
      return sol;
    }
    bool final_step = false;
    if (std::abs(w1 - w) <= h * (1.0 + 1e-12)) {
      h = std::abs(w1 - w);
      final_step = true;
    }
    if (h <= 1e-14 * std::max(1.0, std::abs(w))) {
      sol.status_ = OdeStatus::step_underflow;
      sol.message_ = "step size underflow at w = " + std::to_string(w);
      return sol;
    }
    dp5::Step s = dp5::step(f, w, y, k1, dir * h, sol.stats_);
    double err = s.finite ? detail::error_norm(s.err, y, s.y1, opt.rtol, opt.atol) : std::numeric_limits<double>::infinity();
    if (!std::isfinite(err)) {
      ++sol.stats_.rejections;
      h *= 0.1;
      last_rejected = true;
      continue;
    }
    const double fac11 = std::pow(err, expo1);
    if (err <= 1.0) {
      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(facc2, std::min(facc1, fac / safe));
      double hnew = h / fac;
      facold = std::max(err, 1e-4);
      ++sol.stats_.steps;
      w = final_step ? w1 : w + dir * h;
      y = std::move(s.y1);
      k1 = std::move(s.k1_next);
      sol.mesh_.push_back(w);
      sol.states_.push_back(y);
      sol.dense_.push_back(std::move(s.r));
      if (final_step) return sol;
      if (last_rejected) hnew = std::min(hnew, h);
      h = std::min(hnew, hmax);
      last_rejected = false;
    } else {
      ++sol.stats_.rejections;
      h /= std::min(facc1, fac11 / safe);
      last_rejected = true;
    }
  }
}

// Fixed-step integration with the same tableau and dense output.
inline ODESolution integrate_fixed(const Rhs& f, const State& y0, double w0, double w1, std::size_t nsteps) {
  if (nsteps == 0) throw std::invalid_argument("integrate_fixed: need at least one step");
  ODESolution sol;
  sol.dim_ = y0.size();
  sol.target_ = w1;
  sol.mesh_.push_back(w0);
  sol.states_.push_back(y0);
  State y = y0, k1(y0.size());
  f(w0, y.data(), k1.data());
  ++sol.stats_.rhs_evaluations;
  const double h = (w1 - w0) / static_cast<double>(nsteps);
  for (std::size_t i = 0; i < nsteps; ++i) {
    const double w = w0 + h * static_cast<double>(i);
    dp5::Step s = dp5::step(f, w, y, k1, h, sol.stats_);
    ++sol.stats_.steps;
    y = std::move(s.y1);
    k1 = std::move(s.k1_next);
    sol.mesh_.push_back(i + 1 == nsteps ? w1 : w0 + h * static_cast<double>(i + 1));
    sol.states_.push_back(y);
    sol.dense_.push_back(std::move(s.r));
  }
  return sol;
}

struct ConvergenceResult {
  bool exact = false;               // errors vanish to rounding
  double order = 0.0;               // from the finest pair
  std::vector<std::size_t> steps;
  std::vector<double> errors;       // against the exact or extrapolated reference
};

// Observed order from step halving. Without an exact endpoint value, uses
// differences of successive resolutions.
inline ConvergenceResult convergence_order(const Rhs& f, const State& y0, double w0, double w1,
                                           const std::optional<State>& exact = std::nullopt,
                                           std::size_t base_steps = 8, int levels = 4) {
  ConvergenceResult out;
  std::vector<State> ends;
  for (int l = 0; l < levels; ++l) {
    const std::size_t n = base_steps << l;
    out.steps.push_back(n);
    ends.push_back(integrate_fixed(f, y0, w0, w1, n).states().back());
  }
  auto dist = [](const State& a, const State& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
  };
  double mag = 0.0;
  for (double v : ends.back()) mag = std::max(mag, std::abs(v));
  if (exact) {
    for (const auto& e : ends) out.errors.push_back(dist(e, *exact));
  } else {
    for (std::size_t i = 0; i + 1 < ends.size(); ++i) out.errors.push_back(dist(ends[i], ends[i + 1]));
  }
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, mag);
  if (std::all_of(out.errors.begin(), out.errors.end(), [&](double e) { return e <= floor; })) {
    out.exact = true;
    return out;
  }
  // finest pair whose errors stay above rounding
  for (std::size_t i = out.errors.size() - 1; i >= 1; --i) {
    if (out.errors[i] > 1e3 * floor) {
      out.order = std::log2(out.errors[i - 1] / out.errors[i]);
      break;
    }
    if (i == 1) out.order = std::log2(out.errors[0] / out.errors[1]);
  }
  return out;
}

}  // namespace kawahara
