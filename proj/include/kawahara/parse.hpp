#pragma once

// Recursive-descent parser for the expression grammar
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | name '(' expr ')' | '(' expr ')'

#include <cctype>
#include <charconv>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kawahara/expr.hpp"

namespace kawahara {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, std::size_t offset, std::vector<std::string> expected)
      : std::runtime_error(compose(message, offset, expected)),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  static std::string compose(const std::string& message, std::size_t offset,
                             const std::vector<std::string>& expected) {
    std::string out = message + " at offset " + std::to_string(offset);
    if (!expected.empty()) {
      out += "; expected one of:";
      for (const auto& e : expected) out += " " + e;
    }
    return out;
  }

  std::size_t offset_;
  std::vector<std::string> expected_;
};

class UnknownIdentifier : public ParseError {
 public:
  UnknownIdentifier(std::string identifier, std::size_t offset)
      : ParseError("unknown identifier '" + identifier + "'", offset, {}),
        identifier_(std::move(identifier)) {}
  const std::string& identifier() const { return identifier_; }

 private:
  std::string identifier_;
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, const std::set<std::string>& names) : text_(text), names_(names) {}

  Expr parse() {
    skip();
    if (pos_ >= text_.size()) fail("empty expression", {"number", "identifier", "(", "-"});
    Expr e = expr();
    skip();
    if (pos_ < text_.size()) fail("unexpected character", {"+", "-", "*", "/", "^", "end of input"});
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::vector<std::string> expected) const {
    throw ParseError(what, pos_, std::move(expected));
  }

  void skip() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                   text_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept('+')) {
        e = e + term();
      } else if (accept('-')) {
        e = e - term();
      } else {
        return e;
      }
    }
  }

  Expr term() {
    Expr e = unary();
    for (;;) {
      if (accept('*')) {
        e = e * unary();
      } else if (accept('/')) {
        e = e / unary();
      } else {
        return e;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) return pow(base, unary());
    return base;
  }

  static bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
  static bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

  Expr primary() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of input", {"number", "identifier", "("});
    const unsigned char c = static_cast<unsigned char>(text_[pos_]);
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (!accept(')')) fail("unbalanced parenthesis", {")"});
      return e;
    }
    if (std::isdigit(c) || c == '.') return number();
    if (ident_start(c)) return identifier();
    fail("unexpected character", {"number", "identifier", "("});
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        while (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) ++p;
        pos_ = p;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      pos_ = start;
      fail("malformed number", {"number"});
    }
    return Expr(v);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    if (name == "\xCF\x89") name = "omega";

    static const std::map<std::string, Op> functions = {
        {"exp", Op::Exp},   {"ln", Op::Ln},     {"log", Op::Ln},     {"sqrt", Op::Sqrt},
        {"sin", Op::Sin},   {"cos", Op::Cos},   {"tanh", Op::Tanh},  {"arctan", Op::Atan},
        {"atan", Op::Atan},
    };
    if (auto it = functions.find(name); it != functions.end()) {
      if (!accept('(')) fail("function '" + name + "' requires an argument", {"("});
      Expr a = expr();
      if (!accept(')')) fail("unbalanced parenthesis", {")"});
      return detail::unary(it->second, a);
    }
    if (name == "pi") return Expr(3.14159265358979323846);
    if (names_.count(name) == 0) throw UnknownIdentifier(name, start);
    return Expr::variable(name);
  }

  std::string_view text_;
  const std::set<std::string>& names_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline const std::set<std::string>& builtin_variables() {
  static const std::set<std::string> names = {"t", "x", "u", "omega"};
  return names;
}

// Parses text; identifiers must be built-in variables or listed parameters.
inline Expr parse(std::string_view text, const std::vector<std::string>& parameters = {}) {
  std::set<std::string> names = builtin_variables();
  names.insert(parameters.begin(), parameters.end());
  return detail::Parser(text, names).parse();
}

// Parses text and binds the named parameters to numbers.
inline Expr parse(std::string_view text, const std::map<std::string, double>& parameters) {
  std::vector<std::string> names;
  for (const auto& [k, v] : parameters) names.push_back(k);
  return substitute(parse(text, names), parameters);
}

}  // namespace kawahara
