#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "persist/chain.hpp"
#include "persist/error.hpp"

namespace persist {

// Accepts a decimal ("0.25", "-1", "1e-3") or a ratio of two decimals ("1/3").
inline double parse_number(std::string_view tok, long line) {
  auto one = [&](std::string_view s) {
    double v = 0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (!s.empty() && *b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || s.empty())
      throw Error(Errc::parse_error, "line " + std::to_string(line) + ": bad number '" +
                                         std::string(tok) + "'",
                  line);
    return v;
  };
  auto slash = tok.find('/');
  if (slash == std::string_view::npos) return one(tok);
  double den = one(tok.substr(slash + 1));
  if (den == 0)
    throw Error(Errc::parse_error, "line " + std::to_string(line) + ": zero denominator", line);
  return one(tok.substr(0, slash)) / den;
}

// Line-based format:
//   # comment
//   states <n>
//   labels <n names>        (optional)
//   P                       followed by n rows of n probabilities
//   g                       followed by n values (any line breaks)
inline WalkModel parse_chain_text(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  long line = 0;
  long n = -1;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
  std::vector<long> row_lines;
  std::vector<double> g;
  long g_line = -1;
  enum class Section { header, matrix, functional } section = Section::header;

  auto fail = [&](const std::string& msg) -> Error {
    return Error(Errc::parse_error, "line " + std::to_string(line) + ": " + msg, line);
  };
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    std::istringstream ls(raw);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (toks.empty()) continue;
    const std::string& key = toks[0];
    if (key == "states") {
      if (n >= 0) throw fail("duplicate 'states'");
      if (toks.size() != 2) throw fail("expected 'states <n>'");
      double v = parse_number(toks[1], line);
      if (v < 1 || v != static_cast<long>(v)) throw fail("state count must be a positive integer");
      n = static_cast<long>(v);
      section = Section::header;
    } else if (key == "labels") {
      if (n < 0) throw fail("'labels' before 'states'");
      if (static_cast<long>(toks.size()) != n + 1) throw fail("expected " + std::to_string(n) + " labels");
      labels.assign(toks.begin() + 1, toks.end());
      section = Section::header;
    } else if (key == "P") {
      if (n < 0) throw fail("'P' before 'states'");
      if (toks.size() != 1) throw fail("'P' takes no arguments");
      if (!rows.empty()) throw fail("duplicate 'P'");
      section = Section::matrix;
    } else if (key == "g") {
      if (n < 0) throw fail("'g' before 'states'");
      if (g_line >= 0) throw fail("duplicate 'g'");
      g_line = line;
      section = Section::functional;
      for (std::size_t i = 1; i < toks.size(); ++i) g.push_back(parse_number(toks[i], line));
    } else if (section == Section::matrix) {
      if (static_cast<long>(rows.size()) >= n) throw fail("too many matrix rows");
      if (static_cast<long>(toks.size()) != n)
        throw fail("row has " + std::to_string(toks.size()) + " entries, expected " + std::to_string(n));
      std::vector<double> row;
      for (const auto& t : toks) row.push_back(parse_number(t, line));
      rows.push_back(std::move(row));
      row_lines.push_back(line);
    } else if (section == Section::functional) {
      for (const auto& t : toks) g.push_back(parse_number(t, line));
    } else {
      throw fail("unexpected token '" + key + "'");
    }
  }
  if (n < 0) throw Error(Errc::parse_error, "missing 'states'", line);
  if (static_cast<long>(rows.size()) != n)
    throw Error(Errc::parse_error, "expected " + std::to_string(n) + " matrix rows, found " +
                                       std::to_string(rows.size()),
                line);
  if (static_cast<long>(g.size()) != n)
    throw Error(Errc::parse_error, "expected " + std::to_string(n) + " values of g, found " +
                                       std::to_string(g.size()),
                g_line >= 0 ? g_line : line);
  Eigen::MatrixXd P(n, n);
  Eigen::VectorXd gv(n);
  for (long i = 0; i < n; ++i) {
    gv(i) = g[static_cast<std::size_t>(i)];
    for (long j = 0; j < n; ++j) P(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  try {
    return make_walk_model(make_spec(P, labels), gv);
  } catch (const Error& e) {
    bool row_error = e.code() == Errc::not_stochastic || e.code() == Errc::negative_entry;
    if (row_error && e.where() >= 0 && e.where() < n) {
      long at = row_lines[static_cast<std::size_t>(e.where())];
      throw Error(e.code(), e.detail() + " (line " + std::to_string(at) + ")", at);
    }
    throw;
  }
}

inline WalkModel parse_chain_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::parse_error, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_chain_text(ss.str());
}

}  // namespace persist
