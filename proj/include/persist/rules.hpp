#pragma once

#include <cstdint>

namespace persist {

enum class Rule { cca, ghm, fca };

// Local update of a site with color c whose neighbors are l and r. A site
// with a single neighbor passes that neighbor as both l and r.
constexpr std::uint8_t cca_update(std::uint8_t l, std::uint8_t c, std::uint8_t r) {
  std::uint8_t nx = c == 2 ? 0 : c + 1;
  return (l == nx || r == nx) ? nx : c;
}

constexpr std::uint8_t ghm_update(std::uint8_t l, std::uint8_t c, std::uint8_t r) {
  if (c == 0) return (l == 1 || r == 1) ? 1 : 0;
  return c == 2 ? 0 : c + 1;
}

constexpr std::uint8_t fca_update(std::uint8_t l, std::uint8_t c, std::uint8_t r) {
  if (c == 2 && (l == 1 || r == 1)) return 2;
  return c == 2 ? 0 : c + 1;
}

constexpr std::uint8_t local_update(Rule rule, std::uint8_t l, std::uint8_t c,
                                    std::uint8_t r) {
  switch (rule) {
    case Rule::cca: return cca_update(l, c, r);
    case Rule::ghm: return ghm_update(l, c, r);
    case Rule::fca: return fca_update(l, c, r);
  }
  return c;
}

// (b - a) mod 3 mapped 0 -> 0, 1 -> +1, 2 -> -1.
constexpr int mod3_differential(int a, int b) {
  int d = ((b - a) % 3 + 3) % 3;
  return d == 2 ? -1 : d;
}

constexpr int ghm_differential(int a, int b) {
  if (a == 0 && b == 1) return 1;
  if (a == 1 && b == 0) return -1;
  return 0;
}

constexpr int edge_differential(Rule rule, int a, int b) {
  return rule == Rule::ghm ? ghm_differential(a, b) : mod3_differential(a, b);
}

constexpr const char* rule_name(Rule rule) {
  switch (rule) {
    case Rule::cca: return "cca";
    case Rule::ghm: return "ghm";
    case Rule::fca: return "fca";
  }
  return "?";
}

}  // namespace persist
