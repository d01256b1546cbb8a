#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace persist {

enum class Errc {
  not_stochastic,
  negative_entry,
  reducible,
  singular,
  zero_mass_state,
  unknown_preset,
  mean_not_zero,
  no_convergence,
  singular_system,
  defective_matrix,
  non_integer_g,
  cap_too_low,
  too_large,
  empty_window,
  nonpositive_value,
  not_skip_free,
  not_iid,
  ring_too_small,
  parse_error,
  invalid_argument,
};

constexpr std::string_view reason_code(Errc e) {
  switch (e) {
    case Errc::not_stochastic: return "NOT_STOCHASTIC";
    case Errc::negative_entry: return "NEGATIVE_ENTRY";
    case Errc::reducible: return "REDUCIBLE";
    case Errc::singular: return "SINGULAR";
    case Errc::zero_mass_state: return "ZERO_MASS_STATE";
    case Errc::unknown_preset: return "UNKNOWN_PRESET";
    case Errc::mean_not_zero: return "MEAN_NOT_ZERO";
    case Errc::no_convergence: return "NO_CONVERGENCE";
    case Errc::singular_system: return "SINGULAR_SYSTEM";
    case Errc::defective_matrix: return "DEFECTIVE_MATRIX";
    case Errc::non_integer_g: return "NON_INTEGER_G";
    case Errc::cap_too_low: return "CAP_TOO_LOW";
    case Errc::too_large: return "TOO_LARGE";
    case Errc::empty_window: return "EMPTY_WINDOW";
    case Errc::nonpositive_value: return "NONPOSITIVE_VALUE";
    case Errc::not_skip_free: return "NOT_SKIP_FREE";
    case Errc::not_iid: return "NOT_IID";
    case Errc::ring_too_small: return "RING_TOO_SMALL";
    case Errc::parse_error: return "PARSE_ERROR";
    case Errc::invalid_argument: return "INVALID_ARGUMENT";
  }
  return "UNKNOWN";
}

// Numerical failures map to exit code 2 in the CLI; everything else is a
// validation failure.
constexpr bool is_numerical(Errc e) {
  return e == Errc::no_convergence || e == Errc::singular ||
         e == Errc::singular_system || e == Errc::defective_matrix;
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, long where = -1)
      : std::runtime_error(std::string(reason_code(code)) + ": " + message),
        code_(code),
        where_(where),
        detail_(message) {}

  Errc code() const noexcept { return code_; }
  // Row index, line number or site, depending on the raising operation.
  long where() const noexcept { return where_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  long where_;
  std::string detail_;
};

}  // namespace persist
