#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wnf {

enum class Errc {
  duplicate_points,
  degenerate_tangent,
  singular_system,
  y_not_subset_of_x,
  unsupported_curve,
  non_elliptic_hessian,
  missing_potential,
  dimension_mismatch,
  insufficient_data,
  invalid_argument,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::duplicate_points: return "DuplicatePoints";
    case Errc::degenerate_tangent: return "DegenerateTangent";
    case Errc::singular_system: return "SingularSystem";
    case Errc::y_not_subset_of_x: return "YNotSubsetOfX";
    case Errc::unsupported_curve: return "UnsupportedCurve";
    case Errc::non_elliptic_hessian: return "NonEllipticHessian";
    case Errc::missing_potential: return "MissingPotential";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::insufficient_data: return "InsufficientData";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace wnf
