#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace proprio {

struct PolyFit {
  std::vector<double> coeffs;  // ascending powers
  double rms_residual = 0.0;
  double max_residual = 0.0;

  double operator()(double x) const;
};

/// Least-squares polynomial of the given degree. Throws ValidationError when
/// fewer than degree + 1 distinct abscissae make the system rank deficient.
PolyFit fit_polynomial(std::span<const double> x, std::span<const double> y, std::size_t degree);

}  // namespace proprio
