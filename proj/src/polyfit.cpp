#include "proprio/polyfit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "proprio/types.hpp"

namespace proprio {

double PolyFit::operator()(double x) const {
  double v = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * x + *it;
  return v;
}

PolyFit fit_polynomial(std::span<const double> x, std::span<const double> y, std::size_t degree) {
  if (x.size() != y.size()) throw ValidationError("fit: x and y lengths differ");
  std::vector<double> distinct(x.begin(), x.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < degree + 1) {
    throw ValidationError("rank-deficient fit: degree " + std::to_string(degree) + " needs " +
                          std::to_string(degree + 1) + " distinct abscissae, got " +
                          std::to_string(distinct.size()));
  }

  // Solve in u = x / scale so the Vandermonde columns stay comparable.
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;

  const auto n = static_cast<Eigen::Index>(x.size());
  const auto cols = static_cast<Eigen::Index>(degree + 1);
  Eigen::MatrixXd a(n, cols);
  Eigen::VectorXd b(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double u = x[static_cast<std::size_t>(r)] / scale;
    double p = 1.0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      a(r, c) = p;
      p *= u;
    }
    b(r) = y[static_cast<std::size_t>(r)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < cols) throw ValidationError("rank-deficient fit: design matrix is singular");
  const Eigen::VectorXd sol = qr.solve(b);

  PolyFit fit;
  double s = 1.0;
  for (Eigen::Index c = 0; c < cols; ++c) {
    fit.coeffs.push_back(sol(c) / s);
    s *= scale;
  }
  double ss = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = fit(x[k]) - y[k];
    ss += r * r;
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
  }
  fit.rms_residual = x.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(x.size()));
  return fit;
}

}  // namespace proprio
