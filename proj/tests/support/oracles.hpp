#pragma once

// Test-only oracles, independent of the library paths they check:
//  - oracle_phi: normal CDF from an erf Taylor series / erfc continued
//    fraction, no std::erfc;
//  - mc_group_errors: streaming Monte Carlo group errors using
//    std::normal_distribution and Eigen's LLT (not the library samplers);
//  - random_model: model generator for property tests;
//  - small statistics helpers.

#include "wgelab/closed_form.hpp"
#include "wgelab/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace wgelab::testing {

// erf by Taylor series; adequate to ~1e-16 for |x| <= 2.
inline double erf_series(double x) {
  const double x2 = x * x;
  double term = x;
  double sum = x;
  for (int k = 1; k < 200; ++k) {
    term *= -x2 / k;
    const double add = term / (2 * k + 1);
    sum += add;
    if (std::abs(add) < 1e-18 * std::abs(sum)) break;
  }
  return 2.0 / std::sqrt(std::numbers::pi) * sum;
}

// erfc by the Laplace continued fraction (modified Lentz), for x > 2:
//   erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
inline double erfc_continued_fraction(double x) {
  const double tiny = 1e-300;
  double f = x;
  double c = f;
  double d = 0.0;
  for (int k = 1; k < 300; ++k) {
    const double a = k / 2.0;
    d = x + a * d;
    if (std::abs(d) < tiny) d = tiny;
    c = x + a / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return std::exp(-x * x) / std::sqrt(std::numbers::pi) / f;
}

inline double erfc_oracle(double x) {
  if (x < 0.0) return 2.0 - erfc_oracle(-x);
  if (x <= 2.0) return 1.0 - erf_series(x);
  return erfc_continued_fraction(x);
}

inline double oracle_phi(double z) { return 0.5 * erfc_oracle(-z / std::numbers::sqrt2); }

// Streaming Monte Carlo estimate of each group's misclassification rate.
struct McErrors {
  std::array<double, 4> err{};
  std::array<std::size_t, 4> count{};
};

inline McErrors mc_group_errors(const model::GaussianGroupModel& m,
                                const closed_form::LinearModel& theta, std::size_t n,
                                unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::LLT<Matrix> llt(m.sigma().matrix());
  const Matrix l = llt.matrixL();

  const auto groups = model::all_groups();
  std::array<double, 4> cum{};
  std::array<Vector, 4> means;
  double acc = 0.0;
  for (int g = 0; g < 4; ++g) {
    acc += m.group_prior(groups[g]);
    cum[g] = acc;
    means[g] = m.group_mean(groups[g]);
  }
  cum[3] = 1.0;

  std::array<std::size_t, 4> wrong{};
  McErrors out;
  Vector z(m.dim());
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unif(gen);
    int g = 0;
    while (g < 3 && u > cum[g]) ++g;
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = gauss(gen);
    const Vector x = means[g] + l * z;
    const int pred = theta.score(x) > 0.5 ? 1 : 0;
    ++out.count[g];
    if (pred != groups[g].y) ++wrong[g];
  }
  for (int g = 0; g < 4; ++g)
    out.err[g] = out.count[g] ? static_cast<double>(wrong[g]) / out.count[g] : 0.0;
  return out;
}

// Random model with moderate conditioning. When orthogonal, delta_c is
// projected orthogonal to delta_d in the Sigma^{-1} inner product; the
// Mahalanobis lengths are scaled into ranges where worst-group errors are
// numerically informative.
inline model::GaussianGroupModel random_model(std::mt19937_64& gen, int p, bool orthogonal,
                                              double pi0_lo = 0.02, double pi0_hi = 0.24) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Matrix a(p, p);
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < p; ++c) a(r, c) = gauss(gen);
  Matrix sigma = a * a.transpose() / p + 0.3 * Matrix::Identity(p, p);
  Eigen::LDLT<Matrix> ldlt(sigma);

  auto random_vec = [&] {
    Vector v(p);
    for (int k = 0; k < p; ++k) v[k] = gauss(gen);
    return v;
  };
  auto maha_sq = [&](const Vector& v) { return v.dot(ldlt.solve(v)); };

  Vector dd = random_vec();
  dd *= (0.8 + 3.2 * unif(gen)) / std::sqrt(maha_sq(dd));

  Vector dc;
  for (;;) {
    dc = random_vec();
    if (orthogonal) dc -= (dc.dot(ldlt.solve(dd)) / maha_sq(dd)) * dd;
    const double len = std::sqrt(maha_sq(dc));
    if (len > 1e-6) {
      dc *= (0.5 + 2.5 * unif(gen)) / len;
      break;
    }
  }

  Vector mu_base(p);
  for (int k = 0; k < p; ++k) mu_base[k] = 2.0 * unif(gen) - 1.0;
  const double pi0 = pi0_lo + (pi0_hi - pi0_lo) * unif(gen);
  return model::GaussianGroupModel(std::move(mu_base), std::move(dc), std::move(dd),
                                   numerics::SPDMatrix(std::move(sigma)), pi0);
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double pop_std(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Kolmogorov-Smirnov distance of a sample to Uniform(0,1).
inline double ks_uniform(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    ks = std::max(ks, std::abs((i + 1) / n - v[i]));
    ks = std::max(ks, std::abs(v[i] - i / n));
  }
  return ks;
}

// The synthetic geometry used throughout the tests: orthogonal mean
// differences, strongly correlated covariance, 1/64 minority prior.
inline model::GaussianGroupModel reference_model(double pi0 = 1.0 / 64.0) {
  Vector mu0 = Vector::Zero(2);
  Vector dc(2);
  dc << 0.0, 0.25;
  Vector dd(2);
  dd << -0.25, -0.25;
  Matrix sigma(2, 2);
  sigma << 0.002, 0.002, 0.002, 0.003;
  return model::GaussianGroupModel(mu0, dc, dd, numerics::SPDMatrix(sigma), pi0);
}

}  // namespace wgelab::testing
