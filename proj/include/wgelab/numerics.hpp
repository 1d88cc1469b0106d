#pragma once

// Numerical kernels shared by the rest of the library: SPD factorization
// and solves, the standard normal CDF, and seeded samplers. Everything here
// is a pure function over value types; samplers take an explicit seed and
// keep no hidden state, so concurrent use is safe.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wgelab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// 64-bit seed with splitmix64 fan-out. derive() chains, so a master seed
// expands into per-cell / per-trial streams: master.derive(i).derive(j).
struct Seed {
  std::uint64_t value = 0;

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  Seed derive(std::uint64_t salt) const { return Seed{mix(value ^ mix(salt))}; }
};

namespace numerics {

class NotSPD : public Error {
public:
  using Error::Error;
};

class InvalidAlpha : public Error {
public:
  using Error::Error;
};

// Symmetric positive definite matrix with its lower Cholesky factor cached at
// construction. Construction *is* the factorization; a failed pivot throws
// NotSPD, so an SPDMatrix value is always usable.
class SPDMatrix {
public:
  static constexpr double kDefaultPivotTol = 1e-12;
  static constexpr double kSymmetryTol = 1e-12;

  explicit SPDMatrix(Matrix m, double pivot_tol = kDefaultPivotTol)
      : m_(std::move(m)), l_(factorize(m_, pivot_tol)) {}

  const Matrix& matrix() const { return m_; }
  // Lower-triangular L with L L^T = matrix().
  const Matrix& chol() const { return l_; }
  Eigen::Index dim() const { return m_.rows(); }

  Vector solve(const Vector& rhs) const {
    if (rhs.size() != dim()) throw Error("spd_solve: dimension mismatch");
    Vector y = l_.triangularView<Eigen::Lower>().solve(rhs);
    return l_.transpose().triangularView<Eigen::Upper>().solve(y);
  }

private:
  static Matrix factorize(const Matrix& m, double pivot_tol) {
    const Eigen::Index p = m.rows();
    if (p == 0 || m.cols() != p) throw NotSPD("chol_factor: matrix must be square and nonempty");
    if (!m.allFinite()) throw NotSPD("chol_factor: non-finite entries");
    const double scale = m.cwiseAbs().maxCoeff();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale)
      throw NotSPD("chol_factor: matrix not symmetric");
    const double max_diag = m.diagonal().maxCoeff();

    Matrix l = Matrix::Zero(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double pivot = m(j, j) - l.row(j).head(j).squaredNorm();
      if (pivot <= pivot_tol * max_diag)
        throw NotSPD("chol_factor: pivot " + std::to_string(j) + " not positive definite");
      l(j, j) = std::sqrt(pivot);
      const Eigen::Index k = p - j - 1;
      if (k > 0) {
        l.col(j).tail(k) =
            (m.col(j).tail(k) - l.bottomLeftCorner(k, j) * l.row(j).head(j).transpose()) / l(j, j);
      }
    }
    return l;
  }

  Matrix m_;
  Matrix l_;
};

inline SPDMatrix chol_factor(Matrix m, double pivot_tol = SPDMatrix::kDefaultPivotTol) {
  return SPDMatrix(std::move(m), pivot_tol);
}

inline Vector spd_solve(const SPDMatrix& a, const Vector& rhs) { return a.solve(rhs); }

// Standard normal CDF. erfc keeps full relative accuracy in the lower tail,
// which the group-error formulas probe directly.
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Solves (A + v v^T + u u^T) x = u by two chained Sherman-Morrison steps:
//   x = c_u (A^{-1}u - c_v A^{-1}v),  c_v = v^T A^{-1} u / (1 + v^T A^{-1} v),
//   c_u = 1 / (1 + u^T B^{-1} u) with B = A + v v^T.
// Costs two SPD solves against the cached factor of A; the updated matrix is
// never formed.
inline Vector rank_two_update_solve(const SPDMatrix& a, const Vector& u, const Vector& v) {
  if (u.size() != a.dim() || v.size() != a.dim())
    throw Error("rank_two_update_solve: dimension mismatch");
  const Vector au = a.solve(u);
  const Vector av = a.solve(v);
  const double c_v = v.dot(au) / (1.0 + v.dot(av));
  const Vector bu = au - c_v * av;  // B^{-1} u
  const double c_u = 1.0 / (1.0 + u.dot(bu));
  return c_u * bu;
}

// Deterministic random stream. The engine is mt19937_64 (fully specified by
// the standard) and every transform below is written out explicitly, so two
// builds produce bit-identical streams for a given seed.
class Rng {
public:
  explicit Rng(Seed seed) : gen_(seed.value) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on (0, 1]; never 0, so log() stays finite.
  double uniform() { return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  // Marsaglia-Tsang. Shapes below 1 are boosted through Gamma(shape+1), so
  // every shape > 0 is exact.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Beta(alpha, alpha) as a ratio of two Gamma(alpha, 1) draws.
  double beta_symmetric(double alpha) {
    const double g1 = gamma(alpha);
    const double g2 = gamma(alpha);
    const double s = g1 + g2;
    return s > 0.0 ? g1 / s : 0.5;
  }

private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::vector<Vector> sample_mvn(const Vector& mean, const SPDMatrix& cov, std::size_t n,
                                      Seed seed) {
  if (mean.size() != cov.dim()) throw Error("sample_mvn: dimension mismatch");
  if (n == 0) throw Error("sample_mvn: need n >= 1");
  Rng rng(seed);
  std::vector<Vector> out;
  out.reserve(n);
  Vector z(mean.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
    out.push_back(mean + cov.chol().triangularView<Eigen::Lower>() * z);
  }
  return out;
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw InvalidAlpha("beta: alpha must be finite and > 0, got " + std::to_string(alpha));
}

inline std::vector<double> sample_beta_symmetric(double alpha, std::size_t n, Seed seed) {
  check_alpha(alpha);
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(rng.beta_symmetric(alpha));
  return out;
}

struct BetaMoments {
  double mean = 0.5;
  double variance = 0.0;
  double second_moment = 0.0;
};

// Moments of Beta(alpha, alpha): mean 1/2, variance 1/(4(2a+1)).
inline BetaMoments beta_moments(double alpha) {
  check_alpha(alpha);
  const double variance = 1.0 / (4.0 * (2.0 * alpha + 1.0));
  return BetaMoments{0.5, variance, variance + 0.25};
}

}  // namespace numerics
}  // namespace wgelab
