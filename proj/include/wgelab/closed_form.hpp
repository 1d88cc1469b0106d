#pragma once

// Population-optimal affine classifiers under the four training regimes
// (SRM, downsampling, upweighting, intra-class domain mixup) for the Gaussian
// group model, plus exact per-group and worst-group errors via the normal
// CDF. Every optimum shares the shape
//   w = 1/4 (base + rank-one + rank-one)^{-1} tilt,
//   b = 1/2 - 1/2 w^T (mu(0,T) + mu(1,S)),
// and is computed through rank_two_update_solve against the cached factor of
// Sigma.

#include "wgelab/model.hpp"
#include "wgelab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wgelab::closed_form {

using model::GaussianGroupModel;
using model::GroupKey;

class DegenerateModel : public Error {
public:
  using Error::Error;
};

class NotOrthogonal : public Error {
public:
  using Error::Error;
};

struct LinearModel {
  Vector w;
  double b = 0.0;

  double score(const Vector& x) const { return w.dot(x) + b; }
  // Decision rule: predict 1 iff the score strictly exceeds 1/2.
  int predict(const Vector& x) const { return score(x) > 0.5 ? 1 : 0; }
};

struct Method {
  enum class Kind { Srm, Ds, Uw, Mu };

  Kind kind = Kind::Srm;
  double alpha = 1.0;  // mixup concentration; meaningful only for Mu

  static Method srm() { return Method{Kind::Srm, 1.0}; }
  static Method ds() { return Method{Kind::Ds, 1.0}; }
  static Method uw() { return Method{Kind::Uw, 1.0}; }
  static Method mu(double alpha) {
    numerics::check_alpha(alpha);
    return Method{Kind::Mu, alpha};
  }

  std::string name() const {
    switch (kind) {
      case Kind::Srm: return "srm";
      case Kind::Ds: return "ds";
      case Kind::Uw: return "uw";
      case Kind::Mu: return "mu";
    }
    return "?";
  }

  friend bool operator==(const Method& a, const Method& b) {
    return a.kind == b.kind && (a.kind != Kind::Mu || a.alpha == b.alpha);
  }
};

namespace detail {

inline double optimal_bias(const GaussianGroupModel& m, const Vector& w) {
  const Vector anchor = m.group_mean({0, model::Domain::T}) + m.group_mean({1, model::Domain::S});
  return 0.5 - 0.5 * w.dot(anchor);
}

}  // namespace detail

// Shared optimum of downsampling and upweighting:
//   w = 1/4 (Sigma + 1/4 dC dC^T + 1/4 dD dD^T)^{-1} dD.
inline LinearModel optimal_ds_uw(const GaussianGroupModel& m) {
  const Vector u = 0.5 * m.delta_d();
  const Vector v = 0.5 * m.delta_c();
  Vector w = 0.5 * numerics::rank_two_update_solve(m.sigma(), u, v);
  const double b = detail::optimal_bias(m, w);
  return LinearModel{std::move(w), b};
}

// SRM optimum: the class-mean difference replaces dD as the tilt and the dC
// outer product is weighted by 2 pi0 (1 - 2 pi0).
inline LinearModel optimal_srm(const GaussianGroupModel& m) {
  const double beta = 2.0 * m.pi0() * (1.0 - 2.0 * m.pi0());
  const Vector db = model::delta_bar(m);
  const Vector u = 0.5 * db;
  const Vector v = std::sqrt(beta) * m.delta_c();
  Vector w = 0.5 * numerics::rank_two_update_solve(m.sigma(), u, v);
  const double b = detail::optimal_bias(m, w);
  return LinearModel{std::move(w), b};
}

// Mixup optimum: Sigma scaled by 2 E[Lambda^2] and the dC outer product by
// Var(Lambda), with Lambda ~ Beta(alpha, alpha).
inline LinearModel optimal_mu(const GaussianGroupModel& m, double alpha) {
  const numerics::BetaMoments mom = numerics::beta_moments(alpha);
  const numerics::SPDMatrix base(Matrix(2.0 * mom.second_moment * m.sigma().matrix()));
  const Vector u = 0.5 * m.delta_d();
  const Vector v = std::sqrt(mom.variance) * m.delta_c();
  Vector w = 0.5 * numerics::rank_two_update_solve(base, u, v);
  const double b = detail::optimal_bias(m, w);
  return LinearModel{std::move(w), b};
}

inline LinearModel optimal_model(const GaussianGroupModel& m, const Method& method) {
  switch (method.kind) {
    case Method::Kind::Srm: return optimal_srm(m);
    case Method::Kind::Ds:
    case Method::Kind::Uw: return optimal_ds_uw(m);
    case Method::Kind::Mu: return optimal_mu(m, method.alpha);
  }
  throw Error("optimal_model: unknown method");
}

// Independent derivation of the DS/UW optimum straight from the group-mean
// expectations under inverse-prior weighting: the weighted second-moment
// matrix is Sigma + 1/4 sum_g mu_g mu_g^T, the weighted mean of X is
// (mu(0,T) + mu(1,S))/2 and of XY is (mu(1,S) + mu(1,T))/4. Kept as a second
// route so the equivalence with optimal_ds_uw is a real cross-check rather
// than a tautology.
inline LinearModel uw_path_optimal(const GaussianGroupModel& m) {
  Matrix second = m.sigma().matrix();
  for (const GroupKey g : model::all_groups()) {
    const Vector mu = m.group_mean(g);
    second += 0.25 * mu * mu.transpose();
  }
  const Vector ex =
      0.5 * (m.group_mean({0, model::Domain::T}) + m.group_mean({1, model::Domain::S}));
  const Vector exy =
      0.25 * (m.group_mean({1, model::Domain::S}) + m.group_mean({1, model::Domain::T}));
  Matrix a = second - ex * ex.transpose();
  // Symmetrize: the outer-product arithmetic above can leave ~1 ulp skew.
  a = 0.5 * (a + a.transpose()).eval();
  const Vector rhs = exy - 0.5 * ex;
  Vector w = numerics::chol_factor(std::move(a)).solve(rhs);
  const double b = 0.5 - w.dot(ex);
  return LinearModel{std::move(w), b};
}

// Exact misclassification probability of group g under theta: a normal CDF
// of the signed margin between the group mean's score and the 1/2 threshold.
inline double group_error(const LinearModel& theta, const GaussianGroupModel& m, GroupKey g) {
  if (theta.w.size() != m.dim()) throw Error("group_error: dimension mismatch");
  const double s2 = theta.w.dot(m.sigma().matrix() * theta.w);
  if (!(s2 > 0.0)) throw DegenerateModel("group_error: w^T Sigma w must be positive (w = 0?)");
  const double s = std::sqrt(s2);
  const double score = theta.w.dot(m.group_mean(g)) + theta.b;
  const double z = (g.y == 0) ? (score - 0.5) / s : (0.5 - score) / s;
  return numerics::norm_cdf(z);
}

inline double wge(const LinearModel& theta, const GaussianGroupModel& m) {
  double worst = 0.0;
  for (const GroupKey g : model::all_groups()) worst = std::max(worst, group_error(theta, m, g));
  return worst;
}

// Blend coefficient of the SRM optimum in the Sigma^{-1} basis,
//   w*_SRM  proportional to  Sigma^{-1} dD - c_pi0 Sigma^{-1} dC,
// valid for arbitrary (non-orthogonal) geometry. Reduces to c_tilde when
// dC^T Sigma^{-1} dD = 0.
inline double srm_blend_coefficient(const GaussianGroupModel& m) {
  const model::OrthogonalWgeTerms t = model::mahalanobis_norms(m);
  const double beta = 2.0 * m.pi0() * (1.0 - 2.0 * m.pi0());
  return (1.0 - 4.0 * m.pi0() + beta * t.cross) / (1.0 + beta * t.norm_dc_sq);
}

// Worst-group error of the SRM optimum for arbitrary geometry: the larger of
// the minority and majority error terms expressed through the blend
// coefficient.
inline double srm_wge_general(const GaussianGroupModel& m) {
  const model::OrthogonalWgeTerms t = model::mahalanobis_norms(m);
  const double c = srm_blend_coefficient(m);
  const double denom_sq = t.norm_dd_sq - 2.0 * c * t.cross + c * c * t.norm_dc_sq;
  if (!(denom_sq > 0.0))
    throw DegenerateModel("srm_wge_general: delta_d - c delta_c vanishes in the Sigma^-1 norm");
  const double denom = 2.0 * std::sqrt(denom_sq);
  const double minority = ((c - 1.0) * t.cross - t.norm_dd_sq + c * t.norm_dc_sq) / denom;
  const double majority = ((c + 1.0) * t.cross - t.norm_dd_sq - c * t.norm_dc_sq) / denom;
  return std::max(numerics::norm_cdf(minority), numerics::norm_cdf(majority));
}

// Closed-form worst-group error under Sigma^{-1}-orthogonality of dC and dD:
// Phi(-|dD|/2) for DS/UW/MU(any alpha); the c_tilde expression for SRM.
inline double wge_closed_orthogonal(const GaussianGroupModel& m, const Method& method,
                                    double tol = 1e-9) {
  if (!model::check_orthogonality(m, tol))
    throw NotOrthogonal("wge_closed_orthogonal: delta_c^T Sigma^-1 delta_d != 0");
  const model::OrthogonalWgeTerms t = model::mahalanobis_norms(m);
  switch (method.kind) {
    case Method::Kind::Mu:
      numerics::check_alpha(method.alpha);
      [[fallthrough]];
    case Method::Kind::Ds:
    case Method::Kind::Uw:
      return numerics::norm_cdf(-std::sqrt(t.norm_dd_sq) / 2.0);
    case Method::Kind::Srm: {
      const double arg = (-t.norm_dd_sq + t.c_tilde * t.norm_dc_sq) /
                         (2.0 * std::sqrt(t.norm_dd_sq + t.c_tilde * t.c_tilde * t.norm_dc_sq));
      return numerics::norm_cdf(arg);
    }
  }
  throw Error("wge_closed_orthogonal: unknown method");
}

}  // namespace wgelab::closed_form
