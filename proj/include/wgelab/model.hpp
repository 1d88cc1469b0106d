#pragma once

// Four-group Gaussian subpopulation model: two classes x two domains with a
// shared covariance, group means on a parallelogram, and a minority prior
// pi0 <= 1/4. The model is parameterized by (mu_base, delta_c, delta_d,
// sigma, pi0) so the parallelogram holds by construction; a secondary
// constructor accepts four explicit means and validates them instead.
//
// Scope note: two classes and two domains only. The reweighting-equivalence
// argument extends to any group count (weights inverse to group frequency,
// normalized by the number of groups), but that generalization is not
// implemented here.

#include "wgelab/numerics.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace wgelab::model {

class InvalidModel : public Error {
public:
  using Error::Error;
};

enum class Domain : std::uint8_t { S = 0, T = 1 };

inline char domain_char(Domain d) { return d == Domain::S ? 'S' : 'T'; }

// One of the four (class, domain) groups. index() fixes the canonical order
// (0,S), (0,T), (1,S), (1,T) used for all per-group arrays.
struct GroupKey {
  int y = 0;
  Domain d = Domain::S;

  int index() const { return 2 * y + (d == Domain::T ? 1 : 0); }

  static GroupKey from_index(int i) {
    return GroupKey{i / 2, (i % 2) ? Domain::T : Domain::S};
  }

  bool minority() const { return (y == 0) == (d == Domain::T); }  // (0,T) and (1,S)

  std::string name() const { return std::to_string(y) + domain_char(d); }

  friend bool operator==(const GroupKey& a, const GroupKey& b) {
    return a.y == b.y && a.d == b.d;
  }
};

inline std::array<GroupKey, 4> all_groups() {
  return {GroupKey::from_index(0), GroupKey::from_index(1), GroupKey::from_index(2),
          GroupKey::from_index(3)};
}

class GaussianGroupModel {
public:
  static constexpr double kParallelogramTol = 1e-9;

  GaussianGroupModel(Vector mu_base, Vector delta_c, Vector delta_d, numerics::SPDMatrix sigma,
                     double pi0)
      : mu_base_(std::move(mu_base)),
        delta_c_(std::move(delta_c)),
        delta_d_(std::move(delta_d)),
        sigma_(std::move(sigma)),
        pi0_(pi0) {
    const Eigen::Index p = sigma_.dim();
    if (mu_base_.size() != p || delta_c_.size() != p || delta_d_.size() != p)
      throw InvalidModel("model: mu_base/delta_c/delta_d/sigma dimensions disagree");
    if (!mu_base_.allFinite() || !delta_c_.allFinite() || !delta_d_.allFinite())
      throw InvalidModel("model: non-finite mean parameters");
    if (!std::isfinite(pi0_) || !(pi0_ > 0.0) || pi0_ > 0.25)
      throw InvalidModel("model: pi0 must lie in (0, 1/4], got " + std::to_string(pi0_));
  }

  // Builds from four explicit group means (canonical index order); rejects
  // mean sets that do not close a parallelogram within tol.
  static GaussianGroupModel from_group_means(const std::array<Vector, 4>& means,
                                             numerics::SPDMatrix sigma, double pi0,
                                             double tol = kParallelogramTol) {
    const Vector& m0s = means[0];
    const Vector& m0t = means[1];
    const Vector& m1s = means[2];
    const Vector& m1t = means[3];
    const Vector gap = (m1s - m0s) - (m1t - m0t);
    const double scale = 1.0 + std::max({m0s.norm(), m0t.norm(), m1s.norm(), m1t.norm()});
    if (gap.norm() > tol * scale)
      throw InvalidModel("model: group means do not close a parallelogram");
    return GaussianGroupModel(m0t, m0s - m0t, m1t - m0t, std::move(sigma), pi0);
  }

  const Vector& mu_base() const { return mu_base_; }
  const Vector& delta_c() const { return delta_c_; }
  const Vector& delta_d() const { return delta_d_; }
  const numerics::SPDMatrix& sigma() const { return sigma_; }
  double pi0() const { return pi0_; }
  Eigen::Index dim() const { return sigma_.dim(); }

  Vector group_mean(GroupKey g) const {
    Vector mu = mu_base_;
    if (g.d == Domain::S) mu += delta_c_;
    if (g.y == 1) mu += delta_d_;
    return mu;
  }

  double group_prior(GroupKey g) const { return g.minority() ? pi0_ : 0.5 - pi0_; }

  GaussianGroupModel with_pi0(double pi0) const {
    return GaussianGroupModel(mu_base_, delta_c_, delta_d_, sigma_, pi0);
  }

  GaussianGroupModel with_mu_base(Vector mu_base) const {
    return GaussianGroupModel(std::move(mu_base), delta_c_, delta_d_, sigma_, pi0_);
  }

private:
  Vector mu_base_;
  Vector delta_c_;
  Vector delta_d_;
  numerics::SPDMatrix sigma_;
  double pi0_;
};

// Class-mean difference mu^(1) - mu^(0) = delta_d - (1 - 4 pi0) delta_c.
inline Vector delta_bar(const GaussianGroupModel& m) {
  return m.delta_d() - (1.0 - 4.0 * m.pi0()) * m.delta_c();
}

// Sigma^{-1}-geometry of the mean differences plus the SRM blend coefficient
// under orthogonality, c_tilde = (1-4pi0) / (1 + 2pi0(1-2pi0)|delta_c|^2).
struct OrthogonalWgeTerms {
  double norm_dc_sq = 0.0;  // delta_c^T Sigma^{-1} delta_c
  double norm_dd_sq = 0.0;  // delta_d^T Sigma^{-1} delta_d
  double cross = 0.0;       // delta_c^T Sigma^{-1} delta_d
  double c_tilde = 0.0;
};

inline OrthogonalWgeTerms mahalanobis_norms(const GaussianGroupModel& m) {
  const Vector sc = m.sigma().solve(m.delta_c());
  const Vector sd = m.sigma().solve(m.delta_d());
  OrthogonalWgeTerms t;
  t.norm_dc_sq = m.delta_c().dot(sc);
  t.norm_dd_sq = m.delta_d().dot(sd);
  t.cross = m.delta_c().dot(sd);
  const double beta = 2.0 * m.pi0() * (1.0 - 2.0 * m.pi0());
  t.c_tilde = (1.0 - 4.0 * m.pi0()) / (1.0 + beta * t.norm_dc_sq);
  return t;
}

inline bool check_orthogonality(const GaussianGroupModel& m, double tol = 1e-9) {
  const OrthogonalWgeTerms t = mahalanobis_norms(m);
  return std::abs(t.cross) <= tol * std::sqrt(t.norm_dc_sq * t.norm_dd_sq);
}

struct LabeledSample {
  Vector x;
  int y = 0;
  Domain d = Domain::S;
};

// Finite sample with group bookkeeping. Rows of x() are samples; group row
// indices and counts are built once at construction.
class Dataset {
public:
  Dataset() = default;

  Dataset(Matrix x, std::vector<std::uint8_t> y, std::vector<Domain> d)
      : x_(std::move(x)), y_(std::move(y)), d_(std::move(d)) {
    if (static_cast<std::size_t>(x_.rows()) != y_.size() || y_.size() != d_.size())
      throw Error("dataset: row/label counts disagree");
    for (Eigen::Index i = 0; i < x_.rows(); ++i) {
      if (y_[i] > 1) throw Error("dataset: class labels must be 0 or 1");
      group_rows_[group(i).index()].push_back(i);
    }
  }

  std::size_t n() const { return static_cast<std::size_t>(x_.rows()); }
  Eigen::Index dim() const { return x_.cols(); }
  const Matrix& x() const { return x_; }
  int y(Eigen::Index i) const { return y_[i]; }
  Domain d(Eigen::Index i) const { return d_[i]; }
  GroupKey group(Eigen::Index i) const { return GroupKey{y_[i], d_[i]}; }

  LabeledSample sample(Eigen::Index i) const {
    return LabeledSample{x_.row(i).transpose(), y(i), d(i)};
  }

  const std::vector<Eigen::Index>& group_rows(GroupKey g) const {
    return group_rows_[g.index()];
  }
  std::size_t group_count(GroupKey g) const { return group_rows_[g.index()].size(); }

  std::array<std::size_t, 4> group_counts() const {
    return {group_rows_[0].size(), group_rows_[1].size(), group_rows_[2].size(),
            group_rows_[3].size()};
  }

  std::size_t min_group_count() const {
    std::size_t m = n();
    for (const auto& rows : group_rows_) m = std::min(m, rows.size());
    return m;
  }

  Dataset subset(const std::vector<Eigen::Index>& rows) const {
    Matrix x(static_cast<Eigen::Index>(rows.size()), dim());
    std::vector<std::uint8_t> y;
    std::vector<Domain> d;
    y.reserve(rows.size());
    d.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      x.row(static_cast<Eigen::Index>(k)) = x_.row(rows[k]);
      y.push_back(y_[rows[k]]);
      d.push_back(d_[rows[k]]);
    }
    return Dataset(std::move(x), std::move(y), std::move(d));
  }

private:
  Matrix x_;
  std::vector<std::uint8_t> y_;
  std::vector<Domain> d_;
  std::array<std::vector<Eigen::Index>, 4> group_rows_;
};

// Draws n i.i.d. samples: group by categorical draw over the four priors,
// then x ~ N(mu_group, Sigma). Deterministic given the seed.
inline Dataset sample_dataset(const GaussianGroupModel& m, std::size_t n, Seed seed) {
  if (n == 0) throw Error("sample_dataset: need n >= 1");
  numerics::Rng rng(seed);
  const auto groups = all_groups();
  std::array<double, 4> cum{};
  double acc = 0.0;
  std::array<Vector, 4> means;
  for (int g = 0; g < 4; ++g) {
    acc += m.group_prior(groups[g]);
    cum[g] = acc;
    means[g] = m.group_mean(groups[g]);
  }
  cum[3] = 1.0;

  const Eigen::Index p = m.dim();
  Matrix x(static_cast<Eigen::Index>(n), p);
  std::vector<std::uint8_t> y(n);
  std::vector<Domain> d(n);
  Vector z(p);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int g = 0;
    while (g < 3 && u > cum[g]) ++g;
    for (Eigen::Index k = 0; k < p; ++k) z[k] = rng.normal();
    x.row(static_cast<Eigen::Index>(i)) =
        (means[g] + m.sigma().chol().triangularView<Eigen::Lower>() * z).transpose();
    y[i] = static_cast<std::uint8_t>(groups[g].y);
    d[i] = groups[g].d;
  }
  return Dataset(std::move(x), std::move(y), std::move(d));
}

// JSON document: {dim, mu_base, delta_c, delta_d, sigma (row-major), pi0}.
// nlohmann serializes doubles with shortest round-trip precision, so the
// round trip is lossless.
inline nlohmann::json model_to_json(const GaussianGroupModel& m) {
  const Eigen::Index p = m.dim();
  nlohmann::json j;
  j["dim"] = p;
  j["mu_base"] = std::vector<double>(m.mu_base().data(), m.mu_base().data() + p);
  j["delta_c"] = std::vector<double>(m.delta_c().data(), m.delta_c().data() + p);
  j["delta_d"] = std::vector<double>(m.delta_d().data(), m.delta_d().data() + p);
  std::vector<double> sig;
  sig.reserve(static_cast<std::size_t>(p * p));
  for (Eigen::Index r = 0; r < p; ++r)
    for (Eigen::Index c = 0; c < p; ++c) sig.push_back(m.sigma().matrix()(r, c));
  j["sigma"] = sig;
  j["pi0"] = m.pi0();
  return j;
}

inline GaussianGroupModel model_from_json(const nlohmann::json& j) {
  auto fetch_vec = [&](const char* key, Eigen::Index p) {
    if (!j.contains(key) || !j.at(key).is_array() ||
        j.at(key).size() != static_cast<std::size_t>(p))
      throw InvalidModel(std::string("model json: bad or missing '") + key + "'");
    Vector v(p);
    for (Eigen::Index i = 0; i < p; ++i) v[i] = j.at(key).at(static_cast<std::size_t>(i)).get<double>();
    return v;
  };
  if (!j.contains("dim") || !j.at("dim").is_number_integer())
    throw InvalidModel("model json: bad or missing 'dim'");
  const auto p = static_cast<Eigen::Index>(j.at("dim").get<long long>());
  if (p <= 0) throw InvalidModel("model json: dim must be >= 1");
  if (!j.contains("sigma") || j.at("sigma").size() != static_cast<std::size_t>(p * p))
    throw InvalidModel("model json: 'sigma' must hold dim*dim row-major entries");
  Matrix sig(p, p);
  for (Eigen::Index r = 0; r < p; ++r)
    for (Eigen::Index c = 0; c < p; ++c)
      sig(r, c) = j.at("sigma").at(static_cast<std::size_t>(r * p + c)).get<double>();
  if (!j.contains("pi0") || !j.at("pi0").is_number())
    throw InvalidModel("model json: bad or missing 'pi0'");
  return GaussianGroupModel(fetch_vec("mu_base", p), fetch_vec("delta_c", p),
                            fetch_vec("delta_d", p), numerics::SPDMatrix(std::move(sig)),
                            j.at("pi0").get<double>());
}

}  // namespace wgelab::model
