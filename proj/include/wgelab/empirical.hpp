#pragma once

// Finite-sample estimators: plain, inverse-group-frequency weighted,
// downsampled, and mixup-augmented least squares, an l1-penalized variant
// via coordinate descent, empirical group errors, and the embedding CSV
// format. Every fit reduces to weighted normal equations on centered data:
//   w_hat = SampleVar(X)^{-1} SampleCov(X, Y),  b_hat = mean(y) - w_hat^T mean(x),
// with group-constant weights folded into the moment accumulators.

#include "wgelab/closed_form.hpp"
#include "wgelab/model.hpp"
#include "wgelab/numerics.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace wgelab::empirical {

using closed_form::LinearModel;
using closed_form::Method;
using model::Dataset;
using model::Domain;
using model::GroupKey;

class EmptyGroup : public Error {
public:
  using Error::Error;
};

class RankDeficient : public Error {
public:
  using Error::Error;
};

class TooFewSamples : public Error {
public:
  using Error::Error;
};

class NoConvergence : public Error {
public:
  using Error::Error;
};

class MalformedFile : public Error {
public:
  using Error::Error;
};

struct MixupConfig {
  double alpha = 1.0;
  std::size_t output_count = 0;  // 0: same size as the input dataset
};

struct FitReport {
  LinearModel model;
  std::size_t effective_n = 0;
  Method method;
  std::optional<Seed> seed_used;
};

enum class LassoWeighting { Uniform, InverseGroupFrequency };

namespace detail {

// Per-group loss weights c(y,d): 1 for plain fits, n/(4 n^{(y,d)}) for the
// inverse-frequency scheme. The weighted weight-sum is then exactly n.
inline std::array<double, 4> group_weights(const Dataset& ds, bool inverse_frequency) {
  std::array<double, 4> c{1.0, 1.0, 1.0, 1.0};
  if (!inverse_frequency) return c;
  const auto counts = ds.group_counts();
  for (int g = 0; g < 4; ++g) {
    if (counts[g] == 0)
      throw EmptyGroup("group " + GroupKey::from_index(g).name() + " has no samples");
    c[g] = static_cast<double>(ds.n()) / (4.0 * static_cast<double>(counts[g]));
  }
  return c;
}

struct WeightedMoments {
  Vector mean_x;
  double mean_y = 0.0;
  Matrix sxx;  // weighted sample variance of X
  Vector sxy;  // weighted sample covariance of (X, Y)
  double weight_sum = 0.0;
};

// Two passes: weighted means first, then centered second moments. Centering
// before accumulation keeps sxx well scaled when means are far from zero.
inline WeightedMoments weighted_moments(const Dataset& ds, const std::array<double, 4>& c) {
  const Eigen::Index p = ds.dim();
  const Eigen::Index n = static_cast<Eigen::Index>(ds.n());
  WeightedMoments mo;
  mo.mean_x = Vector::Zero(p);
  double sum_w = 0.0;
  double sum_y = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = c[ds.group(i).index()];
    sum_w += w;
    sum_y += w * ds.y(i);
    mo.mean_x += w * ds.x().row(i).transpose();
  }
  mo.weight_sum = sum_w;
  mo.mean_x /= sum_w;
  mo.mean_y = sum_y / sum_w;

  mo.sxx = Matrix::Zero(p, p);
  mo.sxy = Vector::Zero(p);
  Vector xc(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = c[ds.group(i).index()];
    xc = ds.x().row(i).transpose() - mo.mean_x;
    mo.sxx.selfadjointView<Eigen::Lower>().rankUpdate(xc, w);
    mo.sxy += (w * (ds.y(i) - mo.mean_y)) * xc;
  }
  mo.sxx = mo.sxx.selfadjointView<Eigen::Lower>();
  mo.sxx /= sum_w;
  mo.sxy /= sum_w;
  return mo;
}

// Same moments assembled the other way around: raw per-group averages first,
// then the equal-weight combination 1/4 sum_g. Numerically distinct from the
// flat weighted pass, which is the point: fits through this route are the
// independent side of the reweighting-equivalence checks.
inline WeightedMoments group_averaged_moments(const Dataset& ds) {
  const Eigen::Index p = ds.dim();
  const auto groups = model::all_groups();
  WeightedMoments mo;
  mo.mean_x = Vector::Zero(p);
  mo.mean_y = 0.0;
  for (const GroupKey g : groups) {
    const auto& rows = ds.group_rows(g);
    if (rows.empty()) throw EmptyGroup("group " + g.name() + " has no samples");
    Vector gm = Vector::Zero(p);
    for (const Eigen::Index i : rows) gm += ds.x().row(i).transpose();
    mo.mean_x += 0.25 * (gm / static_cast<double>(rows.size()));
    mo.mean_y += 0.25 * g.y;
  }
  mo.sxx = Matrix::Zero(p, p);
  mo.sxy = Vector::Zero(p);
  Vector xc(p);
  for (const GroupKey g : groups) {
    const auto& rows = ds.group_rows(g);
    Matrix gxx = Matrix::Zero(p, p);
    Vector gxy = Vector::Zero(p);
    for (const Eigen::Index i : rows) {
      xc = ds.x().row(i).transpose() - mo.mean_x;
      gxx.selfadjointView<Eigen::Lower>().rankUpdate(xc, 1.0);
      gxy += (ds.y(i) - mo.mean_y) * xc;
    }
    mo.sxx += 0.25 * Matrix(gxx.selfadjointView<Eigen::Lower>()) /
              static_cast<double>(rows.size());
    mo.sxy += 0.25 * gxy / static_cast<double>(rows.size());
  }
  mo.weight_sum = static_cast<double>(ds.n());
  return mo;
}

constexpr double kNormalEqPivotTol = 1e-10;

inline LinearModel solve_normal_equations(const WeightedMoments& mo) {
  try {
    const numerics::SPDMatrix s(mo.sxx, kNormalEqPivotTol);
    Vector w = s.solve(mo.sxy);
    const double b = mo.mean_y - w.dot(mo.mean_x);
    return LinearModel{std::move(w), b};
  } catch (const numerics::NotSPD& e) {
    throw RankDeficient(std::string("design is rank deficient: ") + e.what());
  }
}

inline void require_min_samples(std::size_t n, Eigen::Index p, const char* who) {
  if (n < static_cast<std::size_t>(p) + 2)
    throw TooFewSamples(std::string(who) + ": need at least dim+2 samples, have " +
                        std::to_string(n));
}

}  // namespace detail

inline FitReport fit_erm(const Dataset& ds) {
  detail::require_min_samples(ds.n(), ds.dim(), "fit_erm");
  const auto mo = detail::weighted_moments(ds, detail::group_weights(ds, false));
  return FitReport{detail::solve_normal_equations(mo), ds.n(), Method::srm(), std::nullopt};
}

inline FitReport fit_uw(const Dataset& ds) {
  detail::require_min_samples(ds.n(), ds.dim(), "fit_uw");
  const auto mo = detail::weighted_moments(ds, detail::group_weights(ds, true));
  return FitReport{detail::solve_normal_equations(mo), ds.n(), Method::uw(), std::nullopt};
}

// Reduces every group to the size of the smallest one by uniform sampling
// without replacement; a group already at the minimum is kept whole. Output
// rows stay in the original order.
inline Dataset downsample(const Dataset& ds, Seed seed) {
  const auto counts = ds.group_counts();
  for (int g = 0; g < 4; ++g)
    if (counts[g] == 0)
      throw EmptyGroup("downsample: group " + GroupKey::from_index(g).name() + " is empty");
  const std::size_t n_min = ds.min_group_count();

  std::vector<Eigen::Index> keep;
  keep.reserve(4 * n_min);
  for (int g = 0; g < 4; ++g) {
    std::vector<Eigen::Index> rows = ds.group_rows(GroupKey::from_index(g));
    if (rows.size() > n_min) {
      numerics::Rng rng(seed.derive(static_cast<std::uint64_t>(g)));
      // Partial Fisher-Yates: the first n_min slots become the sample.
      for (std::size_t i = 0; i < n_min; ++i) {
        const std::size_t span = rows.size() - i;
        const std::size_t j =
            i + std::min<std::size_t>(span - 1, static_cast<std::size_t>(rng.uniform() * span));
        std::swap(rows[i], rows[j]);
      }
      rows.resize(n_min);
    }
    keep.insert(keep.end(), rows.begin(), rows.end());
  }
  std::sort(keep.begin(), keep.end());
  return ds.subset(keep);
}

inline FitReport fit_ds(const Dataset& ds, Seed seed) {
  const Dataset reduced = downsample(ds, seed);
  detail::require_min_samples(reduced.n(), reduced.dim(), "fit_ds");
  const auto mo = detail::weighted_moments(reduced, detail::group_weights(reduced, false));
  return FitReport{detail::solve_normal_equations(mo), reduced.n(), Method::ds(), seed};
}

// Emits output_count convex combinations of same-class, cross-domain pairs:
// class drawn from the empirical class frequencies, one parent uniform from
// (y,S) and one from (y,T) (with replacement), lambda ~ Beta(alpha, alpha).
// The mixed sample keeps class y; its domain label is the lambda-heavy side
// (S iff lambda >= 1/2), a bookkeeping convention the fits never read.
inline Dataset mixup_dataset(const Dataset& ds, const MixupConfig& cfg, Seed seed) {
  numerics::check_alpha(cfg.alpha);
  const auto counts = ds.group_counts();
  for (int g = 0; g < 4; ++g)
    if (counts[g] == 0)
      throw EmptyGroup("mixup: group " + GroupKey::from_index(g).name() + " is empty");
  const std::size_t out_n = cfg.output_count == 0 ? ds.n() : cfg.output_count;
  if (out_n == 0) throw Error("mixup: output_count must be >= 1");

  const double frac1 =
      static_cast<double>(counts[2] + counts[3]) / static_cast<double>(ds.n());
  numerics::Rng rng(seed);
  auto pick = [&rng](const std::vector<Eigen::Index>& rows) {
    const auto m = rows.size();
    return rows[std::min<std::size_t>(m - 1, static_cast<std::size_t>(rng.uniform() * m))];
  };

  Matrix x(static_cast<Eigen::Index>(out_n), ds.dim());
  std::vector<std::uint8_t> y(out_n);
  std::vector<Domain> d(out_n);
  for (std::size_t i = 0; i < out_n; ++i) {
    const int yi = rng.uniform() <= frac1 ? 1 : 0;
    const Eigen::Index i1 = pick(ds.group_rows(GroupKey{yi, Domain::S}));
    const Eigen::Index i2 = pick(ds.group_rows(GroupKey{yi, Domain::T}));
    const double lambda = rng.beta_symmetric(cfg.alpha);
    x.row(static_cast<Eigen::Index>(i)) =
        lambda * ds.x().row(i1) + (1.0 - lambda) * ds.x().row(i2);
    y[i] = static_cast<std::uint8_t>(yi);
    d[i] = lambda >= 0.5 ? Domain::S : Domain::T;
  }
  return Dataset(std::move(x), std::move(y), std::move(d));
}

inline FitReport fit_mu(const Dataset& ds, const MixupConfig& cfg, Seed seed) {
  const Dataset mixed = mixup_dataset(ds, cfg, seed);
  detail::require_min_samples(mixed.n(), mixed.dim(), "fit_mu");
  const auto mo = detail::weighted_moments(mixed, detail::group_weights(mixed, false));
  return FitReport{detail::solve_normal_equations(mo), mixed.n(), Method::mu(cfg.alpha), seed};
}

inline FitReport fit_method(const Dataset& ds, const Method& method, Seed seed) {
  switch (method.kind) {
    case Method::Kind::Srm: return fit_erm(ds);
    case Method::Kind::Uw: return fit_uw(ds);
    case Method::Kind::Ds: return fit_ds(ds, seed);
    case Method::Kind::Mu: return fit_mu(ds, MixupConfig{method.alpha, 0}, seed);
  }
  throw Error("fit_method: unknown method");
}

namespace detail {

constexpr double kLassoTol = 1e-10;
constexpr std::size_t kLassoMaxSweeps = 100000;

// Cyclic coordinate descent with soft thresholding on
//   w^T S w - 2 w^T q + lambda |w|_1,
// using covariance updates (S w maintained incrementally). Converged when the
// largest coordinate move in a sweep drops below kLassoTol.
inline Vector lasso_cd(const Matrix& s, const Vector& q, double lambda) {
  const Eigen::Index p = s.rows();
  for (Eigen::Index j = 0; j < p; ++j)
    if (!(s(j, j) > 0.0))
      throw RankDeficient("fit_lasso: feature " + std::to_string(j) + " has zero variance");
  Vector w = Vector::Zero(p);
  Vector sw = Vector::Zero(p);  // S * w
  const double thr = lambda / 2.0;
  for (std::size_t sweep = 0; sweep < kLassoMaxSweeps; ++sweep) {
    double max_step = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double rho = q[j] - (sw[j] - s(j, j) * w[j]);
      const double soft = std::abs(rho) <= thr ? 0.0 : (rho > 0 ? rho - thr : rho + thr);
      const double w_new = soft / s(j, j);
      const double step = w_new - w[j];
      if (step != 0.0) {
        sw += step * s.col(j);
        w[j] = w_new;
        max_step = std::max(max_step, std::abs(step));
      }
    }
    if (max_step < kLassoTol) return w;
  }
  throw NoConvergence("fit_lasso: coordinate descent did not converge");
}

}  // namespace detail

// Minimizer of (weighted) mean squared error + lambda |w|_1; the bias is not
// penalized and is recovered as mean(y) - w^T mean(x) of the weighted means.
// Features are deliberately not standardized: the latent scale carries
// meaning for these models.
inline FitReport fit_lasso(const Dataset& ds, double lambda,
                           LassoWeighting weighting = LassoWeighting::Uniform) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw Error("fit_lasso: lambda must be finite and >= 0");
  detail::require_min_samples(ds.n(), ds.dim(), "fit_lasso");
  const auto mo = detail::weighted_moments(
      ds, detail::group_weights(ds, weighting == LassoWeighting::InverseGroupFrequency));
  Vector w = detail::lasso_cd(mo.sxx, mo.sxy, lambda);
  const double b = mo.mean_y - w.dot(mo.mean_x);
  const Method method =
      weighting == LassoWeighting::InverseGroupFrequency ? Method::uw() : Method::srm();
  return FitReport{LinearModel{std::move(w), b}, ds.n(), method, std::nullopt};
}

// Same penalized objective minimized through the group-averaged moments; the
// dual route to fit_lasso(..., InverseGroupFrequency).
inline FitReport fit_lasso_group_averaged(const Dataset& ds, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw Error("fit_lasso: lambda must be finite and >= 0");
  detail::require_min_samples(ds.n(), ds.dim(), "fit_lasso");
  const auto mo = detail::group_averaged_moments(ds);
  Vector w = detail::lasso_cd(mo.sxx, mo.sxy, lambda);
  const double b = mo.mean_y - w.dot(mo.mean_x);
  return FitReport{LinearModel{std::move(w), b}, ds.n(), Method::uw(), std::nullopt};
}

// Penalized empirical objective (1/n) sum_i c_i (y_i - w.x_i - b)^2 + lambda |w|_1,
// accumulated as one flat weighted sum over samples.
inline double weighted_objective(const Dataset& ds, const LinearModel& theta, double lambda,
                                 LassoWeighting weighting) {
  const auto c =
      detail::group_weights(ds, weighting == LassoWeighting::InverseGroupFrequency);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(ds.n()); ++i) {
    const double r = ds.y(i) - theta.score(ds.x().row(i).transpose());
    acc += c[ds.group(i).index()] * r * r;
  }
  return acc / static_cast<double>(ds.n()) + lambda * theta.w.lpNorm<1>();
}

// The same objective computed as 1/4 sum_g (unweighted group mean loss);
// agreeing with weighted_objective under inverse-frequency weights is the
// finite-sample face of the DS/UW equivalence.
inline double group_averaged_objective(const Dataset& ds, const LinearModel& theta,
                                       double lambda) {
  double acc = 0.0;
  for (const GroupKey g : model::all_groups()) {
    const auto& rows = ds.group_rows(g);
    if (rows.empty()) throw EmptyGroup("objective: group " + g.name() + " has no samples");
    double group_acc = 0.0;
    for (const Eigen::Index i : rows) {
      const double r = ds.y(i) - theta.score(ds.x().row(i).transpose());
      group_acc += r * r;
    }
    acc += 0.25 * group_acc / static_cast<double>(rows.size());
  }
  return acc + lambda * theta.w.lpNorm<1>();
}

inline double empirical_group_error(const LinearModel& theta, const Dataset& ds, GroupKey g) {
  const auto& rows = ds.group_rows(g);
  if (rows.empty()) throw EmptyGroup("empirical_group_error: group " + g.name() + " is empty");
  std::size_t wrong = 0;
  for (const Eigen::Index i : rows)
    if (theta.predict(ds.x().row(i).transpose()) != ds.y(i)) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(rows.size());
}

inline double empirical_wge(const LinearModel& theta, const Dataset& ds) {
  double worst = 0.0;
  for (const GroupKey g : model::all_groups())
    worst = std::max(worst, empirical_group_error(theta, ds, g));
  return worst;
}

// ---------------------------------------------------------------------------
// Embedding CSV format: header "x_0,...,x_{p-1},y,d" with y in {0,1} and
// d in {S,T}. Plain or gzip (zlib reads both transparently). The loader
// streams row by row and validates every field before materializing.
// ---------------------------------------------------------------------------

namespace detail {

class GzFile {
public:
  GzFile(const std::string& path, const char* mode) : f_(gzopen(path.c_str(), mode)) {
    if (f_ == nullptr) throw MalformedFile("cannot open " + path);
  }
  ~GzFile() {
    if (f_ != nullptr) gzclose(f_);
  }
  GzFile(const GzFile&) = delete;
  GzFile& operator=(const GzFile&) = delete;
  gzFile get() const { return f_; }

  bool read_line(std::string& out) {
    out.clear();
    char buf[4096];
    for (;;) {
      if (gzgets(f_, buf, sizeof(buf)) == nullptr) return !out.empty();
      out += buf;
      if (!out.empty() && out.back() == '\n') {
        out.pop_back();
        if (!out.empty() && out.back() == '\r') out.pop_back();
        return true;
      }
    }
  }

  void write(const char* data, std::size_t len) {
    if (gzwrite(f_, data, static_cast<unsigned>(len)) != static_cast<int>(len))
      throw Error("gzwrite failed");
  }

private:
  gzFile f_;
};

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

inline Dataset load_embeddings_csv(const std::string& path) {
  detail::GzFile in(path, "rb");
  std::string line;
  if (!in.read_line(line)) throw MalformedFile(path + ": empty file");
  const auto header = detail::split_csv(line);
  if (header.size() < 3 || header[header.size() - 2] != "y" || header.back() != "d")
    throw MalformedFile(path + ": header must be x_0,...,x_{p-1},y,d");
  const std::size_t p = header.size() - 2;
  for (std::size_t k = 0; k < p; ++k)
    if (header[k] != "x_" + std::to_string(k))
      throw MalformedFile(path + ": feature column " + std::to_string(k) + " must be named x_" +
                          std::to_string(k));

  std::vector<double> xs;
  std::vector<std::uint8_t> y;
  std::vector<Domain> d;
  std::size_t line_no = 1;
  while (in.read_line(line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != p + 2)
      throw MalformedFile(path + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(p + 2) + " fields, got " + std::to_string(fields.size()));
    for (std::size_t k = 0; k < p; ++k) {
      char* end = nullptr;
      const double v = std::strtod(fields[k].c_str(), &end);
      if (end == fields[k].c_str() || *end != '\0' || !std::isfinite(v))
        throw MalformedFile(path + ":" + std::to_string(line_no) + ": bad float '" + fields[k] +
                            "'");
      xs.push_back(v);
    }
    const std::string& ys = fields[p];
    if (ys != "0" && ys != "1")
      throw MalformedFile(path + ":" + std::to_string(line_no) + ": y must be 0 or 1");
    const std::string& dss = fields[p + 1];
    if (dss != "S" && dss != "T")
      throw MalformedFile(path + ":" + std::to_string(line_no) + ": d must be S or T");
    y.push_back(ys == "1" ? 1 : 0);
    d.push_back(dss == "S" ? Domain::S : Domain::T);
  }
  if (y.empty()) throw MalformedFile(path + ": no data rows");

  Matrix x(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t k = 0; k < p; ++k)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = xs[i * p + k];
  return Dataset(std::move(x), std::move(y), std::move(d));
}

// Writes the same format; gzip-compressed when the path ends in ".gz".
// %.17g keeps 64-bit floats bit-exact across a round trip.
inline void write_embeddings_csv(const std::string& path, const Dataset& ds) {
  const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  detail::GzFile out(path, gz ? "wb" : "wbT");  // 'T' stores plain bytes
  std::string buf;
  for (Eigen::Index k = 0; k < ds.dim(); ++k) {
    buf += (k ? ",x_" : "x_");
    buf += std::to_string(k);
  }
  buf += ",y,d\n";
  out.write(buf.data(), buf.size());
  char num[64];
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(ds.n()); ++i) {
    buf.clear();
    for (Eigen::Index k = 0; k < ds.dim(); ++k) {
      std::snprintf(num, sizeof(num), "%.17g", ds.x()(i, k));
      buf += num;
      buf += ',';
    }
    buf += ds.y(i) ? '1' : '0';
    buf += ',';
    buf += model::domain_char(ds.d(i));
    buf += '\n';
    out.write(buf.data(), buf.size());
  }
}

}  // namespace wgelab::empirical
