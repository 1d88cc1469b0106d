#include "wgelab/empirical.hpp"

#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

using namespace wgelab;
using namespace wgelab::empirical;
using model::Dataset;
using model::Domain;
using model::GroupKey;
using Catch::Approx;
using testing::reference_model;

namespace {

// Builds a dataset with exact per-group counts (canonical group order) by
// oversampling the model and keeping the first k_g rows of each group.
Dataset dataset_with_counts(const model::GaussianGroupModel& m,
                            const std::array<std::size_t, 4>& want, Seed seed) {
  std::size_t total = 0;
  for (const auto c : want) total += c;
  std::size_t draw = 8 * total + 1000;
  for (int attempt = 0; attempt < 8; ++attempt, draw *= 4) {
    const Dataset big = model::sample_dataset(m, draw, seed);
    bool enough = true;
    for (int g = 0; g < 4; ++g)
      enough = enough && big.group_count(GroupKey::from_index(g)) >= want[g];
    if (!enough) continue;
    std::vector<Eigen::Index> rows;
    for (int g = 0; g < 4; ++g) {
      const auto& gr = big.group_rows(GroupKey::from_index(g));
      rows.insert(rows.end(), gr.begin(), gr.begin() + static_cast<long>(want[g]));
    }
    std::sort(rows.begin(), rows.end());
    return big.subset(rows);
  }
  throw Error("dataset_with_counts: could not collect the requested counts");
}

double theta_gap_sq(const closed_form::LinearModel& a, const closed_form::LinearModel& b) {
  return (a.w - b.w).squaredNorm() + (a.b - b.b) * (a.b - b.b);
}

bool bit_equal(const closed_form::LinearModel& a, const closed_form::LinearModel& b) {
  if (a.b != b.b || a.w.size() != b.w.size()) return false;
  for (Eigen::Index k = 0; k < a.w.size(); ++k)
    if (a.w[k] != b.w[k]) return false;
  return true;
}

}  // namespace

// ============================================================================
// Plain least squares
// ============================================================================

TEST_CASE("fit_erm: recovers an exactly linear labeling", "[empirical][erm]") {
  // Points placed on two parallel hyperplanes w.x + b in {0, 1}, so the
  // binary labels are an exact linear function of x.
  Vector w_true(2);
  w_true << 2.0, -1.0;
  const double b_true = 0.3;
  const int per_class = 20;
  Matrix x(2 * per_class, 2);
  std::vector<std::uint8_t> y;
  std::vector<Domain> d;
  std::mt19937_64 gen(51);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int i = 0; i < 2 * per_class; ++i) {
    const int label = i % 2;
    const double t = unif(gen);
    // param along the hyperplane direction (1, 2), then shift onto the plane
    Vector p(2);
    p << t, 2.0 * t;
    const double resid = (label - b_true - w_true.dot(p)) / w_true.squaredNorm();
    x.row(i) = (p + resid * w_true).transpose();
    y.push_back(static_cast<std::uint8_t>(label));
    d.push_back(i % 4 < 2 ? Domain::S : Domain::T);
  }
  const Dataset ds(std::move(x), std::move(y), std::move(d));
  const FitReport fit = fit_erm(ds);
  REQUIRE((fit.model.w - w_true).norm() <= 1e-8);
  REQUIRE(fit.model.b == Approx(b_true).margin(1e-8));
  REQUIRE(fit.effective_n == ds.n());
}

TEST_CASE("fit_erm: duplicating every sample leaves the fit unchanged", "[empirical][erm]") {
  const Dataset ds = model::sample_dataset(reference_model(0.25), 500, Seed{52});
  std::vector<Eigen::Index> twice;
  for (Eigen::Index i = 0; i < 500; ++i) {
    twice.push_back(i);
    twice.push_back(i);
  }
  const Dataset doubled = ds.subset(twice);
  const auto a = fit_erm(ds);
  const auto b = fit_erm(doubled);
  REQUIRE((a.model.w - b.model.w).norm() <= 1e-12 * a.model.w.norm());
  REQUIRE(a.model.b == Approx(b.model.b).epsilon(1e-12));
}

TEST_CASE("fit_erm: converges to the population SRM optimum", "[empirical][erm][rate]") {
  const auto m = reference_model();
  const Dataset ds = model::sample_dataset(m, 1000000, Seed{53});
  const auto fit = fit_erm(ds);
  const auto target = closed_form::optimal_srm(m);
  REQUIRE(theta_gap_sq(fit.model, target) <= 100.0 * 2.0 / 1e6);
}

TEST_CASE("fit_erm: guards rank deficiency and sample starvation", "[empirical][erm]") {
  // Three points in dim 2: below the dim+2 floor.
  Matrix x(3, 2);
  x << 0.0, 0.0, 1.0, 1.0, 2.0, 2.0;
  const Dataset tiny(x, {0, 1, 0}, {Domain::S, Domain::T, Domain::S});
  REQUIRE_THROWS_AS(fit_erm(tiny), TooFewSamples);

  // Collinear cloud: one direction has zero variance.
  Matrix xc(40, 2);
  std::vector<std::uint8_t> y;
  std::vector<Domain> d;
  for (int i = 0; i < 40; ++i) {
    xc(i, 0) = i * 0.1;
    xc(i, 1) = 2.0 * i * 0.1;
    y.push_back(static_cast<std::uint8_t>(i % 2));
    d.push_back(Domain::S);
  }
  REQUIRE_THROWS_AS(fit_erm(Dataset(xc, y, d)), RankDeficient);
}

// ============================================================================
// Inverse-frequency weighting
// ============================================================================

TEST_CASE("fit_uw: equals fit_erm bit-for-bit on group-balanced data", "[empirical][uw]") {
  const Dataset ds = dataset_with_counts(reference_model(0.25), {120, 120, 120, 120}, Seed{54});
  REQUIRE(bit_equal(fit_uw(ds).model, fit_erm(ds).model));
}

TEST_CASE("fit_uw: deterministic across repeated fits", "[empirical][uw]") {
  const Dataset ds = model::sample_dataset(reference_model(), 20000, Seed{55});
  REQUIRE(bit_equal(fit_uw(ds).model, fit_uw(ds).model));
  REQUIRE(bit_equal(fit_erm(ds).model, fit_erm(ds).model));
  REQUIRE_FALSE(fit_uw(ds).seed_used.has_value());
}

TEST_CASE("fit_uw: converges to the shared DS/UW optimum", "[empirical][uw][rate]") {
  const auto m = reference_model();
  const Dataset ds = model::sample_dataset(m, 1000000, Seed{56});
  const auto fit = fit_uw(ds);
  REQUIRE(theta_gap_sq(fit.model, closed_form::optimal_ds_uw(m)) <= 100.0 * 2.0 / 1e6);
}

TEST_CASE("fit_uw: empty group is an error", "[empirical][uw]") {
  Matrix x(6, 2);
  x.setRandom();
  const Dataset ds(x, {0, 0, 1, 1, 0, 1},
                   {Domain::S, Domain::S, Domain::S, Domain::S, Domain::S, Domain::S});
  REQUIRE_THROWS_AS(fit_uw(ds), EmptyGroup);
}

// ============================================================================
// Downsampling
// ============================================================================

TEST_CASE("downsample: balanced input passes through whole", "[empirical][ds]") {
  const Dataset ds = dataset_with_counts(reference_model(0.25), {50, 50, 50, 50}, Seed{57});
  const Dataset out = downsample(ds, Seed{1});
  REQUIRE(out.n() == ds.n());
  REQUIRE((out.x() - ds.x()).norm() == 0.0);
}

TEST_CASE("downsample: reduces every group to the smallest", "[empirical][ds]") {
  const Dataset ds = dataset_with_counts(reference_model(0.25), {10, 10, 500, 500}, Seed{58});
  const Dataset out = downsample(ds, Seed{2});
  REQUIRE(out.n() == 40);
  for (const GroupKey g : model::all_groups()) REQUIRE(out.group_count(g) == 10);
}

TEST_CASE("downsample: the minimum group is preserved as a set", "[empirical][ds]") {
  const Dataset ds = dataset_with_counts(reference_model(0.25), {10, 60, 60, 60}, Seed{59});
  const Dataset out = downsample(ds, Seed{3});
  // Group (0,S) had exactly 10 rows; all of them must survive, in order.
  const auto& before = ds.group_rows(GroupKey{0, Domain::S});
  const auto& after = out.group_rows(GroupKey{0, Domain::S});
  REQUIRE(after.size() == before.size());
  std::vector<double> first_before;
  std::vector<double> first_after;
  for (const auto i : before) first_before.push_back(ds.x()(i, 0));
  for (const auto i : after) first_after.push_back(out.x()(i, 0));
  REQUIRE(first_before == first_after);
}

TEST_CASE("downsample: deterministic given the seed, varies across seeds", "[empirical][ds]") {
  const Dataset ds = model::sample_dataset(reference_model(), 5000, Seed{60});
  const Dataset a = downsample(ds, Seed{4});
  const Dataset b = downsample(ds, Seed{4});
  REQUIRE((a.x() - b.x()).norm() == 0.0);
  const Dataset c = downsample(ds, Seed{5});
  REQUIRE((a.x() - c.x()).norm() > 0.0);
}

TEST_CASE("fit_ds: equals fit_erm on balanced data for any seed", "[empirical][ds]") {
  const Dataset ds = dataset_with_counts(reference_model(0.25), {80, 80, 80, 80}, Seed{61});
  REQUIRE(bit_equal(fit_ds(ds, Seed{9}).model, fit_erm(ds).model));
  REQUIRE(bit_equal(fit_ds(ds, Seed{10}).model, fit_erm(ds).model));
}

TEST_CASE("fit_ds: converges to the DS optimum at the minority rate", "[empirical][ds][rate]") {
  const auto m = reference_model();
  const Dataset ds = model::sample_dataset(m, 1000000, Seed{62});
  const auto fit = fit_ds(ds, Seed{11});
  const double n_min = static_cast<double>(ds.min_group_count());
  REQUIRE(fit.effective_n == 4 * ds.min_group_count());
  REQUIRE(theta_gap_sq(fit.model, closed_form::optimal_ds_uw(m)) <= 100.0 * 2.0 / n_min);
}

TEST_CASE("fit_ds: different seeds give different models on imbalanced data", "[empirical][ds]") {
  const Dataset ds = model::sample_dataset(reference_model(), 20000, Seed{63});
  const auto a = fit_ds(ds, Seed{12});
  const auto b = fit_ds(ds, Seed{13});
  REQUIRE((a.model.w - b.model.w).norm() > 0.0);
  REQUIRE(a.seed_used.has_value());
}

// ============================================================================
// Mixup
// ============================================================================

TEST_CASE("mixup_dataset: near-degenerate mixing lands on pair midpoints", "[empirical][mu]") {
  const Dataset ds = dataset_with_counts(reference_model(0.25), {5, 5, 5, 5}, Seed{64});
  const Dataset out = mixup_dataset(ds, MixupConfig{1e6, 200}, Seed{14});
  REQUIRE(out.n() == 200);
  double diameter = 0.0;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(ds.n()); ++i)
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(ds.n()); ++j)
      diameter = std::max(diameter, (ds.x().row(i) - ds.x().row(j)).norm());
  for (Eigen::Index k = 0; k < 200; ++k) {
    // distance to the nearest same-class cross-domain midpoint
    double best = 1e300;
    for (const auto i : ds.group_rows(GroupKey{out.y(k), Domain::S}))
      for (const auto j : ds.group_rows(GroupKey{out.y(k), Domain::T}))
        best =
            std::min(best, (out.x().row(k) - 0.5 * (ds.x().row(i) + ds.x().row(j))).norm());
    REQUIRE(best <= 0.01 * diameter);
  }
}

TEST_CASE("mixup_dataset: output class frequencies track the input", "[empirical][mu]") {
  const Dataset ds = model::sample_dataset(reference_model(), 4000, Seed{65});
  const std::size_t out_n = 100000;
  const Dataset out = mixup_dataset(ds, MixupConfig{1.0, out_n}, Seed{15});
  const double frac_in =
      static_cast<double>(ds.group_count({1, Domain::S}) + ds.group_count({1, Domain::T})) /
      static_cast<double>(ds.n());
  std::size_t ones = 0;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(out.n()); ++i) ones += out.y(i);
  const double frac_out = static_cast<double>(ones) / static_cast<double>(out.n());
  REQUIRE(std::abs(frac_out - frac_in) <=
          4.0 * std::sqrt(frac_in * (1.0 - frac_in) / static_cast<double>(out_n)));
}

TEST_CASE("mixup_dataset: outputs stay in the per-class bounding box", "[empirical][mu]") {
  const Dataset ds = model::sample_dataset(reference_model(0.25), 400, Seed{66});
  const Dataset out = mixup_dataset(ds, MixupConfig{0.5, 2000}, Seed{16});
  for (const int y : {0, 1}) {
    Vector lo = Vector::Constant(2, 1e300);
    Vector hi = Vector::Constant(2, -1e300);
    for (const Domain dom : {Domain::S, Domain::T}) {
      for (const auto i : ds.group_rows(GroupKey{y, dom})) {
        lo = lo.cwiseMin(ds.x().row(i).transpose());
        hi = hi.cwiseMax(ds.x().row(i).transpose());
      }
    }
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(out.n()); ++i) {
      if (out.y(i) != y) continue;
      for (int k = 0; k < 2; ++k) {
        REQUIRE(out.x()(i, k) >= lo[k] - 1e-12);
        REQUIRE(out.x()(i, k) <= hi[k] + 1e-12);
      }
    }
  }
}

TEST_CASE("mixup_dataset: deterministic, validates alpha and groups", "[empirical][mu]") {
  const Dataset ds = model::sample_dataset(reference_model(), 2000, Seed{67});
  const Dataset a = mixup_dataset(ds, MixupConfig{2.0, 0}, Seed{17});
  const Dataset b = mixup_dataset(ds, MixupConfig{2.0, 0}, Seed{17});
  REQUIRE(a.n() == ds.n());  // default output_count = input size
  REQUIRE((a.x() - b.x()).norm() == 0.0);
  REQUIRE_THROWS_AS(mixup_dataset(ds, MixupConfig{0.0, 0}, Seed{18}), numerics::InvalidAlpha);

  Matrix x(4, 2);
  x.setRandom();
  const Dataset missing(x, {0, 0, 1, 1}, {Domain::S, Domain::S, Domain::S, Domain::T});
  REQUIRE_THROWS_AS(mixup_dataset(missing, MixupConfig{1.0, 0}, Seed{19}), EmptyGroup);
}

TEST_CASE("fit_mu: converges to the mixup optimum", "[empirical][mu][rate]") {
  const auto m = reference_model();
  const std::size_t n = 1000000;
  const Dataset ds = model::sample_dataset(m, n, Seed{68});
  const auto fit = fit_mu(ds, MixupConfig{1.0, 0}, Seed{20});
  const double n_min = static_cast<double>(ds.min_group_count());
  const double bound =
      100.0 * (2.0 * std::log(static_cast<double>(n)) / static_cast<double>(n) + 2.0 / n_min);
  REQUIRE(theta_gap_sq(fit.model, closed_form::optimal_mu(m, 1.0)) <= bound);
  REQUIRE(bit_equal(fit.model, fit_mu(ds, MixupConfig{1.0, 0}, Seed{20}).model));
}

// ============================================================================
// Consistency across sample sizes
// ============================================================================

TEST_CASE("median parameter error decreases with n for every method", "[empirical][rate]") {
  const auto m = reference_model();
  const std::array<closed_form::Method, 4> methods = {
      closed_form::Method::srm(), closed_form::Method::uw(), closed_form::Method::ds(),
      closed_form::Method::mu(1.0)};
  std::array<closed_form::LinearModel, 4> targets;
  for (int k = 0; k < 4; ++k) targets[k] = closed_form::optimal_model(m, methods[k]);

  std::array<std::vector<double>, 4> medians;
  for (const std::size_t n : {1000UL, 10000UL, 100000UL, 1000000UL}) {
    std::array<std::vector<double>, 4> gaps;
    for (int seed = 0; seed < 30; ++seed) {
      const Dataset ds = model::sample_dataset(
          m, n, Seed{800}.derive(n).derive(static_cast<std::uint64_t>(seed)));
      for (int k = 0; k < 4; ++k) {
        const auto fit = fit_method(
            ds, methods[k], Seed{801}.derive(n).derive(static_cast<std::uint64_t>(seed)));
        gaps[k].push_back(theta_gap_sq(fit.model, targets[k]));
      }
    }
    for (int k = 0; k < 4; ++k) medians[k].push_back(testing::median_of(gaps[k]));
  }
  for (int k = 0; k < 4; ++k)
    for (std::size_t i = 1; i < medians[k].size(); ++i)
      REQUIRE(medians[k][i] < medians[k][i - 1]);
}

// ============================================================================
// Lasso
// ============================================================================

TEST_CASE("fit_lasso: lambda 0 reproduces the unpenalized fits", "[empirical][lasso]") {
  const Dataset ds = model::sample_dataset(reference_model(), 4000, Seed{69});
  const auto plain = fit_lasso(ds, 0.0, LassoWeighting::Uniform);
  const auto erm = fit_erm(ds);
  REQUIRE((plain.model.w - erm.model.w).norm() <= 1e-8);
  REQUIRE(plain.model.b == Approx(erm.model.b).margin(1e-8));

  const auto weighted = fit_lasso(ds, 0.0, LassoWeighting::InverseGroupFrequency);
  const auto uw = fit_uw(ds);
  REQUIRE((weighted.model.w - uw.model.w).norm() <= 1e-8);
  REQUIRE(weighted.model.b == Approx(uw.model.b).margin(1e-8));
}

TEST_CASE("fit_lasso: a large enough lambda shrinks w to zero", "[empirical][lasso]") {
  const Dataset ds = model::sample_dataset(reference_model(), 4000, Seed{70});
  const auto mo = detail::weighted_moments(ds, detail::group_weights(ds, false));
  const double lambda = 2.0 * mo.sxy.cwiseAbs().maxCoeff() * 1.01;
  const auto fit = fit_lasso(ds, lambda, LassoWeighting::Uniform);
  REQUIRE(fit.model.w.norm() == 0.0);
  REQUIRE(fit.model.b == Approx(mo.mean_y).margin(1e-12));
}

TEST_CASE("fit_lasso: downsampled route equals weighted route on balanced data",
          "[empirical][lasso]") {
  const Dataset ds = dataset_with_counts(reference_model(0.25), {400, 400, 400, 400}, Seed{71});
  const double lambda = 1e-3;
  const Dataset reduced = downsample(ds, Seed{21});  // balanced: passes through whole
  const auto ds_lasso = fit_lasso(reduced, lambda, LassoWeighting::Uniform);
  const auto uw_lasso = fit_lasso(ds, lambda, LassoWeighting::InverseGroupFrequency);
  REQUIRE((ds_lasso.model.w - uw_lasso.model.w).norm() <= 1e-8);
  REQUIRE(ds_lasso.model.b == Approx(uw_lasso.model.b).margin(1e-8));
}

TEST_CASE("weighted objective identity: flat weighted sum equals group-mean average",
          "[empirical][lasso][equivalence][property]") {
  std::mt19937_64 gen(72);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Dataset ds = model::sample_dataset(reference_model(), 2000, Seed{73});
  for (int it = 0; it < 20; ++it) {
    Vector w(2);
    w << gauss(gen), gauss(gen);
    const closed_form::LinearModel theta{w, gauss(gen)};
    const double lambda = it % 2 ? 0.0 : 0.05;
    const double flat =
        weighted_objective(ds, theta, lambda, LassoWeighting::InverseGroupFrequency);
    const double grouped = group_averaged_objective(ds, theta, lambda);
    REQUIRE(flat == Approx(grouped).epsilon(1e-10));
  }
}

TEST_CASE("fit_lasso: dual accumulation routes land on the same minimizer",
          "[empirical][lasso][equivalence]") {
  const Dataset ds = model::sample_dataset(reference_model(), 30000, Seed{74});
  for (const double lambda : {0.0, 1e-3, 1e-2}) {
    const auto flat = fit_lasso(ds, lambda, LassoWeighting::InverseGroupFrequency);
    const auto grouped = fit_lasso_group_averaged(ds, lambda);
    REQUIRE((flat.model.w - grouped.model.w).norm() <= 1e-6);
    REQUIRE(flat.model.b == Approx(grouped.model.b).margin(1e-6));
  }
}

TEST_CASE("fit_lasso: penalized-to-unpenalized distance as lambda shrinks (reported)",
          "[empirical][lasso]") {
  const Dataset ds = model::sample_dataset(reference_model(), 20000, Seed{75});
  const auto base = fit_lasso(ds, 0.0, LassoWeighting::InverseGroupFrequency);
  for (const double lambda : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const auto fit = fit_lasso(ds, lambda, LassoWeighting::InverseGroupFrequency);
    // Informational only: how quickly the penalized minimizer approaches the
    // unpenalized one. No assertion by design.
    WARN("lambda=" << lambda
                   << "  |w_lambda - w_0| = " << (fit.model.w - base.model.w).norm());
  }
  SUCCEED();
}

TEST_CASE("lasso coordinate descent: reports non-convergence on hostile conditioning",
          "[empirical][lasso]") {
  Matrix s(2, 2);
  s << 1.0, 1.0 - 1e-9, 1.0 - 1e-9, 1.0;
  Vector q(2);
  q << 1.0, -1.0;
  REQUIRE_THROWS_AS(detail::lasso_cd(s, q, 0.0), NoConvergence);
}

// ============================================================================
// Empirical group errors
// ============================================================================

TEST_CASE("empirical_group_error: constant scores", "[empirical][error]") {
  const Dataset ds = model::sample_dataset(reference_model(), 2000, Seed{76});
  const closed_form::LinearModel always_one{Vector::Zero(2), 1.0};
  const closed_form::LinearModel always_zero{Vector::Zero(2), 0.0};
  for (const Domain dom : {Domain::S, Domain::T}) {
    REQUIRE(empirical_group_error(always_one, ds, {1, dom}) == 0.0);
    REQUIRE(empirical_group_error(always_zero, ds, {1, dom}) == 1.0);
    REQUIRE(empirical_group_error(always_one, ds, {0, dom}) == 1.0);
  }
}

TEST_CASE("empirical_group_error: agrees with the analytic error on a fresh sample",
          "[empirical][error][mc]") {
  const auto m = reference_model();
  const auto theta = closed_form::optimal_ds_uw(m);
  const Dataset fresh = model::sample_dataset(m, 1000000, Seed{77});
  for (const GroupKey g : model::all_groups()) {
    const double analytic = closed_form::group_error(theta, m, g);
    const double counted = empirical_group_error(theta, fresh, g);
    const double sd =
        std::sqrt(analytic * (1.0 - analytic) / static_cast<double>(fresh.group_count(g)));
    REQUIRE(std::abs(counted - analytic) <= 4.0 * sd);
  }
  REQUIRE(empirical_wge(theta, fresh) >= empirical_group_error(theta, fresh, {0, Domain::T}));

  Matrix x(2, 2);
  x.setRandom();
  const Dataset missing(x, {0, 1}, {Domain::S, Domain::S});
  REQUIRE_THROWS_AS(empirical_group_error(theta, missing, {0, Domain::T}), EmptyGroup);
}

// ============================================================================
// Embedding CSV ingestion
// ============================================================================

TEST_CASE("embeddings csv: plain and gzip round trips are lossless", "[empirical][csv]") {
  const Dataset ds = model::sample_dataset(reference_model(), 500, Seed{78});
  for (const std::string path :
       {std::string("/tmp/wgelab_rt.csv"), std::string("/tmp/wgelab_rt.csv.gz")}) {
    write_embeddings_csv(path, ds);
    const Dataset back = load_embeddings_csv(path);
    REQUIRE(back.n() == ds.n());
    REQUIRE(back.dim() == ds.dim());
    REQUIRE((back.x() - ds.x()).norm() == 0.0);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(ds.n()); ++i) {
      REQUIRE(back.y(i) == ds.y(i));
      REQUIRE(back.d(i) == ds.d(i));
    }
    std::remove(path.c_str());
  }
}

TEST_CASE("embeddings csv: malformed inputs are rejected with location info",
          "[empirical][csv]") {
  auto write_text = [](const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
  };
  const std::string p = "/tmp/wgelab_bad.csv";

  write_text(p, "");
  REQUIRE_THROWS_AS(load_embeddings_csv(p), MalformedFile);

  write_text(p, "a,b,y,d\n0,0,0,S\n");
  REQUIRE_THROWS_AS(load_embeddings_csv(p), MalformedFile);

  write_text(p, "x_0,x_1,y,d\n0.5,1.0,2,S\n");
  REQUIRE_THROWS_AS(load_embeddings_csv(p), MalformedFile);

  write_text(p, "x_0,x_1,y,d\n0.5,1.0,1,Q\n");
  REQUIRE_THROWS_AS(load_embeddings_csv(p), MalformedFile);

  write_text(p, "x_0,x_1,y,d\n0.5,oops,1,S\n");
  REQUIRE_THROWS_AS(load_embeddings_csv(p), MalformedFile);

  write_text(p, "x_0,x_1,y,d\n0.5,1.0,1\n");
  REQUIRE_THROWS_AS(load_embeddings_csv(p), MalformedFile);

  write_text(p, "x_0,x_1,y,d\n");
  REQUIRE_THROWS_AS(load_embeddings_csv(p), MalformedFile);

  try {
    write_text(p, "x_0,x_1,y,d\n0.5,1.0,1,S\n0.5,nope,0,T\n");
    load_embeddings_csv(p);
    FAIL("expected MalformedFile");
  } catch (const MalformedFile& e) {
    REQUIRE(std::string(e.what()).find(":3") != std::string::npos);
  }
  std::remove(p.c_str());
}
