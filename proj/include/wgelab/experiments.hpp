#pragma once

// Sweep harness for the synthetic experiments: worst-group error vs sample
// count, parameter MSE vs sample count, and worst-group error vs the
// minority prior, with the repetition protocol (seeds x trials) and
// sample-size scaling checks. Cells are independent work units; a master
// seed fans out into per-cell and per-trial streams, so records are
// bit-reproducible regardless of scheduling.

#include "wgelab/closed_form.hpp"
#include "wgelab/empirical.hpp"
#include "wgelab/model.hpp"
#include "wgelab/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace wgelab::experiments {

using closed_form::LinearModel;
using closed_form::Method;

class InsufficientPoints : public Error {
public:
  using Error::Error;
};

enum class Statistic { Wge, ParamMse };
enum class GridKind { SampleCount, MinorityPrior };

inline const char* statistic_name(Statistic s) {
  return s == Statistic::Wge ? "wge" : "param_mse";
}
inline const char* grid_kind_name(GridKind k) {
  return k == GridKind::SampleCount ? "n" : "pi0";
}

struct Evaluation {
  enum class Kind { Analytic, Holdout };
  Kind kind = Kind::Analytic;
  std::size_t holdout_n = 0;

  static Evaluation analytic() { return Evaluation{}; }
  static Evaluation holdout(std::size_t n) { return Evaluation{Kind::Holdout, n}; }
};

struct SweepConfig {
  model::GaussianGroupModel model;
  std::vector<Method> methods;
  std::vector<double> grid;  // n values or pi0 values, strictly increasing
  std::size_t trials_per_seed = 10;
  std::size_t seeds = 10;
  Evaluation evaluation{};
  double mixup_alpha = 1.0;
  Seed master_seed{};
  std::size_t fixed_n = 10000;  // sample count used by the pi0 sweep
  bool keep_trials = false;

  void validate() const {
    if (methods.empty()) throw Error("sweep: no methods requested");
    if (grid.empty()) throw Error("sweep: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (!(grid[i] > grid[i - 1])) throw Error("sweep: grid must be strictly increasing");
    if (trials_per_seed == 0 || seeds == 0) throw Error("sweep: counts must be >= 1");
    if (evaluation.kind == Evaluation::Kind::Holdout && evaluation.holdout_n == 0)
      throw Error("sweep: holdout evaluation needs a sample count");
  }
};

struct TrialOutcome {
  std::size_t seed_index = 0;
  std::size_t trial_index = 0;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::size_t effective_n = 0;
  bool failed = false;
  std::string error;
};

struct ExperimentRecord {
  Method method;
  GridKind grid_kind = GridKind::SampleCount;
  double grid_value = 0.0;
  Statistic statistic = Statistic::Wge;
  double mean = 0.0;
  double stddev = 0.0;  // population std over successful seed x trial runs
  std::size_t trial_count = 0;
  std::size_t failures = 0;
  std::vector<TrialOutcome> trials;  // retained when SweepConfig::keep_trials
};

namespace detail {

// Seed-derivation salts; distinct purposes get distinct streams.
constexpr std::uint64_t kSaltData = 0xD5;
constexpr std::uint64_t kSaltTrial = 0x7A;
constexpr std::uint64_t kSaltHoldout = 0xB0;

inline std::size_t worker_count() {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("WGELAB_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return n;
}

// Runs tasks 0..count-1 on up to worker_count() threads.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

inline double param_mse(const LinearModel& fitted, const LinearModel& target) {
  return (fitted.w - target.w).squaredNorm() +
         (fitted.b - target.b) * (fitted.b - target.b);
}

inline double evaluate_wge(const LinearModel& theta, const model::GaussianGroupModel& m,
                           const Evaluation& eval, const model::Dataset* holdout) {
  if (eval.kind == Evaluation::Kind::Analytic) return closed_form::wge(theta, m);
  return empirical::empirical_wge(theta, *holdout);
}

}  // namespace detail

// Shared sweep core. One cell per (method, grid point); within a cell, seeds
// index independent datasets and trials index independent fit randomness.
// All methods see the same dataset for a given (grid point, seed), matching
// the paired repetition protocol.
inline std::vector<ExperimentRecord> run_sweep(const SweepConfig& cfg, GridKind grid_kind,
                                               Statistic statistic) {
  cfg.validate();
  const std::size_t n_methods = cfg.methods.size();
  const std::size_t n_grid = cfg.grid.size();
  const std::size_t n_units = n_methods * n_grid * cfg.seeds;

  std::vector<std::vector<TrialOutcome>> unit_outcomes(n_units);

  detail::parallel_for(n_units, [&](std::size_t unit) {
    const std::size_t mi = unit / (n_grid * cfg.seeds);
    const std::size_t gi = (unit / cfg.seeds) % n_grid;
    const std::size_t si = unit % cfg.seeds;

    Method method = cfg.methods[mi];
    if (method.kind == Method::Kind::Mu) method.alpha = cfg.mixup_alpha;

    auto& out = unit_outcomes[unit];
    out.reserve(cfg.trials_per_seed);

    const Seed ds_seed = cfg.master_seed.derive(detail::kSaltData).derive(gi).derive(si);
    try {
      const model::GaussianGroupModel m = grid_kind == GridKind::MinorityPrior
                                              ? cfg.model.with_pi0(cfg.grid[gi])
                                              : cfg.model;
      const std::size_t n = grid_kind == GridKind::MinorityPrior
                                ? cfg.fixed_n
                                : static_cast<std::size_t>(cfg.grid[gi]);
      const model::Dataset data = model::sample_dataset(m, n, ds_seed);

      LinearModel target;
      if (statistic == Statistic::ParamMse) target = closed_form::optimal_model(m, method);

      model::Dataset holdout;
      if (statistic == Statistic::Wge && cfg.evaluation.kind == Evaluation::Kind::Holdout)
        holdout = model::sample_dataset(m, cfg.evaluation.holdout_n,
                                        ds_seed.derive(detail::kSaltHoldout));

      for (std::size_t t = 0; t < cfg.trials_per_seed; ++t) {
        TrialOutcome o;
        o.seed_index = si;
        o.trial_index = t;
        const Seed trial_seed = ds_seed.derive(detail::kSaltTrial).derive(mi).derive(t);
        try {
          const empirical::FitReport fit = empirical::fit_method(data, method, trial_seed);
          o.effective_n = fit.effective_n;
          o.value = statistic == Statistic::ParamMse
                        ? detail::param_mse(fit.model, target)
                        : detail::evaluate_wge(fit.model, m, cfg.evaluation, &holdout);
        } catch (const Error& e) {
          o.failed = true;
          o.error = e.what();
        }
        out.push_back(std::move(o));
      }
    } catch (const Error& e) {
      // Dataset-level failure: every trial of this unit is failed.
      for (std::size_t t = 0; t < cfg.trials_per_seed; ++t) {
        TrialOutcome o;
        o.seed_index = si;
        o.trial_index = t;
        o.failed = true;
        o.error = e.what();
        out.push_back(std::move(o));
      }
    }
  });

  // Deterministic reduction in (method, grid) order.
  std::vector<ExperimentRecord> records;
  records.reserve(n_methods * n_grid);
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    for (std::size_t gi = 0; gi < n_grid; ++gi) {
      ExperimentRecord rec;
      rec.method = cfg.methods[mi];
      if (rec.method.kind == Method::Kind::Mu) rec.method.alpha = cfg.mixup_alpha;
      rec.grid_kind = grid_kind;
      rec.grid_value = cfg.grid[gi];
      rec.statistic = statistic;

      double sum = 0.0;
      std::vector<double> values;
      for (std::size_t si = 0; si < cfg.seeds; ++si) {
        const auto& unit = unit_outcomes[(mi * n_grid + gi) * cfg.seeds + si];
        for (const TrialOutcome& o : unit) {
          if (o.failed) {
            ++rec.failures;
          } else {
            values.push_back(o.value);
            sum += o.value;
          }
          if (cfg.keep_trials) rec.trials.push_back(o);
        }
      }
      rec.trial_count = values.size();
      if (!values.empty()) {
        rec.mean = sum / static_cast<double>(values.size());
        double ss = 0.0;
        for (const double v : values) ss += (v - rec.mean) * (v - rec.mean);
        rec.stddev = std::sqrt(ss / static_cast<double>(values.size()));
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

inline std::vector<ExperimentRecord> sweep_wge_vs_n(const SweepConfig& cfg) {
  return run_sweep(cfg, GridKind::SampleCount, Statistic::Wge);
}

inline std::vector<ExperimentRecord> sweep_param_mse_vs_n(const SweepConfig& cfg) {
  return run_sweep(cfg, GridKind::SampleCount, Statistic::ParamMse);
}

inline std::vector<ExperimentRecord> sweep_wge_vs_pi0(const SweepConfig& cfg) {
  return run_sweep(cfg, GridKind::MinorityPrior, Statistic::Wge);
}

struct SlopeCheck {
  double slope = 0.0;
  bool pass = false;
};

// Least-squares slope of log(mean) against log(grid_value) across records;
// passes when the slope lands within tol of the expected rate exponent.
inline SlopeCheck slope_check(const std::vector<ExperimentRecord>& records, double expected_slope,
                              double tol) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& r : records) {
    if (r.statistic != Statistic::ParamMse)
      throw InsufficientPoints("slope_check: records must carry param_mse statistics");
    if (r.trial_count == 0 || !(r.mean > 0.0) || !(r.grid_value > 0.0)) continue;
    xs.push_back(std::log(r.grid_value));
    ys.push_back(std::log(r.mean));
  }
  if (xs.size() < 3) throw InsufficientPoints("slope_check: need at least 3 usable grid points");
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  SlopeCheck out;
  out.slope = sxy / sxx;
  out.pass = std::abs(out.slope - expected_slope) <= tol;
  return out;
}

// ---------------------------------------------------------------------------
// Record output: CSV (canonical) and a minimal built-in SVG line plot.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string method_label(const Method& m) {
  if (m.kind == Method::Kind::Mu) return "mu(alpha=" + detail::fmt_double(m.alpha) + ")";
  return m.name();
}

}  // namespace detail

inline void write_records_csv(std::ostream& os, const std::vector<ExperimentRecord>& records) {
  os << "method,grid_kind,grid_value,statistic,mean,std,trials,failures\n";
  for (const auto& r : records) {
    os << r.method.name() << ',' << grid_kind_name(r.grid_kind) << ','
       << detail::fmt_double(r.grid_value) << ',' << statistic_name(r.statistic) << ','
       << detail::fmt_double(r.mean) << ',' << detail::fmt_double(r.stddev) << ','
       << r.trial_count << ',' << r.failures << '\n';
  }
}

inline void write_trials_csv(std::ostream& os, const std::vector<ExperimentRecord>& records) {
  os << "method,grid_kind,grid_value,statistic,seed_index,trial_index,value,effective_n,failed\n";
  for (const auto& r : records) {
    for (const auto& t : r.trials) {
      os << r.method.name() << ',' << grid_kind_name(r.grid_kind) << ','
         << detail::fmt_double(r.grid_value) << ',' << statistic_name(r.statistic) << ','
         << t.seed_index << ',' << t.trial_index << ','
         << (t.failed ? "" : detail::fmt_double(t.value)) << ',' << t.effective_n << ','
         << (t.failed ? 1 : 0) << '\n';
    }
  }
}

// One polyline per method over (grid_value, mean). Axes may be log-scaled;
// ticks are decades on log axes and fifths on linear ones.
inline void write_svg(std::ostream& os, const std::vector<ExperimentRecord>& records, bool log_x,
                      bool log_y, const std::string& title) {
  constexpr double w = 840;
  constexpr double h = 560;
  constexpr double ml = 80;
  constexpr double mr = 170;
  constexpr double mt = 50;
  constexpr double mb = 60;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf"};

  std::vector<std::string> series;
  for (const auto& r : records) {
    const std::string label = detail::method_label(r.method);
    if (std::find(series.begin(), series.end(), label) == series.end()) series.push_back(label);
  }

  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  for (const auto& r : records) {
    if (r.trial_count == 0) continue;
    if ((log_x && !(r.grid_value > 0)) || (log_y && !(r.mean > 0))) continue;
    xmin = std::min(xmin, tx(r.grid_value));
    xmax = std::max(xmax, tx(r.grid_value));
    ymin = std::min(ymin, ty(r.mean));
    ymax = std::max(ymax, ty(r.mean));
  }
  if (!(xmax > xmin)) xmax = xmin + 1;
  if (!(ymax > ymin)) ymax = ymin + 1;
  const double xpad = 0.03 * (xmax - xmin);
  const double ypad = 0.06 * (ymax - ymin);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;

  auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto py = [&](double v) { return h - mb - (ty(v) - ymin) / (ymax - ymin) * (h - mt - mb); };

  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
     << "' viewBox='0 0 " << w << ' ' << h << "'>\n"
     << "<rect width='100%' height='100%' fill='white'/>\n"
     << "<text x='" << ml << "' y='" << mt - 20 << "' font-size='16'>" << title << "</text>\n"
     << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
     << "' stroke='black'/>\n"
     << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
     << "' stroke='black'/>\n";

  auto tick_positions = [](double lo, double hi, bool log_axis) {
    std::vector<double> t;
    if (log_axis) {
      for (int e = static_cast<int>(std::ceil(lo)); e <= static_cast<int>(std::floor(hi)); ++e)
        t.push_back(e);
    } else {
      for (int i = 0; i <= 5; ++i) t.push_back(lo + (hi - lo) * i / 5.0);
    }
    return t;
  };
  for (const double t : tick_positions(xmin, xmax, log_x)) {
    const double x = ml + (t - xmin) / (xmax - xmin) * (w - ml - mr);
    os << "<line x1='" << x << "' y1='" << h - mb << "' x2='" << x << "' y2='" << h - mb + 6
       << "' stroke='black'/>\n<text x='" << x << "' y='" << h - mb + 22
       << "' font-size='11' text-anchor='middle'>"
       << (log_x ? "1e" + std::to_string(static_cast<int>(t)) : detail::fmt_double(t).substr(0, 8))
       << "</text>\n";
  }
  for (const double t : tick_positions(ymin, ymax, log_y)) {
    const double y = h - mb - (t - ymin) / (ymax - ymin) * (h - mt - mb);
    os << "<line x1='" << ml - 6 << "' y1='" << y << "' x2='" << ml << "' y2='" << y
       << "' stroke='black'/>\n<text x='" << ml - 10 << "' y='" << y + 4
       << "' font-size='11' text-anchor='end'>"
       << (log_y ? "1e" + std::to_string(static_cast<int>(t)) : detail::fmt_double(t).substr(0, 8))
       << "</text>\n";
  }

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = palette[s % 7];
    os << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
    for (const auto& r : records) {
      if (detail::method_label(r.method) != series[s] || r.trial_count == 0) continue;
      if ((log_x && !(r.grid_value > 0)) || (log_y && !(r.mean > 0))) continue;
      os << px(r.grid_value) << ',' << py(r.mean) << ' ';
    }
    os << "'/>\n<text x='" << w - mr + 12 << "' y='" << mt + 18 * s + 12 << "' font-size='13' fill='"
       << color << "'>" << series[s] << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace wgelab::experiments
