// wgelab command line: population optima and exact worst-group errors for
// Gaussian group models (closed-form), synthetic sweeps (sweep), last-layer
// fits on embedding CSVs (fit), and synthetic data generation (gen-data).
//
// Conventions: stdout carries data, stderr carries diagnostics; every command
// is deterministic given --seed. Exit codes: 2 invalid model or malformed
// input file, 3 covariance not SPD, 4 strict-mode sweep failure, 5 empty
// group.

#include "wgelab/experiments.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace wgelab;
using closed_form::LinearModel;
using closed_form::Method;
using model::Dataset;
using model::GaussianGroupModel;
using model::GroupKey;
using nlohmann::json;

constexpr int kExitBadModel = 2;
constexpr int kExitNotSpd = 3;
constexpr int kExitStrictFailure = 4;
constexpr int kExitEmptyGroup = 5;

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// The default synthetic geometry: orthogonal mean differences, strongly
// correlated covariance, a 1/64 minority prior, and mu(0,T) at the origin
// (group errors are translation invariant, so only b depends on the anchor).
GaussianGroupModel default_model() {
  Vector mu0 = Vector::Zero(2);
  Vector dc(2);
  dc << 0.0, 0.25;
  Vector dd(2);
  dd << -0.25, -0.25;
  Matrix sigma(2, 2);
  sigma << 0.002, 0.002, 0.002, 0.003;
  return GaussianGroupModel(mu0, dc, dd, numerics::SPDMatrix(sigma), 1.0 / 64.0);
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("config file " + path + ": " + e.what());
  }
}

// CLI flags beat config-file values beat built-in defaults.
template <typename T>
void merge_opt(const CLI::App* cmd, const std::string& flag, const json& cfg,
               const std::string& key, T& value) {
  if (cmd->count(flag) == 0 && cfg.contains(key)) value = cfg.at(key).get<T>();
}

GaussianGroupModel parse_model(const std::string& arg, const json& cfg) {
  if (arg.empty()) {
    if (cfg.contains("model")) {
      try {
        return model::model_from_json(cfg.at("model"));
      } catch (const json::exception& e) {
        throw model::InvalidModel(std::string("config model: ") + e.what());
      }
    }
    return default_model();
  }
  const auto brace = arg.find_first_not_of(" \t\n");
  if (brace != std::string::npos && arg[brace] == '{') {
    try {
      return model::model_from_json(json::parse(arg));
    } catch (const json::exception& e) {
      throw model::InvalidModel(std::string("inline model: ") + e.what());
    }
  }
  std::ifstream in(arg);
  if (!in) throw model::InvalidModel("cannot open model file " + arg);
  try {
    return model::model_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw model::InvalidModel(arg + ": " + e.what());
  }
}

std::vector<Method> parse_methods(const std::string& list, double alpha) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "srm" || tok == "erm")
      out.push_back(Method::srm());
    else if (tok == "ds")
      out.push_back(Method::ds());
    else if (tok == "uw")
      out.push_back(Method::uw());
    else if (tok == "mu")
      out.push_back(Method::mu(alpha));
    else if (!tok.empty())
      throw Error("unknown method '" + tok + "' (expected srm|erm|ds|uw|mu)");
  }
  if (out.empty()) throw Error("no methods requested");
  return out;
}

experiments::Evaluation parse_eval(const std::string& arg) {
  if (arg == "analytic") return experiments::Evaluation::analytic();
  if (arg.rfind("holdout:", 0) == 0) {
    try {
      return experiments::Evaluation::holdout(std::stoull(arg.substr(8)));
    } catch (const std::logic_error&) {
      // falls through to the usage error below
    }
  }
  throw Error("bad --eval value '" + arg + "' (expected analytic or holdout:<n>)");
}

// In finite-sample reports the plain fit goes by its empirical name.
std::string fit_label(const Method& m) { return m.kind == Method::Kind::Srm ? "erm" : m.name(); }

// ---------------------------------------------------------------------------
// closed-form
// ---------------------------------------------------------------------------

struct ClosedFormOpts {
  std::string model_spec;
  std::string methods = "srm,ds,uw,mu";
  double alpha = 1.0;
  bool as_json = false;
  std::string config;
};

int run_closed_form(const ClosedFormOpts& opt, const CLI::App* cmd) {
  const json cfg = load_config(opt.config);
  auto methods_list = opt.methods;
  auto alpha = opt.alpha;
  merge_opt(cmd, "--methods", cfg, "methods", methods_list);
  merge_opt(cmd, "--alpha", cfg, "alpha", alpha);

  const GaussianGroupModel m = parse_model(opt.model_spec, cfg);
  const auto methods = parse_methods(methods_list, alpha);
  const bool orthogonal = model::check_orthogonality(m);
  const auto terms = model::mahalanobis_norms(m);
  const Vector dbar = model::delta_bar(m);

  json out;
  out["schema"] = 1;
  out["model"] = model::model_to_json(m);
  out["orthogonal"] = orthogonal;
  out["delta_bar"] = std::vector<double>(dbar.data(), dbar.data() + dbar.size());
  out["terms"] = {{"norm_dc_sq", terms.norm_dc_sq},
                  {"norm_dd_sq", terms.norm_dd_sq},
                  {"cross", terms.cross},
                  {"c_tilde", terms.c_tilde}};
  out["results"] = json::array();

  for (const Method& method : methods) {
    const LinearModel theta = closed_form::optimal_model(m, method);
    json row;
    row["method"] = method.name();
    if (method.kind == Method::Kind::Mu) row["alpha"] = method.alpha;
    row["w"] = std::vector<double>(theta.w.data(), theta.w.data() + theta.w.size());
    row["b"] = theta.b;
    json errs;
    for (const GroupKey g : model::all_groups())
      errs[g.name()] = closed_form::group_error(theta, m, g);
    row["group_errors"] = errs;
    row["wge"] = closed_form::wge(theta, m);
    if (orthogonal) row["wge_closed_orthogonal"] = closed_form::wge_closed_orthogonal(m, method);
    out["results"].push_back(row);
  }

  if (opt.as_json) {
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  std::cout << "model: dim=" << m.dim() << " pi0=" << fmt6(m.pi0()) << "\n";
  std::cout << "orthogonal (Sigma^-1 inner product): " << (orthogonal ? "yes" : "no") << "\n";
  std::cout << "|dC|^2=" << fmt6(terms.norm_dc_sq) << "  |dD|^2=" << fmt6(terms.norm_dd_sq)
            << "  cross=" << fmt6(terms.cross) << "  c_tilde=" << fmt6(terms.c_tilde) << "\n";
  std::cout << "delta_bar:";
  for (Eigen::Index i = 0; i < dbar.size(); ++i) std::cout << ' ' << fmt6(dbar[i]);
  std::cout << "\n\n";
  std::cout << "method   b           E(0S)       E(0T)       E(1S)       E(1T)       WGE";
  if (orthogonal) std::cout << "         WGE_closed";
  std::cout << "\n";
  for (const auto& row : out["results"]) {
    std::printf("%-8s %-11.5g", row["method"].get<std::string>().c_str(),
                row["b"].get<double>());
    for (const char* g : {"0S", "0T", "1S", "1T"})
      std::printf(" %-11.5g", row["group_errors"][g].get<double>());
    std::printf(" %-11.5g", row["wge"].get<double>());
    if (orthogonal) std::printf(" %-11.5g", row["wge_closed_orthogonal"].get<double>());
    std::printf("\n");
    std::cout << "  w:";
    for (const double v : row["w"].get<std::vector<double>>()) std::cout << ' ' << fmt6(v);
    std::cout << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepOpts {
  std::string kind;
  std::string model_spec;
  std::string methods = "srm,ds,uw,mu";
  double alpha = 1.0;
  std::vector<double> grid;
  std::size_t fixed_n = 10000;
  std::size_t trials = 10;
  std::size_t seeds = 10;
  std::string eval = "analytic";
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool svg = false;
  bool per_trial = false;
  bool strict = false;
  std::string config;
};

std::vector<double> default_grid(const std::string& kind) {
  if (kind == "wge-vs-pi0")
    return {1.0 / 256, 1.0 / 128, 1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8, 3.0 / 16, 0.25};
  return {100, 316, 1000, 3162, 10000, 31623, 100000};
}

int run_sweep(const SweepOpts& opt, const CLI::App* cmd) {
  const json cfg = load_config(opt.config);
  auto o = opt;
  merge_opt(cmd, "--methods", cfg, "methods", o.methods);
  merge_opt(cmd, "--alpha", cfg, "alpha", o.alpha);
  merge_opt(cmd, "--grid", cfg, "grid", o.grid);
  merge_opt(cmd, "--n", cfg, "n", o.fixed_n);
  merge_opt(cmd, "--trials", cfg, "trials", o.trials);
  merge_opt(cmd, "--seeds", cfg, "seeds", o.seeds);
  merge_opt(cmd, "--eval", cfg, "eval", o.eval);
  merge_opt(cmd, "--seed", cfg, "seed", o.seed);
  merge_opt(cmd, "--out", cfg, "out", o.out_dir);

  experiments::SweepConfig sweep{parse_model(o.model_spec, cfg)};
  sweep.methods = parse_methods(o.methods, o.alpha);
  sweep.grid = o.grid.empty() ? default_grid(o.kind) : o.grid;
  sweep.trials_per_seed = o.trials;
  sweep.seeds = o.seeds;
  sweep.evaluation = parse_eval(o.eval);
  sweep.mixup_alpha = o.alpha;
  sweep.master_seed = Seed{o.seed};
  sweep.fixed_n = o.fixed_n;
  sweep.keep_trials = o.per_trial;

  std::vector<experiments::ExperimentRecord> records;
  bool log_y = false;
  if (o.kind == "wge-vs-n") {
    records = experiments::sweep_wge_vs_n(sweep);
  } else if (o.kind == "param-mse-vs-n") {
    records = experiments::sweep_param_mse_vs_n(sweep);
    log_y = true;
  } else if (o.kind == "wge-vs-pi0") {
    records = experiments::sweep_wge_vs_pi0(sweep);
  } else {
    throw Error("bad --kind '" + o.kind +
                "' (expected wge-vs-n | param-mse-vs-n | wge-vs-pi0)");
  }

  std::filesystem::create_directories(o.out_dir);
  const std::string base = o.out_dir + "/" + o.kind;
  {
    std::ofstream f(base + ".csv", std::ios::binary);
    experiments::write_records_csv(f, records);
  }
  if (o.per_trial) {
    std::ofstream f(base + "_trials.csv", std::ios::binary);
    experiments::write_trials_csv(f, records);
  }
  if (o.svg) {
    std::ofstream f(base + ".svg", std::ios::binary);
    experiments::write_svg(f, records, true, log_y, o.kind);
  }
  experiments::write_records_csv(std::cout, records);

  std::size_t failures = 0;
  for (const auto& r : records) failures += r.failures;
  std::cerr << "sweep " << o.kind << ": " << records.size() << " records, " << failures
            << " failed trials -> " << base << ".csv\n";
  if (o.strict && failures > 0) {
    std::cerr << "strict mode: failing due to " << failures << " failed trials\n";
    return kExitStrictFailure;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitOpts {
  std::string file;
  std::string eval_file;
  double split = 0.5;
  std::string methods = "erm,ds,uw,mu";
  double alpha = 1.0;
  std::vector<double> lambdas;
  std::string lasso_weighting = "uw";
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  bool as_json = false;
  std::string config;
};

struct EvalStats {
  std::array<double, 4> group_mean{};
  std::array<double, 4> group_std{};
  double wge_mean = 0.0;
  double wge_std = 0.0;
};

// Anchored at the first repeat so deterministic methods report a std of
// exactly zero.
EvalStats aggregate(const std::vector<std::array<double, 5>>& runs) {
  EvalStats s;
  const double n = static_cast<double>(runs.size());
  for (int k = 0; k < 5; ++k) {
    const double anchor = runs[0][k];
    double shift_sum = 0.0;
    for (const auto& r : runs) shift_sum += r[k] - anchor;
    const double shift_mean = shift_sum / n;
    double ss = 0.0;
    for (const auto& r : runs) ss += (r[k] - anchor - shift_mean) * (r[k] - anchor - shift_mean);
    const double mean = anchor + shift_mean;
    const double stddev = std::sqrt(ss / n);
    if (k < 4) {
      s.group_mean[k] = mean;
      s.group_std[k] = stddev;
    } else {
      s.wge_mean = mean;
      s.wge_std = stddev;
    }
  }
  return s;
}

void require_all_groups(const Dataset& ds, const char* which) {
  bool missing = false;
  std::ostringstream msg;
  msg << which << " group counts:";
  for (const GroupKey g : model::all_groups()) {
    msg << ' ' << g.name() << '=' << ds.group_count(g);
    if (ds.group_count(g) == 0) missing = true;
  }
  std::cerr << msg.str() << "\n";
  if (missing) throw empirical::EmptyGroup(std::string(which) + " split has an empty group");
}

int run_fit(const FitOpts& opt, const CLI::App* cmd) {
  const json cfg = load_config(opt.config);
  auto o = opt;
  merge_opt(cmd, "--split", cfg, "split", o.split);
  merge_opt(cmd, "--methods", cfg, "methods", o.methods);
  merge_opt(cmd, "--alpha", cfg, "alpha", o.alpha);
  merge_opt(cmd, "--lambda", cfg, "lambda", o.lambdas);
  merge_opt(cmd, "--repeats", cfg, "repeats", o.repeats);
  merge_opt(cmd, "--seed", cfg, "seed", o.seed);

  const Dataset full = empirical::load_embeddings_csv(o.file);
  Dataset train;
  Dataset eval;
  if (!o.eval_file.empty()) {
    train = full;
    eval = empirical::load_embeddings_csv(o.eval_file);
    if (eval.dim() != train.dim())
      throw empirical::MalformedFile("train/eval dimensionality mismatch");
  } else {
    if (!(o.split > 0.0) || !(o.split < 1.0)) throw Error("--split must lie in (0, 1)");
    // Seeded permutation; the split is fixed across repeats.
    std::vector<Eigen::Index> perm(full.n());
    for (std::size_t i = 0; i < full.n(); ++i) perm[i] = static_cast<Eigen::Index>(i);
    numerics::Rng rng(Seed{o.seed}.derive(0x5917));
    for (std::size_t i = full.n() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
      std::swap(perm[i], perm[std::min(j, i)]);
    }
    const auto cut = static_cast<std::size_t>(o.split * static_cast<double>(full.n()));
    if (cut == 0 || cut == full.n()) throw Error("--split leaves one side empty");
    train = full.subset({perm.begin(), perm.begin() + static_cast<long>(cut)});
    eval = full.subset({perm.begin() + static_cast<long>(cut), perm.end()});
  }
  require_all_groups(train, "train");
  require_all_groups(eval, "eval");

  const auto methods = parse_methods(o.methods, o.alpha);
  const auto weighting = [&] {
    if (o.lasso_weighting == "uw") return empirical::LassoWeighting::InverseGroupFrequency;
    if (o.lasso_weighting == "uniform") return empirical::LassoWeighting::Uniform;
    throw Error("bad --lasso-weighting '" + o.lasso_weighting + "' (expected uw|uniform)");
  }();

  json out;
  out["schema"] = 1;
  out["repeats"] = o.repeats;
  json counts;
  for (const GroupKey g : model::all_groups()) {
    counts["train"][g.name()] = train.group_count(g);
    counts["eval"][g.name()] = eval.group_count(g);
  }
  out["group_counts"] = counts;
  out["rows"] = json::array();

  auto evaluate = [&](const LinearModel& theta) {
    std::array<double, 5> r{};
    double worst = 0.0;
    for (const GroupKey g : model::all_groups()) {
      r[static_cast<std::size_t>(g.index())] = empirical::empirical_group_error(theta, eval, g);
      worst = std::max(worst, r[static_cast<std::size_t>(g.index())]);
    }
    r[4] = worst;
    return r;
  };

  auto emit_row = [&](const std::string& label, std::optional<double> lambda,
                      const EvalStats& s) {
    json row;
    row["method"] = label;
    if (lambda) row["lambda"] = *lambda;
    for (const GroupKey g : model::all_groups())
      row["group_errors"][g.name()] = {{"mean", s.group_mean[g.index()]},
                                       {"std", s.group_std[g.index()]}};
    row["wge"] = {{"mean", s.wge_mean}, {"std", s.wge_std}};
    out["rows"].push_back(row);
  };

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    std::vector<std::array<double, 5>> runs;
    for (std::size_t r = 0; r < o.repeats; ++r) {
      const Seed trial = Seed{o.seed}.derive(0xF17).derive(mi).derive(r);
      runs.push_back(evaluate(empirical::fit_method(train, methods[mi], trial).model));
    }
    emit_row(fit_label(methods[mi]), std::nullopt, aggregate(runs));
  }
  for (const double lambda : o.lambdas) {
    std::vector<std::array<double, 5>> runs;
    for (std::size_t r = 0; r < o.repeats; ++r)
      runs.push_back(evaluate(empirical::fit_lasso(train, lambda, weighting).model));
    emit_row("lasso-" + o.lasso_weighting, lambda, aggregate(runs));
  }

  if (o.as_json) {
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  std::cout << "train n=" << train.n() << "  eval n=" << eval.n() << "  repeats=" << o.repeats
            << "\n";
  std::cout << "method        E(0S)             E(0T)             E(1S)             E(1T)     "
               "        WGE\n";
  for (const auto& row : out["rows"]) {
    std::string label = row["method"].get<std::string>();
    if (row.contains("lambda")) label += "(" + fmt6(row["lambda"].get<double>()) + ")";
    std::printf("%-13s", label.c_str());
    for (const char* g : {"0S", "0T", "1S", "1T"}) {
      std::printf(" %8.5f+-%-7.5f", row["group_errors"][g]["mean"].get<double>(),
                  row["group_errors"][g]["std"].get<double>());
    }
    std::printf(" %8.5f+-%-7.5f\n", row["wge"]["mean"].get<double>(),
                row["wge"]["std"].get<double>());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

struct GenOpts {
  std::string model_spec;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
};

int run_gen_data(const GenOpts& opt, const CLI::App* cmd) {
  const json cfg = load_config(opt.config);
  auto o = opt;
  merge_opt(cmd, "--n", cfg, "n", o.n);
  merge_opt(cmd, "--seed", cfg, "seed", o.seed);
  merge_opt(cmd, "--out", cfg, "out", o.out);
  if (o.n == 0) throw Error("--n must be >= 1");
  if (o.out.empty()) throw Error("--out is required");

  const GaussianGroupModel m = parse_model(o.model_spec, cfg);
  const Dataset ds = model::sample_dataset(m, o.n, Seed{o.seed});
  empirical::write_embeddings_csv(o.out, ds);
  std::cerr << "wrote " << ds.n() << " rows (dim " << ds.dim() << ") to " << o.out
            << "; group counts:";
  for (const GroupKey g : model::all_groups())
    std::cerr << ' ' << g.name() << '=' << ds.group_count(g);
  std::cerr << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"worst-group-optimal linear last layers for Gaussian subpopulation models"};
  app.require_subcommand(1);

  ClosedFormOpts cf;
  auto* cf_cmd = app.add_subcommand(
      "closed-form", "print population-optimal models and exact group errors");
  cf_cmd->add_option("--model", cf.model_spec, "model JSON (path or inline object)");
  cf_cmd->add_option("--methods", cf.methods, "comma list: srm,ds,uw,mu");
  cf_cmd->add_option("--alpha", cf.alpha, "mixup concentration");
  cf_cmd->add_flag("--json", cf.as_json, "emit JSON instead of a table");
  cf_cmd->add_option("--config", cf.config, "JSON config file");

  SweepOpts sw;
  auto* sw_cmd = app.add_subcommand("sweep", "run a synthetic sweep and write CSV/SVG");
  sw_cmd->add_option("--kind", sw.kind, "wge-vs-n | param-mse-vs-n | wge-vs-pi0")->required();
  sw_cmd->add_option("--model", sw.model_spec, "model JSON (path or inline object)");
  sw_cmd->add_option("--methods", sw.methods, "comma list: srm,ds,uw,mu");
  sw_cmd->add_option("--alpha", sw.alpha, "mixup concentration");
  sw_cmd->add_option("--grid", sw.grid, "grid values (n or pi0)")->delimiter(',');
  sw_cmd->add_option("--n", sw.fixed_n, "fixed sample count for the pi0 sweep");
  sw_cmd->add_option("--trials", sw.trials, "fits per dataset");
  sw_cmd->add_option("--seeds", sw.seeds, "independent datasets per grid point");
  sw_cmd->add_option("--eval", sw.eval, "analytic | holdout:<n>");
  sw_cmd->add_option("--seed", sw.seed, "master seed");
  sw_cmd->add_option("--out", sw.out_dir, "output directory");
  sw_cmd->add_flag("--svg", sw.svg, "also write an SVG line plot");
  sw_cmd->add_flag("--per-trial", sw.per_trial, "also write per-trial CSV");
  sw_cmd->add_flag("--strict", sw.strict, "exit 4 if any cell fails");
  sw_cmd->add_option("--config", sw.config, "JSON config file");

  FitOpts ft;
  auto* ft_cmd =
      app.add_subcommand("fit", "fit methods on an embedding CSV and report group errors");
  ft_cmd->add_option("file", ft.file, "embedding CSV (plain or .gz)")->required();
  ft_cmd->add_option("--eval-file", ft.eval_file, "separate evaluation CSV");
  ft_cmd->add_option("--split", ft.split, "train fraction when no eval file is given");
  ft_cmd->add_option("--methods", ft.methods, "comma list: erm,ds,uw,mu");
  ft_cmd->add_option("--alpha", ft.alpha, "mixup concentration");
  ft_cmd->add_option("--lambda", ft.lambdas, "l1 penalties; adds one lasso row each")
      ->delimiter(',');
  ft_cmd->add_option("--lasso-weighting", ft.lasso_weighting, "uw | uniform");
  ft_cmd->add_option("--repeats", ft.repeats, "refit count for mean/std");
  ft_cmd->add_option("--seed", ft.seed, "master seed");
  ft_cmd->add_flag("--json", ft.as_json, "emit JSON instead of a table");
  ft_cmd->add_option("--config", ft.config, "JSON config file");

  GenOpts gd;
  auto* gd_cmd = app.add_subcommand("gen-data", "sample a model into an embedding CSV");
  gd_cmd->add_option("--model", gd.model_spec, "model JSON (path or inline object)");
  gd_cmd->add_option("--n", gd.n, "sample count");
  gd_cmd->add_option("--seed", gd.seed, "sampling seed");
  gd_cmd->add_option("--out", gd.out, "output CSV path (.gz for gzip)");
  gd_cmd->add_option("--config", gd.config, "JSON config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cf_cmd->parsed()) return run_closed_form(cf, cf_cmd);
    if (sw_cmd->parsed()) return run_sweep(sw, sw_cmd);
    if (ft_cmd->parsed()) return run_fit(ft, ft_cmd);
    if (gd_cmd->parsed()) return run_gen_data(gd, gd_cmd);
  } catch (const empirical::EmptyGroup& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEmptyGroup;
  } catch (const numerics::NotSPD& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNotSpd;
  } catch (const model::InvalidModel& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadModel;
  } catch (const empirical::MalformedFile& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadModel;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
