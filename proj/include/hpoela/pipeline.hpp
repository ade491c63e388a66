#pragma once

// Campaign orchestration: configuration, result store, and the bench,
// features, analyze and report commands.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "analysis.hpp"
#include "bbob.hpp"
#include "core.hpp"
#include "design.hpp"
#include "ela.hpp"
#include "external.hpp"
#include "hpo.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "optimizers.hpp"

namespace hpoela::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// ------------------------------------------------------------------ config

struct ExternalSpec {
  std::vector<std::string> command;
  double timeout_s = 60.0;
};

struct AnalysisSettings {
  int cart_max_depth = 4;
  int cart_min_leaf = 5;
  int cv_folds = 10;
  int cv_repeats = 10;
  int k_min = 2;
  int k_max = 8;
  int kmeans_restarts = 25;
};

struct Config {
  std::vector<int> bbob_fids, bbob_iids, bbob_dims;
  std::vector<std::string> toy_datasets;  // as written; resolved against base_dir
  std::vector<int> toy_dims;
  std::uint64_t toy_fold_seed = 1;
  std::vector<ExternalSpec> external;
  std::vector<opt::OptimizerSpec> optimizers;
  int budget_multiplier = 50;
  int replications = 10;
  std::uint64_t seed = 0;
  std::string output_dir = "results";
  int workers = 1;
  int design_multiplier = 50;
  int design_restarts = 100;
  AnalysisSettings analysis;
  fs::path base_dir = ".";

  fs::path output_path() const {
    const fs::path p(output_dir);
    return p.is_absolute() ? p : base_dir / p;
  }
  fs::path dataset_path(const std::string& d) const {
    const fs::path p(d);
    return p.is_absolute() ? p : base_dir / p;
  }
};

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("bad value for '") + key + "': " + e.what());
  }
}

inline void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::Config, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
      throw Error(ErrorKind::Config, "unknown key '" + key + "' in " + where);
    }
  }
}

inline opt::OptimizerSpec parse_optimizer(const json& j) {
  opt::OptimizerSpec s;
  if (j.is_string()) {
    s.variant = opt::parse_variant(j.get<std::string>());
  } else {
    only_keys(j, {"name", "sigma0", "visiting", "acceptance", "temperature0", "init_fraction", "candidates_per_dim",
                  "local_steps", "likelihood_evals"},
              "optimizer");
    if (!j.contains("name")) throw Error(ErrorKind::Config, "optimizer entry needs a name");
    s.variant = opt::parse_variant(j.at("name").get<std::string>());
    s.cmaes.sigma0 = get_or(j, "sigma0", s.cmaes.sigma0);
    s.gensa.visiting = get_or(j, "visiting", s.gensa.visiting);
    s.gensa.acceptance = get_or(j, "acceptance", s.gensa.acceptance);
    s.gensa.temperature0 = get_or(j, "temperature0", s.gensa.temperature0);
    s.mbo.init_fraction = get_or(j, "init_fraction", s.mbo.init_fraction);
    s.mbo.candidates_per_dim = get_or(j, "candidates_per_dim", s.mbo.candidates_per_dim);
    s.mbo.local_steps = get_or(j, "local_steps", s.mbo.local_steps);
    s.mbo.gp.likelihood_evals = get_or(j, "likelihood_evals", s.mbo.gp.likelihood_evals);
  }
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  return s;
}

inline json optimizer_json(const opt::OptimizerSpec& s) {
  json j = {{"name", opt::to_string(s.variant)}};
  switch (s.variant) {
    case opt::Variant::Cmaes: j["sigma0"] = s.cmaes.sigma0; break;
    case opt::Variant::Gensa:
      j["visiting"] = s.gensa.visiting;
      j["acceptance"] = s.gensa.acceptance;
      j["temperature0"] = s.gensa.temperature0;
      break;
    case opt::Variant::Mbo:
      j["init_fraction"] = s.mbo.init_fraction;
      j["candidates_per_dim"] = s.mbo.candidates_per_dim;
      j["local_steps"] = s.mbo.local_steps;
      j["likelihood_evals"] = s.mbo.gp.likelihood_evals;
      break;
    default: break;
  }
  return j;
}

}  // namespace detail

/// Parses and validates a config document. Environment overrides
/// (HPOELA_OUTPUT_DIR, HPOELA_WORKERS) are applied on top.
inline Config parse_config(const json& j, const fs::path& base_dir = ".") {
  using detail::get_or;
  detail::only_keys(j, {"schema_version", "problems", "optimizers", "budget_multiplier", "replications", "seed",
                        "output_dir", "workers", "design", "analysis"},
                    "config");
  Config c;
  c.base_dir = base_dir;
  const int version = get_or(j, "schema_version", kSchemaVersion);
  if (version != kSchemaVersion) throw Error(ErrorKind::Schema, "unsupported schema_version " + std::to_string(version));
  if (!j.contains("problems")) throw Error(ErrorKind::Config, "config needs a problems block");
  const json& pj = j.at("problems");
  detail::only_keys(pj, {"bbob", "toy_hpo", "external"}, "problems");
  if (pj.contains("bbob")) {
    const json& b = pj.at("bbob");
    detail::only_keys(b, {"fids", "iids", "dims"}, "problems.bbob");
    c.bbob_fids = get_or(b, "fids", std::vector<int>{});
    c.bbob_iids = get_or(b, "iids", std::vector<int>{});
    c.bbob_dims = get_or(b, "dims", std::vector<int>{});
    for (int f : c.bbob_fids) {
      if (f < 1 || f > bbob::kNumFunctions) throw Error(ErrorKind::Config, "bbob fid out of range");
    }
    for (int i : c.bbob_iids) {
      if (i < 1) throw Error(ErrorKind::Config, "bbob iid must be >= 1");
    }
    for (int d : c.bbob_dims) {
      if (d < 2) throw Error(ErrorKind::Config, "bbob dims must be >= 2");
    }
  }
  if (pj.contains("toy_hpo")) {
    const json& t = pj.at("toy_hpo");
    detail::only_keys(t, {"datasets", "dims", "fold_seed"}, "problems.toy_hpo");
    c.toy_datasets = get_or(t, "datasets", std::vector<std::string>{});
    c.toy_dims = get_or(t, "dims", std::vector<int>{});
    c.toy_fold_seed = get_or(t, "fold_seed", c.toy_fold_seed);
    for (int d : c.toy_dims) {
      if (d != 2 && d != 3 && d != 5) throw Error(ErrorKind::Config, "toy_hpo dims must be 2, 3 or 5");
    }
  }
  if (pj.contains("external")) {
    for (const auto& e : pj.at("external")) {
      detail::only_keys(e, {"command", "timeout_s"}, "problems.external[]");
      ExternalSpec s;
      s.command = get_or(e, "command", std::vector<std::string>{});
      s.timeout_s = get_or(e, "timeout_s", s.timeout_s);
      if (s.command.empty()) throw Error(ErrorKind::Config, "external evaluator needs a command");
      if (!(s.timeout_s > 0.0)) throw Error(ErrorKind::Config, "timeout_s must be > 0");
      c.external.push_back(std::move(s));
    }
  }
  if (j.contains("optimizers")) {
    std::set<std::string> seen;
    for (const auto& o : j.at("optimizers")) {
      c.optimizers.push_back(detail::parse_optimizer(o));
      if (!seen.insert(opt::to_string(c.optimizers.back().variant)).second) {
        throw Error(ErrorKind::Config, "optimizer listed twice");
      }
    }
  } else {
    for (auto v : {opt::Variant::Random, opt::Variant::Grid, opt::Variant::Cmaes, opt::Variant::Gensa, opt::Variant::Mbo}) {
      opt::OptimizerSpec s;
      s.variant = v;
      c.optimizers.push_back(s);
    }
  }
  c.budget_multiplier = get_or(j, "budget_multiplier", c.budget_multiplier);
  c.replications = get_or(j, "replications", c.replications);
  c.seed = get_or(j, "seed", c.seed);
  c.output_dir = get_or(j, "output_dir", c.output_dir);
  c.workers = get_or(j, "workers", c.workers);
  if (j.contains("design")) {
    const json& d = j.at("design");
    detail::only_keys(d, {"multiplier", "restarts"}, "design");
    c.design_multiplier = get_or(d, "multiplier", c.design_multiplier);
    c.design_restarts = get_or(d, "restarts", c.design_restarts);
  }
  if (j.contains("analysis")) {
    const json& a = j.at("analysis");
    detail::only_keys(a, {"cart_max_depth", "cart_min_leaf", "cv_folds", "cv_repeats", "k_min", "k_max", "kmeans_restarts"},
                      "analysis");
    auto& s = c.analysis;
    s.cart_max_depth = get_or(a, "cart_max_depth", s.cart_max_depth);
    s.cart_min_leaf = get_or(a, "cart_min_leaf", s.cart_min_leaf);
    s.cv_folds = get_or(a, "cv_folds", s.cv_folds);
    s.cv_repeats = get_or(a, "cv_repeats", s.cv_repeats);
    s.k_min = get_or(a, "k_min", s.k_min);
    s.k_max = get_or(a, "k_max", s.k_max);
    s.kmeans_restarts = get_or(a, "kmeans_restarts", s.kmeans_restarts);
  }

  if (const char* env = std::getenv("HPOELA_OUTPUT_DIR"); env && *env) c.output_dir = env;
  if (const char* env = std::getenv("HPOELA_WORKERS"); env && *env) {
    try {
      c.workers = std::stoi(env);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "HPOELA_WORKERS must be an integer");
    }
  }

  if (c.budget_multiplier < 1) throw Error(ErrorKind::Config, "budget_multiplier must be >= 1");
  if (c.replications < 1) throw Error(ErrorKind::Config, "replications must be >= 1");
  if (c.workers < 1) throw Error(ErrorKind::Config, "workers must be >= 1");
  if (c.design_multiplier < 1 || c.design_restarts < 1) throw Error(ErrorKind::Config, "design settings must be >= 1");
  if (c.analysis.cv_folds < 2 || c.analysis.cv_repeats < 1) throw Error(ErrorKind::Config, "bad cross-validation settings");
  if (c.analysis.k_min < 2 || c.analysis.k_max < c.analysis.k_min) throw Error(ErrorKind::Config, "bad k range");
  if (c.analysis.cart_min_leaf < 1 || c.analysis.kmeans_restarts < 1) throw Error(ErrorKind::Config, "bad analysis settings");
  if (c.bbob_fids.empty() + c.bbob_iids.empty() + c.bbob_dims.empty() != 0 &&
      !(c.bbob_fids.empty() && c.bbob_iids.empty() && c.bbob_dims.empty())) {
    throw Error(ErrorKind::Config, "bbob needs fids, iids and dims together");
  }
  if (c.toy_datasets.empty() != c.toy_dims.empty()) throw Error(ErrorKind::Config, "toy_hpo needs datasets and dims together");
  return c;
}

inline Config load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  return parse_config(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

/// Canonical serialization. Output location and worker count are excluded:
/// they do not change results.
inline json experiment_json(const Config& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["problems"]["bbob"] = {{"fids", c.bbob_fids}, {"iids", c.bbob_iids}, {"dims", c.bbob_dims}};
  j["problems"]["toy_hpo"] = {{"datasets", c.toy_datasets}, {"dims", c.toy_dims}, {"fold_seed", c.toy_fold_seed}};
  j["problems"]["external"] = json::array();
  for (const auto& e : c.external) j["problems"]["external"].push_back({{"command", e.command}, {"timeout_s", e.timeout_s}});
  j["optimizers"] = json::array();
  for (const auto& o : c.optimizers) j["optimizers"].push_back(detail::optimizer_json(o));
  j["budget_multiplier"] = c.budget_multiplier;
  j["replications"] = c.replications;
  j["seed"] = c.seed;
  j["design"] = {{"multiplier", c.design_multiplier}, {"restarts", c.design_restarts}};
  const auto& a = c.analysis;
  j["analysis"] = {{"cart_max_depth", a.cart_max_depth}, {"cart_min_leaf", a.cart_min_leaf}, {"cv_folds", a.cv_folds},
                   {"cv_repeats", a.cv_repeats}, {"k_min", a.k_min}, {"k_max", a.k_max},
                   {"kmeans_restarts", a.kmeans_restarts}};
  return j;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string config_hash(const Config& c) { return hex64(fnv1a(experiment_json(c).dump())); }

// ---------------------------------------------------------------- problems

struct ProblemEntry {
  Problem problem;
  std::size_t dim = 0;
};

/// BBOB grid (fid-major), then toy HPO problems (data set-major), then external evaluators.
inline std::vector<ProblemEntry> resolve_problems(const Config& c) {
  std::vector<ProblemEntry> out;
  for (const auto& inst : bbob::suite(c.bbob_fids, c.bbob_iids, c.bbob_dims)) {
    out.push_back({bbob::make_problem(inst), static_cast<std::size_t>(inst.dim)});
  }
  for (const auto& ds : c.toy_datasets) {
    auto data = std::make_shared<const hpo::Dataset>(hpo::load_dataset(c.dataset_path(ds)));
    for (int d : c.toy_dims) {
      out.push_back({hpo::make_problem(hpo::make_toy_problem(data, d, c.toy_fold_seed)), static_cast<std::size_t>(d)});
    }
  }
  for (const auto& e : c.external) {
    const auto timeout = std::chrono::milliseconds(static_cast<long long>(e.timeout_s * 1000.0));
    auto ev = std::make_shared<external::Evaluator>(e.command, timeout);
    out.push_back({external::make_problem(ev), ev->info().dim});
  }
  std::set<std::string> ids;
  for (const auto& p : out) {
    if (!ids.insert(p.problem.id).second) throw Error(ErrorKind::Config, "duplicate problem id " + p.problem.id);
  }
  return out;
}

inline std::string safe_name(const std::string& s) {
  std::string out = s;
  for (char& ch : out) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-' && ch != '.') ch = '-';
  }
  return out;
}

// ------------------------------------------------------------------- store

inline json manifest_json(const Config& c) {
  json m;
  m["schema_version"] = kSchemaVersion;
  m["config_hash"] = config_hash(c);
  m["modules"]["optimizers"] = experiment_json(c)["optimizers"];
  m["modules"]["design"] = {{"kind", "maximin-lhs"}, {"multiplier", c.design_multiplier}, {"restarts", c.design_restarts}};
  m["modules"]["ela"] = {{"features", ela::catalog().size()},
                         {"ic_settling", ela::kIcSettling},
                         {"kde_grid", ela::kKdeGrid},
                         {"peak_fraction", ela::kPeakFraction},
                         {"disp_quantiles", std::vector<double>(ela::kDispQuantiles.begin(), ela::kDispQuantiles.end())}};
  m["modules"]["metrics"] = {{"ert_penalty_factor", metrics::kErtPenaltyFactor}, {"ert_aggregation", "arithmetic"}};
  m["modules"]["analysis"] = experiment_json(c)["analysis"];
  return m;
}

/// Creates or reopens the store; refuses to mix results of different configs.
inline void open_store(const Config& c, bool resume, bool require_fresh) {
  const fs::path root = c.output_path();
  fs::create_directories(root);
  const fs::path manifest = root / "manifest.json";
  if (fs::exists(manifest)) {
    json m;
    try {
      m = json::parse(io::read_file(manifest));
    } catch (const json::exception&) {
      throw Error(ErrorKind::Config, "unreadable manifest in " + root.string());
    }
    if (m.value("config_hash", std::string()) != config_hash(c)) {
      throw Error(ErrorKind::Config, "manifest config hash mismatch in " + root.string());
    }
    if (require_fresh && !resume && fs::exists(root / "traces") && !fs::is_empty(root / "traces")) {
      throw Error(ErrorKind::Config, "store " + root.string() + " already holds results; pass --resume");
    }
  }
  io::write_atomic(root / "config.json", experiment_json(c).dump(2) + "\n");
  io::write_atomic(manifest, manifest_json(c).dump(2) + "\n");
}

inline void write_problems_csv(const fs::path& root, const std::vector<ProblemEntry>& problems) {
  std::string out = "problem_id,class,dim\n";
  for (const auto& p : problems) out += p.problem.id + "," + to_string(p.problem.cls) + "," + std::to_string(p.dim) + "\n";
  io::write_atomic(root / "problems.csv", out);
}

inline std::string trace_csv(const opt::Trace& t, std::size_t dim) {
  std::string out = "problem_id,optimizer,seed,eval_index";
  for (std::size_t j = 0; j < dim; ++j) out += ",x" + std::to_string(j + 1);
  out += ",y,incumbent\n";
  const std::string prefix = t.problem_id + "," + t.optimizer + "," + std::to_string(t.seed) + ",";
  for (const auto& e : t.evals) {
    out += prefix + std::to_string(e.index);
    for (double v : e.x) out += "," + io::num(v);
    out += "," + io::num(e.y) + "," + io::num(e.incumbent) + "\n";
  }
  return out;
}

// ------------------------------------------------------------------- bench

struct BenchOptions {
  bool resume = false;
  std::optional<int> workers;
  std::size_t limit = 0;  // stop after this many new cells (0: no limit)
  std::ostream* log = &std::cerr;
};

struct BenchSummary {
  std::size_t total = 0;
  std::size_t skipped = 0;
  std::size_t ran = 0;
  std::size_t failed = 0;
  std::size_t evaluations = 0;
};

struct Cell {
  std::size_t problem = 0;
  std::size_t optimizer = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  std::string name;
};

inline std::uint64_t cell_seed(std::uint64_t base, const std::string& pid, const std::string& optimizer, int rep) {
  return base ^ fnv1a(pid + "|" + optimizer + "|" + std::to_string(rep));
}

/// Runs fn(i) for i in [0, n) on a pool of worker threads pulling indices.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        next = n;
      }
    }
  };
  const int k = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (k == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < k; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

inline BenchSummary cmd_bench(const Config& c, const BenchOptions& options = {}) {
  open_store(c, options.resume, true);
  const fs::path root = c.output_path();
  const auto problems = resolve_problems(c);
  write_problems_csv(root, problems);
  fs::create_directories(root / "traces");
  fs::create_directories(root / "failed");

  std::vector<Cell> pending;
  BenchSummary summary;
  for (std::size_t p = 0; p < problems.size(); ++p) {
    for (std::size_t o = 0; o < c.optimizers.size(); ++o) {
      for (int r = 0; r < c.replications; ++r) {
        const std::string pid = problems[p].problem.id;
        const std::string oname = opt::to_string(c.optimizers[o].variant);
        Cell cell{p, o, r, cell_seed(c.seed, pid, oname, r), safe_name(pid) + "__" + oname + "__r" + std::to_string(r)};
        ++summary.total;
        if (fs::exists(root / "traces" / (cell.name + ".csv"))) {
          ++summary.skipped;
          continue;
        }
        pending.push_back(std::move(cell));
      }
    }
  }
  if (options.limit > 0 && pending.size() > options.limit) pending.resize(options.limit);

  std::mutex log_mutex;
  std::atomic<std::size_t> failed{0}, evaluations{0};
  parallel_for(pending.size(), options.workers.value_or(c.workers), [&](std::size_t i) {
    const Cell& cell = pending[i];
    const auto& pe = problems[cell.problem];
    const std::size_t budget = static_cast<std::size_t>(c.budget_multiplier) * pe.dim;
    const fs::path fail_txt = root / "failed" / (cell.name + ".txt");
    try {
      const auto trace = opt::run(c.optimizers[cell.optimizer], pe.problem, budget, cell.seed);
      io::write_atomic(root / "traces" / (cell.name + ".csv"), trace_csv(trace, pe.dim));
      evaluations += trace.evals.size();
      std::error_code ec;
      fs::remove(fail_txt, ec);
      fs::remove(root / "failed" / (cell.name + ".csv"), ec);
    } catch (const opt::RunError& e) {
      ++failed;
      io::write_atomic(fail_txt, std::string(e.what()) + "\n");
      io::write_atomic(root / "failed" / (cell.name + ".csv"), trace_csv(e.partial(), pe.dim));
      std::lock_guard lock(log_mutex);
      if (options.log) *options.log << "cell " << cell.name << " failed: " << e.what() << "\n";
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Budget || e.kind() == ErrorKind::Config) throw;
      ++failed;
      io::write_atomic(fail_txt, std::string(e.what()) + "\n");
      std::lock_guard lock(log_mutex);
      if (options.log) *options.log << "cell " << cell.name << " failed: " << e.what() << "\n";
    }
  });
  summary.ran = pending.size();
  summary.failed = failed;
  summary.evaluations = evaluations;
  return summary;
}

// ---------------------------------------------------------------- features

struct FeaturesSummary {
  std::size_t rows = 0;
  std::size_t excluded = 0;
  fs::path csv;
};

inline std::uint64_t design_seed(std::uint64_t base, const std::string& pid) { return base ^ fnv1a("design|" + pid); }

inline std::vector<std::string> feature_header() {
  std::vector<std::string> h = {"problem_id", "class", "dim"};
  for (const auto& name : ela::catalog()) h.push_back(name);
  return h;
}

inline bool is_degenerate(ErrorKind k) {
  return k == ErrorKind::DegenerateSample || k == ErrorKind::DegenerateStep || k == ErrorKind::DegenerateFitness ||
         k == ErrorKind::SingularFit || k == ErrorKind::InsufficientSample;
}

/// One maximin LHS design per problem, standardized, then the full feature catalog.
/// Problems whose features are degenerate are excluded and logged.
inline FeaturesSummary cmd_features(const Config& c, std::optional<int> workers = std::nullopt, std::ostream* log = &std::cerr) {
  open_store(c, true, false);
  const fs::path root = c.output_path();
  const auto problems = resolve_problems(c);
  write_problems_csv(root, problems);

  struct Row {
    std::optional<ela::FeatureVector> features;
    std::string excluded;
  };
  std::vector<Row> rows(problems.size());
  parallel_for(problems.size(), workers.value_or(c.workers), [&](std::size_t i) {
    const auto& pe = problems[i];
    const std::size_t n = static_cast<std::size_t>(c.design_multiplier) * pe.dim;
    try {
      const auto des = design::make_design(pe.problem, n, design_seed(c.seed, pe.problem.id), static_cast<std::size_t>(c.design_restarts));
      rows[i].features = ela::compute_all(design::make_ela_sample(des));
    } catch (const Error& e) {
      if (!is_degenerate(e.kind())) throw;
      rows[i].excluded = pe.problem.id + "\t" + to_string(e.kind()) + "\t" + e.what();
    }
  });

  std::string csv = io::join(feature_header()) + "\n";
  std::string excluded;
  FeaturesSummary s;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (!rows[i].features) {
      excluded += rows[i].excluded + "\n";
      if (log) *log << "excluded " << rows[i].excluded << "\n";
      ++s.excluded;
      continue;
    }
    csv += problems[i].problem.id + "," + to_string(problems[i].problem.cls) + "," + std::to_string(problems[i].dim);
    for (const auto& [name, value] : rows[i].features->entries()) csv += "," + io::num(value);
    csv += "\n";
    ++s.rows;
  }
  io::write_atomic(root / "features_excluded.log", excluded);
  if (s.rows == 0) throw Error(ErrorKind::EmptyMatrix, "every problem was excluded; feature matrix is empty");
  s.csv = root / "features.csv";
  io::write_atomic(s.csv, csv);
  return s;
}

inline analysis::FeatureMatrix load_features(const fs::path& path) {
  const auto t = io::read_csv(path);
  if (t.header != feature_header()) throw Error(ErrorKind::Schema, "feature matrix columns do not match the catalog");
  analysis::FeatureMatrix m;
  m.columns.assign(t.header.begin() + 3, t.header.end());
  m.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(m.columns.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    if (r[1] != "BBOB" && r[1] != "HPO") throw Error(ErrorKind::Schema, "unknown problem class " + r[1]);
    m.ids.push_back(r[0]);
    m.classes.push_back(r[1]);
    m.dims.push_back(static_cast<int>(io::parse_double(r[2])));
    for (std::size_t j = 3; j < r.size(); ++j) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 3)) = io::parse_double(r[j]);
    }
  }
  return m;
}

// ----------------------------------------------------------------- analyze

/// Reads every trace in the store as a run record, in file-name order.
inline std::vector<metrics::RunRecord> load_records(const fs::path& store) {
  std::vector<metrics::RunRecord> out;
  const fs::path dir = store / "traces";
  if (!fs::exists(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto t = io::read_csv(f);
    if (t.header.size() < 7 || t.header[0] != "problem_id" || t.header[1] != "optimizer" || t.header[2] != "seed" ||
        t.header[3] != "eval_index" || t.header[t.header.size() - 2] != "y" || t.header.back() != "incumbent") {
      throw Error(ErrorKind::Schema, "unexpected trace columns in " + f.string());
    }
    if (t.rows.empty()) throw Error(ErrorKind::Schema, "empty trace " + f.string());
    metrics::RunRecord r;
    r.problem_id = t.rows[0][0];
    r.optimizer = t.rows[0][1];
    r.seed = std::stoull(t.rows[0][2]);
    r.dim = t.header.size() - 6;
    const auto stem = f.stem().string();
    const auto pos = stem.rfind("__r");
    r.replication = pos == std::string::npos ? 0 : std::stoi(stem.substr(pos + 3));
    r.worst = -std::numeric_limits<double>::infinity();
    for (const auto& row : t.rows) {
      r.incumbent.push_back(io::parse_double(row.back()));
      r.worst = std::max(r.worst, io::parse_double(row[row.size() - 2]));
    }
    r.final_best = r.incumbent.back();
    r.evals_used = t.rows.size();
    out.push_back(std::move(r));
  }
  return out;
}

struct AnalyzeOptions {
  fs::path store;
  fs::path features;
  fs::path out;  // defaults to <store>/report
};

struct AnalyzeSummary {
  fs::path out;
  json summary;
};

inline AnalysisSettings store_settings(const fs::path& store, std::uint64_t& seed) {
  const fs::path cfg = store / "config.json";
  if (!fs::exists(cfg)) return {};
  json j;
  try {
    j = json::parse(io::read_file(cfg));
  } catch (const json::exception&) {
    throw Error(ErrorKind::Schema, "unreadable config.json in store");
  }
  if (j.value("schema_version", 0) != kSchemaVersion) throw Error(ErrorKind::Schema, "store schema version mismatch");
  const Config c = parse_config(j, store);
  seed = c.seed;
  return c.analysis;
}

namespace detail {

inline void write_performance(const fs::path& out, const std::vector<metrics::RunRecord>& records, json& summary) {
  const auto table = metrics::rank_by_final(records);
  std::map<std::string, std::size_t> dim_of;
  for (const auto& r : records) dim_of[r.problem_id] = r.dim;

  std::string ranks = "problem_id,dim";
  for (const auto& o : table.optimizers) ranks += "," + o;
  ranks += "\n";
  for (std::size_t i = 0; i < table.problems.size(); ++i) {
    ranks += table.problems[i] + "," + std::to_string(dim_of[table.problems[i]]);
    for (Eigen::Index j = 0; j < table.ranks.cols(); ++j) ranks += "," + io::num(table.ranks(static_cast<Eigen::Index>(i), j));
    ranks += "\n";
  }
  io::write_atomic(out / "ranks.csv", ranks);

  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& p : table.problems) {
    groups["all"].push_back(p);
    groups["dim" + std::to_string(dim_of[p])].push_back(p);
  }
  std::string mean_ranks = "group,optimizer,mean_rank,problems,cd,friedman_statistic,df,p_value\n";
  const int k = static_cast<int>(table.optimizers.size());
  for (const auto& [group, members] : groups) {
    const auto sub = metrics::subset_rows(table, members);
    const Vector mr = sub.mean_ranks();
    std::optional<metrics::FriedmanResult> fr;
    std::optional<double> cd;
    if (members.size() >= 2 && k >= 2) {
      fr = metrics::friedman(sub);
      if (k <= 10) cd = metrics::nemenyi_cd(k, members.size());
    }
    for (int j = 0; j < k; ++j) {
      mean_ranks += group + "," + table.optimizers[static_cast<std::size_t>(j)] + "," + io::num(mr[j]) + "," +
                    std::to_string(members.size()) + "," + (cd ? io::num(*cd) : "NA") + "," +
                    (fr ? io::num(fr->statistic) : "NA") + "," + (fr ? std::to_string(fr->df) : "NA") + "," +
                    (fr ? io::num(fr->p_value) : "NA") + "\n";
    }
    json g;
    g["problems"] = members.size();
    if (fr) g["friedman"] = {{"statistic", fr->statistic}, {"df", fr->df}, {"p_value", fr->p_value}};
    if (cd) g["cd"] = *cd;
    for (int j = 0; j < k; ++j) g["mean_ranks"][table.optimizers[static_cast<std::size_t>(j)]] = mr[j];
    summary["performance"]["groups"][group] = g;
  }
  io::write_atomic(out / "mean_ranks.csv", mean_ranks);

  const auto ert = metrics::ert_ratio_table(records);
  std::string cells = "problem_id,dim,optimizer,target,successes,replications,ert,penalized,ratio\n";
  for (const auto& c : ert.cells) {
    cells += c.problem_id + "," + std::to_string(c.dim) + "," + c.optimizer + "," + io::num(c.target) + "," +
             std::to_string(c.successes) + "," + std::to_string(c.replications) + "," + io::num(c.ert) + "," +
             (c.penalized ? "1" : "0") + "," + io::num(c.ratio) + "\n";
  }
  io::write_atomic(out / "ert_ratios.csv", cells);
  std::string ert_summary = "dim,optimizer,problems,mean_ratio,geometric_ratio\n";
  for (const auto& s : ert.summary) {
    ert_summary += std::to_string(s.dim) + "," + s.optimizer + "," + std::to_string(s.problems) + "," + io::num(s.mean_ratio) +
                   "," + io::num(s.geometric_ratio) + "\n";
    summary["performance"]["ert_ratio"]["dim" + std::to_string(s.dim)][s.optimizer] = s.mean_ratio;
  }
  io::write_atomic(out / "ert_summary.csv", ert_summary);

  const auto curves = metrics::regret_curves(records);
  std::string regret = "problem_id,optimizer,eval_index,mean_regret,se\n";
  std::map<std::string, std::pair<double, int>> final_regret;
  std::map<std::pair<std::string, std::string>, double> last;
  for (const auto& p : curves) {
    regret += p.problem_id + "," + p.optimizer + "," + std::to_string(p.eval_index) + "," + io::num(p.mean) + "," + io::num(p.se) + "\n";
    last[{p.problem_id, p.optimizer}] = p.mean;
  }
  for (const auto& [key, v] : last) {
    auto& acc = final_regret[key.second];
    acc.first += v;
    acc.second += 1;
  }
  for (const auto& [o, acc] : final_regret) summary["performance"]["mean_final_regret"][o] = acc.first / acc.second;
  io::write_atomic(out / "regret_curves.csv", regret);
}

inline void write_tree(const fs::path& path, const analysis::TreeModel& t, const std::vector<std::string>& features,
                       const std::vector<std::string>& labels) {
  io::write_atomic(path, analysis::tree_to_json(t, features, labels).dump(2) + "\n");
}

inline int min_class_count(const std::vector<int>& labels) {
  std::map<int, int> counts;
  for (int l : labels) ++counts[l];
  int m = std::numeric_limits<int>::max();
  for (const auto& [l, c] : counts) m = std::min(m, c);
  return m;
}

inline void write_landscape(const fs::path& out, const analysis::FeatureMatrix& fm, const AnalysisSettings& a,
                            std::uint64_t seed, json& summary) {
  // constant columns carry no information and break scaling
  std::vector<Eigen::Index> keep;
  std::vector<std::string> kept_names, dropped;
  for (Eigen::Index j = 0; j < fm.values.cols(); ++j) {
    const auto col = fm.values.col(j);
    if (col.maxCoeff() > col.minCoeff()) {
      keep.push_back(j);
      kept_names.push_back(fm.columns[static_cast<std::size_t>(j)]);
    } else {
      dropped.push_back(fm.columns[static_cast<std::size_t>(j)]);
    }
  }
  summary["features"]["rows"] = fm.rows();
  summary["features"]["columns_used"] = kept_names.size();
  summary["features"]["dropped_constant_columns"] = dropped;
  const Matrix X = fm.values(Eigen::all, keep);

  const auto ncomp = std::min<Eigen::Index>(X.rows() - 1, X.cols());
  const auto pca = analysis::pca_fit(X, ncomp);
  const Eigen::Index shown = std::min<Eigen::Index>(2, ncomp);
  std::string loadings = "feature";
  for (Eigen::Index c = 0; c < shown; ++c) loadings += ",pc" + std::to_string(c + 1);
  loadings += "\n";
  for (std::size_t j = 0; j < kept_names.size(); ++j) {
    loadings += kept_names[j];
    for (Eigen::Index c = 0; c < shown; ++c) loadings += "," + io::num(pca.model.loadings(static_cast<Eigen::Index>(j), c));
    loadings += "\n";
  }
  io::write_atomic(out / "pca_loadings.csv", loadings);
  std::string variance = "component,explained_variance_ratio,cumulative\n";
  double cum = 0.0;
  for (Eigen::Index c = 0; c < ncomp; ++c) {
    cum += pca.model.explained_variance_ratio[c];
    variance += "pc" + std::to_string(c + 1) + "," + io::num(pca.model.explained_variance_ratio[c]) + "," + io::num(cum) + "\n";
  }
  io::write_atomic(out / "pca_variance.csv", variance);
  summary["pca"]["explained_variance_ratio"] = std::vector<double>(pca.model.explained_variance_ratio.data(),
                                                                   pca.model.explained_variance_ratio.data() + shown);

  const Matrix scores2 = pca.scores.leftCols(shown);
  std::vector<int> cluster(fm.rows(), 0);
  if (shown == 2 && static_cast<int>(fm.rows()) > a.k_min) {
    const Vector mu = scores2.colwise().mean().transpose();
    Vector sd(2);
    for (Eigen::Index c = 0; c < 2; ++c) sd[c] = std::sqrt((scores2.col(c).array() - mu[c]).square().sum() / static_cast<double>(scores2.rows() - 1));
    const Matrix S = (scores2.rowwise() - mu.transpose()).array().rowwise() / sd.transpose().array();
    const auto sel = analysis::silhouette_select(S, seed ^ fnv1a("kmeans"), a.k_min, a.k_max, a.kmeans_restarts);
    cluster = sel.clustering.assignment;
    summary["clustering"]["best_k"] = sel.best_k;
    for (const auto& [k, w] : sel.mean_width) summary["clustering"]["mean_silhouette"][std::to_string(k)] = w;
  }
  std::string scores = "problem_id,class,dim,pc1,pc2,cluster\n";
  for (std::size_t i = 0; i < fm.rows(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    scores += fm.ids[i] + "," + fm.classes[i] + "," + std::to_string(fm.dims[i]) + "," + io::num(scores2(ii, 0)) + "," +
              (shown > 1 ? io::num(scores2(ii, 1)) : "NA") + "," + std::to_string(cluster[i]) + "\n";
  }
  io::write_atomic(out / "pca_scores.csv", scores);

  const analysis::TreeSettings ts{a.cart_max_depth, a.cart_min_leaf};
  std::string cls = "task,rows,folds,repeats,cv_error,holdout_rows,holdout_error\n";

  // HPO vs BBOB
  std::vector<int> type_labels;
  for (const auto& c : fm.classes) type_labels.push_back(c == "HPO" ? 1 : 0);
  const int type_min = min_class_count(type_labels);
  const bool both = std::set<int>(type_labels.begin(), type_labels.end()).size() == 2;
  if (both && type_min >= 2) {
    const int folds = std::min(a.cv_folds, type_min);
    const auto cv = analysis::repeated_stratified_cv(X, type_labels, folds, a.cv_repeats, seed ^ fnv1a("cv-type"),
                                                     analysis::cart_trainer(ts));
    cls += "hpo_vs_bbob," + std::to_string(fm.rows()) + "," + std::to_string(folds) + "," + std::to_string(a.cv_repeats) + "," +
           io::num(cv.error) + ",0,NA\n";
    summary["classification"]["hpo_vs_bbob"] = {{"cv_error", cv.error}, {"folds", folds}, {"repeats", a.cv_repeats}};
    write_tree(out / "tree_type.json", analysis::cart_train(X, type_labels, ts), kept_names, {"BBOB", "HPO"});
  }

  // dimensionality, trained on BBOB, held out on HPO
  std::vector<Eigen::Index> bbob_rows, hpo_rows;
  for (std::size_t i = 0; i < fm.rows(); ++i) (fm.classes[i] == "BBOB" ? bbob_rows : hpo_rows).push_back(static_cast<Eigen::Index>(i));
  std::set<int> dim_set;
  for (auto i : bbob_rows) dim_set.insert(fm.dims[static_cast<std::size_t>(i)]);
  if (dim_set.size() >= 2) {
    const std::vector<int> dim_values(dim_set.begin(), dim_set.end());
    std::vector<std::string> dim_names;
    for (int d : dim_values) dim_names.push_back(std::to_string(d));
    auto label_of = [&](int d) {
      return static_cast<int>(std::lower_bound(dim_values.begin(), dim_values.end(), d) - dim_values.begin());
    };
    std::vector<int> yb;
    for (auto i : bbob_rows) yb.push_back(label_of(fm.dims[static_cast<std::size_t>(i)]));
    const Matrix Xb = X(bbob_rows, Eigen::all);
    const int dmin = min_class_count(yb);
    json entry;
    std::string cv_field = "NA", folds_field = "NA";
    if (dmin >= 2) {
      const int folds = std::min(a.cv_folds, dmin);
      const auto cv = analysis::repeated_stratified_cv(Xb, yb, folds, a.cv_repeats, seed ^ fnv1a("cv-dim"), analysis::cart_trainer(ts));
      cv_field = io::num(cv.error);
      folds_field = std::to_string(folds);
      entry["cv_error"] = cv.error;
      entry["folds"] = folds;
      entry["repeats"] = a.cv_repeats;
    }
    const auto tree = analysis::cart_train(Xb, yb, ts);
    write_tree(out / "tree_dim.json", tree, kept_names, dim_names);
    std::string holdout = "NA";
    if (!hpo_rows.empty()) {
      std::size_t wrong = 0;
      for (auto i : hpo_rows) {
        const int pred = tree.predict(Vector(X.row(i).transpose()));
        if (dim_values[static_cast<std::size_t>(pred)] != fm.dims[static_cast<std::size_t>(i)]) ++wrong;
      }
      const double err = static_cast<double>(wrong) / static_cast<double>(hpo_rows.size());
      holdout = io::num(err);
      entry["holdout_error"] = err;
      entry["holdout_rows"] = hpo_rows.size();
    }
    cls += "dimensionality," + std::to_string(bbob_rows.size()) + "," + folds_field + "," + std::to_string(a.cv_repeats) + "," +
           cv_field + "," + std::to_string(hpo_rows.size()) + "," + holdout + "\n";
    summary["classification"]["dimensionality"] = entry;
  }
  io::write_atomic(out / "classification.csv", cls);

  // nearest BBOB problem for every HPO problem in PC1/PC2 space
  if (!hpo_rows.empty() && !bbob_rows.empty()) {
    std::vector<std::string> hid, bid;
    for (auto i : hpo_rows) hid.push_back(fm.ids[static_cast<std::size_t>(i)]);
    for (auto i : bbob_rows) bid.push_back(fm.ids[static_cast<std::size_t>(i)]);
    const auto nn = analysis::nearest_neighbors(hid, scores2(hpo_rows, Eigen::all), bid, scores2(bbob_rows, Eigen::all));
    std::string csv = "hpo_problem,bbob_problem,distance\n";
    for (const auto& n : nn) {
      csv += n.query_id + "," + n.neighbor_id + "," + io::num(n.distance) + "\n";
      summary["nearest_bbob"][n.query_id] = n.neighbor_id;
    }
    io::write_atomic(out / "nearest_bbob.csv", csv);
  }
}

}  // namespace detail

/// Statistics over the store's traces plus the landscape analysis of the
/// feature matrix. Every output is a pure function of the inputs.
inline AnalyzeSummary cmd_analyze(const AnalyzeOptions& o) {
  if (!fs::exists(o.store)) throw Error(ErrorKind::Io, "store " + o.store.string() + " does not exist");
  std::uint64_t seed = 0;
  const AnalysisSettings a = store_settings(o.store, seed);
  const fs::path out = o.out.empty() ? o.store / "report" : o.out;
  fs::create_directories(out);

  json summary;
  summary["schema_version"] = kSchemaVersion;
  const auto records = load_records(o.store);
  summary["runs"] = records.size();
  if (!records.empty()) detail::write_performance(out, records, summary);

  if (!o.features.empty()) {
    const auto fm = load_features(o.features);
    if (fm.rows() < 3) throw Error(ErrorKind::EmptyMatrix, "feature matrix needs at least three rows");
    detail::write_landscape(out, fm, a, seed, summary);
  }
  io::write_atomic(out / "summary.json", summary.dump(2) + "\n");
  return {out, summary};
}

// ------------------------------------------------------------------ report

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '<') out += "&lt;";
    else if (ch == '>') out += "&gt;";
    else if (ch == '&') out += "&amp;";
    else out += ch;
  }
  return out;
}

/// Critical-difference style axis: optimizers placed at their mean ranks,
/// with the CD drawn as a bar.
inline std::string cd_svg(const std::string& group, const std::vector<std::pair<std::string, double>>& ranks, int k, double cd) {
  const double W = 600, left = 40, right = 560;
  auto xpos = [&](double r) { return left + (r - 1.0) / std::max(1, k - 1) * (right - left); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << 80 + 22 * ranks.size() << "\">\n";
  s << "<text x=\"10\" y=\"16\" font-size=\"13\">mean ranks, " << svg_escape(group) << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"40\" x2=\"" << right << "\" y2=\"40\" stroke=\"black\"/>\n";
  for (int r = 1; r <= k; ++r) {
    s << "<line x1=\"" << xpos(r) << "\" y1=\"35\" x2=\"" << xpos(r) << "\" y2=\"45\" stroke=\"black\"/>";
    s << "<text x=\"" << xpos(r) - 3 << "\" y=\"32\" font-size=\"10\">" << r << "</text>\n";
  }
  if (cd > 0) {
    s << "<line x1=\"" << left << "\" y1=\"55\" x2=\"" << left + cd / std::max(1, k - 1) * (right - left)
      << "\" y2=\"55\" stroke=\"red\" stroke-width=\"3\"/><text x=\"" << left << "\" y=\"68\" font-size=\"10\">CD = "
      << io::num(cd) << "</text>\n";
  }
  double y = 90;
  for (const auto& [name, r] : ranks) {
    s << "<line x1=\"" << xpos(r) << "\" y1=\"40\" x2=\"" << xpos(r) << "\" y2=\"" << y - 4 << "\" stroke=\"gray\"/>";
    s << "<text x=\"" << xpos(r) + 4 << "\" y=\"" << y << "\" font-size=\"11\">" << svg_escape(name) << " ("
      << io::num(std::round(r * 1000) / 1000) << ")</text>\n";
    y += 22;
  }
  s << "</svg>\n";
  return s.str();
}

inline std::string regret_svg(const std::string& pid, const std::map<std::string, std::vector<double>>& curves) {
  static const char* colors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"};
  const double W = 600, H = 360, l = 50, r = 580, t = 30, b = 320;
  std::size_t len = 1;
  for (const auto& [o, c] : curves) len = std::max(len, c.size());
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<text x=\"10\" y=\"18\" font-size=\"13\">normalized regret, " << svg_escape(pid) << "</text>\n";
  s << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << r - l << "\" height=\"" << b - t << "\" fill=\"none\" stroke=\"black\"/>\n";
  int ci = 0;
  for (const auto& [o, c] : curves) {
    s << "<polyline fill=\"none\" stroke=\"" << colors[ci % 8] << "\" points=\"";
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double x = l + (static_cast<double>(i) / std::max<std::size_t>(1, len - 1)) * (r - l);
      const double yv = b - std::clamp(c[i], 0.0, 1.0) * (b - t);
      s << x << "," << yv << " ";
    }
    s << "\"/>\n<text x=\"" << r - 80 << "\" y=\"" << t + 15 + 14 * ci << "\" font-size=\"11\" fill=\"" << colors[ci % 8] << "\">"
      << svg_escape(o) << "</text>\n";
    ++ci;
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace detail

/// Renders critical-difference axes and regret curves from an analyzed store.
inline std::size_t cmd_report(const fs::path& store, bool svg) {
  const fs::path report = store / "report";
  if (!fs::exists(report / "summary.json")) throw Error(ErrorKind::Io, "no analysis report in " + store.string() + "; run analyze first");
  if (!svg) return 0;
  const fs::path plots = report / "plots";
  fs::create_directories(plots);
  std::size_t written = 0;
  if (fs::exists(report / "mean_ranks.csv")) {
    const auto t = io::read_csv(report / "mean_ranks.csv");
    std::map<std::string, std::vector<std::pair<std::string, double>>> groups;
    std::map<std::string, double> cds;
    for (const auto& row : t.rows) {
      groups[row[0]].emplace_back(row[1], io::parse_double(row[2]));
      cds[row[0]] = row[4] == "NA" ? 0.0 : io::parse_double(row[4]);
    }
    for (auto& [g, ranks] : groups) {
      std::sort(ranks.begin(), ranks.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
      io::write_atomic(plots / ("cd_" + safe_name(g) + ".svg"), detail::cd_svg(g, ranks, static_cast<int>(ranks.size()), cds[g]));
      ++written;
    }
  }
  if (fs::exists(report / "regret_curves.csv")) {
    const auto t = io::read_csv(report / "regret_curves.csv");
    std::map<std::string, std::map<std::string, std::vector<double>>> by_problem;
    for (const auto& row : t.rows) by_problem[row[0]][row[1]].push_back(io::parse_double(row[3]));
    for (const auto& [pid, curves] : by_problem) {
      io::write_atomic(plots / ("regret_" + safe_name(pid) + ".svg"), detail::regret_svg(pid, curves));
      ++written;
    }
  }
  return written;
}

}  // namespace hpoela::pipeline
