#include "tsbl/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "svg_plot.hpp"
#include "tsbl/block_model.hpp"
#include "tsbl/metrics.hpp"
#include "tsbl/msbl_solver.hpp"
#include "tsbl/tmsbl_solver.hpp"
#include "tsbl/tsbl_solver.hpp"

namespace tsbl::bench {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double real_from_json(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
  }
  return j.get<double>();
}

json real_to_json(double v) {
  if (std::isinf(v)) return json(v > 0 ? "inf" : "-inf");
  if (std::isnan(v)) return json("nan");
  return json(v);
}

std::vector<double> real_list(const json& j) {
  std::vector<double> out;
  for (const auto& item : j) out.push_back(real_from_json(item));
  return out;
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Tsbl: return "tsbl";
    case Algorithm::Tmsbl: return "tmsbl";
    case Algorithm::Msbl: return "msbl";
  }
  throw std::logic_error("unknown algorithm");
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "tsbl") return Algorithm::Tsbl;
  if (s == "tmsbl") return Algorithm::Tmsbl;
  if (s == "msbl") return Algorithm::Msbl;
  throw std::invalid_argument("unknown algorithm: " + s);
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (n < 1) throw std::invalid_argument("config: n must be >= 1");
  if (m.empty() || l.empty() || k.empty() || snr_db.empty())
    throw std::invalid_argument("config: every grid axis needs at least one value");
  if (source.kind == "common_ar1" && beta.empty() && c.empty())
    throw std::invalid_argument(
        "config: common_ar1 sources need a beta or c axis (possibly a single value)");
  if (algorithms.empty()) throw std::invalid_argument("config: no algorithms selected");
  for (const auto& a : algorithms) algorithm_from_string(a);
  if (source.kind != "common_ar1" && source.kind != "ar" && source.kind != "ma")
    throw std::invalid_argument("config: unknown source kind " + source.kind);
  if (dictionary.kind != "unit_hypersphere" && dictionary.kind != "hadamard_rows")
    throw std::invalid_argument("config: unknown dictionary kind " + dictionary.kind);
  if (rescale != "auto" && rescale != "third_to_one" && rescale != "unit_norm")
    throw std::invalid_argument("config: unknown rescale " + rescale);
  const auto& p = solver.preset;
  if (p != "auto" && p != "noiseless" && p != "high_snr" && p != "low_snr")
    throw std::invalid_argument("config: unknown solver preset " + p);
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

std::string config_to_json(const ExperimentConfig& config) {
  json j;
  j["schema_version"] = config.schema_version;
  j["experiment_id"] = config.experiment_id;
  j["n"] = config.n;
  j["m"] = config.m;
  j["l"] = config.l;
  j["k"] = config.k;
  json snr = json::array();
  for (double v : config.snr_db) snr.push_back(real_to_json(v));
  j["snr_db"] = snr;
  j["beta"] = config.beta;
  j["c"] = config.c;
  j["source"] = {{"kind", config.source.kind},
                 {"order", config.source.order},
                 {"coeffs", config.source.coeffs}};
  j["rescale"] = config.rescale;
  j["dictionary"] = {{"kind", config.dictionary.kind}, {"order", config.dictionary.order}};
  j["algorithms"] = config.algorithms;
  j["trials"] = config.trials;
  j["master_seed"] = config.master_seed;
  j["jobs"] = config.jobs;
  j["timestamp"] = config.timestamp;
  json s;
  s["preset"] = config.solver.preset;
  s["max_iters"] = config.solver.max_iters;
  s["gamma_tol"] = config.solver.gamma_tol;
  s["prune_thresh"] = config.solver.prune_thresh;
  s["lambda_fixed"] = config.solver.lambda_fixed ? json(*config.solver.lambda_fixed) : json();
  s["eta"] = config.solver.eta;
  j["solver"] = s;
  j["output_dir"] = config.output_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig config;
  if (j.contains("schema_version")) config.schema_version = j["schema_version"].get<int>();
  if (config.schema_version != 1)
    throw std::invalid_argument("config: unsupported schema_version");
  if (j.contains("experiment_id")) config.experiment_id = j["experiment_id"].get<std::string>();
  if (j.contains("n")) config.n = j["n"].get<Index>();
  if (j.contains("m")) config.m = j["m"].get<std::vector<Index>>();
  if (j.contains("l")) config.l = j["l"].get<std::vector<Index>>();
  if (j.contains("k")) config.k = j["k"].get<std::vector<Index>>();
  if (j.contains("snr_db")) config.snr_db = real_list(j["snr_db"]);
  if (j.contains("beta")) config.beta = j["beta"].get<std::vector<double>>();
  if (j.contains("c") && !j["c"].is_null()) config.c = j["c"].get<std::vector<double>>();
  if (j.contains("source")) {
    const auto& s = j["source"];
    if (s.contains("kind")) config.source.kind = s["kind"].get<std::string>();
    if (s.contains("order")) config.source.order = s["order"].get<int>();
    if (s.contains("coeffs")) config.source.coeffs = s["coeffs"].get<std::vector<double>>();
  }
  if (j.contains("rescale")) config.rescale = j["rescale"].get<std::string>();
  if (j.contains("dictionary")) {
    const auto& d = j["dictionary"];
    if (d.contains("kind")) config.dictionary.kind = d["kind"].get<std::string>();
    if (d.contains("order")) config.dictionary.order = d["order"].get<Index>();
  }
  if (j.contains("algorithms"))
    config.algorithms = j["algorithms"].get<std::vector<std::string>>();
  if (j.contains("trials")) config.trials = j["trials"].get<int>();
  if (j.contains("master_seed")) config.master_seed = j["master_seed"].get<std::uint64_t>();
  if (j.contains("jobs")) config.jobs = j["jobs"].get<int>();
  if (j.contains("timestamp")) config.timestamp = j["timestamp"].get<bool>();
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    if (s.contains("preset")) config.solver.preset = s["preset"].get<std::string>();
    if (s.contains("max_iters")) config.solver.max_iters = s["max_iters"].get<int>();
    if (s.contains("gamma_tol")) config.solver.gamma_tol = s["gamma_tol"].get<double>();
    if (s.contains("prune_thresh"))
      config.solver.prune_thresh = s["prune_thresh"].get<double>();
    if (s.contains("lambda_fixed") && !s["lambda_fixed"].is_null())
      config.solver.lambda_fixed = s["lambda_fixed"].get<double>();
    if (s.contains("eta")) config.solver.eta = s["eta"].get<double>();
  }
  if (j.contains("output_dir")) config.output_dir = j["output_dir"].get<std::string>();
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::vector<CellSpec> enumerate_cells(const ExperimentConfig& config) {
  config.validate();
  std::vector<CellSpec> cells;
  const bool use_c = !config.c.empty();
  // AR(p)/MA(p) sources ignore the correlation axis; one placeholder cell
  const std::size_t corr_count =
      std::max<std::size_t>(1, use_c ? config.c.size() : config.beta.size());
  Index index = 0;
  for (Index m : config.m)
    for (Index l : config.l)
      for (Index k : config.k)
        for (double snr : config.snr_db)
          for (std::size_t ci = 0; ci < corr_count; ++ci) {
            CellSpec cell;
            cell.cell_index = index++;
            cell.n = config.n;
            cell.m = m;
            cell.l = l;
            cell.k = k;
            cell.snr_db = snr;
            if (use_c) {
              cell.c = config.c[ci];
              cell.beta = datagen::sample_extreme_beta(config.c[ci]);
            } else if (ci < config.beta.size()) {
              cell.beta = config.beta[ci];
            }
            cells.push_back(cell);
          }
  return cells;
}

namespace {

struct ResolvedPolicies {
  LambdaPolicy lambda_policy;
  BPolicySpec b_policy = BPolicySpec::plain();
  bool low_snr_mod = false;
  bool b_identity_switch = false;
};

// The experiment protocols switch rules on the declared SNR regime: fixed
// tiny lambda for noiseless runs, the modified lambda rule at or below 20 dB,
// the ridge-regularized correlation estimate and the identity switch at or
// below 15 dB.
ResolvedPolicies resolve_policies(const SolverSettings& settings, double snr_db) {
  ResolvedPolicies r;
  std::string preset = settings.preset;
  if (preset == "auto") {
    if (std::isinf(snr_db))
      preset = "noiseless";
    else if (snr_db <= 15.0)
      preset = "low_snr";
    else
      preset = "high_snr";
  }
  if (preset == "noiseless") {
    r.lambda_policy = LambdaPolicy::fixed(1e-9);
  } else if (preset == "high_snr") {
    r.lambda_policy = LambdaPolicy::learned();
    r.low_snr_mod = !std::isinf(snr_db) && snr_db <= 20.0;
  } else {  // low_snr
    r.lambda_policy = LambdaPolicy::learned();
    r.low_snr_mod = true;
    r.b_policy = BPolicySpec::regularized(settings.eta);
    r.b_identity_switch = true;
  }
  if (settings.lambda_fixed) r.lambda_policy = LambdaPolicy::fixed(*settings.lambda_fixed);
  return r;
}

datagen::SourceModel resolve_source_model(const ExperimentConfig& config,
                                          const CellSpec& cell) {
  using datagen::SourceModel;
  const bool noiseless = std::isinf(cell.snr_db);
  SourceModel::Rescale rescale;
  if (config.rescale == "third_to_one")
    rescale = SourceModel::Rescale::NoiselessUniformThirdToOne;
  else if (config.rescale == "unit_norm")
    rescale = SourceModel::Rescale::UnitNorm;
  else
    rescale = noiseless ? SourceModel::Rescale::NoiselessUniformThirdToOne
                        : SourceModel::Rescale::UnitNorm;

  if (config.source.kind == "common_ar1") return SourceModel::common_ar1(cell.beta, rescale);
  if (config.source.kind == "ar")
    return config.source.coeffs.empty()
               ? SourceModel::ar_sampled(config.source.order, rescale)
               : SourceModel::ar(config.source.order, config.source.coeffs, rescale);
  return config.source.coeffs.empty()
             ? SourceModel::ma_sampled(config.source.order, rescale)
             : SourceModel::ma(config.source.order, config.source.coeffs, rescale);
}

MmvProblem generate_trial_problem(const ExperimentConfig& config, const CellSpec& cell,
                                  int trial) {
  using datagen::StreamTag;
  const std::uint64_t cell_id = static_cast<std::uint64_t>(cell.cell_index);
  const std::uint64_t trial_id = static_cast<std::uint64_t>(trial);

  datagen::DictionaryKind dict = config.dictionary.kind == "hadamard_rows"
                                     ? datagen::DictionaryKind::hadamard_rows(config.dictionary.order)
                                     : datagen::DictionaryKind::unit_hypersphere();
  Matrix phi = datagen::sample_dictionary(
      cell.n, cell.m, dict,
      datagen::substream_seed(config.master_seed, cell_id, trial_id, StreamTag::Dictionary));

  auto model = resolve_source_model(config, cell);
  auto [x_gen, support] = datagen::gen_sources(
      cell.m, cell.l, cell.k, model,
      datagen::substream_seed(config.master_seed, cell_id, trial_id, StreamTag::Sources));

  Matrix clean = phi * x_gen;
  Matrix y = datagen::add_noise(
      clean, cell.snr_db,
      datagen::substream_seed(config.master_seed, cell_id, trial_id, StreamTag::Noise));

  Truth truth{std::move(x_gen), std::move(support), cell.snr_db};
  return MmvProblem(std::move(phi), std::move(y), std::move(truth));
}

SolverResult run_algorithm(Algorithm algorithm, const MmvProblem& problem,
                           const ExperimentConfig& config, const CellSpec& cell) {
  const auto policies = resolve_policies(config.solver, cell.snr_db);
  switch (algorithm) {
    case Algorithm::Tsbl: {
      TsblOptions opts;
      opts.max_iters = config.solver.max_iters;
      opts.gamma_tol = config.solver.gamma_tol;
      opts.prune_thresh = config.solver.prune_thresh;
      opts.lambda_policy = policies.lambda_policy;
      return tsbl_solve(problem, opts);
    }
    case Algorithm::Tmsbl: {
      TmsblOptions opts;
      opts.max_iters = config.solver.max_iters;
      opts.gamma_tol = config.solver.gamma_tol;
      opts.prune_thresh = config.solver.prune_thresh;
      opts.lambda_policy = policies.lambda_policy;
      opts.b_policy = policies.b_policy;
      opts.low_snr_lambda_mod = policies.low_snr_mod;
      opts.b_identity_switch = policies.b_identity_switch;
      return tmsbl_solve(problem, opts);
    }
    case Algorithm::Msbl: {
      TsblOptions opts;
      opts.max_iters = config.solver.max_iters;
      opts.gamma_tol = config.solver.gamma_tol;
      opts.prune_thresh = config.solver.prune_thresh;
      opts.lambda_policy = policies.lambda_policy;
      return msbl_solve(problem, opts);
    }
  }
  throw std::logic_error("unknown algorithm");
}

std::string sanitize_tag(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return s;
}

}  // namespace

std::vector<TrialRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto cells = enumerate_cells(config);
  std::vector<Algorithm> algorithms;
  for (const auto& name : config.algorithms) algorithms.push_back(algorithm_from_string(name));

  struct Task {
    std::size_t cell;
    int trial;
  };
  std::vector<Task> tasks;
  tasks.reserve(cells.size() * static_cast<std::size_t>(config.trials));
  for (std::size_t ci = 0; ci < cells.size(); ++ci)
    for (int t = 0; t < config.trials; ++t) tasks.push_back({ci, t});

  std::vector<TrialRecord> records(tasks.size() * algorithms.size());

  const unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers =
      config.jobs > 0 ? static_cast<unsigned>(config.jobs)
                      : std::min<unsigned>(hardware, static_cast<unsigned>(tasks.size()));

  std::atomic<std::size_t> next_task{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t task_idx = next_task.fetch_add(1);
      if (task_idx >= tasks.size()) return;
      const Task task = tasks[task_idx];
      const CellSpec& cell = cells[task.cell];

      std::optional<MmvProblem> problem;
      std::string generation_error;
      try {
        problem.emplace(generate_trial_problem(config, cell, task.trial));
      } catch (const std::exception& e) {
        generation_error = e.what();
      }

      for (std::size_t ai = 0; ai < algorithms.size(); ++ai) {
        TrialRecord rec;
        rec.cell = cell;
        rec.trial = task.trial;
        rec.algorithm = algorithms[ai];
        if (!problem) {
          rec.error_tag = "datagen: " + sanitize_tag(generation_error);
        } else {
          const auto t0 = std::chrono::steady_clock::now();
          try {
            SolverResult res = run_algorithm(algorithms[ai], *problem, config, cell);
            const auto t1 = std::chrono::steady_clock::now();
            rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            const auto regime = std::isinf(cell.snr_db) ? metrics::FailureRegime::Noiseless
                                                        : metrics::FailureRegime::Noisy;
            rec.failure = metrics::is_failure(res.x_hat, problem->truth().support, cell.k, regime);
            rec.mse = metrics::mse(res.x_hat, problem->truth().x_gen);
            rec.iterations = res.iterations;
            rec.gamma_card = static_cast<Index>(res.active_set.size());
            rec.converged = res.converged;
          } catch (const std::exception& e) {
            rec.error_tag = sanitize_tag(e.what());
          }
        }
        records[task_idx * algorithms.size() + ai] = std::move(rec);
      }
    }
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return records;
}

std::vector<AggregateRow> aggregate(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  std::map<std::pair<Index, std::string>, AggregateRow> groups;
  std::map<std::pair<Index, std::string>, std::pair<double, int>> mse_accum;
  for (const auto& rec : records) {
    const auto key = std::make_pair(rec.cell.cell_index, to_string(rec.algorithm));
    auto& row = groups[key];
    if (row.trials == 0) {
      row.cell = rec.cell;
      row.algorithm = rec.algorithm;
    }
    row.trials += 1;
    row.failure_rate += rec.failure ? 1.0 : 0.0;
    row.mean_iterations += rec.iterations;
    if (std::isfinite(rec.mse)) {
      auto& acc = mse_accum[key];
      acc.first += rec.mse;
      acc.second += 1;
    }
  }
  std::vector<AggregateRow> rows;
  for (auto& [key, row] : groups) {
    row.failure_rate /= row.trials;
    row.mean_iterations /= row.trials;
    const auto it = mse_accum.find(key);
    if (it != mse_accum.end() && it->second.second > 0)
      row.mean_mse = it->second.first / it->second.second;
    rows.push_back(row);
  }
  return rows;
}

namespace {

void append_cell_columns(std::ostringstream& out, const CellSpec& cell) {
  out << cell.cell_index << ',' << cell.n << ',' << cell.m << ',' << cell.l << ','
      << cell.k << ',' << format_real(cell.snr_db) << ',' << format_real(cell.beta) << ',';
  if (cell.c) out << format_real(*cell.c);
}

std::string timestamp_line() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[64];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return std::string("# generated: ") + buf + "\n";
}

}  // namespace

std::string raw_csv(const std::vector<TrialRecord>& records, const ExperimentConfig& config) {
  std::ostringstream out;
  out << "# tsbl-bench raw v" << config.schema_version << "\n";
  if (config.timestamp) out << timestamp_line();
  out << "schema_version,experiment_id,cell_index,n,m,l,k,snr_db,beta,c,trial,"
         "algorithm,failure,mse,iterations,wall_ms,gamma_card,converged,error_tag\n";
  for (const auto& rec : records) {
    out << config.schema_version << ',' << config.experiment_id << ',';
    append_cell_columns(out, rec.cell);
    out << ',' << rec.trial << ',' << to_string(rec.algorithm) << ','
        << (rec.failure ? 1 : 0) << ',' << format_real(rec.mse) << ',' << rec.iterations
        << ',' << format_real(config.timestamp ? rec.wall_ms : 0.0) << ',' << rec.gamma_card
        << ',' << (rec.converged ? 1 : 0) << ',' << rec.error_tag << "\n";
  }
  return out.str();
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows,
                          const ExperimentConfig& config) {
  std::ostringstream out;
  out << "schema_version,experiment_id,cell_index,n,m,l,k,snr_db,beta,c,algorithm,"
         "trials,failure_rate,mean_mse,mean_iterations\n";
  for (const auto& row : rows) {
    out << config.schema_version << ',' << config.experiment_id << ',';
    append_cell_columns(out, row.cell);
    out << ',' << to_string(row.algorithm) << ',' << row.trials << ','
        << format_real(row.failure_rate) << ',' << format_real(row.mean_mse) << ','
        << format_real(row.mean_iterations) << "\n";
  }
  return out.str();
}

namespace {

struct AxisView {
  std::string name;                                   // l, k, m_over_n, snr_db, c
  std::function<double(const CellSpec&)> value;
  std::string metric = "failure_rate";
};

std::string short_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<std::string> emit_plots(const std::vector<AggregateRow>& rows,
                                    const ExperimentConfig& config,
                                    const std::filesystem::path& dir) {
  std::vector<AxisView> axes;
  if (config.l.size() > 1)
    axes.push_back({"l", [](const CellSpec& c) { return double(c.l); }, "failure_rate"});
  if (config.k.size() > 1)
    axes.push_back({"k", [](const CellSpec& c) { return double(c.k); }, "failure_rate"});
  if (config.m.size() > 1)
    axes.push_back({"m_over_n",
                    [](const CellSpec& c) { return double(c.m) / double(c.n); },
                    "failure_rate"});
  if (config.snr_db.size() > 1)
    axes.push_back({"snr_db", [](const CellSpec& c) { return c.snr_db; }, "mean_mse"});
  if (config.c.size() > 1)
    axes.push_back({"c", [](const CellSpec& c) { return c.c.value_or(0.0); }, "failure_rate"});

  std::vector<std::string> written;
  for (const auto& axis : axes) {
    // Group rows by everything except the plotted axis and the algorithm.
    auto group_key = [&](const AggregateRow& row) {
      std::ostringstream key;
      if (axis.name != "l") key << "_l" << row.cell.l;
      if (axis.name != "k") key << "_k" << row.cell.k;
      if (axis.name != "m_over_n") key << "_m" << row.cell.m;
      if (axis.name != "snr_db") key << "_snr" << short_real(row.cell.snr_db);
      if (axis.name != "c" && !row.cell.c)
        key << "_beta" << short_real(row.cell.beta);
      if (axis.name != "c" && row.cell.c) key << "_c" << short_real(*row.cell.c);
      return key.str();
    };
    std::map<std::string, std::map<std::string, PlotSeries>> figures;
    for (const auto& row : rows) {
      auto& series = figures[group_key(row)][to_string(row.algorithm)];
      series.name = to_string(row.algorithm);
      series.x.push_back(axis.value(row.cell));
      series.y.push_back(axis.metric == "failure_rate" ? row.failure_rate : row.mean_mse);
    }
    for (auto& [suffix, by_alg] : figures) {
      std::vector<PlotSeries> series;
      for (auto& [_, s] : by_alg) {
        std::vector<std::size_t> order(s.x.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
        PlotSeries sorted{s.name, {}, {}};
        for (std::size_t idx : order) {
          sorted.x.push_back(s.x[idx]);
          sorted.y.push_back(s.y[idx]);
        }
        series.push_back(std::move(sorted));
      }
      const std::string metric_label =
          axis.metric == "failure_rate" ? "failure rate" : "mean MSE";
      const std::string file = config.experiment_id + "_" +
                               (axis.metric == "failure_rate" ? "failure" : "mse") + "_vs_" +
                               axis.name + suffix + ".svg";
      const auto path = dir / file;
      write_line_plot(path.string(), config.experiment_id + ": " + metric_label + " vs " + axis.name,
                      axis.name, metric_label, series);
      written.push_back(path.string());
    }
  }
  return written;
}

}  // namespace

std::vector<std::string> emit_report(const std::vector<TrialRecord>& records,
                                     const ExperimentConfig& config) {
  if (records.empty()) throw std::invalid_argument("emit_report: no records");
  std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw std::runtime_error("emit_report: cannot create output directory " + dir.string());

  std::vector<std::string> written;
  const auto raw_path = dir / (config.experiment_id + "_raw.csv");
  {
    std::ofstream out(raw_path);
    if (!out) throw std::runtime_error("emit_report: cannot write " + raw_path.string());
    out << raw_csv(records, config);
  }
  written.push_back(raw_path.string());

  const auto rows = aggregate(records);
  const auto agg_path = dir / (config.experiment_id + "_aggregate.csv");
  {
    std::ofstream out(agg_path);
    if (!out) throw std::runtime_error("emit_report: cannot write " + agg_path.string());
    out << aggregate_csv(rows, config);
  }
  written.push_back(agg_path.string());

  for (auto& path : emit_plots(rows, config, dir)) written.push_back(std::move(path));
  return written;
}

namespace {

Matrix dense_kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix random_spd(datagen::RngStream& rng, Index n) {
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  Matrix s = a * a.transpose() / double(n);
  s.diagonal().array() += 0.5;
  return s;
}

bool report_check(std::ostream& out, const char* name, bool ok) {
  out << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
  return ok;
}

}  // namespace

bool run_verification(std::ostream& out, std::uint64_t seed) {
  bool all_ok = true;
  datagen::RngStream rng(seed);

  {  // posterior covariance and mean: the two algebraic routes agree
    bool ok = true;
    for (int rep = 0; rep < 20 && ok; ++rep) {
      const Index n = 3 + Index(rng.uniform() * 3.0), m = 2 * n, l = 1 + Index(rng.uniform() * 3.0);
      Matrix phi(n, m);
      for (Index j = 0; j < m; ++j) {
        for (Index i = 0; i < n; ++i) phi(i, j) = rng.normal();
        phi.col(j).normalize();
      }
      Vector gamma(m);
      for (Index i = 0; i < m; ++i) gamma[i] = rng.uniform(0.5, 2.0);
      Matrix b = random_spd(rng, l);
      const double lambda = 0.1;
      Matrix d = build_block_dictionary(phi, l);
      Matrix s0 = dense_kron(Matrix(gamma.asDiagonal()), b);
      Matrix sy = d * s0 * d.transpose();
      sy.diagonal().array() += lambda;
      Matrix form1 = (s0.inverse() + d.transpose() * d / lambda).inverse();
      Matrix form2 = s0 - s0 * d.transpose() * sy.inverse() * d * s0;
      ok = ok && (form1 - form2).cwiseAbs().maxCoeff() <
                     1e-10 * form1.cwiseAbs().maxCoeff();
      Matrix y(n, l);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < l; ++j) y(i, j) = rng.normal();
      Vector ystack(n * l);
      for (Index i = 0; i < n; ++i) ystack.segment(i * l, l) = y.row(i).transpose();
      Vector map1 = (lambda * s0.inverse() + d.transpose() * d).inverse() * d.transpose() * ystack;
      Vector map2 = s0 * d.transpose() * sy.inverse() * ystack;
      ok = ok && (map1 - map2).cwiseAbs().maxCoeff() <
                     1e-10 * std::max(1.0, map1.cwiseAbs().maxCoeff());
    }
    all_ok &= report_check(out, "posterior dual-form identities", ok);
  }

  {  // separable inverse approximation: exactness clauses and generic gap
    bool ok = true;
    for (int rep = 0; rep < 5 && ok; ++rep) {
      const Index n = 4, m = 8, l = 3;
      Matrix phi(n, m);
      for (Index j = 0; j < m; ++j) {
        for (Index i = 0; i < n; ++i) phi(i, j) = rng.normal();
        phi.col(j).normalize();
      }
      Vector gamma(m);
      for (Index i = 0; i < m; ++i) gamma[i] = rng.uniform(0.5, 2.0);
      Matrix b = random_spd(rng, l);
      ok = ok && metrics::approx_inverse_error(phi, gamma, Matrix::Identity(l, l), 0.5) < 1e-10;
      ok = ok && metrics::approx_inverse_error(phi, gamma, b, 0.0) < 1e-10;
      ok = ok && metrics::approx_inverse_error(phi, gamma, b, 1.0) > 1e-6;
    }
    all_ok &= report_check(out, "separable inverse approximation clauses", ok);
  }

  {  // stationary gammas on a square support make the cost gradient vanish
    bool ok = true;
    for (int rep = 0; rep < 3 && ok; ++rep) {
      const Index n = 4, m = 8, l = 3, k = n;
      Matrix phi(n, m);
      IndexSet support;
      datagen::RngStream sub(rng.next_u64());
      // redraw until the restricted dictionary is decently conditioned;
      // a near-singular square system wrecks the difference quotient
      while (true) {
        for (Index j = 0; j < m; ++j) {
          for (Index i = 0; i < n; ++i) phi(i, j) = rng.normal();
          phi.col(j).normalize();
        }
        support = sub.sample_without_replacement(m, k);
        Matrix phi_s(n, k);
        for (Index j = 0; j < k; ++j)
          phi_s.col(j) = phi.col(support[std::size_t(j)]);
        Eigen::JacobiSVD<Matrix> svd(phi_s);
        if (svd.singularValues()(0) < 50.0 * svd.singularValues()(k - 1)) break;
      }
      Matrix x = Matrix::Zero(m, l);
      for (Index i : support) {
        for (Index j = 0; j < l; ++j) x(i, j) = sub.normal();
        // keep the stationary variances away from zero so the central
        // difference stays inside its accuracy budget
        x.row(i) *= sub.uniform(0.8, 2.0) / x.row(i).norm();
      }
      Matrix y = phi * x;
      Matrix b = random_spd(rng, l);
      Vector gamma_hat = metrics::support_stationary_gamma(phi, y, support, b);

      const double lambda = 1e-9;
      auto cost_at = [&](const Vector& g_support) {
        Vector gamma = Vector::Zero(m);
        for (Index j = 0; j < k; ++j) gamma[support[std::size_t(j)]] = g_support[j];
        return cost(MmvProblem(phi, y), Hyperparams{gamma, b, lambda});
      };
      for (Index j = 0; j < k && ok; ++j) {
        const double h = 1e-5 * std::max(gamma_hat[j], 1.0);
        Vector up = gamma_hat, dn = gamma_hat;
        up[j] += h;
        dn[j] -= h;
        ok = ok && std::abs(cost_at(up) - cost_at(dn)) / (2.0 * h) < 1e-4;
      }
    }
    all_ok &= report_check(out, "stationary gamma gradient check", ok);
  }

  {  // generators: determinism and exact SNR
    auto dict = datagen::DictionaryKind::unit_hypersphere();
    Matrix phi1 = datagen::sample_dictionary(6, 12, dict, 99);
    Matrix phi2 = datagen::sample_dictionary(6, 12, dict, 99);
    bool ok = (phi1 - phi2).cwiseAbs().maxCoeff() == 0.0;
    for (Index j = 0; j < phi1.cols(); ++j)
      ok = ok && std::abs(phi1.col(j).norm() - 1.0) < 1e-12;
    auto model = datagen::SourceModel::common_ar1(0.9);
    auto [x1, s1] = datagen::gen_sources(12, 4, 3, model, 123);
    auto [x2, s2] = datagen::gen_sources(12, 4, 3, model, 123);
    ok = ok && (x1 - x2).cwiseAbs().maxCoeff() == 0.0 && s1 == s2;
    Matrix clean = phi1 * x1;
    Matrix noisy = datagen::add_noise(clean, 25.0, 7);
    const double achieved = 20.0 * std::log10(clean.norm() / (noisy - clean).norm());
    ok = ok && std::abs(achieved - 25.0) < 1e-10;
    all_ok &= report_check(out, "seeded generators deterministic, SNR exact", ok);
  }

  return all_ok;
}

double grid_search_lambda(const ExperimentConfig& config, const CellSpec& cell,
                          Algorithm algorithm, int trials,
                          const std::vector<double>& candidates) {
  std::vector<double> grid = candidates;
  if (grid.empty())
    for (int i = 0; i <= 8; ++i) grid.push_back(std::pow(10.0, -4.0 + 0.5 * i));

  double best_lambda = grid.front();
  double best_rate = std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    ExperimentConfig probe = config;
    probe.solver.lambda_fixed = lambda;
    int failures = 0;
    for (int t = 0; t < trials; ++t) {
      MmvProblem problem = generate_trial_problem(probe, cell, t);
      try {
        SolverResult res = run_algorithm(algorithm, problem, probe, cell);
        const auto regime = std::isinf(cell.snr_db) ? metrics::FailureRegime::Noiseless
                                                    : metrics::FailureRegime::Noisy;
        failures += metrics::is_failure(res.x_hat, problem.truth().support, cell.k, regime);
      } catch (const std::exception&) {
        ++failures;
      }
    }
    const double rate = double(failures) / double(trials);
    if (rate < best_rate) {
      best_rate = rate;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

}  // namespace tsbl::bench
