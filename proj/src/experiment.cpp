#include "gradsurge/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "gradsurge/metrics.hpp"

namespace gradsurge {

namespace {

nlohmann::json epoch_to_json(const EpochStats& e) {
  nlohmann::json j;
  j["epoch"] = e.epoch;
  j["train_losses"] = e.train_losses;
  j["valid_losses"] = e.valid_losses;
  if (e.valid_auc_defined)
    j["valid_auc"] = e.valid_auc;
  else
    j["valid_auc"] = nullptr;
  return j;
}

EpochStats epoch_from_json(const nlohmann::json& j) {
  EpochStats e;
  e.epoch = j.at("epoch").get<int>();
  e.train_losses = j.at("train_losses").get<std::map<std::string, double>>();
  e.valid_losses = j.at("valid_losses").get<std::map<std::string, double>>();
  if (j.at("valid_auc").is_null()) {
    e.valid_auc_defined = false;
  } else {
    e.valid_auc = j.at("valid_auc").get<double>();
  }
  return e;
}

nlohmann::json trace_to_json(const std::vector<TraceEntry>& tr) {
  auto arr = nlohmann::json::array();
  for (const TraceEntry& t : tr) arr.push_back({t.step, t.component, t.value});
  return arr;
}

std::vector<TraceEntry> trace_from_json(const nlohmann::json& j) {
  std::vector<TraceEntry> out;
  for (const auto& row : j)
    out.push_back({row.at(0).get<int>(), row.at(1).get<int>(), row.at(2).get<double>()});
  return out;
}

void write_trace_csv(const std::string& path, const std::vector<TraceEntry>& trace) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write trace file: " + path);
  os << "step,component,value\n";
  char buf[64];
  for (const TraceEntry& t : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", t.step, t.component, t.value);
    os << buf;
  }
}

}  // namespace

nlohmann::json RunReport::to_json() const {
  nlohmann::json j;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["config"] = config;
  auto eps = nlohmann::json::array();
  for (const EpochStats& e : epochs) eps.push_back(epoch_to_json(e));
  j["epochs"] = eps;
  j["best_epoch"] = best_epoch;
  j["test_auc"] = test_auc;
  j["w_trace"] = trace_to_json(w_trace);
  j["kappa_trace"] = trace_to_json(kappa_trace);
  j["wall_clock_sec"] = wall_clock_sec;
  return j;
}

RunReport RunReport::from_json(const nlohmann::json& j) {
  RunReport r;
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config = j.at("config");
  for (const auto& e : j.at("epochs")) r.epochs.push_back(epoch_from_json(e));
  r.best_epoch = j.at("best_epoch").get<int>();
  r.test_auc = j.at("test_auc").get<double>();
  r.w_trace = trace_from_json(j.at("w_trace"));
  r.kappa_trace = trace_from_json(j.at("kappa_trace"));
  r.wall_clock_sec = j.at("wall_clock_sec").get<double>();
  return r;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<SyntheticGraph> graphs = gen_dataset(cfg.dataset);
  // split fixed by the dataset seed so every run seed sees the same data
  DatasetSplit split = split_dataset(graphs, cfg.dataset.seed, cfg.fractions);

  // FT trains the target task alone: no auxiliary heads allocated
  std::vector<TaskId> aux = cfg.method == Method::Ft ? std::vector<TaskId>{} : cfg.aux;
  Model model = init_model(cfg.model, aux, cfg.seed);

  TrainResult tr = train_model(model, split, cfg);

  Batch test = make_batch(split.test);
  std::vector<double> scores = target_scores(model, test);
  std::vector<int> labels;
  for (const SyntheticGraph* g : test) labels.push_back(g->target_label);
  const double test_auc = roc_auc(scores, labels);

  RunReport report;
  report.config_hash = cfg.hash();
  report.seed = cfg.seed;
  report.config = cfg.to_json();
  report.epochs = std::move(tr.epochs);
  report.best_epoch = tr.best_epoch;
  report.test_auc = test_auc;
  report.w_trace = std::move(tr.w_trace);
  report.kappa_trace = std::move(tr.kappa_trace);
  report.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void write_run_artifacts(const RunReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(out_dir) / "runs" / report.config_hash;
  fs::create_directories(dir);
  std::ofstream os(dir / "report.json");
  if (!os) throw ConfigError("cannot write report: " + (dir / "report.json").string());
  os << report.to_json().dump(2) << "\n";
  write_trace_csv((dir / "trace_w.csv").string(), report.w_trace);
  write_trace_csv((dir / "trace_kappa.csv").string(), report.kappa_trace);
}

namespace {

SweepRow make_row(const std::string& method, std::vector<double> aucs) {
  SweepRow row;
  row.method = method;
  row.n_seeds = static_cast<int>(aucs.size());
  for (double a : aucs) row.mean_auc += a;
  row.mean_auc /= row.n_seeds;
  if (row.n_seeds > 1) {
    double ss = 0.0;
    for (double a : aucs) ss += (a - row.mean_auc) * (a - row.mean_auc);
    row.std_auc = std::sqrt(ss / (row.n_seeds - 1));
  }
  row.aucs = std::move(aucs);
  return row;
}

}  // namespace

std::vector<SweepRow> sweep(const std::vector<ExperimentConfig>& configs, int n_seeds, int threads,
                            const std::string& out_dir) {
  if (n_seeds < 1) throw UsageError("sweep needs n_seeds >= 1");
  std::vector<ExperimentConfig> runs;
  for (const ExperimentConfig& base : configs) {
    for (int s = 0; s < n_seeds; ++s) {
      ExperimentConfig c = base;
      c.seed = base.seed + static_cast<std::uint64_t>(s);
      c.out_dir = out_dir;
      runs.push_back(std::move(c));
    }
  }

  std::vector<RunReport> reports(runs.size());
  std::vector<std::string> errors(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= runs.size()) return;
      try {
        reports[i] = run_experiment(runs[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(runs.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < runs.size(); ++i)
    if (!errors[i].empty())
      throw NumericError("sweep run " + method_name(runs[i].method) + " seed " +
                         std::to_string(runs[i].seed) + " failed: " + errors[i]);

  // single collector: all artifacts written here, in run order
  for (const RunReport& r : reports) write_run_artifacts(r, out_dir);

  std::vector<SweepRow> rows;
  std::size_t at = 0;
  for (const ExperimentConfig& base : configs) {
    std::vector<double> aucs;
    for (int s = 0; s < n_seeds; ++s) aucs.push_back(reports[at++].test_auc);
    rows.push_back(make_row(method_name(base.method), std::move(aucs)));
  }
  write_sweep_csv((std::filesystem::path(out_dir) / "sweep_summary.csv").string(), rows);
  return rows;
}

std::vector<SweepRow> aggregate_reports(const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path runs_dir = fs::path(out_dir) / "runs";
  if (!fs::exists(runs_dir)) throw ConfigError("no runs directory under " + out_dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(runs_dir)) {
    const fs::path p = entry.path() / "report.json";
    if (fs::exists(p)) files.push_back(p);
  }
  std::sort(files.begin(), files.end());

  std::map<std::string, std::vector<double>> by_method;
  for (const fs::path& p : files) {
    std::ifstream is(p);
    nlohmann::json j;
    is >> j;
    RunReport r = RunReport::from_json(j);
    by_method[r.config.at("method").get<std::string>()].push_back(r.test_auc);
  }
  std::vector<SweepRow> rows;
  for (auto& [method, aucs] : by_method) rows.push_back(make_row(method, std::move(aucs)));
  return rows;
}

std::string format_sweep_table(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-10s %8s %14s %14s\n", "method", "seeds", "mean_test_auc",
                "std_test_auc");
  os << buf;
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-10s %8d %14.4f %14.4f\n", r.method.c_str(), r.n_seeds,
                  r.mean_auc, r.std_auc);
    os << buf;
  }
  return os.str();
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write sweep summary: " + path);
  os << "method,n_seeds,mean_test_auc,std_test_auc\n";
  char buf[128];
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.10g,%.10g\n", r.method.c_str(), r.n_seeds, r.mean_auc,
                  r.std_auc);
    os << buf;
  }
}

}  // namespace gradsurge
