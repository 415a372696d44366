#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gradsurge/experiment.hpp"
#include "gradsurge/verify.hpp"

namespace gs = gradsurge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitVerify = 3;
constexpr int kExitNumeric = 4;

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t at = 0;
  while (at <= s.size()) {
    const std::size_t next = s.find(',', at);
    if (next == std::string::npos) {
      if (at < s.size()) out.push_back(s.substr(at));
      break;
    }
    if (next > at) out.push_back(s.substr(at, next - at));
    at = next + 1;
  }
  return out;
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string method;
  std::string aux;
  std::string out;
  int threads = 0;
  bool print_config = false;

  void attach(CLI::App* cmd, bool with_method = true) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--seed", seed, "run seed (falls back to GRADSURGE_SEED, then config)");
    if (with_method) cmd->add_option("--method", method, "ft|mtl|gradsim|gradscale|pcgrad|rcgrad|blo|blorc");
    cmd->add_option("--aux", aux, "comma list of auxiliary tasks (am,ep,ig,mp,adv)");
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--threads", threads, "worker threads");
    cmd->add_flag("--print-config", print_config, "print the fully resolved config and exit");
  }

  // flags override file values; GRADSURGE_SEED fills in when neither is given
  gs::ExperimentConfig resolve() const {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw gs::ConfigError("cannot open config file: " + config_path);
      try {
        is >> j;
      } catch (const nlohmann::json::exception& e) {
        throw gs::ConfigError("config parse error: " + std::string(e.what()));
      }
    }
    if (seed) {
      j["seed"] = *seed;
    } else if (!j.contains("seed")) {
      if (const char* env = std::getenv("GRADSURGE_SEED")) j["seed"] = std::strtoull(env, nullptr, 10);
    }
    if (!method.empty()) j["method"] = method;
    if (!aux.empty()) j["aux"] = split_commas(aux);
    if (!out.empty()) j["out_dir"] = out;
    if (threads > 0) j["threads"] = threads;
    return gs::ExperimentConfig::from_json(j);
  }
};

int cmd_gen_data(const CommonFlags& flags, const std::string& path) {
  gs::ExperimentConfig cfg = flags.resolve();
  auto graphs = gs::gen_dataset(cfg.dataset);
  gs::write_jsonl_file(path, graphs);
  int positives = 0;
  for (const auto& g : graphs) positives += g.target_label;
  std::cout << "wrote " << graphs.size() << " graphs to " << path << " (" << positives
            << " positive labels)\n";
  return kExitOk;
}

int cmd_train(const CommonFlags& flags) {
  gs::ExperimentConfig cfg = flags.resolve();
  if (flags.print_config) {
    std::cout << cfg.to_json().dump(2) << "\n";
    return kExitOk;
  }
  gs::RunReport report = gs::run_experiment(cfg);
  gs::write_run_artifacts(report, cfg.out_dir);
  std::cout << "method=" << gs::method_name(cfg.method) << " seed=" << cfg.seed
            << " test_auc=" << report.test_auc << " best_epoch=" << report.best_epoch
            << " run=" << cfg.out_dir << "/runs/" << report.config_hash << "\n";
  return kExitOk;
}

int cmd_sweep(const CommonFlags& flags, const std::string& methods_csv, int n_seeds) {
  gs::ExperimentConfig base = flags.resolve();
  std::vector<gs::ExperimentConfig> configs;
  for (const std::string& name : split_commas(methods_csv)) {
    gs::ExperimentConfig c = base;
    c.method = gs::method_from_name(name);
    configs.push_back(std::move(c));
  }
  if (configs.empty()) throw gs::ConfigError("sweep needs at least one method");
  if (flags.print_config) {
    std::cout << base.to_json().dump(2) << "\n";
    return kExitOk;
  }
  auto rows = gs::sweep(configs, n_seeds, base.threads, base.out_dir);
  std::cout << gs::format_sweep_table(rows);
  std::cout << "summary: " << base.out_dir << "/sweep_summary.csv\n";
  return kExitOk;
}

int cmd_verify(double tol_scale, std::optional<double> neumann_beta) {
  gs::VerifyOptions opts;
  opts.tol_scale = tol_scale;
  opts.neumann_beta = neumann_beta;
  gs::VerifyReport report = gs::verify(opts);
  std::cout << gs::format_verify(report);
  return report.all_pass() ? kExitOk : kExitVerify;
}

int cmd_report(const std::string& out_dir) {
  auto rows = gs::aggregate_reports(out_dir);
  std::cout << gs::format_sweep_table(rows);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"auxiliary-task adaptation harness: gradient surgery and bi-level task weighting"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  std::string gen_path = "dataset.jsonl";
  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic graph dataset (JSON lines)");
  gen_flags.attach(gen, false);
  gen->add_option("--file", gen_path, "output JSONL path");

  CommonFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "run one experiment");
  train_flags.attach(train);

  CommonFlags sweep_flags;
  std::string methods = "ft,mtl,gradsim,gradscale,pcgrad,rcgrad,blo,blorc";
  int n_seeds = 10;
  CLI::App* sw = app.add_subcommand("sweep", "mean/std of test AUC over seeds, per method");
  sweep_flags.attach(sw, false);
  sw->add_option("--methods", methods, "comma list of methods to sweep");
  sw->add_option("--seeds", n_seeds, "number of seeds per method");

  double tol_scale = 1.0;
  std::optional<double> neumann_beta;
  CLI::App* ver = app.add_subcommand("verify", "run the oracle checks");
  ver->add_option("--tol-scale", tol_scale, "multiply every tolerance (<1 tightens)");
  ver->add_option("--neumann-beta", neumann_beta,
                  "override the Neumann check's beta (divergence advisory mode)");

  std::string report_dir = "runs";
  CLI::App* rep = app.add_subcommand("report", "re-aggregate per-run reports into a table");
  rep->add_option("--out", report_dir, "experiment output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(gen_flags, gen_path);
    if (train->parsed()) return cmd_train(train_flags);
    if (sw->parsed()) return cmd_sweep(sweep_flags, methods, n_seeds);
    if (ver->parsed()) return cmd_verify(tol_scale, neumann_beta);
    if (rep->parsed()) return cmd_report(report_dir);
  } catch (const gs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gs::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gs::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
