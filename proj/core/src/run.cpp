#include "contrast/run.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "contrast/analysis.hpp"
#include "contrast/rng.hpp"
#include "contrast/verify.hpp"

namespace contrast::cli {

namespace {

using nlohmann::json;

/// Config problems that must surface as the usage exit code.
struct UsageError : Error {
  using Error::Error;
};

json load_config(const RunManifest& manifest) {
  if (!manifest.config_path) return json::object();
  std::ifstream in(*manifest.config_path);
  if (!in) throw UsageError("config file not found: " + manifest.config_path->string());
  json obj;
  try {
    in >> obj;
  } catch (const json::exception& e) {
    throw UsageError("config parse error: " + std::string(e.what()));
  }
  if (!obj.is_object()) throw UsageError("config must be a flat JSON object");
  return obj;
}

/// Flat-config reader: every key is read at most once, defaults are recorded
/// into the resolved echo, leftover keys are rejected.
class ConfigReader {
 public:
  explicit ConfigReader(json obj) : obj_(std::move(obj)) {}

  template <typename T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    T value = fallback;
    if (obj_.contains(key)) {
      try {
        value = obj_.at(key).get<T>();
      } catch (const json::exception&) {
        throw UsageError("config key '" + key + "' has the wrong type");
      }
    }
    resolved_[key] = value;
    return value;
  }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!used_.contains(item.key())) {
        throw UsageError("unknown config key '" + item.key() + "'");
      }
    }
  }

  void override_key(const std::string& key, std::uint64_t value) { resolved_[key] = value; }

  const json& resolved() const { return resolved_; }

 private:
  json obj_;
  json resolved_ = json::object();
  std::set<std::string> used_;
};

void prepare_outputs(const RunManifest& manifest, const std::vector<std::string>& files) {
  std::filesystem::create_directories(manifest.out_dir);
  if (manifest.force) return;
  for (const std::string& f : files) {
    const auto path = manifest.out_dir / f;
    if (std::filesystem::exists(path)) {
      throw UsageError("output " + path.string() + " exists; pass --force to overwrite");
    }
  }
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  out << content;
  if (!out) throw Error("short write to " + path.string());
}

std::string csv_from_sweep(const SweepResult& sweep) {
  std::ostringstream os;
  write_sweep_csv(sweep, os);
  return os.str();
}

Framework framework_from_string(const std::string& name) {
  if (name == "inbatch") return Framework::InBatch;
  if (name == "queue") return Framework::Queue;
  throw UsageError("unknown framework: " + name + " (expected inbatch|queue)");
}

LrSchedule schedule_from_string(const std::string& name) {
  if (name == "constant") return LrSchedule::Constant;
  if (name == "cosine") return LrSchedule::Cosine;
  throw UsageError("unknown lr_schedule: " + name + " (expected constant|cosine)");
}

json record_to_json(const RunRecord& record) {
  json series = json::object();
  auto column = [&](const char* name, auto getter) {
    json arr = json::array();
    for (const EpochStats& e : record.epochs) arr.push_back(getter(e));
    series[name] = std::move(arr);
  };
  column("mean_loss", [](const EpochStats& e) { return e.mean_loss; });
  column("a_batch", [](const EpochStats& e) { return e.a_batch_mean; });
  column("tau_used", [](const EpochStats& e) { return e.tau_used_mean; });
  column("clamp_count", [](const EpochStats& e) { return e.clamp_count; });
  column("alignment_loss", [](const EpochStats& e) { return e.alignment_loss; });
  column("uniformity", [](const EpochStats& e) { return e.uniformity; });
  column("knn_accuracy", [](const EpochStats& e) { return e.knn_accuracy; });
  return json{{"epochs", record.epochs.size()}, {"series", std::move(series)}};
}

struct TrainSetup {
  LabeledDataset data;
  AugmentConfig aug;
  TrainConfig train;
  bool save_snapshot = false;
};

/// Shared between run_train and run_compare; compare overrides variant,
/// batch size and seed per cell.
TrainSetup read_train_setup(ConfigReader& cfg, std::optional<std::uint64_t> seed_override,
                            bool with_variant_axes) {
  TrainSetup setup;

  std::uint64_t seed = cfg.get<std::uint64_t>("seed", 7);
  if (seed_override) {
    seed = *seed_override;
    cfg.override_key("seed", seed);
  }

  const std::string kind = cfg.get<std::string>("dataset", "synthetic");
  if (kind == "synthetic") {
    const int classes = cfg.get<int>("classes", 10);
    const int per_class = cfg.get<int>("per_class", 200);
    const int dim = cfg.get<int>("dim", 32);
    const double spread = cfg.get<double>("spread_sigma", 0.1);
    setup.data = synthetic_dataset(classes, per_class, dim, spread, seed);
  } else if (kind == "cifar" || kind == "cache") {
    const std::string path = cfg.get<std::string>("dataset_path", "");
    if (path.empty()) throw UsageError("dataset_path required for dataset = " + kind);
    if (kind == "cache") {
      setup.data = load_dataset_cache(path);
    } else {
      const std::uint64_t subset = cfg.get<std::uint64_t>("subset", 0);
      std::optional<std::vector<std::size_t>> indices;
      if (subset > 0) {
        indices.emplace(subset);
        for (std::size_t i = 0; i < subset; ++i) (*indices)[i] = i;
      }
      setup.data = cifar_load(path, indices);
    }
  } else {
    throw UsageError("unknown dataset kind: " + kind);
  }

  setup.aug.noise_sigma = cfg.get<double>("noise_sigma", 0.1);
  setup.aug.dropout_prob = cfg.get<double>("dropout_prob", 0.0);
  setup.aug.seed = seed;

  TrainConfig& tc = setup.train;
  tc.seed = seed;
  if (with_variant_axes) {
    const std::string variant = cfg.get<std::string>("variant", "macl");
    tc.spec.variant = loss_variant_from_string(variant);
    tc.batch_size = cfg.get<std::uint64_t>("batch_size", 16);
  }
  tc.spec.temperature =
      TemperatureConfig(cfg.get<double>("tau0", 0.1), cfg.get<double>("alpha", 0.5),
                        cfg.get<double>("a0", 0.0), cfg.get<double>("tau_floor_ratio", 0.05));
  // The MACL switches; cleared below for the other variants.
  tc.spec.adaptive = cfg.get<bool>("adaptive", true);
  tc.spec.reweight = cfg.get<bool>("reweight", true);
  if (with_variant_axes && tc.spec.variant != LossVariant::MACL) {
    tc.spec.adaptive = false;
    tc.spec.reweight = false;
  }
  tc.framework = framework_from_string(cfg.get<std::string>("framework", "inbatch"));
  tc.queue_size = cfg.get<std::uint64_t>("queue_size", 256);
  tc.encoder_momentum = cfg.get<double>("encoder_momentum", 0.999);
  tc.lr = cfg.get<double>("lr", 0.5);
  tc.lr_schedule = schedule_from_string(cfg.get<std::string>("lr_schedule", "constant"));
  tc.sgd_momentum = cfg.get<double>("sgd_momentum", 0.9);
  tc.epochs = cfg.get<std::uint64_t>("epochs", 30);
  tc.eval_k = cfg.get<std::uint64_t>("eval_k", 200);
  const std::uint64_t hidden = cfg.get<std::uint64_t>("hidden_dim", 0);
  tc.hidden_dim = hidden > 0 ? std::optional<std::size_t>(hidden) : std::nullopt;
  tc.embed_dim = cfg.get<std::uint64_t>("embed_dim", 16);
  setup.save_snapshot = cfg.get<bool>("save_params", false);
  return setup;
}

int map_exception(const char* command) {
  try {
    throw;
  } catch (const UsageError& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidConfig& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const FileNotFound& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const MalformedRecord& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace

std::string serialize_run_record(const RunRecord& record) { return record_to_json(record).dump(2); }

std::size_t worker_count(std::size_t cells) {
  std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CONTRAST_LAB_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    workers = parsed <= 1 ? 1 : static_cast<std::size_t>(parsed);
  }
  return std::min(workers, std::max<std::size_t>(1, cells));
}

int run_verify(const RunManifest& manifest) {
  try {
    ConfigReader cfg(load_config(manifest));
    VerifyConfig vc;
    vc.seed = cfg.get<std::uint64_t>("seed", vc.seed);
    if (manifest.seed_override) {
      vc.seed = *manifest.seed_override;
      cfg.override_key("seed", vc.seed);
    }
    vc.gradient_configs = cfg.get<int>("gradient_configs", vc.gradient_configs);
    vc.rel_tol = cfg.get<double>("rel_tol", vc.rel_tol);
    vc.abs_tol = cfg.get<double>("abs_tol", vc.abs_tol);
    vc.identity_rows = cfg.get<int>("identity_rows", vc.identity_rows);
    vc.identity_tol = cfg.get<double>("identity_tol", vc.identity_tol);
    vc.monotonicity_configs = cfg.get<int>("monotonicity_configs", vc.monotonicity_configs);
    vc.propositions.seed = vc.seed;
    vc.propositions.random_rows = cfg.get<int>("proposition_rows", vc.propositions.random_rows);
    cfg.finish();
    prepare_outputs(manifest, {"verify_report.json"});

    const std::vector<CheckResult> checks = run_verification(vc);
    bool all_pass = true;
    json entries = json::array();
    for (const CheckResult& c : checks) {
      all_pass = all_pass && c.pass;
      std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << " (worst gap " << c.worst << ")\n";
      entries.push_back(
          {{"assertion", c.name}, {"status", c.pass ? "pass" : "fail"}, {"worst_gap", c.worst}});
    }
    const json report = {{"config", cfg.resolved()}, {"checks", entries}, {"all_pass", all_pass}};
    write_text(manifest.out_dir / "verify_report.json", report.dump(2) + "\n");
    return all_pass ? kExitOk : kExitFailure;
  } catch (...) {
    return map_exception("verify");
  }
}

int run_analyze(const RunManifest& manifest) {
  try {
    ConfigReader cfg(load_config(manifest));
    std::uint64_t seed = cfg.get<std::uint64_t>("seed", 20240501);
    if (manifest.seed_override) {
      seed = *manifest.seed_override;
      cfg.override_key("seed", seed);
    }
    const std::size_t tau_points = cfg.get<std::uint64_t>("tau_points", 33);
    const double tau_min = cfg.get<double>("tau_min", 0.01);
    const double tau_max = cfg.get<double>("tau_max", 1e4);
    const double st_pos = cfg.get<double>("sweep_tau_pos", 1.0);
    const double st_neg = cfg.get<double>("sweep_tau_neg", -1.0);
    const std::size_t st_k = cfg.get<std::uint64_t>("sweep_tau_k", 4);
    const double sk_pos = cfg.get<double>("sweep_k_pos", 0.9);
    const double sk_neg = cfg.get<double>("sweep_k_neg", 0.0);
    const double sk_tau = cfg.get<double>("sweep_k_tau", 0.1);
    const std::uint64_t sk_max_exp = cfg.get<std::uint64_t>("sweep_k_max_exp", 20);
    const std::size_t entropy_k = cfg.get<std::uint64_t>("entropy_k", 8);
    const int proposition_rows = cfg.get<int>("proposition_rows", 50);
    cfg.finish();
    prepare_outputs(manifest, {"sweep_tau.csv", "sweep_K.csv", "entropy.csv", "report.json"});

    const std::vector<double> tau_grid = log_spaced_grid(tau_min, tau_max, tau_points);

    LogitsRow scenario;
    scenario.pos = st_pos;
    scenario.negs.assign(st_k, st_neg);
    write_text(manifest.out_dir / "sweep_tau.csv", csv_from_sweep(sweep_tau(scenario, tau_grid)));

    std::vector<std::uint64_t> k_grid;
    for (std::uint64_t e = 0; e <= sk_max_exp; ++e) k_grid.push_back(1ULL << e);
    write_text(manifest.out_dir / "sweep_K.csv",
               csv_from_sweep(sweep_k(sk_pos, sk_neg, sk_tau, k_grid)));

    RngStream entropy_rng(seed, "entropy-row");
    LogitsRow entropy_row;
    entropy_row.pos = entropy_rng.uniform(-1.0, 1.0);
    for (std::size_t j = 0; j < entropy_k; ++j) {
      entropy_row.negs.push_back(entropy_rng.uniform(-1.0, 1.0));
    }
    std::vector<double> entropy(tau_grid.size());
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
      entropy[i] = weight_entropy(entropy_row, tau_grid[i]);
    }
    std::ostringstream entropy_csv;
    write_entropy_csv(tau_grid, entropy, entropy_csv);
    write_text(manifest.out_dir / "entropy.csv", entropy_csv.str());

    PropositionConfig pc;
    pc.seed = seed;
    pc.random_rows = proposition_rows;
    const PropositionReport props = proposition_report(pc);
    json entries = json::array();
    for (const AssertionResult& a : props.assertions) {
      std::cout << (a.pass ? "[PASS] " : "[FAIL] ") << a.assertion << "\n";
      entries.push_back({{"assertion", a.assertion},
                         {"status", a.pass ? "pass" : "fail"},
                         {"worst_gap", a.worst_gap}});
    }
    const json report = {
        {"config", cfg.resolved()}, {"propositions", entries}, {"all_pass", props.all_pass}};
    write_text(manifest.out_dir / "report.json", report.dump(2) + "\n");
    return kExitOk;
  } catch (...) {
    return map_exception("analyze");
  }
}

int run_train(const RunManifest& manifest) {
  try {
    ConfigReader cfg(load_config(manifest));
    TrainSetup setup = read_train_setup(cfg, manifest.seed_override, /*with_variant_axes=*/true);
    cfg.finish();
    std::vector<std::string> outputs{"run_record.json"};
    if (setup.save_snapshot) outputs.push_back("params.bin");
    prepare_outputs(manifest, outputs);

    const RunRecord record = train_run(setup.data, setup.aug, setup.train);
    json report = {{"config", cfg.resolved()}, {"record", record_to_json(record)}};
    write_text(manifest.out_dir / "run_record.json", report.dump(2) + "\n");
    if (setup.save_snapshot) save_params(manifest.out_dir / "params.bin", record.final_params);
    if (!record.epochs.empty()) {
      const EpochStats& last = record.epochs.back();
      std::cout << "final epoch: loss " << last.mean_loss << ", knn " << last.knn_accuracy
                << ", alignment " << last.alignment_loss << ", tau " << last.tau_used_mean << "\n";
    }
    return kExitOk;
  } catch (...) {
    return map_exception("train");
  }
}

int run_compare(const RunManifest& manifest) {
  try {
    ConfigReader cfg(load_config(manifest));
    const std::vector<std::string> variants =
        cfg.get<std::vector<std::string>>("variants", {"ntxent", "dcl", "macl"});
    const std::vector<std::uint64_t> batch_sizes =
        cfg.get<std::vector<std::uint64_t>>("batch_sizes", {16, 64});
    std::vector<std::uint64_t> seeds =
        cfg.get<std::vector<std::uint64_t>>("seeds", {1, 2, 3, 4, 5});
    if (manifest.seed_override) seeds = {*manifest.seed_override};
    TrainSetup base = read_train_setup(cfg, std::nullopt, /*with_variant_axes=*/false);
    cfg.finish();
    if (base.train.epochs < 1) throw UsageError("compare needs epochs >= 1");
    if (variants.empty() || batch_sizes.empty() || seeds.empty()) {
      throw UsageError("compare needs nonempty variants, batch_sizes and seeds");
    }
    prepare_outputs(manifest, {"compare.csv", "compare_summary.csv"});

    struct Cell {
      std::string variant;
      std::uint64_t batch_size = 0;
      std::uint64_t seed = 0;
      EpochStats final_stats;
    };
    std::vector<Cell> cells;
    for (const std::string& v : variants) {
      (void)loss_variant_from_string(v);  // validate before spawning workers
      for (std::uint64_t bs : batch_sizes) {
        for (std::uint64_t s : seeds) cells.push_back({v, bs, s, {}});
      }
    }

    auto run_cell = [&](Cell& cell) {
      TrainConfig tc = base.train;
      tc.spec.variant = loss_variant_from_string(cell.variant);
      if (tc.spec.variant != LossVariant::MACL) {
        tc.spec.adaptive = false;
        tc.spec.reweight = false;
      }
      tc.batch_size = cell.batch_size;
      tc.seed = cell.seed;
      AugmentConfig aug = base.aug;
      aug.seed = cell.seed;
      // The dataset is shared; each cell owns its own training streams.
      const RunRecord record = train_run(base.data, aug, tc);
      cell.final_stats = record.epochs.back();
    };

    const std::size_t workers = worker_count(cells.size());
    if (workers <= 1) {
      for (Cell& cell : cells) run_cell(cell);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            while (true) {
              const std::size_t i = next.fetch_add(1);
              if (i >= cells.size()) return;
              run_cell(cells[i]);
            }
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (std::thread& t : pool) t.join();
      for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }

    std::ostringstream csv;
    csv << "variant,batch_size,seed,knn,alignment,uniformity,final_tau\n";
    for (const Cell& c : cells) {
      csv << c.variant << ',' << c.batch_size << ',' << c.seed << ','
          << format_g17(c.final_stats.knn_accuracy) << ','
          << format_g17(c.final_stats.alignment_loss) << ','
          << format_g17(c.final_stats.uniformity) << ','
          << format_g17(c.final_stats.tau_used_mean) << '\n';
    }
    write_text(manifest.out_dir / "compare.csv", csv.str());

    std::ostringstream summary;
    summary << "variant,batch_size,mean_knn,mean_alignment,mean_uniformity,mean_final_tau\n";
    const double inv_seeds = 1.0 / static_cast<double>(seeds.size());
    for (const std::string& v : variants) {
      for (std::uint64_t bs : batch_sizes) {
        double knn = 0.0, align = 0.0, unif = 0.0, tau = 0.0;
        for (const Cell& c : cells) {
          if (c.variant == v && c.batch_size == bs) {
            knn += c.final_stats.knn_accuracy;
            align += c.final_stats.alignment_loss;
            unif += c.final_stats.uniformity;
            tau += c.final_stats.tau_used_mean;
          }
        }
        summary << v << ',' << bs << ',' << format_g17(knn * inv_seeds) << ','
                << format_g17(align * inv_seeds) << ',' << format_g17(unif * inv_seeds) << ','
                << format_g17(tau * inv_seeds) << '\n';
      }
    }
    write_text(manifest.out_dir / "compare_summary.csv", summary.str());
    std::cout << "compare: " << cells.size() << " cells written\n";
    return kExitOk;
  } catch (...) {
    return map_exception("compare");
  }
}

}  // namespace contrast::cli
