// contrast_lab: verification suites, scaling-factor sweeps, deterministic
// training runs, and loss-family comparisons.

#include <chrono>
#include <ctime>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "contrast/run.hpp"

namespace {

std::string now_string() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

struct CommonFlags {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool has_seed = false;
  bool force = false;
};

void attach(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "JSON config file (flat object)");
  cmd->add_option("--out", flags.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", flags.seed, "seed override")
      ->each([&flags](const std::string&) { flags.has_seed = true; });
  cmd->add_flag("--force", flags.force, "overwrite existing outputs");
}

contrast::cli::RunManifest manifest_from(const std::string& command, const CommonFlags& flags) {
  contrast::cli::RunManifest m;
  m.command = command;
  if (!flags.config.empty()) m.config_path = flags.config;
  m.out_dir = flags.out;
  if (flags.has_seed) m.seed_override = flags.seed;
  m.force = flags.force;
  m.timestamp = now_string();
  std::cout << "[" << m.timestamp << "] " << command << " -> " << m.out_dir.string() << "\n";
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contrastive-loss laboratory"};
  app.require_subcommand(1);

  CommonFlags verify_flags, analyze_flags, train_flags, compare_flags;
  CLI::App* verify = app.add_subcommand("verify", "run the numerical verification suites");
  attach(verify, verify_flags);
  CLI::App* analyze = app.add_subcommand("analyze", "emit scaling-factor and entropy sweeps");
  attach(analyze, analyze_flags);
  CLI::App* train = app.add_subcommand("train", "run one training configuration");
  attach(train, train_flags);
  CLI::App* compare = app.add_subcommand("compare", "cross-product of variants x batch sizes x seeds");
  attach(compare, compare_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return contrast::cli::kExitUsage;
  }

  try {
    if (verify->parsed()) return contrast::cli::run_verify(manifest_from("verify", verify_flags));
    if (analyze->parsed()) {
      return contrast::cli::run_analyze(manifest_from("analyze", analyze_flags));
    }
    if (train->parsed()) return contrast::cli::run_train(manifest_from("train", train_flags));
    if (compare->parsed()) {
      return contrast::cli::run_compare(manifest_from("compare", compare_flags));
    }
  } catch (const std::exception& e) {
    std::cerr << "contrast_lab: " << e.what() << "\n";
    return contrast::cli::kExitFailure;
  }
  return contrast::cli::kExitUsage;
}
