#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "contrast/trainer.hpp"

namespace contrast::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // failed assertion or runtime abort
inline constexpr int kExitUsage = 2;    // config / usage error

/// One CLI invocation. Outputs land under out_dir; existing files are never
/// overwritten unless force is set. The timestamp is logged, not written to
/// any output file, so outputs stay byte-reproducible.
struct RunManifest {
  std::string command;
  std::optional<std::filesystem::path> config_path;
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed_override;
  bool force = false;
  std::string timestamp;
};

int run_verify(const RunManifest& manifest);
int run_analyze(const RunManifest& manifest);
int run_train(const RunManifest& manifest);
int run_compare(const RunManifest& manifest);

/// JSON text of a RunRecord's metric series (used by run_train and by the
/// byte-reproducibility tests).
std::string serialize_run_record(const RunRecord& record);

/// Worker cap for compare cells: CONTRAST_LAB_THREADS, 0 or 1 meaning
/// sequential; defaults to the hardware concurrency.
std::size_t worker_count(std::size_t cells);

}  // namespace contrast::cli
