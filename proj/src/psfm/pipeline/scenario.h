#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "psfm/pipeline/pipeline.h"
#include "psfm/simulator/scene.h"
#include "psfm/simulator/stream.h"

namespace psfm {

// Unreadable or invalid scenario document.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One scenario document. Every seed that is not given explicitly falls back
// to the master seed.
struct ScenarioConfig {
  std::uint64_t seed = 0;
  TempleOptions temple;
  std::optional<std::uint64_t> scene_seed;
  // Replay inputs instead of generated ones.
  std::optional<std::filesystem::path> scene_file;
  std::optional<std::filesystem::path> stream_file;
  StreamOptions stream;
  std::optional<std::uint64_t> stream_seed;
  std::optional<std::uint64_t> ordering_seed;
  PipelineOptions pipeline;
  std::filesystem::path output_dir = "run";
  int snapshot_every = 1;
  std::optional<std::size_t> max_events;

  // Paths inside the document are relative to `base_dir`.
  static ScenarioConfig FromJson(const nlohmann::json& json,
                                 const std::filesystem::path& base_dir = {});
  nlohmann::json ToJson() const;

  // Overrides the master seed and every derived seed.
  void SetSeed(std::uint64_t master);
};

// Throws ConfigError naming the path when it cannot be read or parsed.
ScenarioConfig LoadScenario(const std::filesystem::path& path);

struct ScenarioInputs {
  Scene scene;
  std::vector<MatchEvent> events;
  bool has_truth = true;
};

ScenarioInputs PrepareInputs(const ScenarioConfig& config);

struct ScenarioResult {
  std::vector<Metrics> metrics;
  std::size_t events = 0;
  double seconds = 0.0;
  // Content of metrics.csv.
  std::string metrics_csv;
};

// Folds the pipeline over the stream. With `write_outputs`, writes
// snapshots/NNNN.json, metrics.csv and final/ below the output directory;
// failure to create it throws ConfigError.
ScenarioResult RunScenario(const ScenarioConfig& config, bool write_outputs = true);

}  // namespace psfm
