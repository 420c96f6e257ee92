#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <glog/logging.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "psfm/pipeline/export.h"
#include "psfm/pipeline/scenario.h"

namespace {

constexpr int kOk = 0;
constexpr int kPipelineFailure = 1;
constexpr int kUsageError = 2;

struct CommonFlags {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string ordering;
  std::optional<int> period;
  std::optional<std::size_t> max_events;
  std::optional<int> snapshot_every;
};

void AddCommonFlags(CLI::App* app, CommonFlags* flags) {
  app->add_option("--scenario", flags->scenario, "Scenario JSON document");
  app->add_option("--out", flags->out, "Output directory");
  app->add_option("--seed", flags->seed, "Master seed; overrides every seed of the scenario");
  app->add_option("--ordering", flags->ordering, "Arrival order")
      ->check(CLI::IsMember({"linear", "shuffled", "periodic"}));
  app->add_option("--period", flags->period, "Offset of the periodic ordering")
      ->check(CLI::PositiveNumber);
  app->add_option("--max-events", flags->max_events, "Stop after this many events");
  app->add_option("--snapshot-every", flags->snapshot_every, "Write every N-th snapshot")
      ->check(CLI::PositiveNumber);
}

psfm::ScenarioConfig ResolveConfig(const CommonFlags& flags) {
  psfm::ScenarioConfig config;
  if (!flags.scenario.empty()) config = psfm::LoadScenario(flags.scenario);
  if (!flags.out.empty()) config.output_dir = flags.out;
  if (flags.seed) config.SetSeed(*flags.seed);
  if (!flags.ordering.empty()) {
    config.stream.ordering.kind = psfm::OrderingKindFromString(flags.ordering);
  }
  if (flags.period) config.stream.ordering.period = *flags.period;
  if (flags.max_events) config.max_events = *flags.max_events;
  if (flags.snapshot_every) config.snapshot_every = *flags.snapshot_every;
  return config;
}

nlohmann::json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw psfm::ConfigError("cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw psfm::ConfigError("cannot parse " + path + ": " + e.what());
  }
}

void PrintSummary(const psfm::ScenarioResult& result, const psfm::ScenarioConfig& config) {
  const psfm::Metrics last = result.metrics.empty() ? psfm::Metrics{} : result.metrics.back();
  std::printf(
      "events=%zu clusters_raw=%zu clusters_effective=%zu registered=%zu "
      "outliers=%zu excluded=%zu recoveries=%zu rmse=%.6g seconds=%.2f out=%s\n",
      result.events, last.clusters_raw, last.clusters_effective, last.registered_cameras,
      last.outlier_cameras, last.excluded_cameras, last.recoveries, last.rmse_to_truth,
      result.seconds, config.output_dir.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;
  FLAGS_minloglevel = google::GLOG_ERROR;

  CLI::App app{"Progressive structure-from-motion on synthetic match streams"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "Generate a scene and stream and run the pipeline");
  AddCommonFlags(run, &run_flags);

  CommonFlags replay_flags;
  std::string replay_stream, replay_scene;
  CLI::App* replay = app.add_subcommand("replay", "Run the pipeline on a serialized stream");
  AddCommonFlags(replay, &replay_flags);
  replay->add_option("--stream", replay_stream, "Stream JSON")->required();
  replay->add_option("--scene", replay_scene, "Ground-truth scene JSON for metrics");

  std::string eval_model, eval_scene;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a final model against a scene");
  eval->add_option("--model", eval_model, "final/model.json of a run")->required();
  eval->add_option("--scene", eval_scene, "Scene JSON")->required();

  CommonFlags gen_flags;
  CLI::App* gen = app.add_subcommand("gen", "Write the scene and stream of a scenario");
  AddCommonFlags(gen, &gen_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (run->parsed() || replay->parsed()) {
      psfm::ScenarioConfig config = ResolveConfig(run->parsed() ? run_flags : replay_flags);
      if (replay->parsed()) {
        config.stream_file = replay_stream;
        if (!replay_scene.empty()) config.scene_file = replay_scene;
        else config.scene_file.reset();
      }
      const psfm::ScenarioResult result = psfm::RunScenario(config);
      PrintSummary(result, config);
    } else if (eval->parsed()) {
      const psfm::Scene scene = psfm::Scene::FromJson(ReadJson(eval_scene));
      const nlohmann::json model = ReadJson(eval_model);
      psfm::Metrics metrics = psfm::Evaluate(psfm::CamerasFromModelJson(model), scene);
      const auto& components = model.at("effective_clusters");
      metrics.clusters_effective = components.size();
      metrics.clusters_raw = 0;
      for (const auto& component : components) metrics.clusters_raw += component.size();
      std::cout << metrics.ToJson().dump(2) << "\n";
    } else if (gen->parsed()) {
      const psfm::ScenarioConfig config = ResolveConfig(gen_flags);
      const psfm::ScenarioInputs inputs = psfm::PrepareInputs(config);
      std::error_code error;
      std::filesystem::create_directories(config.output_dir, error);
      if (error) {
        throw psfm::ConfigError("cannot create output directory " +
                                config.output_dir.string());
      }
      psfm::WriteFile(config.output_dir / "scene.json", inputs.scene.ToJson().dump() + "\n");
      psfm::WriteFile(config.output_dir / "stream.json",
                      psfm::StreamToJson(inputs.events).dump() + "\n");
      std::printf("cameras=%d points=%zu events=%zu out=%s\n", inputs.scene.NumCameras(),
                  inputs.scene.points.size(), inputs.events.size(),
                  config.output_dir.string().c_str());
    }
  } catch (const psfm::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "pipeline failure: " << e.what() << "\n";
    return kPipelineFailure;
  }
  return kOk;
}
