#include "psfm/pipeline/scenario.h"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "psfm/pipeline/export.h"

namespace psfm {
namespace {

template <typename T>
void Read(const nlohmann::json& j, const char* key, T* value) {
  if (j.contains(key)) *value = j.at(key).get<T>();
}

nlohmann::json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

std::filesystem::path Resolve(const std::filesystem::path& base,
                              const std::string& path) {
  const std::filesystem::path p(path);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

ScenarioConfig ScenarioConfig::FromJson(const nlohmann::json& j,
                                        const std::filesystem::path& base_dir) {
  ScenarioConfig c;
  try {
    Read(j, "seed", &c.seed);
    if (j.contains("scene")) {
      const auto& s = j.at("scene");
      if (s.contains("file")) c.scene_file = Resolve(base_dir, s.at("file").get<std::string>());
      TempleOptions& t = c.temple;
      Read(s, "num_cameras", &t.num_cameras);
      Read(s, "fold", &t.fold);
      Read(s, "radius", &t.radius);
      Read(s, "temple_radius_ratio", &t.temple_radius_ratio);
      Read(s, "ring_radius_ratio", &t.ring_radius_ratio);
      Read(s, "height_ratio", &t.height_ratio);
      Read(s, "points_per_sector", &t.points_per_sector);
      Read(s, "breaking_points", &t.breaking_points);
      Read(s, "temple_visibility_deg", &t.temple_visibility_deg);
      Read(s, "ring_visibility_deg", &t.ring_visibility_deg);
      Read(s, "camera_jitter", &t.camera_jitter);
      Read(s, "camera_height_sigma_ratio", &t.camera_height_sigma_ratio);
      Read(s, "focal", &t.focal);
      Read(s, "width", &t.width);
      Read(s, "height", &t.height);
      if (s.contains("seed")) c.scene_seed = s.at("seed").get<std::uint64_t>();
    }
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      Read(n, "rotation_deg", &c.stream.noise.rotation_deg);
      Read(n, "direction_deg", &c.stream.noise.direction_deg);
      Read(n, "pixel", &c.stream.noise.pixel);
    }
    if (j.contains("ordering")) {
      const auto& o = j.at("ordering");
      if (o.contains("kind")) {
        c.stream.ordering.kind = OrderingKindFromString(o.at("kind").get<std::string>());
      }
      Read(o, "period", &c.stream.ordering.period);
      if (o.contains("seed")) c.ordering_seed = o.at("seed").get<std::uint64_t>();
    }
    if (j.contains("stream")) {
      const auto& s = j.at("stream");
      if (s.contains("file")) c.stream_file = Resolve(base_dir, s.at("file").get<std::string>());
      Read(s, "confusion_rate", &c.stream.confusion_rate);
      Read(s, "retrieval_top_k", &c.stream.retrieval_top_k);
      if (s.contains("seed")) c.stream_seed = s.at("seed").get<std::uint64_t>();
    }
    if (j.contains("pipeline")) {
      const auto& p = j.at("pipeline");
      PipelineOptions& o = c.pipeline;
      Read(p, "min_correspondences", &o.min_correspondences);
      Read(p, "eta", &o.eta);
      Read(p, "mu_min", &o.reconstruction.mu_min);
      Read(p, "mu_max", &o.reconstruction.mu_max);
      Read(p, "eta_grow", &o.reconstruction.eta_grow);
      Read(p, "rho_lmax", &o.reconstruction.rho_lmax_deg);
      Read(p, "rho_gmax", &o.rotation.rho_gmax_deg);
      Read(p, "lambda_c", &o.constraints.lambda_c);
      Read(p, "pixel_threshold", &o.reconstruction.pixel_threshold);
      Read(p, "huber", &o.pose_graph.huber);
      if (p.contains("parallel")) {
        const bool parallel = p.at("parallel").get<bool>();
        o.execution = parallel ? Execution::kParallel : Execution::kSerial;
        o.constraints.execution = o.execution;
      }
    }
    c.stream.min_correspondences = c.pipeline.min_correspondences;
    if (j.contains("output")) {
      const auto& o = j.at("output");
      if (o.contains("dir")) c.output_dir = Resolve(base_dir, o.at("dir").get<std::string>());
      Read(o, "snapshot_every", &c.snapshot_every);
      if (o.contains("max_events") && !o.at("max_events").is_null()) {
        c.max_events = o.at("max_events").get<std::size_t>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
  if (c.snapshot_every < 1) throw ConfigError("snapshot_every must be >= 1");
  return c;
}

nlohmann::json ScenarioConfig::ToJson() const {
  const TempleOptions& t = temple;
  nlohmann::json scene = {{"num_cameras", t.num_cameras},
                          {"fold", t.fold},
                          {"radius", t.radius},
                          {"temple_radius_ratio", t.temple_radius_ratio},
                          {"ring_radius_ratio", t.ring_radius_ratio},
                          {"height_ratio", t.height_ratio},
                          {"points_per_sector", t.points_per_sector},
                          {"breaking_points", t.breaking_points},
                          {"temple_visibility_deg", t.temple_visibility_deg},
                          {"ring_visibility_deg", t.ring_visibility_deg},
                          {"camera_jitter", t.camera_jitter},
                          {"camera_height_sigma_ratio", t.camera_height_sigma_ratio},
                          {"focal", t.focal},
                          {"width", t.width},
                          {"height", t.height}};
  if (scene_seed) scene["seed"] = *scene_seed;
  if (scene_file) scene["file"] = scene_file->string();
  nlohmann::json ordering = {{"kind", ToString(stream.ordering.kind)},
                             {"period", stream.ordering.period}};
  if (ordering_seed) ordering["seed"] = *ordering_seed;
  nlohmann::json stream_json = {{"confusion_rate", stream.confusion_rate},
                                {"retrieval_top_k", stream.retrieval_top_k}};
  if (stream_seed) stream_json["seed"] = *stream_seed;
  if (stream_file) stream_json["file"] = stream_file->string();
  const PipelineOptions& p = pipeline;
  nlohmann::json output = {{"dir", output_dir.string()}, {"snapshot_every", snapshot_every}};
  output["max_events"] = max_events ? nlohmann::json(*max_events) : nlohmann::json(nullptr);
  return {{"seed", seed},
          {"scene", scene},
          {"noise",
           {{"rotation_deg", stream.noise.rotation_deg},
            {"direction_deg", stream.noise.direction_deg},
            {"pixel", stream.noise.pixel}}},
          {"ordering", ordering},
          {"stream", stream_json},
          {"pipeline",
           {{"min_correspondences", p.min_correspondences},
            {"eta", p.eta},
            {"mu_min", p.reconstruction.mu_min},
            {"mu_max", p.reconstruction.mu_max},
            {"eta_grow", p.reconstruction.eta_grow},
            {"rho_lmax", p.reconstruction.rho_lmax_deg},
            {"rho_gmax", p.rotation.rho_gmax_deg},
            {"lambda_c", p.constraints.lambda_c},
            {"pixel_threshold", p.reconstruction.pixel_threshold},
            {"huber", p.pose_graph.huber},
            {"parallel", p.execution == Execution::kParallel}}},
          {"output", output}};
}

void ScenarioConfig::SetSeed(std::uint64_t master) {
  seed = master;
  scene_seed.reset();
  stream_seed.reset();
  ordering_seed.reset();
}

ScenarioConfig LoadScenario(const std::filesystem::path& path) {
  return ScenarioConfig::FromJson(ReadJsonFile(path), path.parent_path());
}

ScenarioInputs PrepareInputs(const ScenarioConfig& config) {
  ScenarioInputs inputs;
  if (config.scene_file) {
    inputs.scene = Scene::FromJson(ReadJsonFile(*config.scene_file));
  } else if (!config.stream_file) {
    TempleOptions temple = config.temple;
    temple.seed = config.scene_seed.value_or(config.seed);
    inputs.scene = GenerateTemple(temple);
  }
  if (config.stream_file) {
    inputs.events = StreamFromJson(ReadJsonFile(*config.stream_file));
    inputs.has_truth = config.scene_file.has_value();
  } else {
    StreamOptions options = config.stream;
    options.seed = config.stream_seed.value_or(config.seed);
    options.ordering.seed = config.ordering_seed.value_or(config.seed);
    inputs.events = GenerateStream(inputs.scene, options);
  }
  if (config.max_events && inputs.events.size() > *config.max_events) {
    inputs.events.resize(*config.max_events);
  }
  return inputs;
}

ScenarioResult RunScenario(const ScenarioConfig& config, bool write_outputs) {
  const ScenarioInputs inputs = PrepareInputs(config);
  const std::filesystem::path& out = config.output_dir;
  if (write_outputs) {
    std::error_code error;
    std::filesystem::create_directories(out / "snapshots", error);
    if (error) {
      throw ConfigError("cannot create output directory " + out.string() + ": " +
                        error.message());
    }
    WriteFile(out / "scenario.json", config.ToJson().dump(2) + "\n");
    if (inputs.has_truth) WriteFile(out / "scene.json", inputs.scene.ToJson().dump() + "\n");
    WriteFile(out / "stream.json", StreamToJson(inputs.events).dump() + "\n");
  }

  ScenarioResult result;
  result.metrics_csv = MetricsCsvHeader();
  Pipeline pipeline(config.pipeline, inputs.has_truth ? &inputs.scene : nullptr);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t k = 0; k < inputs.events.size(); ++k) {
    const Snapshot snapshot = pipeline.ProcessEvent(inputs.events[k]);
    result.metrics.push_back(snapshot.metrics);
    result.metrics_csv += MetricsCsvRow(snapshot.timestep, snapshot.metrics);
    const bool last = k + 1 == inputs.events.size();
    if (write_outputs && (snapshot.timestep % config.snapshot_every == 0 || last)) {
      char name[32];
      std::snprintf(name, sizeof(name), "%04llu.json",
                    static_cast<unsigned long long>(snapshot.timestep));
      WriteFile(out / "snapshots" / name, snapshot.ToJson().dump(1) + "\n");
    }
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.events = inputs.events.size();
  if (write_outputs) {
    WriteFile(out / "metrics.csv", result.metrics_csv);
    WriteFinalModel(pipeline, out);
  }
  return result;
}

}  // namespace psfm
