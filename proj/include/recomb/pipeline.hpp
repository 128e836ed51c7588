// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// Batch orchestration: one TOML file fully determines a run. Outputs are
// written atomically (temp file + rename) and are byte-identical across
// reruns with the same config and seed; wall-clock timings therefore go to
// the log stream, never into output artifacts.

#pragma once

#include <recomb/core.hpp>
#include <recomb/fusion.hpp>
#include <recomb/insertion_map.hpp>
#include <recomb/io.hpp>
#include <recomb/metrics.hpp>
#include <recomb/occlusion.hpp>
#include <recomb/registration.hpp>
#include <recomb/toml.hpp>

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace recomb::pipeline {

using toml::ConfigError;

inline constexpr const char* kToolVersion = "0.1.0";

// ----------------------------------------------------------------------------
// Atomic output writing
// ----------------------------------------------------------------------------

inline void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
  const auto tmp = path.string() + ".tmp";
  io::detail::write_file(tmp, content);
  std::filesystem::rename(tmp, path);
}

inline void atomic_write_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                               io::CloudFileFormat format) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  io::write_point_cloud(cloud, tmp, format);
  std::filesystem::rename(tmp, path);
}

inline void atomic_write_mesh(const TriangleMesh& mesh, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp" + path.extension().string();
  io::write_mesh(mesh, tmp);
  std::filesystem::rename(tmp, path);
}

/// FNV-1a over the raw config bytes; stable across platforms.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ----------------------------------------------------------------------------
// Run configuration
// ----------------------------------------------------------------------------

struct SceneEntry {
  std::filesystem::path cloud;
  double sensor_height = 1.8;
};

struct ObjectEntry {
  std::filesystem::path cloud;
  std::filesystem::path meta;
  std::filesystem::path mesh;
  std::vector<double> azimuths_deg;  // explicit placements...
  bool auto_placements = false;      // ...or chosen from the insertion map
  int max_auto = 4;
};

struct RunConfig {
  std::uint64_t seed = 0;  // mandatory in files; no default run exists
  std::filesystem::path output_dir;
  double tau = 0.05;
  int jobs = 1;
  double azimuth_grid_deg = 1.0;
  bool validate_placements = true;
  io::CloudFileFormat output_format = io::CloudFileFormat::PLY_BINARY_LE;

  registration::RegistrationConfig registration;
  occlusion::OcclusionOptions occlusion;
  insertion_map::InsertionMapConfig map_config;
  insertion_map::PlacementRules placement_rules;

  std::vector<SceneEntry> scenes;
  std::vector<ObjectEntry> objects;

  std::string config_hash;  // of the loaded file, for the manifest

  /// Referenced input files must exist before any work starts.
  void check_inputs_exist() const {
    auto require = [](const std::filesystem::path& p) {
      if (!std::filesystem::exists(p))
        throw io::IoError("referenced file does not exist: " + p.string());
    };
    for (const auto& s : scenes) require(s.cloud);
    for (const auto& o : objects) {
      require(o.cloud);
      require(o.meta);
      require(o.mesh);
    }
  }
};

inline io::CloudFileFormat parse_format_name(const std::string& name) {
  using F = io::CloudFileFormat;
  for (F f : {F::PLY_ASCII, F::PLY_BINARY_LE, F::PCD_ASCII, F::PCD_BINARY, F::XYZ_CSV})
    if (io::format_name(f) == name) return f;
  throw ConfigError("unknown format '" + name + "'");
}

/// All paths inside the file resolve relative to the file's directory.
inline RunConfig load_run_config(const std::filesystem::path& path) {
  auto buf = io::detail::FileBuffer::from_file(path);
  const std::string text(buf.all());
  toml::Table root;
  try {
    root = toml::parse(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  const auto base = std::filesystem::absolute(path).parent_path();

  RunConfig cfg;
  cfg.config_hash = fnv1a_hex(text);

  const toml::Value* run = root.find("run");
  if (!run || !run->is_table()) throw ConfigError("missing [run] table");
  const toml::Table& r = run->table();
  if (!r.contains("seed")) throw ConfigError("missing required key 'seed' (runs must be reproducible)");
  cfg.seed = static_cast<std::uint64_t>(r.get_int("seed"));
  cfg.output_dir = base / r.get_string("output_dir", "out");
  cfg.tau = r.get_double("tau", 0.05);
  cfg.jobs = static_cast<int>(r.get_int("jobs", 1));
  cfg.azimuth_grid_deg = r.get_double("azimuth_grid_deg", 1.0);
  cfg.validate_placements = r.get_bool("validate_placements", true);
  cfg.output_format = parse_format_name(r.get_string("format", "ply_binary_le"));
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");

  if (const auto* reg = root.find("registration")) {
    const toml::Table& t = reg->table();
    cfg.registration.divisor = static_cast<int>(t.get_int("divisor", 8));
    cfg.registration.sample_count = static_cast<int>(t.get_int("sample_count", 30000));
    cfg.registration.stage_thresholds =
        t.get_double_array("stage_thresholds", {0.10, 0.05});
    cfg.registration.max_iterations_per_stage =
        static_cast<int>(t.get_int("max_iterations_per_stage", 50));
    cfg.registration.convergence_eps = t.get_double("convergence_eps", 1e-6);
  }
  cfg.registration.seed = cfg.seed;
  cfg.registration.validate();

  if (const auto* occ = root.find("occlusion")) {
    const toml::Table& t = occ->table();
    cfg.occlusion.epsilon = t.get_double("epsilon", 1e-4);
    cfg.occlusion.literal_predicate = t.get_bool("literal_predicate", false);
  }

  if (const auto* m = root.find("insertion_map")) {
    const toml::Table& t = m->table();
    cfg.map_config.cell_size = t.get_double("cell_size", 0.25);
    cfg.map_config.sv_threshold = t.get_double("sv_threshold", 0.10);
    cfg.map_config.min_count = static_cast<std::size_t>(t.get_int("min_count", 20));
    cfg.map_config.height_tolerance = t.get_double("height_tolerance", 0.05);
    cfg.map_config.sv.r_min = t.get_double("r_min", 0.1);
    cfg.map_config.sv.r_max = t.get_double("r_max", 1.0);
    cfg.map_config.sv.k_min = static_cast<std::size_t>(t.get_int("k_min", 10));
  }

  if (const auto* scenes = root.find("scene")) {
    if (!scenes->is_array()) throw ConfigError("[[scene]] must be an array of tables");
    for (const auto& sv : scenes->array()) {
      const toml::Table& t = sv.table();
      SceneEntry e;
      e.cloud = base / t.get_string("cloud");
      e.sensor_height = t.get_double("sensor_height", 1.8);
      cfg.scenes.push_back(std::move(e));
    }
  }
  if (const auto* objects = root.find("object")) {
    if (!objects->is_array()) throw ConfigError("[[object]] must be an array of tables");
    for (const auto& ov : objects->array()) {
      const toml::Table& t = ov.table();
      ObjectEntry e;
      e.cloud = base / t.get_string("cloud");
      e.meta = base / t.get_string("meta");
      e.mesh = base / t.get_string("mesh");
      e.azimuths_deg = t.get_double_array("azimuths_deg", {});
      e.auto_placements = t.get_bool("auto", false);
      e.max_auto = static_cast<int>(t.get_int("max_auto", 4));
      if (e.azimuths_deg.empty() && !e.auto_placements)
        throw ConfigError("object entry needs azimuths_deg or auto = true");
      cfg.objects.push_back(std::move(e));
    }
  }
  if (cfg.scenes.empty()) throw ConfigError("at least one [[scene]] is required");
  if (cfg.objects.empty()) throw ConfigError("at least one [[object]] is required");
  return cfg;
}

// ----------------------------------------------------------------------------
// Batch run
// ----------------------------------------------------------------------------

struct BatchResult {
  int completed = 0;
  int skipped = 0;  // placements rejected by validation
  nlohmann::ordered_json manifest;
};

namespace detail {

struct StopWatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

inline std::string stem_of(const std::filesystem::path& p) { return p.stem().string(); }

inline std::string azimuth_tag(double deg) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "az%g", deg);
  return buf;
}

struct Tuple {
  std::size_t scene_idx, object_idx;
  double azimuth_deg;
};

}  // namespace detail

/// Execute the run: load everything, register each object once, map each
/// scene once, then emit one recombined cloud + label file per valid
/// (scene, object, azimuth) tuple. Timings go to `log`.
inline BatchResult run_batch(const RunConfig& cfg, std::ostream& log) {
  cfg.check_inputs_exist();
  std::filesystem::create_directories(cfg.output_dir);

  const auto ext = [&]() -> std::string {
    switch (cfg.output_format) {
      case io::CloudFileFormat::PCD_ASCII:
      case io::CloudFileFormat::PCD_BINARY: return ".pcd";
      case io::CloudFileFormat::XYZ_CSV: return ".csv";
      default: return ".ply";
    }
  }();

  detail::StopWatch total;

  // scenes and their insertion maps
  std::vector<SceneRecord> scenes;
  std::vector<std::optional<insertion_map::InsertionMap>> maps(cfg.scenes.size());
  for (std::size_t i = 0; i < cfg.scenes.size(); ++i) {
    detail::StopWatch sw;
    scenes.push_back(io::read_scene_record(cfg.scenes[i].cloud, cfg.scenes[i].sensor_height));
    log << "[load] scene " << cfg.scenes[i].cloud.string() << " (" << scenes.back().cloud.size()
        << " pts, " << sw.ms() << " ms)\n";
    if (cfg.validate_placements) {
      detail::StopWatch mw;
      maps[i] = insertion_map::build_insertion_map(scenes.back(), cfg.map_config);
      atomic_write_file(cfg.output_dir /
                            (detail::stem_of(cfg.scenes[i].cloud) + ".insertion_map.csv"),
                        insertion_map::to_csv(*maps[i]));
      log << "[map] " << maps[i]->cells.size() << " cells (" << mw.ms() << " ms)\n";
    }
  }

  // objects: load and register once each
  std::vector<ObjectRecord> records;
  std::vector<registration::RegistrationResult> registrations;
  for (const auto& entry : cfg.objects) {
    detail::StopWatch sw;
    records.push_back(io::read_object_record(entry.cloud, entry.meta));
    const TriangleMesh mesh = io::read_mesh(entry.mesh);
    registrations.push_back(
        registration::register_mesh_to_cloud(mesh, records.back().cloud, cfg.registration));
    const auto& reg = registrations.back();
    log << "[register] " << entry.cloud.string() << ": chamfer " << reg.chamfer
        << " m^2 at " << reg.best_rotation_deg << " deg"
        << (reg.symmetry_risk ? " (symmetry risk)" : "") << " (" << sw.ms() << " ms)\n";

    const std::string stem = detail::stem_of(entry.cloud);
    atomic_write_mesh(reg.aligned_mesh, cfg.output_dir / (stem + ".aligned.ply"));
    nlohmann::ordered_json rj;
    rj["object"] = stem;
    rj["chamfer_m2"] = reg.chamfer;
    rj["best_rotation_deg"] = reg.best_rotation_deg;
    rj["symmetry_risk"] = reg.symmetry_risk;
    rj["rotation_chamfers"] = reg.rotation_chamfers;
    atomic_write_file(cfg.output_dir / (stem + ".registration.json"), rj.dump(2) + "\n");
  }

  // expand placements
  std::vector<detail::Tuple> tuples;
  nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
  int n_skipped = 0;
  const double grid_rad = deg_to_rad(cfg.azimuth_grid_deg);
  for (std::size_t si = 0; si < scenes.size(); ++si) {
    for (std::size_t oi = 0; oi < records.size(); ++oi) {
      std::vector<double> azimuths = cfg.objects[oi].azimuths_deg;
      if (cfg.objects[oi].auto_placements) {
        if (!maps[si])
          throw ConfigError("auto placements need validate_placements = true");
        int found = 0;
        for (double deg = 0.0; deg < 360.0 && found < cfg.objects[oi].max_auto;
             deg += cfg.azimuth_grid_deg) {
          const auto verdict = insertion_map::validate_placement(
              records[oi], registrations[oi].aligned_mesh, *maps[si], scenes[si],
              {deg_to_rad(deg), std::nullopt}, cfg.placement_rules, grid_rad);
          if (verdict.ok()) {
            azimuths.push_back(deg);
            ++found;
          }
        }
        log << "[auto] scene " << si << " object " << oi << ": " << found
            << " placements from the insertion map\n";
      }
      for (double deg : azimuths) {
        if (cfg.validate_placements) {
          const auto verdict = insertion_map::validate_placement(
              records[oi], registrations[oi].aligned_mesh, *maps[si], scenes[si],
              {deg_to_rad(deg), std::nullopt}, cfg.placement_rules, grid_rad);
          if (!verdict.ok()) {
            nlohmann::ordered_json sj;
            sj["scene"] = detail::stem_of(cfg.scenes[si].cloud);
            sj["object"] = detail::stem_of(cfg.objects[oi].cloud);
            sj["azimuth_deg"] = deg;
            auto names = nlohmann::ordered_json::array();
            for (auto v : verdict.violations)
              names.push_back(insertion_map::violation_name(v));
            sj["violations"] = names;
            sj["details"] = verdict.details;
            skipped.push_back(std::move(sj));
            ++n_skipped;
            continue;
          }
        }
        tuples.push_back({si, oi, deg});
      }
    }
  }

  // recombine, possibly in parallel; results land in tuple order
  struct TupleOutput {
    nlohmann::ordered_json entry;
    std::string error;
  };
  std::vector<TupleOutput> outputs(tuples.size());
  std::mutex log_mutex;

  auto process = [&](std::size_t ti) {
    const auto& tp = tuples[ti];
    try {
      detail::StopWatch sw;
      const auto [placed, placed_mesh] =
          fusion::place_at_azimuth(records[tp.object_idx],
                                   registrations[tp.object_idx].aligned_mesh,
                                   deg_to_rad(tp.azimuth_deg), grid_rad);
      const auto occ =
          occlusion::compute_occlusion(scenes[tp.scene_idx].cloud, placed_mesh, cfg.occlusion);
      const auto rec = fusion::recombine(scenes[tp.scene_idx], placed, occ, &placed_mesh);

      const std::string name = detail::stem_of(cfg.scenes[tp.scene_idx].cloud) + "__" +
                               detail::stem_of(cfg.objects[tp.object_idx].cloud) + "__" +
                               detail::azimuth_tag(tp.azimuth_deg);
      atomic_write_cloud(rec.cloud, cfg.output_dir / (name + ext), cfg.output_format);

      nlohmann::ordered_json labels = nlohmann::ordered_json::array();
      for (const auto& box : rec.labels) {
        nlohmann::ordered_json lj;
        lj["center"] = {box.center.x(), box.center.y(), box.center.z()};
        lj["half_extents"] = {box.half_extents.x(), box.half_extents.y(),
                              box.half_extents.z()};
        lj["yaw"] = box.yaw;
        lj["object_type"] = box.object_type;
        lj["object_id"] = box.object_id;
        labels.push_back(std::move(lj));
      }
      atomic_write_file(cfg.output_dir / (name + ".labels.json"), labels.dump(2) + "\n");

      nlohmann::ordered_json e;
      e["scene"] = detail::stem_of(cfg.scenes[tp.scene_idx].cloud);
      e["object"] = detail::stem_of(cfg.objects[tp.object_idx].cloud);
      e["azimuth_deg"] = tp.azimuth_deg;
      e["cloud"] = name + ext;
      e["labels"] = name + ".labels.json";
      e["scene_points"] = scenes[tp.scene_idx].cloud.size();
      e["occluded_points"] = occ.occluded_indices.size();
      e["object_points"] = placed.cloud.size();
      e["recombined_points"] = rec.cloud.size();
      e["filled_attributes"] = rec.filled_attributes;
      outputs[ti].entry = std::move(e);

      std::lock_guard<std::mutex> guard(log_mutex);
      log << "[recombine] " << name << ": -" << occ.occluded_indices.size() << " +"
          << placed.cloud.size() << " pts (" << sw.ms() << " ms)\n";
    } catch (const std::exception& e) {
      outputs[ti].error = e.what();
    }
  };

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1 || tuples.size() <= 1) {
    for (std::size_t i = 0; i < tuples.size(); ++i) process(i);
  } else {
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < jobs; ++w)
      workers.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= tuples.size()) break;
          process(i);
        }
      });
    for (auto& t : workers) t.join();
  }

  for (const auto& out : outputs)
    if (!out.error.empty()) throw Error("batch tuple failed: " + out.error);

  BatchResult result;
  result.completed = static_cast<int>(tuples.size());
  result.skipped = n_skipped;

  nlohmann::ordered_json manifest;
  manifest["tool"] = "recomb";
  manifest["version"] = kToolVersion;
  manifest["config_hash"] = cfg.config_hash;
  manifest["seed"] = cfg.seed;
  manifest["tau"] = cfg.tau;
  manifest["format"] = io::format_name(cfg.output_format);
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (auto& out : outputs) entries.push_back(std::move(out.entry));
  manifest["outputs"] = std::move(entries);
  manifest["skipped"] = std::move(skipped);
  atomic_write_file(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");
  result.manifest = std::move(manifest);

  log << "[done] " << result.completed << " recombinations, " << result.skipped
      << " skipped (" << total.ms() << " ms total)\n";
  return result;
}

}  // namespace recomb::pipeline
