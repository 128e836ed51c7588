// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// recomb - LiDAR scene augmentation toolkit.
//
// Subcommands: register, occlude, recombine, insertion-map, metrics,
// noise-ref, synth, batch. Exit codes: 0 success, 2 configuration error,
// 3 I/O error, 4 validation-only failures (placements skipped).

#include <recomb/fusion.hpp>
#include <recomb/insertion_map.hpp>
#include <recomb/io.hpp>
#include <recomb/metrics.hpp>
#include <recomb/occlusion.hpp>
#include <recomb/pipeline.hpp>
#include <recomb/registration.hpp>
#include <recomb/synthgen.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace recomb;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitValidation = 4;

io::CloudFileFormat format_from_flag(const std::string& name) {
  return pipeline::parse_format_name(name);
}

nlohmann::ordered_json labels_to_json(const std::vector<fusion::OrientedBox>& labels) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& box : labels) {
    nlohmann::ordered_json lj;
    lj["center"] = {box.center.x(), box.center.y(), box.center.z()};
    lj["half_extents"] = {box.half_extents.x(), box.half_extents.y(), box.half_extents.z()};
    lj["yaw"] = box.yaw;
    lj["object_type"] = box.object_type;
    lj["object_id"] = box.object_id;
    arr.push_back(std::move(lj));
  }
  return arr;
}

struct RegisterArgs {
  std::string mesh_path, cloud_path, out_dir = ".";
  int divisor = 8, samples = 30000, max_iterations = 50;
  std::vector<double> thresholds = {0.10, 0.05};
  std::uint64_t seed = 0;
};

int cmd_register(const RegisterArgs& args) {
  registration::RegistrationConfig cfg;
  cfg.divisor = args.divisor;
  cfg.sample_count = args.samples;
  cfg.stage_thresholds = args.thresholds;
  cfg.max_iterations_per_stage = args.max_iterations;
  cfg.seed = args.seed;
  cfg.validate();

  const TriangleMesh mesh = io::read_mesh(args.mesh_path);
  const PointCloud cloud = io::read_point_cloud(args.cloud_path);
  const auto result = registration::register_mesh_to_cloud(mesh, cloud, cfg);

  std::filesystem::create_directories(args.out_dir);
  const std::string stem = std::filesystem::path(args.cloud_path).stem().string();
  pipeline::atomic_write_mesh(result.aligned_mesh,
                              std::filesystem::path(args.out_dir) / (stem + ".aligned.ply"));

  nlohmann::ordered_json j;
  j["chamfer_m2"] = result.chamfer;
  j["best_rotation_deg"] = result.best_rotation_deg;
  j["symmetry_risk"] = result.symmetry_risk;
  j["rotation_chamfers"] = result.rotation_chamfers;
  j["scale"] = result.transform.scale;
  pipeline::atomic_write_file(
      std::filesystem::path(args.out_dir) / (stem + ".registration.json"), j.dump(2) + "\n");

  std::cout << "aligned mesh written, chamfer " << result.chamfer << " m^2 at "
            << result.best_rotation_deg << " deg"
            << (result.symmetry_risk ? " (symmetry risk)" : "") << "\n";
  return kExitOk;
}

struct OccludeArgs {
  std::string scene_path, mesh_path, out_dir = ".";
  double epsilon = 1e-4;
  bool literal = false;
  std::string format = "ply_binary_le";
};

int cmd_occlude(const OccludeArgs& args) {
  const PointCloud scene = io::read_point_cloud(args.scene_path);
  const TriangleMesh mesh = io::read_mesh(args.mesh_path);
  occlusion::OcclusionOptions opt;
  opt.epsilon = args.epsilon;
  opt.literal_predicate = args.literal;
  const auto result = occlusion::compute_occlusion(scene, mesh, opt);
  const PointCloud filtered = occlusion::remove_points(scene, result.occluded_indices);

  std::filesystem::create_directories(args.out_dir);
  const auto fmt = format_from_flag(args.format);
  const std::string stem = std::filesystem::path(args.scene_path).stem().string();
  const auto dir = std::filesystem::path(args.out_dir);
  pipeline::atomic_write_cloud(filtered, dir / (stem + ".filtered.ply"), fmt);
  pipeline::atomic_write_cloud(result.occluded_points, dir / (stem + ".occluded.ply"), fmt);
  std::cout << result.occluded_indices.size() << " of " << scene.size()
            << " points occluded\n";
  return kExitOk;
}

struct RecombineArgs {
  std::string scene_path;
  double sensor_height = 1.8;
  std::vector<std::string> object_clouds, object_metas, object_meshes;
  std::vector<double> azimuths_deg;
  std::string out_dir = ".";
  double epsilon = 1e-4;
  double azimuth_grid_deg = 1.0;
  bool skip_validation = false;
  std::string format = "ply_binary_le";
  std::uint64_t seed = 0;
  int divisor = 8, samples = 30000;
};

int cmd_recombine(const RecombineArgs& args) {
  if (args.object_clouds.size() != args.object_metas.size() ||
      args.object_clouds.size() != args.object_meshes.size())
    throw toml::ConfigError("--object/--meta/--mesh must be given the same number of times");
  if (!args.azimuths_deg.empty() && args.azimuths_deg.size() != args.object_clouds.size())
    throw toml::ConfigError("--azimuth count must match the object count");

  const SceneRecord scene = io::read_scene_record(args.scene_path, args.sensor_height);

  registration::RegistrationConfig reg_cfg;
  reg_cfg.divisor = args.divisor;
  reg_cfg.sample_count = args.samples;
  reg_cfg.seed = args.seed;

  std::optional<insertion_map::InsertionMap> map;
  if (!args.skip_validation) map = insertion_map::build_insertion_map(scene);

  std::vector<fusion::PlacedObject> placed;
  int skipped = 0;
  for (std::size_t i = 0; i < args.object_clouds.size(); ++i) {
    ObjectRecord record = io::read_object_record(args.object_clouds[i], args.object_metas[i]);
    const TriangleMesh mesh = io::read_mesh(args.object_meshes[i]);
    const auto reg = registration::register_mesh_to_cloud(mesh, record.cloud, reg_cfg);
    const double azimuth =
        args.azimuths_deg.empty()
            ? std::atan2(record.relative_translation.y(), record.relative_translation.x())
            : deg_to_rad(args.azimuths_deg[i]);
    const double grid = args.azimuths_deg.empty() ? 1e-12 : deg_to_rad(args.azimuth_grid_deg);

    if (map) {
      const auto verdict = insertion_map::validate_placement(record, reg.aligned_mesh, *map,
                                                             scene, {azimuth, std::nullopt},
                                                             {}, grid);
      if (!verdict.ok()) {
        std::cerr << "placement of " << args.object_clouds[i] << " skipped:";
        for (std::size_t v = 0; v < verdict.violations.size(); ++v)
          std::cerr << " " << insertion_map::violation_name(verdict.violations[v]);
        std::cerr << "\n";
        ++skipped;
        continue;
      }
    }
    auto [placed_record, placed_mesh] =
        fusion::place_at_azimuth(record, reg.aligned_mesh, azimuth, grid);
    placed.push_back({std::move(placed_record), std::move(placed_mesh)});
  }

  occlusion::OcclusionOptions opt;
  opt.epsilon = args.epsilon;
  const auto result = fusion::insert_sequence(scene, placed, opt);

  std::filesystem::create_directories(args.out_dir);
  const auto dir = std::filesystem::path(args.out_dir);
  const std::string stem = std::filesystem::path(args.scene_path).stem().string();
  pipeline::atomic_write_cloud(result.scene.cloud, dir / (stem + ".recombined.ply"),
                               format_from_flag(args.format));
  pipeline::atomic_write_file(dir / (stem + ".labels.json"),
                              labels_to_json(result.scene.labels).dump(2) + "\n");

  nlohmann::ordered_json manifest;
  manifest["tool"] = "recomb";
  manifest["version"] = pipeline::kToolVersion;
  manifest["scene"] = stem;
  manifest["inserted_objects"] = placed.size();
  manifest["total_occluded"] = result.total_occluded;
  manifest["recombined_points"] = result.scene.cloud.size();
  manifest["skipped"] = skipped;
  pipeline::atomic_write_file(dir / (stem + ".manifest.json"), manifest.dump(2) + "\n");

  std::cout << "recombined " << placed.size() << " objects into " << stem << ", removed "
            << result.total_occluded << " occluded points";
  if (skipped > 0) std::cout << ", skipped " << skipped;
  std::cout << "\n";
  return skipped > 0 ? kExitValidation : kExitOk;
}

struct MapArgs {
  std::string scene_path, out_path = "insertion_map.csv";
  double sensor_height = 1.8;
  double cell_size = 0.25, sv_threshold = 0.10, height_tolerance = 0.05;
  std::int64_t min_count = 20;
};

int cmd_insertion_map(const MapArgs& args) {
  const SceneRecord scene = io::read_scene_record(args.scene_path, args.sensor_height);
  insertion_map::InsertionMapConfig cfg;
  cfg.cell_size = args.cell_size;
  cfg.sv_threshold = args.sv_threshold;
  cfg.height_tolerance = args.height_tolerance;
  cfg.min_count = static_cast<std::size_t>(args.min_count);
  const auto map = insertion_map::build_insertion_map(scene, cfg);
  pipeline::atomic_write_file(args.out_path, insertion_map::to_csv(map));
  std::size_t valid = 0;
  for (const auto& c : map.cells) valid += c.valid ? 1 : 0;
  std::cout << map.cells.size() << " cells, " << valid << " valid\n";
  return kExitOk;
}

struct MetricsArgs {
  std::string reference_path, candidate_path, out_path;
  std::vector<double> roi;  // x0 y0 z0 x1 y1 z1
  double tau = 0.05;
  std::string format = "csv";
  bool noise_ref = false;
};

int cmd_metrics(const MetricsArgs& args) {
  PointCloud reference = io::read_point_cloud(args.reference_path);
  PointCloud candidate = io::read_point_cloud(args.candidate_path);
  if (!args.roi.empty()) {
    if (args.roi.size() != 6)
      throw toml::ConfigError("--roi needs 6 values: x0 y0 z0 x1 y1 z1");
    Aabb roi;
    roi.min = Vec3(args.roi[0], args.roi[1], args.roi[2]);
    roi.max = Vec3(args.roi[3], args.roi[4], args.roi[5]);
    roi.validate();
    std::tie(reference, candidate) = metrics::prune_to_roi(reference, candidate, roi);
  }
  const auto report = metrics::compute_report(reference, candidate, args.tau);

  std::string content;
  if (args.format == "json") {
    content = metrics::to_json(report) + "\n";
  } else if (args.format == "csv") {
    content = metrics::csv_header() + "\n" + metrics::to_csv_row(report) + "\n";
  } else {
    throw toml::ConfigError("unknown report format '" + args.format + "'");
  }
  if (args.out_path.empty()) {
    std::cout << content;
  } else {
    pipeline::atomic_write_file(args.out_path, content);
    std::cout << "chamfer " << report.chamfer << " m^2, f1 " << report.f1_pct() << " %\n";
  }
  return kExitOk;
}

struct SynthArgs {
  std::string world_path, out_path = "scan.ply", mesh_out;
  int channels = 128, resolution = 1024;
  double vfov_min = -22.5, vfov_max = 22.5, max_range = 120.0, noise = 0.0;
  std::uint64_t seed = 0;
  std::string format = "ply_binary_le";
};

int cmd_synth(const SynthArgs& args) {
  const auto world = synth::parse_world_file(args.world_path);
  synth::VirtualScanner scanner;
  scanner.channels = args.channels;
  scanner.horizontal_resolution = args.resolution;
  scanner.vertical_fov_min_deg = args.vfov_min;
  scanner.vertical_fov_max_deg = args.vfov_max;
  scanner.max_range = args.max_range;
  scanner.noise_sigma = args.noise;
  const PointCloud scan = synth::render_scan(world, scanner, args.seed);
  pipeline::atomic_write_cloud(scan, args.out_path, format_from_flag(args.format));
  if (!args.mesh_out.empty())
    pipeline::atomic_write_mesh(world.combined_mesh(), args.mesh_out);
  std::cout << scan.size() << " returns\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recomb - LiDAR scene augmentation with mesh-based occlusion"};
  app.require_subcommand(1);

  RegisterArgs reg;
  auto* reg_cmd = app.add_subcommand("register", "align a mesh to an object point cloud");
  reg_cmd->add_option("--mesh", reg.mesh_path, "object-type mesh (PLY/OBJ)")->required();
  reg_cmd->add_option("--cloud", reg.cloud_path, "object point cloud")->required();
  reg_cmd->add_option("--out-dir", reg.out_dir, "output directory");
  reg_cmd->add_option("--divisor", reg.divisor, "Z rotation samples");
  reg_cmd->add_option("--samples", reg.samples, "mesh surface samples");
  reg_cmd->add_option("--thresholds", reg.thresholds, "ICP stage thresholds (m)");
  reg_cmd->add_option("--max-iterations", reg.max_iterations, "ICP iterations per stage");
  reg_cmd->add_option("--seed", reg.seed, "sampling seed");

  OccludeArgs occ;
  auto* occ_cmd = app.add_subcommand("occlude", "remove scene points shadowed by a mesh");
  occ_cmd->add_option("--scene", occ.scene_path, "scene point cloud")->required();
  occ_cmd->add_option("--mesh", occ.mesh_path, "registered mesh in the sensor frame")
      ->required();
  occ_cmd->add_option("--out-dir", occ.out_dir, "output directory");
  occ_cmd->add_option("--epsilon", occ.epsilon, "occlusion margin below t=1");
  occ_cmd->add_flag("--literal", occ.literal, "use the literal any-hit predicate");
  occ_cmd->add_option("--format", occ.format, "output cloud format");

  RecombineArgs rec;
  auto* rec_cmd =
      app.add_subcommand("recombine", "insert lab objects into a scene with occlusion");
  rec_cmd->add_option("--scene", rec.scene_path, "scene point cloud")->required();
  rec_cmd->add_option("--sensor-height", rec.sensor_height, "sensor height above ground");
  rec_cmd->add_option("--object", rec.object_clouds, "object cloud (repeatable)")
      ->required();
  rec_cmd->add_option("--meta", rec.object_metas, "object metadata sidecar (repeatable)")
      ->required();
  rec_cmd->add_option("--mesh", rec.object_meshes, "object mesh (repeatable)")->required();
  rec_cmd->add_option("--azimuth", rec.azimuths_deg,
                      "target azimuth per object (deg; default keeps measured azimuth)");
  rec_cmd->add_option("--azimuth-grid", rec.azimuth_grid_deg, "placement grid step (deg)");
  rec_cmd->add_option("--out-dir", rec.out_dir, "output directory");
  rec_cmd->add_option("--epsilon", rec.epsilon, "occlusion margin");
  rec_cmd->add_flag("--skip-validation", rec.skip_validation, "bypass the insertion map");
  rec_cmd->add_option("--format", rec.format, "output cloud format");
  rec_cmd->add_option("--seed", rec.seed, "registration sampling seed");
  rec_cmd->add_option("--divisor", rec.divisor, "registration rotation samples");
  rec_cmd->add_option("--samples", rec.samples, "registration surface samples");

  MapArgs map;
  auto* map_cmd = app.add_subcommand("insertion-map", "compute valid placement cells");
  map_cmd->add_option("--scene", map.scene_path, "scene point cloud")->required();
  map_cmd->add_option("--out", map.out_path, "output CSV path");
  map_cmd->add_option("--sensor-height", map.sensor_height, "sensor height above ground");
  map_cmd->add_option("--cell-size", map.cell_size, "grid cell size (m)");
  map_cmd->add_option("--sv-threshold", map.sv_threshold, "max mean surface variation");
  map_cmd->add_option("--min-count", map.min_count, "min points per valid cell");
  map_cmd->add_option("--height-tolerance", map.height_tolerance, "max cell height spread");

  MetricsArgs met;
  auto* met_cmd = app.add_subcommand("metrics", "compare a candidate cloud to a reference");
  met_cmd->add_option("--reference", met.reference_path, "reference cloud")->required();
  met_cmd->add_option("--candidate", met.candidate_path, "candidate cloud")->required();
  met_cmd->add_option("--roi", met.roi, "prune both to this box: x0 y0 z0 x1 y1 z1");
  met_cmd->add_option("--tau", met.tau, "F1 threshold (m)");
  met_cmd->add_option("--format", met.format, "report format: csv or json");
  met_cmd->add_option("--out", met.out_path, "report path (stdout when omitted)");

  MetricsArgs nref;
  auto* nref_cmd =
      app.add_subcommand("noise-ref", "baseline metrics between two scans of one scene");
  nref_cmd->add_option("--scan-a", nref.reference_path, "first scan")->required();
  nref_cmd->add_option("--scan-b", nref.candidate_path, "second scan")->required();
  nref_cmd->add_option("--tau", nref.tau, "F1 threshold (m)");
  nref_cmd->add_option("--format", nref.format, "report format: csv or json");
  nref_cmd->add_option("--out", nref.out_path, "report path (stdout when omitted)");

  SynthArgs syn;
  auto* syn_cmd = app.add_subcommand("synth", "render a synthetic world scan");
  syn_cmd->add_option("--world", syn.world_path, "world spec file")->required();
  syn_cmd->add_option("--out", syn.out_path, "output scan path");
  syn_cmd->add_option("--mesh-out", syn.mesh_out, "also write the ground-truth mesh");
  syn_cmd->add_option("--channels", syn.channels, "vertical beams");
  syn_cmd->add_option("--resolution", syn.resolution, "azimuth steps per sweep");
  syn_cmd->add_option("--vfov-min", syn.vfov_min, "lowest beam elevation (deg)");
  syn_cmd->add_option("--vfov-max", syn.vfov_max, "highest beam elevation (deg)");
  syn_cmd->add_option("--max-range", syn.max_range, "max range (m)");
  syn_cmd->add_option("--noise", syn.noise, "radial noise sigma (m)");
  syn_cmd->add_option("--seed", syn.seed, "noise seed");
  syn_cmd->add_option("--format", syn.format, "output cloud format");

  std::string batch_config;
  std::optional<std::uint64_t> batch_seed;
  std::optional<int> batch_jobs;
  std::optional<double> batch_tau;
  std::string batch_out;
  auto* batch_cmd = app.add_subcommand("batch", "run a full catalog from a TOML config");
  batch_cmd->add_option("--config", batch_config, "run configuration (TOML)")->required();
  batch_cmd->add_option("--seed", batch_seed, "override the config seed");
  batch_cmd->add_option("--jobs", batch_jobs, "parallel recombinations");
  batch_cmd->add_option("--tau", batch_tau, "override the config tau");
  batch_cmd->add_option("--out", batch_out, "override the config output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (reg_cmd->parsed()) return cmd_register(reg);
    if (occ_cmd->parsed()) return cmd_occlude(occ);
    if (rec_cmd->parsed()) return cmd_recombine(rec);
    if (map_cmd->parsed()) return cmd_insertion_map(map);
    if (met_cmd->parsed()) return cmd_metrics(met);
    if (nref_cmd->parsed()) return cmd_metrics(nref);
    if (syn_cmd->parsed()) return cmd_synth(syn);
    if (batch_cmd->parsed()) {
      auto cfg = recomb::pipeline::load_run_config(batch_config);
      if (batch_seed) {
        cfg.seed = *batch_seed;
        cfg.registration.seed = *batch_seed;
      }
      if (batch_jobs) cfg.jobs = *batch_jobs;
      if (batch_tau) cfg.tau = *batch_tau;
      if (!batch_out.empty()) cfg.output_dir = batch_out;
      const auto result = recomb::pipeline::run_batch(cfg, std::cerr);
      std::cout << result.completed << " recombinations written to "
                << cfg.output_dir.string() << "\n";
      return result.skipped > 0 ? kExitValidation : kExitOk;
    }
  } catch (const recomb::toml::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const recomb::io::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const recomb::io::ParseError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const recomb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitConfig;
}
