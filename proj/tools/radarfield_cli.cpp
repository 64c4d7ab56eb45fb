// Command-line entry point: simulate, train, mesh, eval and pipeline.

#include "radarfield/checkpoint.hpp"
#include "radarfield/config.hpp"
#include "radarfield/evaluation.hpp"
#include "radarfield/io.hpp"
#include "radarfield/pipeline.hpp"
#include "radarfield/synthetic.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace radarfield;

namespace {

// Bad invocation or unusable input: exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw UsageError(what + " not found: " + p.string());
}

struct ConfigArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::string ablation;
  int holdout = -1;

  void add(CLI::App* app) {
    app->add_option("--config", config_file, "key = value config file");
    app->add_option("--set", sets, "Override one config key (key=value), repeatable");
    app->add_option("--ablation", ablation, "none | no-sdf | no-normals | no-geofeature");
    app->add_option("--holdout", holdout, "Hold out every n-th frame (0 disables)");
  }

  // Precedence: defaults < config file < environment < command line.
  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file.empty()) {
      require_file(config_file, "config file");
      cfg = parse_config(io::read_text(config_file), cfg);
    }
    for (const auto& key : apply_env_overrides(cfg, process_environment()))
      std::cerr << "config: " << key << " set from environment\n";
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (!ablation.empty()) set_config_value(cfg, "ablation", ablation);
    if (holdout >= 0) cfg.preprocess.holdout_every = holdout;
    cfg.validate();
    return cfg;
  }
};

int cmd_simulate(const fs::path& scene_file, const fs::path& out) {
  require_file(scene_file, "scene file");
  const std::string text = io::read_text(scene_file);
  synth::SceneDescription desc;
  try {
    desc = synth::parse_scene(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto data = synth::generate_dataset(desc);
  synth::write_dataset(out, data, text);
  std::size_t points = 0;
  for (const auto& f : data.frames) points += f.size();
  std::cout << "simulated " << data.frames.size() << " frames, " << points << " points, " << data.gt_points.size()
            << " ground-truth points -> " << out.string() << "\n";
  return 0;
}

fs::path train_into(const fs::path& data_dir, const fs::path& out, const RunConfig& cfg) {
  require_file(data_dir / "frames.txt", "dataset");
  const auto ds = io::read_dataset(data_dir, cfg.preprocess.pose_max_skew);
  const auto prepared = prepare_data(ds.frames, cfg.preprocess);
  const int every = std::max(1, cfg.trainer.iterations / 10);
  auto progress = [every](const IterationLog& l) {
    if ((l.iteration + 1) % every == 0)
      std::cerr << "iter " << l.iteration + 1 << "  loss " << l.total << "  sdf " << l.sdf << "  intensity "
                << l.intensity << "\n";
  };
  const auto run = train_run(prepared, cfg, progress);
  const auto saved = save_run(out, run, prepared, cfg);
  std::cout << "trained " << run.report.log.size() << " iterations on " << run.report.samples << " samples in "
            << run.report.wall_seconds << " s; map size " << saved.map_size() << " bytes -> " << out.string() << "\n";
  return out;
}

struct MeshArgs {
  double voxel = -1.0;
  double mask_radius = -1.0;
  std::string color = "none";
  std::string intensity;

  void add(CLI::App* app) {
    app->add_option("--voxel", voxel, "Voxel size in metres (default from config, 0.1)");
    app->add_option("--mask-radius", mask_radius, "Skip voxels farther than this from observed points");
    app->add_option("--color", color, "none | normals")->check(CLI::IsMember({"none", "normals"}));
    app->add_option("--intensity", intensity,
                    "Attach intensities: normal | fixed:x,y,z | sensor:x,y,z (view direction policy)");
  }
};

Vec3 parse_vec(const std::string& s) {
  std::stringstream in(s);
  Vec3 v;
  char comma;
  if (!(in >> v.x() >> comma >> v.y() >> comma >> v.z())) throw UsageError("expected x,y,z, got '" + s + "'");
  return v;
}

ViewPolicy parse_policy(const std::string& s) {
  ViewPolicy p;
  if (s == "normal") return p;
  if (s.rfind("fixed:", 0) == 0) {
    p.kind = ViewPolicy::Kind::Fixed;
    p.direction = parse_vec(s.substr(6));
    return p;
  }
  if (s.rfind("sensor:", 0) == 0) {
    p.kind = ViewPolicy::Kind::TowardSensor;
    p.sensor = parse_vec(s.substr(7));
    return p;
  }
  throw UsageError("unknown intensity policy '" + s + "'");
}

TriangleMesh mesh_from(const fs::path& model_dir, const fs::path& out, const MeshArgs& args, RunConfig cfg) {
  require_file(model_dir / "model.ckpt", "checkpoint");
  const auto bundle = load_model(model_dir);
  std::vector<Vec3> observed;
  if (fs::exists(model_dir / "observed_points.ply")) observed = io::read_points(model_dir / "observed_points.ply");
  if (args.voxel > 0.0) cfg.mesh.voxel_size = args.voxel;
  if (args.mask_radius >= 0.0) cfg.mesh.mask_radius = args.mask_radius;
  MeshingStats stats;
  TriangleMesh mesh = mesh_model(bundle.model, observed, cfg.mesh, &stats);
  if (mesh.empty()) std::cerr << "warning: extracted mesh is empty (no zero crossing in the masked region)\n";
  if (!args.intensity.empty() && !mesh.empty()) {
    attach_intensity(mesh, bundle.model, parse_policy(args.intensity));
    for (double& i : mesh.intensities) i = bundle.intensity_range.denormalize(i);
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  io::write_mesh_ply(out, mesh, args.color == "normals" ? io::MeshColor::Normals : io::MeshColor::None);
  const auto topo = mesh_topology(mesh);
  std::cout << "mesh: " << mesh.vertices.size() << " vertices, " << mesh.triangles.size() << " triangles, "
            << topo.boundary_edges << " boundary edges (" << stats.active_cells << " active cells) -> "
            << out.string() << "\n";
  return mesh;
}

struct EvalArgs {
  fs::path mesh, gt, out, model_dir, data_dir, scene, histogram;
  std::string box;
  bool brute_force = false;
  long samples = -1;

  void add(CLI::App* app, bool standalone) {
    if (standalone) {
      app->add_option("--mesh", mesh, "Mesh PLY to evaluate")->required();
      app->add_option("--gt", gt, "Ground-truth point PLY")->required();
      app->add_option("--out", out, "Metrics JSON output")->required();
      app->add_option("--model", model_dir, "Run directory, for the map size");
      app->add_option("--data", data_dir, "Dataset directory, for held-out intensity errors (needs --model)");
      app->add_option("--scene", scene, "Scene file whose bounds are the evaluation box");
      app->add_option("--box", box, "Evaluation box xmin,ymin,zmin,xmax,ymax,zmax");
      app->add_option("--histogram", histogram, "Angle histogram CSV output");
    }
    app->add_flag("--brute-force", brute_force, "Also compute metrics with the O(N*M) search and cross-check");
    app->add_option("--samples", samples, "Mesh sample count");
  }
};

Aabb parse_box(const std::string& s) {
  std::stringstream in(s);
  double v[6];
  char comma;
  for (int i = 0; i < 6; ++i) {
    if (!(in >> v[i])) throw UsageError("--box expects six comma-separated numbers");
    if (i < 5 && !(in >> comma)) throw UsageError("--box expects six comma-separated numbers");
  }
  Aabb b(Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5]));
  if (!b.valid()) throw UsageError("--box: min exceeds max");
  return b;
}

int run_eval(const EvalArgs& a, RunConfig cfg, const Aabb& box, const TriangleMesh* loaded = nullptr) {
  require_file(a.gt, "ground truth");
  TriangleMesh mesh = loaded ? *loaded : (require_file(a.mesh, "mesh"), io::read_mesh_ply(a.mesh));
  const auto gt = io::read_points(a.gt);
  if (a.samples > 0) cfg.eval.mesh_samples = static_cast<std::size_t>(a.samples);
  if (mesh.empty()) throw std::runtime_error("eval: mesh is empty");
  ReconstructionMetrics m = evaluate_mesh(mesh, gt, box, cfg.eval);
  if (a.brute_force) {
    EvalConfig bf = cfg.eval;
    bf.method = NnMethod::BruteForce;
    const auto ref = evaluate_mesh(mesh, gt, box, bf);
    const bool same = ref.accuracy.error == m.accuracy.error && ref.accuracy.ratio == m.accuracy.ratio &&
                      ref.accuracy.outlier_ratio == m.accuracy.outlier_ratio &&
                      ref.completion.error == m.completion.error && ref.completion.ratio == m.completion.ratio;
    std::cout << "brute-force cross-check: " << (same ? "identical" : "MISMATCH") << "\n";
    if (!same) return 1;
  }
  if (!a.model_dir.empty()) {
    require_file(a.model_dir / "model.ckpt", "checkpoint");
    m.map_size = fs::file_size(a.model_dir / "model.ckpt") + fs::file_size(a.model_dir / "map.grid");
    if (!a.data_dir.empty()) {
      const auto ds = io::read_dataset(a.data_dir, cfg.preprocess.pose_max_skew);
      const auto prepared = prepare_data(ds.frames, cfg.preprocess);
      if (!prepared.held_out.empty())
        m.intensity = held_out_intensity_errors(load_model(a.model_dir), prepared.held_out);
    }
  }
  if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
  io::write_text(a.out, m.to_json());
  fs::path csv = a.out;
  csv.replace_extension(".csv");
  io::write_text(csv, m.to_csv());
  if (!a.histogram.empty()) {
    const auto angles = adjacent_angles(mesh);
    io::write_text(a.histogram, histogram_csv(histogram(angles, 0.0, 3.14159265358979323846, 90)));
  }
  std::cout << m.to_json();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radar implicit mapping: simulate, train, mesh and evaluate"};
  app.require_subcommand(1);
  int threads = 0;
  std::string workdir;
  app.add_option("--threads", threads, "Cap on worker threads");
  app.add_option("--workdir", workdir, "Resolve relative paths against this directory");

  fs::path scene_file, sim_out;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset from a scene file");
  sim->add_option("scene", scene_file, "Scene JSON")->required();
  sim->add_option("out", sim_out, "Output dataset directory")->required();

  fs::path data_dir, train_out;
  ConfigArgs train_cfg;
  auto* tr = app.add_subcommand("train", "Train a model on a dataset");
  tr->add_option("--data", data_dir, "Dataset directory")->required();
  tr->add_option("--out", train_out, "Run output directory")->required();
  train_cfg.add(tr);

  fs::path mesh_model_dir, mesh_out;
  MeshArgs mesh_args;
  auto* me = app.add_subcommand("mesh", "Extract a mesh from a trained model");
  me->add_option("--model", mesh_model_dir, "Run directory with model.ckpt and map.grid")->required();
  me->add_option("--out", mesh_out, "Output mesh PLY")->required();
  mesh_args.add(me);

  EvalArgs eval_args;
  auto* ev = app.add_subcommand("eval", "Evaluate a mesh against ground-truth points");
  eval_args.add(ev, true);

  fs::path pipe_scene, pipe_out;
  ConfigArgs pipe_cfg;
  MeshArgs pipe_mesh;
  EvalArgs pipe_eval;
  auto* pi = app.add_subcommand("pipeline", "simulate -> train -> mesh -> eval");
  pi->add_option("--scene", pipe_scene, "Scene JSON")->required();
  pi->add_option("--out", pipe_out, "Output directory")->required();
  pipe_cfg.add(pi);
  pipe_mesh.add(pi);
  pipe_eval.add(pi, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (!workdir.empty()) {
      if (!fs::is_directory(workdir)) throw UsageError("workdir does not exist: " + workdir);
      fs::current_path(workdir);
    }
    if (threads > 0) omp_set_num_threads(threads);

    if (*sim) return cmd_simulate(scene_file, sim_out);
    if (*tr) {
      const RunConfig cfg = train_cfg.resolve();
      train_into(data_dir, train_out, cfg);
      return 0;
    }
    if (*me) {
      RunConfig cfg;
      if (fs::exists(mesh_model_dir / "config.txt"))
        cfg = parse_config(io::read_text(mesh_model_dir / "config.txt"));
      mesh_from(mesh_model_dir, mesh_out, mesh_args, cfg);
      return 0;
    }
    if (*ev) {
      Aabb box;
      if (!eval_args.box.empty()) box = parse_box(eval_args.box);
      else if (!eval_args.scene.empty()) box = synth::load_scene(eval_args.scene).scene.bounds;
      else throw UsageError("eval needs --box or --scene");
      RunConfig cfg;
      if (!eval_args.model_dir.empty() && fs::exists(eval_args.model_dir / "config.txt"))
        cfg = parse_config(io::read_text(eval_args.model_dir / "config.txt"));
      return run_eval(eval_args, cfg, box);
    }
    if (*pi) {
      const RunConfig cfg = pipe_cfg.resolve();
      cmd_simulate(pipe_scene, pipe_out / "data");
      train_into(pipe_out / "data", pipe_out / "model", cfg);
      const TriangleMesh mesh = mesh_from(pipe_out / "model", pipe_out / "mesh.ply", pipe_mesh, cfg);
      if (mesh.empty()) throw std::runtime_error("pipeline: mesh is empty, nothing to evaluate");
      EvalArgs a = pipe_eval;
      a.mesh = pipe_out / "mesh.ply";
      a.gt = pipe_out / "data" / "gt_points.ply";
      a.out = pipe_out / "metrics.json";
      a.model_dir = pipe_out / "model";
      a.data_dir = pipe_out / "data";
      a.histogram = pipe_out / "angle_histogram.csv";
      return run_eval(a, cfg, synth::load_scene(pipe_scene).scene.bounds);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
