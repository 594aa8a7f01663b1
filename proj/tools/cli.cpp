#include "cli.hpp"

#include "hope/ablation.hpp"
#include "hope/adjacency.hpp"
#include "hope/checkpoint.hpp"
#include "hope/dataset.hpp"
#include "hope/errors.hpp"
#include "hope/gradcheck_suite.hpp"
#include "hope/keypoints.hpp"
#include "hope/metrics.hpp"
#include "hope/pipeline.hpp"
#include "hope/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace hope::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool verbose() {
  const char* v = std::getenv("HOPE_VERBOSE");
  return v != nullptr && *v != '\0' && std::string(v) != "0";
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::ofstream open_out(const fs::path& path) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  if (a.n == 0) throw UsageError("gen: --n must be positive");
  const Dataset data = generate_dataset(a.n, a.seed);
  ensure_parent(a.out);
  save_dataset(fs::path(a.out), data);
  out << "wrote " << data.size() << " samples to " << a.out << '\n';
  return kOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string preset = "desk";
  std::string config;
  std::string unet_config;
  std::string out_ckpt;
  std::string log;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> stage1_epochs, stage2_epochs, stage3_epochs, batch_size;
  std::optional<double> alpha, beta, noise_sigma;
  std::optional<std::string> optimizer;
};

std::string checkpoint_config(const UNetConfig& unet, const TrainConfig& train) {
  json j;
  j["unet"] = json::parse(unet.to_json());
  j["train"] = json::parse(train.to_json());
  return j.dump();
}

UNetConfig unet_from_checkpoint(const Checkpoint& ckpt) {
  json j;
  try {
    j = json::parse(ckpt.config_json);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint config: ") + e.what());
  }
  if (!j.is_object() || !j.contains("unet")) return UNetConfig{};
  return UNetConfig::from_json(j["unet"].dump());
}

int cmd_train(const TrainArgs& a, bool preset_given, std::ostream& out, std::ostream& err) {
  TrainConfig config;
  if (!a.config.empty()) {
    if (preset_given) throw UsageError("train: give the preset inside --config, not both");
    config = TrainConfig::from_json(read_text(a.config));
  } else {
    config = TrainConfig::from_preset(a.preset);
  }
  if (a.seed) config.seed = *a.seed;
  if (a.stage1_epochs) config.stage1.epochs = *a.stage1_epochs;
  if (a.stage2_epochs) config.stage2.epochs = *a.stage2_epochs;
  if (a.stage3_epochs) config.stage3.epochs = *a.stage3_epochs;
  if (a.batch_size) config.batch_size = *a.batch_size;
  if (a.alpha) config.weights.alpha = *a.alpha;
  if (a.beta) config.weights.beta = *a.beta;
  if (a.noise_sigma) config.noise_sigma = *a.noise_sigma;
  if (a.optimizer) config.optimizer = parse_optimizer_kind(*a.optimizer);
  config.validate();

  UNetConfig unet;
  if (!a.unet_config.empty()) unet = UNetConfig::from_json(read_text(a.unet_config));
  unet.validate();

  const Dataset data = load_dataset(fs::path(a.data));
  HopePipeline pipeline(unet, config.seed);
  ensure_parent(a.out_ckpt);

  std::optional<std::ofstream> log;
  if (!a.log.empty()) {
    log.emplace(open_out(a.log));
    write_log_header(*log);
  }
  const bool chatty = verbose();
  const auto on_epoch = [&](const LogRow& row) {
    if (log) {
      write_log_row(*log, row);
      log->flush();
    }
    if (chatty) {
      err << "stage " << row.stage << " step " << row.step << " lr " << row.lr << " loss " << row.total << '\n';
    }
  };

  const std::string ckpt_config = checkpoint_config(unet, config);
  try {
    train(pipeline, data, config, on_epoch);
  } catch (const DivergenceError& e) {
    save_checkpoint(a.out_ckpt, pipeline.parameters(), ckpt_config);
    err << "error: " << e.what() << "; saved last good parameters to " << a.out_ckpt << '\n';
    return kNumeric;
  }
  save_checkpoint(a.out_ckpt, pipeline.parameters(), ckpt_config);
  out << "trained on " << data.size() << " samples (" << config.preset << " preset); checkpoint " << a.out_ckpt
      << '\n';
  return kOk;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string data;
  std::string ckpt;
  std::string report;
  double max_threshold_2d = 50.0;
  double max_threshold_3d = 50.0;
  std::size_t thresholds = 51;
};

void write_named(const fs::path& path, const std::string& header,
                 const std::vector<std::pair<std::string, double>>& rows) {
  auto f = open_out(path);
  f << header << '\n';
  for (const auto& [name, value] : rows) f << name << ',' << num(value) << '\n';
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.thresholds < 2) throw UsageError("eval: need at least two thresholds");
  if (!(a.max_threshold_2d > 0.0) || !(a.max_threshold_3d > 0.0)) {
    throw UsageError("eval: maximum thresholds must be positive");
  }
  const Dataset data = load_dataset(fs::path(a.data));
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  HopePipeline pipeline(unet_from_checkpoint(ckpt), 0);
  restore_parameters(ckpt, pipeline.parameters());

  const auto predictions = pipeline.predict_all(data);
  std::vector<Tensor> pred2d, pred3d, gt2d, gt3d;
  for (std::size_t i = 0; i < data.size(); ++i) {
    pred2d.push_back(predictions[i].refined2d);
    pred3d.push_back(predictions[i].pred3d);
    gt2d.push_back(data[i].gt2d);
    gt3d.push_back(data[i].gt3d);
  }

  const fs::path dir(a.report);
  fs::create_directories(dir);
  auto summary = open_out(dir / "summary.csv");
  summary << "space,subset,mean_error,auc,max_threshold\n";
  struct Space {
    const char* name;
    const std::vector<Tensor>& pred;
    const std::vector<Tensor>& gt;
    double max_threshold;
  };
  for (const Space& s : {Space{"2d", pred2d, gt2d, a.max_threshold_2d}, Space{"3d", pred3d, gt3d, a.max_threshold_3d}}) {
    const auto thresholds = linear_thresholds(0.0, s.max_threshold, a.thresholds);
    for (auto subset : {KeypointSubset::all, KeypointSubset::hand, KeypointSubset::object}) {
      const PcpCurve curve = pcp_curve(s.pred, s.gt, thresholds, subset);
      auto f = open_out(dir / ("pcp_" + std::string(s.name) + "_" + to_string(subset) + ".csv"));
      write_pcp_csv(f, curve);
      const double err = mean_error(s.pred, s.gt, subset);
      const double area = auc(curve);
      summary << s.name << ',' << to_string(subset) << ',' << num(err) << ',' << num(area) << ','
              << num(s.max_threshold) << '\n';
      out << s.name << ' ' << to_string(subset) << ": mean error " << err << ", AUC " << area << '\n';
    }
  }

  const PerJointErrors joints = per_joint_errors(pred3d, gt3d);
  {
    auto f = open_out(dir / "per_joint.csv");
    f << "node,name,joint_type,mean_error_mm\n";
    for (std::size_t k = 0; k < keypoints::kNodes; ++k) {
      f << k << ',' << keypoints::node_names()[k] << ',' << keypoints::to_string(keypoints::joint_type(k)) << ','
        << num(joints.per_node[k]) << '\n';
    }
  }
  write_named(dir / "per_joint_type.csv", "joint_type,mean_error_mm", joints.by_joint_type);
  write_named(dir / "per_finger.csv", "finger,mean_error_mm", joints.by_finger);
  out << "report written to " << dir.string() << '\n';
  return kOk;
}

// ---- ablate ----------------------------------------------------------------

struct AblateArgs {
  std::string suite;
  std::string data;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string out;
  std::string runs_out;
  AblationConfig config;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out) {
  const AblationSuite suite = parse_ablation_suite(a.suite);
  const Dataset data = load_dataset(fs::path(a.data));
  const AblationResult result = run_ablation(suite, data, a.seeds, a.config);
  {
    auto f = open_out(a.out);
    write_ablation_table(f, result);
  }
  if (!a.runs_out.empty()) {
    auto f = open_out(a.runs_out);
    write_ablation_runs(f, result);
  }
  write_ablation_table(out, result);
  return kOk;
}

// ---- gradcheck -------------------------------------------------------------

struct GradCheckArgs {
  std::string target = "layers";
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
};

int cmd_gradcheck(const GradCheckArgs& a, std::ostream& out) {
  const auto cases = run_gradcheck_suite(parse_gradcheck_target(a.target), a.seed);
  std::size_t coords = 0;
  const GradCheckCase* worst = nullptr;
  for (const GradCheckCase& c : cases) {
    coords += c.result.coords_checked;
    if (worst == nullptr || c.result.max_rel_error > worst->result.max_rel_error) worst = &c;
    const bool ok = c.result.max_rel_error < a.tolerance;
    out << (ok ? "ok   " : "FAIL ") << c.name << " max_rel_error=" << c.result.max_rel_error
        << " coords=" << c.result.coords_checked << " worst=" << c.result.worst_param << '['
        << c.result.worst_index << "] analytic=" << c.result.worst_analytic << " numeric=" << c.result.worst_numeric
        << '\n';
  }
  if (worst == nullptr) throw UsageError("gradcheck: no cases");
  const bool pass = worst->result.max_rel_error < a.tolerance;
  out << (pass ? "PASS " : "FAIL ") << a.target << ": " << cases.size() << " cases, " << coords
      << " coordinates, max relative error " << worst->result.max_rel_error << " (" << worst->name << ": "
      << worst->result.worst_param << "), tolerance " << a.tolerance << '\n';
  return pass ? kOk : kNumeric;
}

// ---- export-adjacency ------------------------------------------------------

struct ExportArgs {
  std::string ckpt;
  std::string out_dir;
};

int cmd_export_adjacency(const ExportArgs& a, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  const std::string suffix = ".adjacency";
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  std::size_t index = 0;
  for (const auto& [name, tensor] : ckpt.tensors) {
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
      continue;
    }
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "A%02zu_", index++);
    write_adjacency_csv(dir / (prefix + name.substr(0, name.size() - suffix.size()) + ".csv"), tensor);
  }
  if (index == 0) throw DataError("export-adjacency: checkpoint has no adjacency tensors");
  out << "wrote " << index << " adjacency matrices to " << dir.string() << '\n';
  return kOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive Graph U-Net hand-object pose lifting on synthetic data"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic JSON-lines dataset");
  g->add_option("--n", gen.n, "Number of samples")->required();
  g->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  g->add_option("--out", gen.out, "Output dataset path")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Run the three-stage training schedule");
  t->add_option("--data", tr.data, "Training dataset")->required();
  auto* preset = t->add_option("--preset", tr.preset, "Schedule preset")
                     ->check(CLI::IsMember({"desk", "paper"}))
                     ->capture_default_str();
  t->add_option("--config", tr.config, "TrainConfig JSON file (replaces --preset)");
  t->add_option("--unet-config", tr.unet_config, "U-Net architecture JSON file (default architecture if omitted)");
  t->add_option("--out-ckpt", tr.out_ckpt, "Checkpoint manifest to write")->required();
  t->add_option("--log", tr.log, "Per-epoch CSV log");
  t->add_option("--seed", tr.seed, "Initialisation and shuffling seed (default: from config, 0)");
  t->add_option("--stage1-epochs", tr.stage1_epochs, "Override stage 1 epochs");
  t->add_option("--stage2-epochs", tr.stage2_epochs, "Override stage 2 epochs");
  t->add_option("--stage3-epochs", tr.stage3_epochs, "Override stage 3 epochs");
  t->add_option("--batch-size", tr.batch_size, "Override batch size (default 32)");
  t->add_option("--alpha", tr.alpha, "Initial 2D loss weight (default 0.1)");
  t->add_option("--beta", tr.beta, "Refined 2D loss weight (default 0.1)");
  t->add_option("--noise-sigma", tr.noise_sigma, "Stage 2 input noise in pixels (default 10)");
  t->add_option("--optimizer", tr.optimizer, "sgd or adam (default adam)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint: PCP curves, AUC, per-joint errors");
  e->add_option("--data", ev.data, "Evaluation dataset")->required();
  e->add_option("--ckpt", ev.ckpt, "Checkpoint manifest")->required();
  e->add_option("--report", ev.report, "Output directory for the CSV report")->required();
  e->add_option("--max-threshold-2d", ev.max_threshold_2d, "Largest 2D PCP threshold (px)")->capture_default_str();
  e->add_option("--max-threshold-3d", ev.max_threshold_3d, "Largest 3D PCP threshold (mm)")->capture_default_str();
  e->add_option("--thresholds", ev.thresholds, "Evenly spaced thresholds from 0 to the maximum")
      ->capture_default_str();

  AblateArgs ab;
  auto* b = app.add_subcommand("ablate", "Run an ablation suite over several seeds");
  b->add_option("--suite", ab.suite, "architecture, pooling or adjacency_init")
      ->required()
      ->check(CLI::IsMember({"architecture", "pooling", "adjacency_init"}));
  b->add_option("--data", ab.data, "Dataset; its last holdout fraction is held out")->required();
  b->add_option("--seeds", ab.seeds, "Comma-separated seeds")->delimiter(',')->capture_default_str();
  b->add_option("--out", ab.out, "Summary table CSV")->required();
  b->add_option("--runs-out", ab.runs_out, "Per-run CSV");
  b->add_option("--jobs", ab.config.jobs, "Worker threads")->capture_default_str();
  b->add_option("--epochs", ab.config.epochs, "Epochs per run")->capture_default_str();
  b->add_option("--batch-size", ab.config.batch_size, "Batch size")->capture_default_str();
  b->add_option("--hidden", ab.config.hidden, "Width of the fully connected and GCN baselines")
      ->capture_default_str();
  b->add_option("--unet-features", ab.config.unet_features, "Comma-separated U-Net widths per level")
      ->delimiter(',')
      ->capture_default_str();
  b->add_option("--noise-sigma", ab.config.noise_sigma, "Training input noise (px)")->capture_default_str();
  b->add_option("--holdout-fraction", ab.config.holdout_fraction, "Tail fraction held out")->capture_default_str();

  GradCheckArgs gc;
  auto* c = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  c->add_option("--target", gc.target, "layers, unet or pipeline")
      ->check(CLI::IsMember({"layers", "unet", "pipeline"}))
      ->capture_default_str();
  c->add_option("--seed", gc.seed, "Seed for inputs and sampled coordinates")->capture_default_str();
  c->add_option("--tolerance", gc.tolerance, "Maximum relative error")->capture_default_str();

  ExportArgs ex;
  auto* x = app.add_subcommand("export-adjacency", "Write every learned adjacency matrix as CSV");
  x->add_option("--ckpt", ex.ckpt, "Checkpoint manifest")->required();
  x->add_option("--out-dir", ex.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return cmd_gen(gen, out);
    if (*t) return cmd_train(tr, preset->count() > 0, out, err);
    if (*e) return cmd_eval(ev, out);
    if (*b) return cmd_ablate(ab, out);
    if (*c) return cmd_gradcheck(gc, out);
    if (*x) return cmd_export_adjacency(ex, out);
  } catch (const UsageError& ex) {
    err << "usage error: " << ex.what() << '\n';
    return kUsage;
  } catch (const DataError& ex) {
    err << "data error: " << ex.what() << '\n';
    return kData;
  } catch (const NumericError& ex) {
    err << "numeric error: " << ex.what() << '\n';
    return kNumeric;
  } catch (const fs::filesystem_error& ex) {
    err << "data error: " << ex.what() << '\n';
    return kData;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

} // namespace hope::cli
