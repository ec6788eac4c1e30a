// Command-line front end: pseudo-box generation, evaluation, gradient
// self-test and threshold-table construction.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "lift3d/category_gate.h"
#include "lift3d/error.h"
#include "lift3d/loss_selftest.h"
#include "lift3d/pipeline.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw lift3d::IoError("cannot write " + path);
  out << text << "\n";
  if (!out) throw lift3d::IoError("failed writing " + path);
}

lift3d::PipelineConfig config_or_default(const std::string& path) {
  return path.empty() ? lift3d::PipelineConfig{} : lift3d::load_config(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo 3D box generation and evaluation from lifted 2D data"};
  app.require_subcommand(1);

  std::string manifest_path, config_path, out_path, stats_path;
  int workers = 0;
  auto* generate = app.add_subcommand("generate", "Lift instances to pseudo 3D boxes");
  generate->add_option("--manifest", manifest_path, "Dataset manifest (JSON)")->required();
  generate->add_option("--config", config_path, "Pipeline config (JSON)");
  generate->add_option("--out", out_path, "Output boxes (JSON Lines)")->required();
  generate->add_option("--stats", stats_path, "Per-image stats (JSON)")->required();
  generate->add_option("--workers", workers, "Override parallelism.workers");

  std::string pred_path, gt_path, report_path;
  auto* eval = app.add_subcommand("eval", "Evaluate boxes against ground truth");
  eval->add_option("--pred", pred_path, "Predicted or pseudo boxes (JSON Lines)")->required();
  eval->add_option("--gt", gt_path, "Ground-truth boxes (JSON Lines)")->required();
  eval->add_option("--config", config_path, "Pipeline config (JSON)");
  eval->add_option("--report", report_path, "Report output (JSON)")->required();

  auto* losses = app.add_subcommand("losses", "Loss function utilities");
  losses->require_subcommand(1);
  int trials = 100;
  uint64_t seed = 7;
  std::string selftest_out;
  auto* selftest = losses->add_subcommand("selftest", "Finite-difference gradient checks");
  selftest->add_option("--trials", trials, "Random inputs per suite");
  selftest->add_option("--seed", seed, "RNG seed");
  selftest->add_option("--out", selftest_out, "Report path (default stdout)");

  auto* thresholds = app.add_subcommand("thresholds", "Per-category point thresholds");
  thresholds->require_subcommand(1);
  std::string ref_counts_path, embeddings_path, classes_path, thresholds_out;
  auto* build = thresholds->add_subcommand("build", "Build the threshold table");
  build->add_option("--ref-counts", ref_counts_path, "Class -> mean point count (JSON)")->required();
  build->add_option("--embeddings", embeddings_path, "Class embeddings (JSON)")->required();
  build->add_option("--classes", classes_path, "Target classes [{id, name}] (JSON)")->required();
  build->add_option("--out", thresholds_out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*generate) {
      auto config = config_or_default(config_path);
      if (workers > 0) config.workers = workers;
      const auto manifest = lift3d::ingest_manifest(manifest_path);
      const auto summary = lift3d::run_generate(manifest, config, out_path, stats_path);
      std::cerr << "images " << summary.images << "  failed " << summary.failed_images
                << "  instances " << summary.instances << "  boxes " << summary.boxes
                << "\n";
      for (const auto& [reason, count] : summary.skipped) {
        std::cerr << "  skipped (" << reason << "): " << count << "\n";
      }
    } else if (*eval) {
      const auto report =
          lift3d::run_eval(pred_path, gt_path, config_or_default(config_path));
      write_text(report_path, report.to_json());
      std::cout << report.to_table();
    } else if (*selftest) {
      const auto report = lift3d::run_gradient_selftest(trials, seed);
      write_text(selftest_out, report.to_json());
      return report.passed() ? kExitOk : kExitValidation;
    } else if (*build) {
      const auto embeddings = lift3d::read_embeddings(embeddings_path);
      const auto counts = lift3d::read_reference_counts(ref_counts_path);
      const auto classes = lift3d::read_class_list(classes_path);
      std::vector<std::string> ref_names;
      for (const auto& [name, count] : counts) {
        if (embeddings.contains(name)) ref_names.push_back(name);
      }
      const auto table = lift3d::build_threshold_table(
          counts, classes, embeddings.subset(ref_names), embeddings);
      write_text(thresholds_out, lift3d::thresholds_to_json(table));
    }
  } catch (const lift3d::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const lift3d::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
