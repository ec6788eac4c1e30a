#include "lift3d/pipeline.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lift3d/box_fit.h"
#include "lift3d/error.h"
#include "lift3d/raster_io.h"

namespace lift3d {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("malformed JSON in " + path + ": " + e.what());
  }
}

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end()) {
      throw ValidationError(where + ": unknown key '" + key + "'");
    }
  }
}

std::set<int> id_set(const json& j, const std::string& where) {
  std::set<int> ids;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ValidationError(where + ": expected integers");
    ids.insert(v.get<int>());
  }
  return ids;
}

json image_stats_json(const ImageResult& r) {
  json skipped = json::array();
  for (const auto& s : r.skipped) {
    skipped.push_back({{"instance_id", s.instance_id},
                       {"class_id", s.class_id},
                       {"n_points", s.n_points},
                       {"reason", s.reason}});
  }
  return {{"image_id", r.image_id},
          {"instances", r.instances},
          {"boxes", r.boxes.size()},
          {"skipped", skipped},
          {"error", r.error ? json(*r.error) : json(nullptr)}};
}

}  // namespace

void PipelineConfig::validate() const {
  clean.validate();
  if (workers < 1) throw ValidationError("parallelism.workers must be >= 1");
  for (double t : eval.iou_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw ValidationError("eval.iou_thresholds must lie in (0, 1]");
    }
  }
  if (!(eval.pr_threshold > 0.0 && eval.pr_threshold <= 1.0)) {
    throw ValidationError("eval.pr_threshold must lie in (0, 1]");
  }
}

PipelineConfig parse_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  PipelineConfig cfg;
  try {
    check_keys(j, "config", {"clean", "gate", "fit", "eval", "parallelism"});
    if (j.contains("clean")) {
      const json& c = j["clean"];
      check_keys(c, "clean", {"radius", "min_neighbors", "knn_k", "std_ratio"});
      cfg.clean.radius = c.value("radius", cfg.clean.radius);
      cfg.clean.min_neighbors = c.value("min_neighbors", cfg.clean.min_neighbors);
      cfg.clean.knn_k = c.value("knn_k", cfg.clean.knn_k);
      cfg.clean.std_ratio = c.value("std_ratio", cfg.clean.std_ratio);
    }
    if (j.contains("gate")) {
      check_keys(j["gate"], "gate", {"enabled"});
      cfg.gate.enabled = j["gate"].value("enabled", cfg.gate.enabled);
    }
    if (j.contains("fit")) {
      check_keys(j["fit"], "fit", {"up_axis"});
      if (j["fit"].contains("up_axis")) {
        cfg.fit.up_axis = parse_axis(j["fit"]["up_axis"].get<std::string>());
      }
    }
    if (j.contains("eval")) {
      const json& e = j["eval"];
      check_keys(e, "eval", {"iou_thresholds", "pr_threshold", "partition"});
      if (e.contains("iou_thresholds")) {
        cfg.eval.iou_thresholds = e["iou_thresholds"].get<std::vector<double>>();
      }
      cfg.eval.pr_threshold = e.value("pr_threshold", cfg.eval.pr_threshold);
      if (e.contains("partition") && !e["partition"].is_null()) {
        cfg.eval.partition_path =
            resolve(base_dir, e["partition"].get<std::string>());
      }
    }
    if (j.contains("parallelism")) {
      check_keys(j["parallelism"], "parallelism", {"workers"});
      cfg.workers = j["parallelism"].value("workers", cfg.workers);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), fs::path(path).parent_path().string());
}

ClassPartition read_partition(const std::string& path) {
  const json j = load_json_file(path);
  try {
    check_keys(j, "partition " + path, {"original", "new", "background"});
    ClassPartition part;
    part.original = id_set(j.at("original"), "partition.original");
    part.novel = id_set(j.at("new"), "partition.new");
    part.background = j.value("background", -1);
    for (int id : part.original) {
      if (part.novel.count(id)) {
        throw ValidationError("partition " + path + ": class " +
                              std::to_string(id) + " is both original and new");
      }
    }
    return part;
  } catch (const json::exception& e) {
    throw ValidationError("partition " + path + ": " + e.what());
  }
}

DatasetManifest ingest_manifest(const std::string& path) {
  const json j = load_json_file(path);
  const fs::path base = fs::path(path).parent_path();
  DatasetManifest m;
  auto require_file = [](const std::string& file, const std::string& where) {
    if (!fs::is_regular_file(file)) {
      throw ValidationError(where + ": file not found: " + file);
    }
  };
  try {
    check_keys(j, "manifest", {"up_axis", "classes", "partition", "embeddings",
                               "reference_counts", "images"});
    if (j.contains("up_axis")) m.up_axis = parse_axis(j["up_axis"].get<std::string>());
    if (j.contains("classes")) {
      std::set<int> ids;
      for (size_t i = 0; i < j["classes"].size(); ++i) {
        const json& c = j["classes"][i];
        ClassEntry entry{c.at("id").get<int>(), c.at("name").get<std::string>()};
        if (!ids.insert(entry.id).second) {
          throw ValidationError("manifest classes[" + std::to_string(i) +
                                "]: duplicate class id " + std::to_string(entry.id));
        }
        m.classes.push_back(std::move(entry));
      }
    }
    for (const char* key : {"partition", "embeddings", "reference_counts"}) {
      if (!j.contains(key)) continue;
      const std::string p = resolve(base, j[key].get<std::string>());
      require_file(p, std::string("manifest.") + key);
      if (std::string(key) == "partition") m.partition_path = p;
      if (std::string(key) == "embeddings") m.embeddings_path = p;
      if (std::string(key) == "reference_counts") m.reference_counts_path = p;
    }

    std::set<int> known_classes;
    for (const auto& c : m.classes) known_classes.insert(c.id);
    std::set<std::string> seen;
    const json& images = j.at("images");
    if (!images.is_array()) throw ValidationError("manifest.images: expected an array");
    for (size_t i = 0; i < images.size(); ++i) {
      const json& e = images[i];
      const std::string where = "manifest images[" + std::to_string(i) + "]";
      try {
        check_keys(e, where, {"image_id", "depth_path", "mask_path",
                              "intrinsics", "class_label_map"});
        ImageEntry entry;
        entry.image_id = e.at("image_id").get<std::string>();
        if (!seen.insert(entry.image_id).second) {
          throw ValidationError("duplicate image_id '" + entry.image_id + "'");
        }
        entry.depth_path = resolve(base, e.at("depth_path").get<std::string>());
        entry.mask_path = resolve(base, e.at("mask_path").get<std::string>());
        for (const auto& [field, p] : {std::pair{"depth_path", entry.depth_path},
                                       std::pair{"mask_path", entry.mask_path}}) {
          require_file(p, std::string(field));
          require_file(raster_header_path(p), std::string(field) + " header");
        }
        const json& k = e.at("intrinsics");
        check_keys(k, "intrinsics", {"fx", "fy", "px", "py"});
        entry.intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(),
                            k.at("px").get<double>(), k.at("py").get<double>()};
        entry.intrinsics.validate();
        if (e.contains("class_label_map")) {
          for (const auto& [key, value] : e["class_label_map"].items()) {
            int instance = 0;
            try {
              size_t used = 0;
              instance = std::stoi(key, &used);
              if (used != key.size()) throw std::invalid_argument(key);
            } catch (const std::exception&) {
              throw ValidationError("class_label_map: bad instance id '" + key + "'");
            }
            const int cls = value.get<int>();
            if (!known_classes.empty() && !known_classes.count(cls)) {
              throw ValidationError("class_label_map: unknown class id " +
                                    std::to_string(cls));
            }
            entry.class_label_map[instance] = cls;
          }
        }
        m.images.push_back(std::move(entry));
      } catch (const json::exception& ex) {
        throw ValidationError(where + ": " + ex.what());
      } catch (const ValidationError& ex) {
        const std::string msg = ex.what();
        if (msg.rfind(where, 0) == 0) throw;
        throw ValidationError(where + ": " + msg);
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError("manifest " + path + ": " + e.what());
  }
  return m;
}

std::optional<ThresholdTable> build_gate(const DatasetManifest& manifest,
                                         const PipelineConfig& config) {
  if (!config.gate.enabled) return std::nullopt;
  if (manifest.embeddings_path.empty() || manifest.reference_counts_path.empty() ||
      manifest.classes.empty()) {
    throw ValidationError(
        "point-threshold gate needs manifest classes, embeddings and "
        "reference_counts (or set gate.enabled = false)");
  }
  const EmbeddingTable embeddings = read_embeddings(manifest.embeddings_path);
  const auto counts = read_reference_counts(manifest.reference_counts_path);
  std::vector<std::string> ref_names;
  for (const auto& [name, count] : counts) {
    if (embeddings.contains(name)) ref_names.push_back(name);
  }
  return build_threshold_table(counts, manifest.classes,
                               embeddings.subset(ref_names), embeddings);
}

ImageResult process_image(const ImageEntry& entry, const PipelineConfig& config,
                          Axis up_axis,
                          const std::optional<ThresholdTable>& thresholds) {
  ImageResult result;
  result.image_id = entry.image_id;
  try {
    const DepthMap depth = read_depth(entry.depth_path);
    const InstanceMask mask = read_mask(entry.mask_path, entry.class_label_map);
    mask.validate();
    if (depth.width != mask.width || depth.height != mask.height) {
      throw ValidationError("depth and mask dimensions differ");
    }
    const std::vector<int> ids = mask.instance_ids();
    result.instances = ids.size();
    for (int id : ids) {
      const PointCloud raw = backproject(depth, mask, entry.intrinsics, id);
      SkippedInstance skip{id, raw.class_id, 0, ""};
      if (raw.empty()) {
        skip.reason = kSkipNoDepth;
        result.skipped.push_back(skip);
        continue;
      }
      const PointCloud cleaned = clean(raw, config.clean);
      skip.n_points = cleaned.size();
      if (thresholds && !accept_instance(raw.class_id, cleaned.size(), *thresholds)) {
        skip.reason = kSkipBelowThreshold;
        result.skipped.push_back(skip);
        continue;
      }
      try {
        BoxRecord record;
        record.image_id = entry.image_id;
        record.instance_id = id;
        record.class_id = raw.class_id;
        record.box = min_oriented_box_yaw(cleaned, up_axis);
        record.n_points = cleaned.size();
        result.boxes.push_back(std::move(record));
      } catch (const DegenerateCloudError&) {
        skip.reason = kSkipDegenerate;
        result.skipped.push_back(skip);
      }
    }
  } catch (const std::exception& e) {
    result.boxes.clear();
    result.error = e.what();
  }
  return result;
}

GenerateSummary run_generate(const DatasetManifest& manifest,
                             const PipelineConfig& config,
                             const std::string& out_path,
                             const std::string& stats_path) {
  config.validate();
  const Axis up = manifest.up_axis.value_or(config.fit.up_axis);
  const std::optional<ThresholdTable> thresholds = build_gate(manifest, config);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + out_path);

  GenerateSummary summary;
  json image_stats = json::array();
  const size_t workers = static_cast<size_t>(config.workers);
  const size_t window = std::max<size_t>(1, 4 * workers);
  const auto& images = manifest.images;

  for (size_t begin = 0; begin < images.size(); begin += window) {
    const size_t end = std::min(images.size(), begin + window);
    std::vector<ImageResult> results(end - begin);
    std::atomic<size_t> next{begin};
    auto work = [&] {
      for (size_t i = next++; i < end; i = next++) {
        results[i - begin] = process_image(images[i], config, up, thresholds);
      }
    };
    if (workers == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (size_t w = 0; w < std::min(workers, end - begin); ++w) {
        pool.emplace_back(work);
      }
      for (auto& t : pool) t.join();
    }
    // Results leave in manifest order.
    for (const ImageResult& r : results) {
      for (const BoxRecord& b : r.boxes) out << to_json_line(b) << '\n';
      ++summary.images;
      if (r.error) ++summary.failed_images;
      summary.instances += r.instances;
      summary.boxes += r.boxes.size();
      for (const auto& s : r.skipped) ++summary.skipped[s.reason];
      image_stats.push_back(image_stats_json(r));
    }
    if (!out) throw IoError("failed writing " + out_path);
  }
  out.close();
  if (!out) throw IoError("failed writing " + out_path);

  json totals = {{"images", summary.images},
                 {"failed_images", summary.failed_images},
                 {"instances", summary.instances},
                 {"boxes", summary.boxes},
                 {"skipped", summary.skipped}};
  std::ofstream stats(stats_path, std::ios::binary);
  if (!stats) throw IoError("cannot write " + stats_path);
  stats << json{{"totals", totals}, {"images", image_stats}}.dump(2) << '\n';
  if (!stats) throw IoError("failed writing " + stats_path);
  return summary;
}

EvalReport run_eval(const std::string& pred_path, const std::string& gt_path,
                    const PipelineConfig& config) {
  config.validate();
  const auto preds = read_box_records(pred_path);
  const auto gts = read_box_records(gt_path);

  const size_t scored = static_cast<size_t>(std::count_if(
      preds.begin(), preds.end(), [](const BoxRecord& r) { return r.score.has_value(); }));
  if (scored != 0 && scored != preds.size()) {
    throw ValidationError("predictions mix scored and unscored records");
  }
  const bool pseudo_mode = !preds.empty() && scored == 0;

  std::optional<ClassPartition> partition;
  if (!config.eval.partition_path.empty()) {
    partition = read_partition(config.eval.partition_path);
    auto check = [&](const std::vector<BoxRecord>& records, const char* what) {
      for (const auto& r : records) {
        if (!partition->original.count(r.class_id) &&
            !partition->novel.count(r.class_id)) {
          throw ValidationError(std::string(what) + ": class id " +
                                std::to_string(r.class_id) +
                                " not in partition file");
        }
      }
    };
    check(preds, "predictions");
    check(gts, "ground truth");
  }

  std::vector<DetectionRecord> dets, gt;
  for (const auto& r : preds) dets.push_back(to_detection(r));
  for (const auto& r : gts) gt.push_back(to_detection(r));

  if (pseudo_mode) return precision_recall_report(dets, gt, config.eval.pr_threshold);
  EvalOptions options;
  options.iou_thresholds = config.eval.iou_thresholds;
  options.pr_threshold = config.eval.pr_threshold;
  options.partition = partition;
  return mean_ap_over_thresholds(dets, gt, options);
}

}  // namespace lift3d
