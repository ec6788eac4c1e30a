#include "lift3d/category_gate.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "lift3d/error.h"

namespace lift3d {
namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed JSON in " + path + ": " + e.what());
  }
}

}  // namespace

void EmbeddingTable::add(const std::string& name,
                         const Eigen::VectorXd& vector) {
  if (names_.empty() && dim_ == 0) dim_ = static_cast<int>(vector.size());
  if (vector.size() != dim_) {
    throw ValidationError("embedding '" + name + "' has dimension " +
                          std::to_string(vector.size()) + ", expected " +
                          std::to_string(dim_));
  }
  if (!vector.allFinite() || !(vector.norm() > 0.0)) {
    throw ValidationError("embedding '" + name + "' has zero or non-finite norm");
  }
  if (index_.count(name)) {
    throw ValidationError("duplicate embedding class '" + name + "'");
  }
  index_.emplace(name, names_.size());
  names_.push_back(name);
  vectors_.push_back(vector);
}

const Eigen::VectorXd& EmbeddingTable::vector(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw ValidationError("no embedding for class '" + name + "'");
  }
  return vectors_[it->second];
}

EmbeddingTable EmbeddingTable::subset(
    const std::vector<std::string>& names) const {
  EmbeddingTable out(dim_);
  for (const auto& n : names) out.add(n, vector(n));
  return out;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

NearestClass nearest_class_by_embedding(const Eigen::VectorXd& query,
                                        const EmbeddingTable& table) {
  if (table.empty()) throw ValidationError("nearest class: empty table");
  if (query.size() != table.dim()) {
    throw ValidationError("nearest class: query dimension " +
                          std::to_string(query.size()) + " != table dimension " +
                          std::to_string(table.dim()));
  }
  if (!(query.norm() > 0.0)) {
    throw ValidationError("nearest class: zero query vector");
  }
  NearestClass best{"", -std::numeric_limits<double>::infinity()};
  for (size_t i = 0; i < table.size(); ++i) {
    const double sim = cosine_similarity(query, table.vector(i));
    const std::string& name = table.names()[i];
    if (sim > best.similarity || (sim == best.similarity && name < best.name)) {
      best = {name, sim};
    }
  }
  return best;
}

ThresholdTable build_threshold_table(
    const std::map<std::string, double>& ref_counts,
    const std::vector<ClassEntry>& target_classes,
    const EmbeddingTable& ref_emb, const EmbeddingTable& target_emb) {
  if (ref_counts.empty()) {
    throw ValidationError("threshold table: empty reference counts");
  }
  auto to_threshold = [](double mean) {
    return std::max(1, static_cast<int>(std::lround(mean)));
  };
  ThresholdTable table;
  for (const ClassEntry& cls : target_classes) {
    if (!target_emb.contains(cls.name)) {
      throw ValidationError("threshold table: no embedding for target class '" +
                            cls.name + "'");
    }
    if (table.entries.count(cls.id)) {
      throw ValidationError("threshold table: duplicate class id " +
                            std::to_string(cls.id));
    }
    ThresholdTable::Entry entry;
    entry.name = cls.name;
    if (auto it = ref_counts.find(cls.name); it != ref_counts.end()) {
      entry.threshold = to_threshold(it->second);
      entry.provenance = "direct";
    } else {
      const NearestClass nearest =
          nearest_class_by_embedding(target_emb.vector(cls.name), ref_emb);
      auto ref = ref_counts.find(nearest.name);
      if (ref == ref_counts.end()) {
        throw ValidationError("threshold table: reference class '" +
                              nearest.name + "' has no count");
      }
      entry.threshold = to_threshold(ref->second);
      entry.provenance = nearest.name;
    }
    table.entries.emplace(cls.id, std::move(entry));
  }
  return table;
}

bool accept_instance(int class_id, size_t point_count,
                     const ThresholdTable& table) {
  auto it = table.entries.find(class_id);
  if (it == table.entries.end()) {
    throw ValidationError("accept_instance: unknown class id " +
                          std::to_string(class_id));
  }
  return point_count >= static_cast<size_t>(it->second.threshold);
}

EmbeddingTable read_embeddings(const std::string& path) {
  const nlohmann::json j = load_json(path);
  try {
    EmbeddingTable table(j.at("dim").get<int>());
    for (const auto& e : j.at("entries")) {
      const auto values = e.at("vector").get<std::vector<double>>();
      table.add(e.at("name").get<std::string>(),
                Eigen::Map<const Eigen::VectorXd>(
                    values.data(), static_cast<Eigen::Index>(values.size())));
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("embedding file " + path + ": " + e.what());
  }
}

void write_embeddings(const std::string& path, const EmbeddingTable& table) {
  nlohmann::json entries = nlohmann::json::array();
  for (size_t i = 0; i < table.size(); ++i) {
    const Eigen::VectorXd& v = table.vector(i);
    entries.push_back({{"name", table.names()[i]},
                       {"vector", std::vector<double>(v.data(), v.data() + v.size())}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << nlohmann::json{{"dim", table.dim()}, {"entries", entries}}.dump()
      << "\n";
}

std::map<std::string, double> read_reference_counts(const std::string& path) {
  const nlohmann::json j = load_json(path);
  if (!j.is_object()) {
    throw ValidationError("reference counts " + path + ": expected an object");
  }
  std::map<std::string, double> counts;
  for (const auto& [name, value] : j.items()) {
    if (!value.is_number() || !(value.get<double>() >= 0.0)) {
      throw ValidationError("reference counts " + path + ": bad count for '" +
                            name + "'");
    }
    counts.emplace(name, value.get<double>());
  }
  return counts;
}

std::vector<ClassEntry> read_class_list(const std::string& path) {
  const nlohmann::json j = load_json(path);
  std::vector<ClassEntry> classes;
  try {
    for (const auto& e : j) {
      classes.push_back({e.at("id").get<int>(), e.at("name").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("class list " + path + ": " + e.what());
  }
  return classes;
}

std::string thresholds_to_json(const ThresholdTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [id, e] : table.entries) {
    rows.push_back({{"class_id", id},
                    {"name", e.name},
                    {"threshold", e.threshold},
                    {"provenance", e.provenance}});
  }
  return nlohmann::json{{"thresholds", rows}}.dump(2);
}

}  // namespace lift3d
