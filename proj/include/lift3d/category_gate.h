#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace lift3d {

// Class name -> embedding vector of a fixed dimension. Rows keep insertion
// order, which is also the class index order used by `classify`.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(int dim) : dim_(dim) {}

  void add(const std::string& name, const Eigen::VectorXd& vector);

  int dim() const { return dim_; }
  size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  bool contains(const std::string& name) const { return index_.count(name); }

  const std::vector<std::string>& names() const { return names_; }
  const Eigen::VectorXd& vector(size_t row) const { return vectors_[row]; }
  const Eigen::VectorXd& vector(const std::string& name) const;
  // Rows restricted to `names`, in the given order.
  EmbeddingTable subset(const std::vector<std::string>& names) const;

 private:
  int dim_ = 0;
  std::vector<std::string> names_;
  std::vector<Eigen::VectorXd> vectors_;
  std::map<std::string, size_t> index_;
};

struct ClassEntry {
  int id = 0;
  std::string name;
};

struct ThresholdTable {
  struct Entry {
    std::string name;
    int threshold = 1;
    // "direct" or the reference class the threshold was borrowed from.
    std::string provenance;
  };
  std::map<int, Entry> entries;  // keyed by class id
};

struct NearestClass {
  std::string name;
  double similarity = 0.0;
};

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Argmax of cosine similarity; equal similarities resolve to the
// lexicographically smallest name.
NearestClass nearest_class_by_embedding(const Eigen::VectorXd& query,
                                        const EmbeddingTable& table);

// Classes with a reference count use it directly (rounded, floor 1); the
// rest inherit the count of their most similar reference class.
ThresholdTable build_threshold_table(
    const std::map<std::string, double>& ref_counts,
    const std::vector<ClassEntry>& target_classes,
    const EmbeddingTable& ref_emb, const EmbeddingTable& target_emb);

// point_count >= threshold(class_id). Throws ValidationError for an unknown
// class.
bool accept_instance(int class_id, size_t point_count,
                     const ThresholdTable& table);

// File formats (JSON text):
//   embeddings:  {"dim": D, "entries": [{"name": str, "vector": [D numbers]}]}
//   ref counts:  {"<class name>": mean_point_count, ...}
//   classes:     [{"id": int, "name": str}, ...]
//   thresholds:  {"thresholds": [{"class_id", "name", "threshold",
//                                  "provenance"}]}
EmbeddingTable read_embeddings(const std::string& path);
void write_embeddings(const std::string& path, const EmbeddingTable& table);
std::map<std::string, double> read_reference_counts(const std::string& path);
std::vector<ClassEntry> read_class_list(const std::string& path);
std::string thresholds_to_json(const ThresholdTable& table);

}  // namespace lift3d
