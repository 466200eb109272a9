#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wingfea::kb {

constexpr int kEmbeddingDim = 384;
constexpr double kStrategyThreshold = 0.85;
constexpr double kMaterialScoreFloor = 0.3;

struct EmptyKbError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoMatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Embedding = std::array<double, kEmbeddingDim>;

// Deterministic feature-hashing bag-of-words embedding: tokens are lowercased
// alphanumeric runs, each hashed to one of 384 dimensions with a signed hash,
// then the vector is L2-normalized. Empty text embeds to the zero vector.
Embedding embed(const std::string& text);

double cosine(const Embedding& a, const Embedding& b);

struct MaterialRecord {
  std::string name;
  double youngs_modulus = 0.0;   // Pa
  double poissons_ratio = 0.0;
  double density = 0.0;          // kg/m^3
  double yield_strength = 0.0;   // Pa, 0 = unknown
  std::optional<double> fatigue_limit;         // Pa
  std::optional<double> fatigue_limit_cycles;
};

enum class EntryKind { material, geometry_pattern, solver_pattern, failure_pattern };

struct KnowledgeEntry {
  std::string key;          // text the embedding is computed from
  EntryKind kind = EntryKind::material;
  std::string payload;      // JSON object text
  std::string provenance;
  Embedding embedding{};    // recomputed at load, never persisted
};

enum class StrategyMode { knowledge_augmented, novel_synthesis };

struct StrategyDecision {
  StrategyMode mode = StrategyMode::novel_synthesis;
  double score = 0.0;
  int matched_index = -1;   // into the KB entry list, -1 if none
};

struct SimilarityResult {
  double score = 0.0;
  int index = 0;
};

class KnowledgeBase {
 public:
  // Empty base; call seed_defaults() for the built-in material records.
  KnowledgeBase() = default;

  void seed_defaults();

  const std::vector<KnowledgeEntry>& entries() const { return entries_; }

  // Appends or, when an entry with identical key text exists, replaces it.
  void upsert(KnowledgeEntry entry);

  // Highest cosine similarity against all entries; ties keep the earliest.
  SimilarityResult similarity(const std::string& request) const;

  StrategyDecision select_strategy(const std::string& request,
                                   double threshold = kStrategyThreshold) const;

  // Best material entry for the given name; NoMatchError below the score floor.
  MaterialRecord lookup_material(const std::string& name) const;

  void record_success(const std::string& key, const std::string& payload_json);
  void record_failure(const std::string& key, const std::string& payload_json);

  // Line-delimited JSON persistence. Embeddings are recomputed on load.
  void save(const std::string& path) const;
  static KnowledgeBase load(const std::string& path);

 private:
  std::vector<KnowledgeEntry> entries_;
};

StrategyDecision select_strategy(double score, double threshold = kStrategyThreshold);

MaterialRecord material_from_json(const std::string& json_text);
std::string material_to_json(const MaterialRecord& m);

}  // namespace wingfea::kb
