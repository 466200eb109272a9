#include "wingfea/kb.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wingfea/common.hpp"

using nlohmann::json;

namespace wingfea::kb {

namespace {

const char* kind_name(EntryKind k) {
  switch (k) {
    case EntryKind::material: return "material";
    case EntryKind::geometry_pattern: return "geometry_pattern";
    case EntryKind::solver_pattern: return "solver_pattern";
    default: return "failure_pattern";
  }
}

EntryKind kind_from(const std::string& s) {
  if (s == "material") return EntryKind::material;
  if (s == "geometry_pattern") return EntryKind::geometry_pattern;
  if (s == "solver_pattern") return EntryKind::solver_pattern;
  if (s == "failure_pattern") return EntryKind::failure_pattern;
  throw IoError("unknown knowledge entry kind '" + s + "'");
}

}  // namespace

Embedding embed(const std::string& text) {
  Embedding v{};
  std::string token;
  bool any = false;
  auto flush = [&]() {
    if (token.empty()) return;
    std::uint64_t h = fnv1a64(token);
    int dim = static_cast<int>(h % kEmbeddingDim);
    double sign = ((h >> 32) & 1u) ? 1.0 : -1.0;
    v[dim] += sign;
    any = true;
    token.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    else
      flush();
  }
  flush();
  if (!any) return v;  // zero vector for token-free text
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 > 0.0) {
    double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
  }
  return v;
}

double cosine(const Embedding& a, const Embedding& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < kEmbeddingDim; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

StrategyDecision select_strategy(double score, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("strategy threshold must lie in (0,1)");
  StrategyDecision d;
  d.score = score;
  d.mode = score > threshold ? StrategyMode::knowledge_augmented : StrategyMode::novel_synthesis;
  return d;
}

void KnowledgeBase::seed_defaults() {
  // Al 7075-T6 and Aluminum C355. C355's yield strength is not published in
  // the seeded sources, so it stays 0 (= unknown; downstream emits a warning).
  MaterialRecord al7075{"Al 7075-T6", 71.7e9, 0.33, 2810.0, 503e6, 160e6, 1e7};
  MaterialRecord c355{"Aluminum C355", 75e9, 0.3, 2650.0, 0.0, std::nullopt, std::nullopt};
  upsert({"Al 7075-T6 aerospace aluminum alloy", EntryKind::material, material_to_json(al7075),
          "seed"});
  upsert({"Aluminum C355 cast aluminum alloy", EntryKind::material, material_to_json(c355),
          "seed"});
}

void KnowledgeBase::upsert(KnowledgeEntry entry) {
  entry.embedding = embed(entry.key);
  for (auto& e : entries_) {
    if (e.key == entry.key) {
      e = std::move(entry);
      return;
    }
  }
  entries_.push_back(std::move(entry));
}

SimilarityResult KnowledgeBase::similarity(const std::string& request) const {
  if (entries_.empty()) throw EmptyKbError("knowledge base is empty");
  Embedding q = embed(request);
  SimilarityResult best{-2.0, 0};
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    double c = cosine(q, entries_[i].embedding);
    if (c > best.score) best = {c, static_cast<int>(i)};
  }
  return best;
}

StrategyDecision KnowledgeBase::select_strategy(const std::string& request,
                                                double threshold) const {
  SimilarityResult sim = similarity(request);
  StrategyDecision d = kb::select_strategy(sim.score, threshold);
  if (d.mode == StrategyMode::knowledge_augmented) d.matched_index = sim.index;
  return d;
}

MaterialRecord KnowledgeBase::lookup_material(const std::string& name) const {
  Embedding q = embed(name);
  double best = -2.0;
  const KnowledgeEntry* hit = nullptr;
  for (const auto& e : entries_) {
    if (e.kind != EntryKind::material) continue;
    double c = cosine(q, e.embedding);
    if (c > best) {
      best = c;
      hit = &e;
    }
  }
  if (!hit || best < kMaterialScoreFloor)
    throw NoMatchError("no material matching '" + name + "' (best score " +
                       std::to_string(best < -1.0 ? 0.0 : best) + ")");
  return material_from_json(hit->payload);
}

void KnowledgeBase::record_success(const std::string& key, const std::string& payload_json) {
  upsert({key, EntryKind::solver_pattern, payload_json, "run"});
}

void KnowledgeBase::record_failure(const std::string& key, const std::string& payload_json) {
  upsert({key, EntryKind::failure_pattern, payload_json, "run"});
}

void KnowledgeBase::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write knowledge base file '" + path + "'");
  for (const auto& e : entries_) {
    json line = {{"key", e.key},
                 {"kind", kind_name(e.kind)},
                 {"payload", json::parse(e.payload)},
                 {"provenance", e.provenance}};
    out << line.dump() << "\n";
  }
}

KnowledgeBase KnowledgeBase::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read knowledge base file '" + path + "'");
  KnowledgeBase kb;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IoError("bad knowledge base record at line " + std::to_string(lineno) + ": " + e.what());
    }
    kb.upsert({j.at("key").get<std::string>(), kind_from(j.at("kind").get<std::string>()),
               j.at("payload").dump(), j.value("provenance", "")});
  }
  return kb;
}

MaterialRecord material_from_json(const std::string& text) {
  json j = json::parse(text);
  MaterialRecord m;
  m.name = j.value("name", "");
  m.youngs_modulus = j.value("youngs_modulus", 0.0);
  m.poissons_ratio = j.value("poissons_ratio", 0.0);
  m.density = j.value("density", 0.0);
  m.yield_strength = j.value("yield_strength", 0.0);
  if (j.contains("fatigue_limit")) m.fatigue_limit = j.at("fatigue_limit").get<double>();
  if (j.contains("fatigue_limit_cycles"))
    m.fatigue_limit_cycles = j.at("fatigue_limit_cycles").get<double>();
  return m;
}

std::string material_to_json(const MaterialRecord& m) {
  json j = {{"name", m.name},
            {"youngs_modulus", m.youngs_modulus},
            {"poissons_ratio", m.poissons_ratio},
            {"density", m.density},
            {"yield_strength", m.yield_strength}};
  if (m.fatigue_limit) j["fatigue_limit"] = *m.fatigue_limit;
  if (m.fatigue_limit_cycles) j["fatigue_limit_cycles"] = *m.fatigue_limit_cycles;
  return j.dump();
}

}  // namespace wingfea::kb
