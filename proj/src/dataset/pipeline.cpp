#include "medq/dataset/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "medq/error.hpp"
#include "medq/hashing.hpp"
#include "medq/image_io.hpp"
#include "medq/parallel.hpp"

namespace medq::dataset {

namespace fs = std::filesystem;

PipelineConfig parse_config(const std::string& toml_text) {
  const toml::Document doc = toml::parse(toml_text);
  PipelineConfig cfg;
  cfg.table = degrade::SeverityTable::from_toml(doc);
  if (const auto* t = doc.find("dedup")) {
    for (const auto& [key, value] : *t) {
      const auto* v = std::get_if<double>(&value);
      if (key != "jaccard_threshold" || !v) throw ParseError("[dedup] accepts only jaccard_threshold = <number>");
      if (!(*v >= 0.0 && *v <= 1.0)) throw ParseError("jaccard_threshold must be in [0, 1]");
      cfg.jaccard_threshold = *v;
    }
  }
  if (const auto* t = doc.find("assignment.weights")) {
    for (const auto& [key, value] : *t) {
      const auto* v = std::get_if<double>(&value);
      if (!v || !(*v >= 0.0)) throw ParseError("weight for '" + key + "' must be a non-negative number");
      try {
        cfg.weights[parse_degradation_type(key)] = *v;
      } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
      }
    }
  }
  if (const auto* t = doc.find("render")) {
    for (const auto& [key, value] : *t) {
      const auto* v = std::get_if<double>(&value);
      if (key != "threads" || !v || *v < 1) throw ParseError("[render] accepts only threads = <positive integer>");
      cfg.threads = static_cast<unsigned>(*v);
    }
  }
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  const auto bytes = read_file(path);
  return parse_config(std::string(bytes.begin(), bytes.end()));
}

// ---- dedup -------------------------------------------------------------------------------

std::vector<std::string> question_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

double token_jaccard(const std::string& a, const std::string& b) {
  const auto ta = question_tokens(a);
  const auto tb = question_tokens(b);
  const std::set<std::string> sa(ta.begin(), ta.end());
  const std::set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

DedupResult dedup_by_digest(const std::vector<QAPair>& pairs, const std::vector<std::optional<std::string>>& digests,
                            double threshold) {
  if (pairs.size() != digests.size()) throw InvalidArgument("dedup: one digest per pair required");
  DedupResult out;
  std::unordered_map<std::string, std::vector<std::size_t>> kept_by_digest;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!digests[i]) {
      out.warnings.push_back({pairs[i].id, "image unreadable; pair skipped"});
      continue;
    }
    auto& bucket = kept_by_digest[*digests[i]];
    std::optional<DedupDrop> drop;
    for (std::size_t k : bucket) {
      const double sim = token_jaccard(pairs[i].question, out.kept[k].question);
      if (sim >= threshold) {
        drop = DedupDrop{pairs[i].id, out.kept[k].id, sim};
        break;
      }
    }
    if (drop) {
      out.dropped.push_back(*drop);
    } else {
      bucket.push_back(out.kept.size());
      out.kept.push_back(pairs[i]);
    }
  }
  return out;
}

DedupResult dedup_pool(const std::vector<QAPair>& pairs, const fs::path& base_dir, double threshold) {
  std::vector<std::optional<std::string>> digests(pairs.size());
  std::vector<std::string> errors(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    try {
      digests[i] = pixel_digest(load_image(base_dir / pairs[i].image_path));
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  }
  DedupResult out = dedup_by_digest(pairs, digests, threshold);
  for (auto& w : out.warnings) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (pairs[i].id == w.pair_id && !errors[i].empty()) w.message = "image unreadable: " + errors[i];
    }
  }
  return out;
}

// ---- assignment --------------------------------------------------------------------------

std::string sample_id_for(const std::string& pair_id, const DegradationSpec& spec) {
  if (!spec.type || spec.severity == Severity::L0) return pair_id + "__L0";
  return pair_id + "__" + std::string(to_string(*spec.type)) + "__" + std::string(to_string(spec.severity));
}

namespace {

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<DegradedSample> assign_degradations(const QAPair& pair, std::uint64_t run_seed,
                                                const PipelineConfig& config) {
  std::vector<DegradationType> pool;
  std::vector<double> weights;
  for (DegradationType t : degrade::compatible_types(pair.modality)) {
    auto it = config.weights.find(t);
    const double w = it == config.weights.end() ? 1.0 : it->second;
    if (w > 0.0) {
      pool.push_back(t);
      weights.push_back(w);
    }
  }
  if (pool.size() < static_cast<std::size_t>(kTypesPerPair)) {
    throw InvalidArgument("pair " + pair.id + ": fewer than 3 degradation types available for " +
                          std::string(to_string(pair.modality)));
  }
  std::mt19937_64 rng(hash64({"assign", pair.id, std::to_string(run_seed)}));
  std::vector<DegradationType> chosen;
  for (int k = 0; k < kTypesPerPair; ++k) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = unit_draw(rng) * total;
    std::size_t pick = pool.size() - 1;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (u < weights[i]) {
        pick = i;
        break;
      }
      u -= weights[i];
    }
    chosen.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(pick));
  }

  std::vector<DegradedSample> out;
  auto push = [&](DegradationSpec spec) {
    DegradedSample s;
    s.pair = pair;
    s.spec = std::move(spec);
    s.sample_id = sample_id_for(pair.id, s.spec);
    out.push_back(std::move(s));
  };
  DegradationSpec identity = DegradationSpec::identity();
  identity.seed = sample_seed(pair.id, "identity", Severity::L0, run_seed);
  push(identity);
  for (DegradationType t : chosen) {
    for (Severity sev : {Severity::L1, Severity::L2}) {
      DegradationSpec spec;
      spec.type = t;
      spec.severity = sev;
      spec.seed = sample_seed(pair.id, to_string(t), sev, run_seed);
      push(spec);
    }
  }
  return out;
}

// ---- review ------------------------------------------------------------------------------

Json to_json(const ReviewDecision& d) {
  Json j;
  j["sample_id"] = d.sample_id;
  j["action"] = d.action == ReviewAction::Retain ? "retain" : "discard";
  if (d.reason) j["reason"] = std::string(to_string(*d.reason));
  j["annotator"] = d.annotator;
  j["timestamp"] = d.timestamp;
  return j;
}

ReviewDecision decision_from_json(const Json& j) {
  try {
    ReviewDecision d;
    d.sample_id = j.at("sample_id").get<std::string>();
    const auto action = j.at("action").get<std::string>();
    if (action == "retain") {
      d.action = ReviewAction::Retain;
    } else if (action == "discard") {
      d.action = ReviewAction::Discard;
    } else {
      throw ParseError("unknown review action '" + action + "'");
    }
    if (j.contains("reason") && !j["reason"].is_null()) {
      d.reason = parse_discard_reason(j["reason"].get<std::string>());
    }
    if (d.action == ReviewAction::Discard && !d.reason) throw ParseError("discard decision without reason");
    if (d.action == ReviewAction::Retain && d.reason) throw ParseError("retain decision carries a reason");
    d.annotator = j.value("annotator", "");
    d.timestamp = j.value("timestamp", "");
    return d;
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  } catch (const Json::exception& e) {
    throw ParseError(std::string("review decision: ") + e.what());
  }
}

std::vector<ReviewDecision> read_decisions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<ReviewDecision> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(decision_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ParseError("decisions line " + std::to_string(number) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("decisions line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

ReviewOutcome apply_review(const std::vector<DegradedSample>& manifest, const std::vector<ReviewDecision>& decisions) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < manifest.size(); ++i) index.emplace(manifest[i].sample_id, i);

  std::vector<ReviewStatus> verdict(manifest.size());
  std::vector<bool> decided(manifest.size(), false);
  for (const auto& d : decisions) {
    auto it = index.find(d.sample_id);
    if (it == index.end()) throw InvalidArgument("review decision for unknown sample " + d.sample_id);
    if (d.action == ReviewAction::Discard && !d.reason) {
      throw InvalidArgument("discard of " + d.sample_id + " has no reason");
    }
    const std::size_t i = it->second;
    if (manifest[i].review.state != ReviewState::Pending) {
      throw InvalidArgument("sample " + d.sample_id + " was already reviewed");
    }
    if (d.action == ReviewAction::Discard) {
      if (verdict[i].state != ReviewState::Discarded) verdict[i] = {ReviewState::Discarded, d.reason};
    } else if (verdict[i].state != ReviewState::Discarded) {
      verdict[i] = {ReviewState::Retained, std::nullopt};
    }
    decided[i] = true;
  }

  ReviewOutcome out;
  out.summary.total = manifest.size();
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    DegradedSample s = manifest[i];
    if (decided[i]) s.review = verdict[i];
    switch (s.review.state) {
      case ReviewState::Discarded:
        ++out.summary.discarded;
        if (s.review.reason) ++out.summary.reasons[std::string(to_string(*s.review.reason))];
        out.removed.push_back(std::move(s));
        break;
      case ReviewState::Retained:
        ++out.summary.retained;
        out.manifest.push_back(std::move(s));
        break;
      case ReviewState::Pending:
        ++out.summary.pending;
        out.manifest.push_back(std::move(s));
        break;
    }
  }
  out.summary.removal_fraction =
      manifest.empty() ? 0.0 : static_cast<double>(out.summary.discarded) / static_cast<double>(manifest.size());
  return out;
}

Json to_json(const ReviewSummary& s) {
  Json j;
  j["total"] = s.total;
  j["retained"] = s.retained;
  j["pending"] = s.pending;
  j["discarded"] = s.discarded;
  j["removal_fraction"] = s.removal_fraction;
  j["reasons"] = Json::object();
  for (const auto& [k, v] : s.reasons) j["reasons"][k] = v;
  return j;
}

// ---- build -------------------------------------------------------------------------------

namespace {

std::string modality_label(const DegradationInfo& info) {
  if (info.general()) return "All";
  std::string out;
  for (Modality m : info.modalities) {
    if (!out.empty()) out += ",";
    out += to_string(m);
  }
  return out;
}

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

Json compute_stats(const std::vector<DegradedSample>& samples) {
  std::map<DegradationType, std::size_t> type_counts;
  std::size_t total = 0;
  for (const auto& s : samples) {
    if (!s.spec.type || s.spec.severity == Severity::L0) continue;
    ++type_counts[*s.spec.type];
    ++total;
  }
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  Json j;
  j["total"] = total;
  j["categories"] = Json::array();
  for (Category c : kAllCategories) {
    std::size_t cat_count = 0;
    for (const auto& e : degradation_catalog()) {
      if (e.category == c) cat_count += type_counts[e.type];
    }
    Json cj;
    cj["name"] = std::string(to_string(c));
    cj["count"] = cat_count;
    cj["ratio_in_total"] = ratio(cat_count, total);
    cj["types"] = Json::array();
    for (const auto& e : degradation_catalog()) {
      if (e.category != c) continue;
      const std::size_t n = type_counts[e.type];
      Json tj;
      tj["name"] = std::string(e.name);
      tj["count"] = n;
      tj["ratio_in_parent"] = ratio(n, cat_count);
      tj["ratio_in_total"] = ratio(n, total);
      tj["modality"] = modality_label(e);
      cj["types"].push_back(std::move(tj));
    }
    j["categories"].push_back(std::move(cj));
  }
  return j;
}

BuildResult build_manifest(const fs::path& pool_dir, const fs::path& out_dir, const PipelineConfig& config,
                           std::uint64_t run_seed) {
  const std::string started = utc_timestamp();
  const auto pool = read_pool(pool_dir / "pool.jsonl");
  for (const auto& p : pool) {
    if (p.options.size() < 2) throw InvalidArgument("pair " + p.id + ": fewer than 2 options");
  }
  BuildResult result;
  result.dedup = dedup_pool(pool, pool_dir, config.jaccard_threshold);

  std::vector<std::size_t> owner;  // index into dedup.kept for each sample
  for (std::size_t k = 0; k < result.dedup.kept.size(); ++k) {
    for (auto& s : assign_degradations(result.dedup.kept[k], run_seed, config)) {
      result.samples.push_back(std::move(s));
      owner.push_back(k);
    }
  }

  fs::create_directories(out_dir / "images");
  // Sources are decoded once per pair; each pair's seven samples render independently.
  std::vector<std::optional<Image>> sources(result.dedup.kept.size());
  parallel_for(sources.size(), config.threads, [&](std::size_t k) {
    sources[k] = load_image(pool_dir / result.dedup.kept[k].image_path);
  });
  parallel_for(result.samples.size(), config.threads, [&](std::size_t i) {
    auto& s = result.samples[i];
    const Image& src = *sources[owner[i]];
    try {
      s.spec = degrade::resolve_spec(s.spec, s.pair.modality, src.width(), src.height(), config.table);
      const Image img = degrade::apply_degradation(src, s.pair.modality, s.spec, config.table);
      const std::string rel = "images/" + s.sample_id + ".png";
      save_image(img, out_dir / rel);
      s.pair.image_path = rel;
    } catch (const Error& e) {
      throw Error("sample " + s.sample_id + ": " + e.what());
    }
  });

  write_manifest(out_dir / "manifest.jsonl", result.samples);
  result.stats = compute_stats(result.samples);
  {
    const std::string text = result.stats.dump(2) + "\n";
    write_file(out_dir / "stats.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
  Json info;
  info["started"] = started;
  info["finished"] = utc_timestamp();
  info["run_seed"] = run_seed;
  info["pool"] = pool_dir.string();
  info["pairs_in"] = pool.size();
  info["pairs_kept"] = result.dedup.kept.size();
  info["samples"] = result.samples.size();
  info["dedup_dropped"] = Json::array();
  for (const auto& d : result.dedup.dropped) {
    info["dedup_dropped"].push_back({{"pair_id", d.pair_id}, {"duplicate_of", d.duplicate_of}, {"similarity", d.similarity}});
  }
  info["warnings"] = Json::array();
  for (const auto& w : result.dedup.warnings) {
    info["warnings"].push_back({{"pair_id", w.pair_id}, {"message", w.message}});
  }
  const std::string text = info.dump(2) + "\n";
  write_file(out_dir / "build_info.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return result;
}

}  // namespace medq::dataset
