#include "medq/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "medq/error.hpp"
#include "medq/image_io.hpp"

namespace medq {

namespace {

char parse_label(const Json& j) {
  const auto s = j.get<std::string>();
  if (s.size() != 1) throw InvalidArgument("answer must be a single letter, got '" + s + "'");
  return s[0];
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(number, line);
  }
}

Json parse_line(std::size_t number, const std::string& line) {
  try {
    return Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw ParseError("line " + std::to_string(number) + ": " + e.what());
  }
}

}  // namespace

Json to_json(const QAPair& pair) {
  Json j;
  j["pair_id"] = pair.id;
  j["image_path"] = pair.image_path;
  j["question"] = pair.question;
  j["options"] = pair.options;
  j["answer"] = std::string(1, pair.answer);
  j["modality"] = to_string(pair.modality);
  j["capability"] = {{"high", pair.capability.high},
                     {"mid", pair.capability.mid},
                     {"fine", pair.capability.fine}};
  if (!pair.source.empty()) j["source"] = pair.source;
  return j;
}

QAPair pair_from_json(const Json& j) {
  QAPair p;
  p.id = j.at("pair_id").get<std::string>();
  p.image_path = j.at("image_path").get<std::string>();
  p.question = j.at("question").get<std::string>();
  p.options = j.at("options").get<std::vector<std::string>>();
  p.answer = parse_label(j.at("answer"));
  p.modality = parse_modality(j.at("modality").get<std::string>());
  if (j.contains("capability")) {
    const auto& c = j.at("capability");
    p.capability.high = c.value("high", "");
    p.capability.mid = c.value("mid", "");
    p.capability.fine = c.value("fine", "");
  }
  p.source = j.value("source", "");
  return p;
}

Json to_json(const DegradationSpec& spec) {
  Json j;
  if (spec.type) {
    j["type"] = to_string(*spec.type);
    j["category"] = to_string(info(*spec.type).category);
  } else {
    j["type"] = nullptr;
    j["category"] = nullptr;
  }
  j["severity"] = to_string(spec.severity);
  j["params"] = Json::object();
  for (const auto& [k, v] : spec.params) j["params"][k] = v;
  j["seed"] = spec.seed;
  return j;
}

DegradationSpec spec_from_json(const Json& j) {
  DegradationSpec s;
  const auto& type = j.at("type");
  if (!type.is_null()) s.type = parse_degradation_type(type.get<std::string>());
  s.severity = parse_severity(j.at("severity").get<std::string>());
  if (j.contains("params")) {
    for (const auto& [k, v] : j.at("params").items()) s.params[k] = v.get<double>();
  }
  s.seed = j.value("seed", std::uint64_t{0});
  return s;
}

Json to_json(const DegradedSample& sample) {
  Json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["sample_id"] = sample.sample_id;
  const Json pair = to_json(sample.pair);
  for (const auto& [k, v] : pair.items()) j[k] = v;
  j["degradation"] = to_json(sample.spec);
  Json review;
  review["status"] = to_string(sample.review.state);
  if (sample.review.reason) review["reason"] = to_string(*sample.review.reason);
  j["review"] = review;
  return j;
}

DegradedSample sample_from_json(const Json& j) {
  DegradedSample s;
  s.sample_id = j.at("sample_id").get<std::string>();
  s.pair = pair_from_json(j);
  s.spec = spec_from_json(j.at("degradation"));
  if (j.contains("review")) {
    const auto& r = j.at("review");
    s.review.state = parse_review_state(r.at("status").get<std::string>());
    if (r.contains("reason") && !r.at("reason").is_null()) {
      s.review.reason = parse_discard_reason(r.at("reason").get<std::string>());
    }
  }
  return s;
}

std::string serialize_manifest(const std::vector<DegradedSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

std::vector<DegradedSample> parse_manifest(const std::string& text) {
  std::vector<DegradedSample> out;
  for_each_line(text, [&](std::size_t number, const std::string& line) {
    const Json j = parse_line(number, line);
    if (j.value("schema_version", -1) != kManifestSchemaVersion) {
      throw ParseError("line " + std::to_string(number) + ": manifest schema version mismatch");
    }
    try {
      out.push_back(sample_from_json(j));
    } catch (const Json::exception& e) {
      throw ParseError("line " + std::to_string(number) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw ParseError("line " + std::to_string(number) + ": " + e.what());
    }
  });
  return out;
}

std::vector<DegradedSample> read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text(path));
}

void write_manifest(const std::filesystem::path& path, const std::vector<DegradedSample>& samples) {
  const std::string text = serialize_manifest(samples);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<QAPair> read_pool(const std::filesystem::path& path) {
  std::vector<QAPair> out;
  for_each_line(read_text(path), [&](std::size_t number, const std::string& line) {
    try {
      out.push_back(pair_from_json(parse_line(number, line)));
    } catch (const Json::exception& e) {
      throw ParseError("pool line " + std::to_string(number) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw ParseError("pool line " + std::to_string(number) + ": " + e.what());
    }
  });
  return out;
}

std::vector<std::string> check_sample(const DegradedSample& s) {
  std::vector<std::string> problems;
  const auto& p = s.pair;
  if (s.sample_id.empty()) problems.emplace_back("empty sample_id");
  if (p.id.empty()) problems.emplace_back("empty pair_id");
  if (p.image_path.empty()) problems.emplace_back("empty image_path");
  const std::size_t k = p.options.size();
  if (k < 2 || k > 26) {
    problems.push_back("option count " + std::to_string(k) + " outside [2, 26]");
  }
  const auto idx = option_index(p.answer);
  if (!idx || *idx >= k) {
    problems.push_back("answer '" + std::string(1, p.answer) + "' is not one of the " +
                       std::to_string(k) + " option labels");
  }
  if (s.spec.severity == Severity::L0) {
    if (s.spec.type || !s.spec.params.empty()) {
      problems.emplace_back("L0 sample must carry the identity spec");
    }
  } else if (!s.spec.type) {
    problems.emplace_back("degraded sample has no degradation type");
  }
  if (s.spec.type && !info(*s.spec.type).supports(p.modality)) {
    problems.push_back("degradation '" + std::string(to_string(*s.spec.type)) +
                       "' is not compatible with modality " + std::string(to_string(p.modality)));
  }
  if (s.review.state == ReviewState::Discarded && !s.review.reason) {
    problems.emplace_back("discarded sample without reason");
  }
  if (s.review.state != ReviewState::Discarded && s.review.reason) {
    problems.emplace_back("reason given for a non-discarded sample");
  }
  return problems;
}

std::vector<Violation> validate_manifest_text(const std::string& text) {
  std::vector<Violation> violations;
  std::set<std::string> seen;
  for_each_line(text, [&](std::size_t number, const std::string& line) {
    const Json j = parse_line(number, line);
    if (!j.is_object()) {
      violations.push_back({number, "", "record is not a JSON object"});
      return;
    }
    if (j.value("schema_version", -1) != kManifestSchemaVersion) {
      throw ParseError("line " + std::to_string(number) + ": manifest schema version mismatch");
    }
    const std::string id = j.contains("sample_id") && j["sample_id"].is_string()
                               ? j["sample_id"].get<std::string>()
                               : std::string();
    DegradedSample sample;
    try {
      sample = sample_from_json(j);
    } catch (const std::exception& e) {
      violations.push_back({number, id, e.what()});
      return;
    }
    for (auto& msg : check_sample(sample)) violations.push_back({number, id, std::move(msg)});
    const auto& deg = j.at("degradation");
    if (sample.spec.type && deg.contains("category") && !deg["category"].is_null()) {
      const auto expected = to_string(info(*sample.spec.type).category);
      if (deg["category"] != expected) {
        violations.push_back({number, id, "category does not match degradation type"});
      }
    }
    if (!seen.insert(id).second) violations.push_back({number, id, "duplicate sample_id"});
  });
  return violations;
}

std::vector<Violation> validate_manifest(const std::filesystem::path& path) {
  return validate_manifest_text(read_text(path));
}

}  // namespace medq
