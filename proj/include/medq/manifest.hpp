#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "medq/types.hpp"

namespace medq {

using Json = nlohmann::ordered_json;

inline constexpr int kManifestSchemaVersion = 1;

struct Violation {
  std::size_t line = 0;  // 1-based line in the manifest file
  std::string sample_id;
  std::string message;
};

Json to_json(const QAPair& pair);
/// Pool record: {pair_id, image_path, question, options, answer, modality, capability, source?}.
QAPair pair_from_json(const Json& j);

Json to_json(const DegradationSpec& spec);
DegradationSpec spec_from_json(const Json& j);

Json to_json(const DegradedSample& sample);
DegradedSample sample_from_json(const Json& j);

/// One compact JSON object per line, trailing newline.
std::string serialize_manifest(const std::vector<DegradedSample>& samples);
std::vector<DegradedSample> parse_manifest(const std::string& text);

std::vector<DegradedSample> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<DegradedSample>& samples);

std::vector<QAPair> read_pool(const std::filesystem::path& path);

/// Checks every record against the domain invariants.
/// Throws IoError when unreadable, ParseError on malformed JSON or schema-version mismatch.
std::vector<Violation> validate_manifest(const std::filesystem::path& path);
std::vector<Violation> validate_manifest_text(const std::string& text);

/// Invariant check of one typed record.
std::vector<std::string> check_sample(const DegradedSample& sample);

}  // namespace medq
