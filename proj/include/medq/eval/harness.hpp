#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "medq/error.hpp"
#include "medq/manifest.hpp"
#include "medq/types.hpp"

namespace medq::eval {

/// A failure worth retrying: timeout, connection error, 429/5xx or a malformed reply.
class TransientError : public Error {
 public:
  using Error::Error;
};

struct Trial {
  std::string response;
  std::optional<char> label;
  double latency_ms = 0.0;
};

struct TrialRecord {
  std::string sample_id;
  std::string model;
  double temperature = 1.0;
  std::vector<Trial> trials;
};

Json to_json(const TrialRecord& r);
TrialRecord record_from_json(const Json& j);
std::string serialize_record(const TrialRecord& r);

/// Reads a results file. A truncated final line (interrupted write) is ignored.
std::vector<TrialRecord> read_results(const std::filesystem::path& path);

struct ChatRequest {
  std::string model;
  double temperature = 1.0;
  std::string prompt;
  std::string image_mime = "image/png";
  std::string image_base64;
};

/// Chat-completions body: one user message with a text part and an image_url data-URL part.
Json chat_payload(const ChatRequest& req);

/// Text of choices[0].message.content (string or list of text parts). Throws TransientError.
std::string parse_chat_reply(const std::string& body);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  /// One request. Throws AuthError (fatal) or TransientError (retryable). Must be thread-safe.
  virtual std::string complete(const ChatRequest& req) = 0;
};

class HttpChatClient : public ChatClient {
 public:
  /// `base_url` like http://host:port/v1; requests go to <base_url>/chat/completions.
  HttpChatClient(ModelEndpoint endpoint, std::string api_key);
  std::string complete(const ChatRequest& req) override;

 private:
  ModelEndpoint endpoint_;
  std::string api_key_;
  std::string origin_;
  std::string path_prefix_;
};

/// Reads the key named by endpoint.credential_env; empty when unset.
std::string api_key_from_env(const ModelEndpoint& endpoint);

/// Loads a rendered sample image as (mime, base64). Non-PNG/JPEG inputs are re-encoded as PNG.
std::pair<std::string, std::string> encode_image_attachment(const std::filesystem::path& path);

/// T sequential requests for one sample. Each trial retries up to endpoint.max_retries times
/// with exponential backoff; an exhausted trial records response "" and no label.
TrialRecord run_trials(ChatClient& client, const ModelEndpoint& endpoint, const DegradedSample& sample,
                       const std::filesystem::path& image_root, int trials);

struct BenchmarkOptions {
  int trials = 3;
  unsigned parallel = 4;
  /// Directory that manifest image paths are relative to.
  std::filesystem::path image_root;
  /// Optional cap on samples processed in this invocation (for chunked runs).
  std::optional<std::size_t> limit;
  /// Called on the writer thread after each record is appended.
  std::function<void(const TrialRecord&)> on_record;
};

struct BenchmarkSummary {
  std::size_t eligible = 0;  // non-discarded samples in the manifest
  std::size_t skipped = 0;   // already present in the results file
  std::size_t written = 0;
};

/// Appends one record per non-discarded sample not yet in `out`. Workers send records to a
/// single writer; an AuthError stops dispatch and is rethrown after in-flight work drains.
BenchmarkSummary run_benchmark(const std::vector<DegradedSample>& manifest, ChatClient& client,
                               const ModelEndpoint& endpoint, const BenchmarkOptions& options,
                               const std::filesystem::path& out);

}  // namespace medq::eval
