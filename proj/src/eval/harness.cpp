#include "medq/eval/harness.hpp"

#include <openssl/evp.h>

#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_set>

#include <httplib.h>

#include "medq/eval/prompt.hpp"
#include "medq/image_io.hpp"

namespace medq::eval {

namespace fs = std::filesystem;

Json to_json(const TrialRecord& r) {
  Json j;
  j["sample_id"] = r.sample_id;
  j["model"] = r.model;
  j["temperature"] = r.temperature;
  j["trials"] = Json::array();
  for (const auto& t : r.trials) {
    Json tj;
    tj["response"] = t.response;
    tj["label"] = t.label ? Json(std::string(1, *t.label)) : Json(nullptr);
    tj["latency_ms"] = t.latency_ms;
    j["trials"].push_back(std::move(tj));
  }
  return j;
}

TrialRecord record_from_json(const Json& j) {
  try {
    TrialRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    for (const auto& tj : j.at("trials")) {
      Trial t;
      t.response = tj.at("response").get<std::string>();
      const auto& label = tj.at("label");
      if (!label.is_null()) {
        const auto s = label.get<std::string>();
        if (s.size() != 1 || s[0] < 'A' || s[0] > 'Z') throw ParseError("invalid trial label '" + s + "'");
        t.label = s[0];
      }
      t.latency_ms = tj.value("latency_ms", 0.0);
      r.trials.push_back(std::move(t));
    }
    return r;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("results record: ") + e.what());
  }
}

std::string serialize_record(const TrialRecord& r) { return to_json(r).dump() + "\n"; }

std::vector<TrialRecord> read_results(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<TrialRecord> out;
  std::size_t pos = 0;
  std::size_t number = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // unterminated tail from an interrupted write
    ++number;
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ParseError("results line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

Json chat_payload(const ChatRequest& req) {
  Json text_part;
  text_part["type"] = "text";
  text_part["text"] = req.prompt;
  Json image_part;
  image_part["type"] = "image_url";
  image_part["image_url"] = {{"url", "data:" + req.image_mime + ";base64," + req.image_base64}};
  Json message;
  message["role"] = "user";
  message["content"] = Json::array({text_part, image_part});
  Json body;
  body["model"] = req.model;
  body["temperature"] = req.temperature;
  body["messages"] = Json::array({message});
  return body;
}

std::string parse_chat_reply(const std::string& body) {
  try {
    const Json j = Json::parse(body);
    const Json& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    if (content.is_null()) return "";
    if (content.is_array()) {
      std::string out;
      for (const auto& part : content) {
        if (part.value("type", "") == "text") out += part.at("text").get<std::string>();
      }
      return out;
    }
  } catch (const Json::exception& e) {
    throw TransientError(std::string("malformed endpoint reply: ") + e.what());
  }
  throw TransientError("malformed endpoint reply: unsupported content");
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

HttpChatClient::HttpChatClient(ModelEndpoint endpoint, std::string api_key)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)) {
  const auto scheme = endpoint_.base_url.find("://");
  if (scheme == std::string::npos) throw InvalidArgument("endpoint URL needs a scheme: " + endpoint_.base_url);
  const auto slash = endpoint_.base_url.find('/', scheme + 3);
  origin_ = endpoint_.base_url.substr(0, slash);
  path_prefix_ = slash == std::string::npos ? "" : endpoint_.base_url.substr(slash);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string HttpChatClient::complete(const ChatRequest& req) {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(endpoint_.timeout);
  cli.set_read_timeout(endpoint_.timeout);
  cli.set_write_timeout(endpoint_.timeout);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = cli.Post(path_prefix_ + "/chat/completions", headers, chat_payload(req).dump(), "application/json");
  if (!res) throw TransientError("request failed: " + httplib::to_string(res.error()));
  if (res->status == 401 || res->status == 403) {
    throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status != 200) throw TransientError("endpoint returned HTTP " + std::to_string(res->status));
  return parse_chat_reply(res->body);
}

std::string api_key_from_env(const ModelEndpoint& endpoint) {
  const char* v = std::getenv(endpoint.credential_env.c_str());
  return v ? std::string(v) : std::string();
}

std::pair<std::string, std::string> encode_image_attachment(const fs::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return {"image/png", base64_encode(read_file(path))};
  if (ext == ".jpg" || ext == ".jpeg") return {"image/jpeg", base64_encode(read_file(path))};
  return {"image/png", base64_encode(encode_png(load_image(path)))};
}

TrialRecord run_trials(ChatClient& client, const ModelEndpoint& endpoint, const DegradedSample& sample,
                       const fs::path& image_root, int trials) {
  if (trials < 1) throw InvalidArgument("trial count must be >= 1");
  ChatRequest req;
  req.model = endpoint.name;
  req.temperature = endpoint.temperature;
  req.prompt = render_prompt(sample.pair);
  std::tie(req.image_mime, req.image_base64) = encode_image_attachment(image_root / sample.pair.image_path);

  TrialRecord rec;
  rec.sample_id = sample.sample_id;
  rec.model = endpoint.name;
  rec.temperature = endpoint.temperature;
  for (int t = 0; t < trials; ++t) {
    const auto start = std::chrono::steady_clock::now();
    Trial trial;
    for (int attempt = 0;; ++attempt) {
      try {
        trial.response = client.complete(req);
        trial.label = extract_answer(trial.response, sample.pair.options.size());
        break;
      } catch (const TransientError&) {
        if (attempt >= endpoint.max_retries) {
          trial.response.clear();
          trial.label.reset();
          break;
        }
        std::this_thread::sleep_for(endpoint.backoff_base * (1LL << std::min(attempt, 16)));
      }
    }
    trial.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    rec.trials.push_back(std::move(trial));
  }
  return rec;
}

namespace {

// Drops a partially written final line so appended records start on a fresh line.
void repair_tail(const fs::path& path) {
  if (!fs::exists(path)) return;
  std::ifstream in(path, std::ios::binary);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  if (text.empty() || text.back() == '\n') return;
  const auto nl = text.rfind('\n');
  fs::resize_file(path, nl == std::string::npos ? 0 : nl + 1);
}

}  // namespace

BenchmarkSummary run_benchmark(const std::vector<DegradedSample>& manifest, ChatClient& client,
                               const ModelEndpoint& endpoint, const BenchmarkOptions& options,
                               const fs::path& out) {
  BenchmarkSummary summary;
  std::unordered_set<std::string> done;
  if (fs::exists(out)) {
    repair_tail(out);
    for (const auto& r : read_results(out)) done.insert(r.sample_id);
  }
  std::vector<const DegradedSample*> todo;
  for (const auto& s : manifest) {
    if (s.review.state == ReviewState::Discarded) continue;
    ++summary.eligible;
    if (done.count(s.sample_id)) {
      ++summary.skipped;
      continue;
    }
    if (!options.limit || todo.size() < *options.limit) todo.push_back(&s);
  }
  if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
  std::ofstream file(out, std::ios::binary | std::ios::app);
  if (!file) throw IoError("cannot open " + out.string() + " for appending");

  std::mutex mu;
  std::condition_variable cv;
  std::deque<TrialRecord> ready;
  std::size_t finished_workers = 0;
  std::exception_ptr failure;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};

  const unsigned workers =
      std::max(1u, std::min<unsigned>(options.parallel, static_cast<unsigned>(std::max<std::size_t>(todo.size(), 1))));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < todo.size() && !abort; i = next++) {
          try {
            TrialRecord rec = run_trials(client, endpoint, *todo[i], options.image_root, options.trials);
            std::lock_guard lock(mu);
            ready.push_back(std::move(rec));
            cv.notify_one();
          } catch (...) {
            std::lock_guard lock(mu);
            if (!failure) failure = std::current_exception();
            abort = true;
          }
        }
        std::lock_guard lock(mu);
        ++finished_workers;
        cv.notify_one();
      });
    }
    // Single writer: this thread owns the results file.
    for (;;) {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return !ready.empty() || finished_workers == workers; });
      if (ready.empty() && finished_workers == workers) break;
      TrialRecord rec = std::move(ready.front());
      ready.pop_front();
      lock.unlock();
      file << serialize_record(rec);
      file.flush();
      if (!file) throw IoError("write to " + out.string() + " failed");
      ++summary.written;
      if (options.on_record) options.on_record(rec);
    }
  }
  if (failure) std::rethrow_exception(failure);
  return summary;
}

}  // namespace medq::eval
