#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "medq/types.hpp"

namespace httplib {
class Server;
}

namespace medq::eval {

enum class MockMode {
  Correct,    // answers from the answer key
  Random,     // uniform over the prompt's options
  Scripted,   // replays `script` in request order, cycling
  Timeout,    // stalls for `delay` before replying
  Unauthorized,
  Malformed,  // 200 with a body that is not a chat reply
};

MockMode parse_mock_mode(const std::string& name);

struct MockConfig {
  MockMode mode = MockMode::Correct;
  /// Prompt text -> correct label, used by MockMode::Correct.
  std::map<std::string, char> answer_key;
  std::vector<std::string> script;
  std::chrono::milliseconds delay{2000};
  std::uint64_t seed = 0;
  /// When set, this many leading requests fail with HTTP 503 before the mode applies.
  int fail_first = 0;
};

/// Answer key built from rendered prompts of every sample in a manifest.
std::map<std::string, char> answer_key_for(const std::vector<DegradedSample>& manifest);

/// A local chat-completions server for harness tests and dry runs.
class MockEndpoint {
 public:
  explicit MockEndpoint(MockConfig config);
  ~MockEndpoint();
  MockEndpoint(const MockEndpoint&) = delete;
  MockEndpoint& operator=(const MockEndpoint&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  std::string base_url() const;
  std::size_t request_count() const { return requests_.load(); }
  /// Prompt texts in arrival order.
  std::vector<std::string> prompts() const;

 private:
  void install_routes();

  MockConfig config_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
  std::atomic<std::size_t> requests_{0};
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
  std::size_t script_pos_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace medq::eval
