#include "medq/eval/mock_endpoint.hpp"

#include <sstream>

#include <httplib.h>

#include "medq/error.hpp"
#include "medq/eval/prompt.hpp"
#include "medq/manifest.hpp"

namespace medq::eval {

MockMode parse_mock_mode(const std::string& name) {
  if (name == "correct") return MockMode::Correct;
  if (name == "random") return MockMode::Random;
  if (name == "scripted") return MockMode::Scripted;
  if (name == "timeout") return MockMode::Timeout;
  if (name == "unauthorized") return MockMode::Unauthorized;
  if (name == "malformed") return MockMode::Malformed;
  throw InvalidArgument("unknown mock mode '" + name + "'");
}

std::map<std::string, char> answer_key_for(const std::vector<DegradedSample>& manifest) {
  std::map<std::string, char> key;
  for (const auto& s : manifest) key.emplace(render_prompt(s.pair), s.pair.answer);
  return key;
}

namespace {

std::size_t count_options(const std::string& prompt) {
  std::size_t k = 0;
  std::istringstream in(prompt);
  std::string line;
  while (std::getline(in, line)) {
    if (line.size() >= 3 && line[0] == static_cast<char>('A' + k) && line[1] == '.' && line[2] == ' ') ++k;
  }
  return k;
}

std::string chat_reply(const std::string& text) {
  Json j;
  j["id"] = "mock";
  j["object"] = "chat.completion";
  j["choices"] = Json::array({{{"index", 0},
                               {"message", {{"role", "assistant"}, {"content", text}}},
                               {"finish_reason", "stop"}}});
  return j.dump();
}

}  // namespace

MockEndpoint::MockEndpoint(MockConfig config)
    : config_(std::move(config)), server_(std::make_unique<httplib::Server>()), rng_(config_.seed) {
  install_routes();
}

MockEndpoint::~MockEndpoint() { stop(); }

void MockEndpoint::install_routes() {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const std::size_t n = requests_++;
    std::string prompt;
    try {
      const Json body = Json::parse(req.body);
      for (const auto& part : body.at("messages").at(0).at("content")) {
        if (part.value("type", "") == "text") prompt = part.at("text").get<std::string>();
      }
    } catch (const Json::exception&) {
      res.status = 400;
      res.set_content(R"({"error":"bad request"})", "application/json");
      return;
    }
    std::string answer;
    {
      std::lock_guard lock(mu_);
      prompts_.push_back(prompt);
      if (static_cast<int>(n) < config_.fail_first) {
        res.status = 503;
        res.set_content(R"({"error":"unavailable"})", "application/json");
        return;
      }
      switch (config_.mode) {
        case MockMode::Correct: {
          auto it = config_.answer_key.find(prompt);
          answer = it == config_.answer_key.end() ? "I cannot tell." : std::string(1, it->second);
          break;
        }
        case MockMode::Random: {
          const std::size_t k = std::max<std::size_t>(count_options(prompt), 1);
          answer = std::string(1, option_label(static_cast<std::size_t>(rng_() % k)));
          break;
        }
        case MockMode::Scripted:
          answer = config_.script.empty() ? "" : config_.script[script_pos_++ % config_.script.size()];
          break;
        case MockMode::Timeout:
        case MockMode::Unauthorized:
        case MockMode::Malformed:
          break;
      }
    }
    switch (config_.mode) {
      case MockMode::Unauthorized:
        res.status = 401;
        res.set_content(R"({"error":"invalid api key"})", "application/json");
        return;
      case MockMode::Malformed:
        res.set_content(R"({"unexpected": true})", "application/json");
        return;
      case MockMode::Timeout:
        std::this_thread::sleep_for(config_.delay);
        res.set_content(chat_reply("A"), "application/json");
        return;
      default:
        res.set_content(chat_reply(answer), "application/json");
    }
  };
  server_->Post("/chat/completions", handler);
  server_->Post("/v1/chat/completions", handler);
}

int MockEndpoint::start(const std::string& host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) throw IoError("mock endpoint: cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void MockEndpoint::run(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!server_->listen(host, port)) throw IoError("mock endpoint: cannot listen on " + host + ":" + std::to_string(port));
}

void MockEndpoint::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockEndpoint::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

std::vector<std::string> MockEndpoint::prompts() const {
  std::lock_guard lock(mu_);
  return prompts_;
}

}  // namespace medq::eval
