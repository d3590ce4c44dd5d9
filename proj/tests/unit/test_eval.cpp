#include <doctest.h>

#include <fstream>
#include <set>

#include "../support/fixtures.hpp"
#include "medq/error.hpp"
#include "medq/eval/harness.hpp"
#include "medq/eval/mock_endpoint.hpp"
#include "medq/eval/prompt.hpp"
#include "medq/metrics/metrics.hpp"

#ifndef MEDQ_TEST_DATA
#define MEDQ_TEST_DATA "tests/data"
#endif

using namespace medq;
using namespace medq::eval;

namespace {

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

/// Manifest of n samples sharing one small PNG under `root`.
std::vector<DegradedSample> toy_manifest(const std::filesystem::path& root, std::size_t n, std::size_t k = 4) {
  save_image(testing::synthetic_image(16, 16, 1, 1), root / "images/shared.png");
  std::vector<DegradedSample> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i].sample_id = "s" + std::to_string(i);
    v[i].pair = testing::make_pair("p" + std::to_string(i), Modality::CT, k, option_label(i % k));
    v[i].pair.image_path = "images/shared.png";
  }
  return v;
}

ModelEndpoint endpoint_for(const MockEndpoint& mock) {
  ModelEndpoint e;
  e.name = "mock-model";
  e.base_url = mock.base_url();
  e.timeout = std::chrono::milliseconds(2000);
  e.max_retries = 2;
  e.backoff_base = std::chrono::milliseconds(1);
  return e;
}

double per_trial_accuracy(const std::vector<TrialRecord>& records, const std::vector<DegradedSample>& manifest) {
  std::map<std::string, const DegradedSample*> by_id;
  for (const auto& s : manifest) by_id[s.sample_id] = &s;
  std::vector<metrics::SampleMetrics> m;
  for (const auto& r : records) m.push_back(metrics::sample_metrics(r, by_id.at(r.sample_id)->pair));
  return metrics::accuracy(m);
}

/// In-process client that records concurrency and requests.
class CountingClient : public ChatClient {
 public:
  std::string complete(const ChatRequest& req) override {
    const int now = ++in_flight_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    {
      std::lock_guard lock(mu_);
      prompts_.insert(req.prompt);
      ++calls_;
    }
    --in_flight_;
    return "A";
  }
  int peak() const { return peak_; }
  std::multiset<std::string> prompts() const { return prompts_; }
  int calls() const { return calls_; }

 private:
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
  std::mutex mu_;
  std::multiset<std::string> prompts_;
  int calls_ = 0;
};

}  // namespace

TEST_SUITE("prompt") {
  TEST_CASE("golden prompt") {
    const std::string golden = read_text(std::filesystem::path(MEDQ_TEST_DATA) / "prompt_golden.txt");
    REQUIRE_FALSE(golden.empty());
    const std::string got = render_prompt("Which abnormality is visible in this chest X-ray?",
                                          {"Pneumothorax", "Pleural effusion", "Cardiomegaly", "No abnormality"});
    CHECK(got == golden);
  }

  TEST_CASE("option lines in order") {
    const auto pair = testing::make_pair("x", Modality::MRI, 4);
    const std::string p = render_prompt(pair);
    std::size_t pos = 0;
    for (char c : std::string("ABCD")) {
      const auto at = p.find(std::string("\n") + c + ". ", pos);
      REQUIRE(at != std::string::npos);
      pos = at + 1;
    }
    CHECK(p.substr(p.size() - 7) == "Answer:");
    CHECK_THROWS_AS(render_prompt("q", {"only"}), InvalidArgument);
  }

  TEST_CASE("answer extraction priority") {
    CHECK(extract_answer("B", 4) == 'B');
    CHECK(extract_answer("  D \n", 4) == 'D');
    CHECK(extract_answer("The answer is C.", 4) == 'C');
    CHECK(extract_answer("no idea", 4) == std::nullopt);
    CHECK(extract_answer("", 4) == std::nullopt);
    CHECK(extract_answer("E", 4) == std::nullopt);
    CHECK(extract_answer("E", 5) == 'E');
    // 'I' is not a label among four options, so the scan continues to 'B'.
    CHECK(extract_answer("I think B", 4) == 'B');
    CHECK(extract_answer("a", 4) == std::nullopt);
  }
}

TEST_SUITE("harness") {
  TEST_CASE("record JSON round trip") {
    TrialRecord r{"s1", "m", 1.0, {{"A", 'A', 12.5}, {"", std::nullopt, 3.0}}};
    const auto back = record_from_json(to_json(r));
    CHECK(back.sample_id == "s1");
    CHECK(back.trials.size() == 2);
    CHECK(back.trials[0].label == 'A');
    CHECK_FALSE(back.trials[1].label.has_value());
    CHECK(to_json(r)["trials"][1]["label"].is_null());
  }

  TEST_CASE("chat payload and reply parsing") {
    ChatRequest req{"m", 1.0, "prompt text", "image/png", "QUJD"};
    const Json j = chat_payload(req);
    CHECK(j["model"] == "m");
    CHECK(j["temperature"] == 1.0);
    const auto& content = j["messages"][0]["content"];
    CHECK(content[0]["text"] == "prompt text");
    CHECK(content[1]["image_url"]["url"] == "data:image/png;base64,QUJD");
    CHECK(parse_chat_reply(R"({"choices":[{"message":{"content":"B"}}]})") == "B");
    CHECK(parse_chat_reply(R"({"choices":[{"message":{"content":[{"type":"text","text":"C"}]}}]})") == "C");
    CHECK_THROWS_AS(parse_chat_reply("{}"), TransientError);
    CHECK_THROWS_AS(parse_chat_reply("not json"), TransientError);
    CHECK(base64_encode({'a', 'b', 'c', 'd'}) == "YWJjZA==");
  }

  TEST_CASE("scripted trials") {
    testing::TempDir dir;
    const auto manifest = toy_manifest(dir.path(), 1);
    MockConfig cfg;
    cfg.mode = MockMode::Scripted;
    cfg.script = {"A", "A", "B"};
    MockEndpoint mock(cfg);
    mock.start();
    HttpChatClient client(endpoint_for(mock), "");
    const auto rec = run_trials(client, endpoint_for(mock), manifest[0], dir.path(), 3);
    REQUIRE(rec.trials.size() == 3);
    CHECK(rec.trials[0].label == 'A');
    CHECK(rec.trials[1].label == 'A');
    CHECK(rec.trials[2].label == 'B');
    CHECK(rec.temperature == 1.0);
    const auto votes = metrics::sample_metrics(rec, manifest[0].pair).votes;
    CHECK(votes.shares()[0] == doctest::Approx(2.0 / 3.0));
    CHECK(votes.shares()[1] == doctest::Approx(1.0 / 3.0));
    CHECK(mock.prompts().at(0) == render_prompt(manifest[0].pair));
  }

  TEST_CASE("timeouts exhaust retries and record empty trials") {
    testing::TempDir dir;
    const auto manifest = toy_manifest(dir.path(), 2);
    MockConfig cfg;
    cfg.mode = MockMode::Timeout;
    cfg.delay = std::chrono::milliseconds(400);
    MockEndpoint mock(cfg);
    mock.start();
    auto ep = endpoint_for(mock);
    ep.timeout = std::chrono::milliseconds(100);
    HttpChatClient client(ep, "");
    BenchmarkOptions opt;
    opt.trials = 2;
    opt.parallel = 2;
    opt.image_root = dir.path();
    const auto out = dir / "results.jsonl";
    const auto summary = run_benchmark(manifest, client, ep, opt, out);
    CHECK(summary.written == 2);
    for (const auto& r : read_results(out)) {
      REQUIRE(r.trials.size() == 2);
      for (const auto& t : r.trials) {
        CHECK(t.response.empty());
        CHECK_FALSE(t.label.has_value());
      }
    }
    // 2 samples x 2 trials x (1 + max_retries) attempts.
    CHECK(mock.request_count() == 12);
  }

  TEST_CASE("transient failures are retried") {
    testing::TempDir dir;
    const auto manifest = toy_manifest(dir.path(), 1);
    MockConfig cfg;
    cfg.mode = MockMode::Scripted;
    cfg.script = {"C"};
    cfg.fail_first = 2;
    MockEndpoint mock(cfg);
    mock.start();
    HttpChatClient client(endpoint_for(mock), "");
    const auto rec = run_trials(client, endpoint_for(mock), manifest[0], dir.path(), 1);
    CHECK(rec.trials[0].label == 'C');
    CHECK(mock.request_count() == 3);

    MockConfig bad;
    bad.mode = MockMode::Malformed;
    MockEndpoint malformed(bad);
    malformed.start();
    HttpChatClient mclient(endpoint_for(malformed), "");
    const auto mrec = run_trials(mclient, endpoint_for(malformed), manifest[0], dir.path(), 1);
    CHECK_FALSE(mrec.trials[0].label.has_value());
    CHECK(malformed.request_count() == 3);
  }

  TEST_CASE("authentication failure aborts the run") {
    testing::TempDir dir;
    const auto manifest = toy_manifest(dir.path(), 20);
    MockConfig cfg;
    cfg.mode = MockMode::Unauthorized;
    MockEndpoint mock(cfg);
    mock.start();
    HttpChatClient client(endpoint_for(mock), "secret");
    BenchmarkOptions opt;
    opt.trials = 1;
    opt.parallel = 1;
    opt.image_root = dir.path();
    CHECK_THROWS_AS(run_benchmark(manifest, client, endpoint_for(mock), opt, dir / "r.jsonl"), AuthError);
    CHECK(mock.request_count() == 1);
  }

  TEST_CASE("always-correct endpoint gives accuracy 1") {
    testing::TempDir dir;
    const auto manifest = toy_manifest(dir.path(), 24);
    MockConfig cfg;
    cfg.mode = MockMode::Correct;
    cfg.answer_key = answer_key_for(manifest);
    MockEndpoint mock(cfg);
    mock.start();
    HttpChatClient client(endpoint_for(mock), "");
    BenchmarkOptions opt;
    opt.trials = 3;
    opt.parallel = 4;
    opt.image_root = dir.path();
    run_benchmark(manifest, client, endpoint_for(mock), opt, dir / "r.jsonl");
    const auto records = read_results(dir / "r.jsonl");
    CHECK(records.size() == 24);
    CHECK(per_trial_accuracy(records, manifest) == 1.0);
  }

  TEST_CASE("resume issues only the remaining samples") {
    testing::TempDir dir;
    const auto manifest = toy_manifest(dir.path(), 10);
    MockConfig cfg;
    cfg.mode = MockMode::Correct;
    cfg.answer_key = answer_key_for(manifest);
    MockEndpoint mock(cfg);
    mock.start();
    HttpChatClient client(endpoint_for(mock), "");
    BenchmarkOptions opt;
    opt.trials = 1;
    opt.parallel = 2;
    opt.image_root = dir.path();
    opt.limit = 5;
    const auto out = dir / "r.jsonl";
    auto first = run_benchmark(manifest, client, endpoint_for(mock), opt, out);
    CHECK(first.written == 5);
    CHECK(mock.request_count() == 5);
    // Simulate a torn write from the interrupted process.
    {
      std::ofstream f(out, std::ios::app | std::ios::binary);
      f << R"({"sample_id":"s9","model":"mo)";
    }
    opt.limit.reset();
    const auto before = mock.prompts().size();
    auto second = run_benchmark(manifest, client, endpoint_for(mock), opt, out);
    CHECK(second.skipped == 5);
    CHECK(second.written == 5);
    const auto prompts = mock.prompts();
    std::set<std::string> done_prompts(prompts.begin(), prompts.begin() + before);
    for (std::size_t i = before; i < prompts.size(); ++i) CHECK(done_prompts.count(prompts[i]) == 0);
    const auto records = read_results(out);
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.sample_id);
    CHECK(records.size() == 10);
    CHECK(ids.size() == 10);
    auto third = run_benchmark(manifest, client, endpoint_for(mock), opt, out);
    CHECK(third.written == 0);
  }

  TEST_CASE("discarded samples are not evaluated") {
    testing::TempDir dir;
    auto manifest = toy_manifest(dir.path(), 4);
    manifest[1].review = {ReviewState::Discarded, DiscardReason::PoorBaseline};
    manifest[2].review = {ReviewState::Retained, std::nullopt};
    CountingClient client;
    BenchmarkOptions opt;
    opt.trials = 1;
    opt.image_root = dir.path();
    const auto s = run_benchmark(manifest, client, ModelEndpoint{}, opt, dir / "r.jsonl");
    CHECK(s.eligible == 3);
    CHECK(s.written == 3);
  }

  TEST_CASE("parallelism bounds in-flight requests and keeps the request multiset") {
    testing::TempDir dir;
    const auto manifest = toy_manifest(dir.path(), 30);
    std::multiset<std::string> reference;
    for (unsigned p : {1u, 3u, 8u}) {
      CountingClient client;
      BenchmarkOptions opt;
      opt.trials = 2;
      opt.parallel = p;
      opt.image_root = dir.path();
      run_benchmark(manifest, client, ModelEndpoint{}, opt, dir / ("r" + std::to_string(p) + ".jsonl"));
      CHECK(client.peak() <= static_cast<int>(p));
      CHECK(client.calls() == 60);
      if (reference.empty()) reference = client.prompts();
      CHECK(client.prompts() == reference);
    }
  }
}
