// Acceptance run: one PASS/FAIL line per headline criterion, nonzero exit on any failure.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../support/fixtures.hpp"
#include "medq/dataset/pipeline.hpp"
#include "medq/degrade/ct.hpp"
#include "medq/degrade/mri.hpp"
#include "medq/degrade/phantom.hpp"
#include "medq/degrade/registry.hpp"
#include "medq/eval/harness.hpp"
#include "medq/eval/mock_endpoint.hpp"
#include "medq/eval/prompt.hpp"
#include "medq/hashing.hpp"
#include "medq/metrics/metrics.hpp"
#include "medq/metrics/report.hpp"

#ifndef MEDQ_TEST_DATA
#define MEDQ_TEST_DATA "tests/data"
#endif

using namespace medq;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Collects failure messages for one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

std::vector<std::uint8_t> bytes_of(const Image& img) { return encode_png(img, 16); }

double l2_diff(const Image& a, const Image& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a.pixels()[i]) - b.pixels()[i];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Runs jobs on `threads` workers pulling from a shared counter.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// ---- criteria ----------------------------------------------------------------------------

Check identity_suite() {
  Check c;
  const auto t0 = Clock::now();
  const auto fixtures = testing::mixed_fixture_set();
  const auto& table = degrade::default_table();
  std::size_t cases = 0;
  for (const auto& e : degradation_catalog()) {
    for (std::size_t i = 0; i < fixtures.size(); ++i) {
      const auto& f = fixtures[i];
      const Modality m = e.supports(f.modality) ? f.modality : testing::modality_for(e.type);
      const auto want = bytes_of(f.image);

      DegradationSpec l0{e.type, Severity::L0, {}, 1000 + i};
      const Image a = degrade::apply_degradation(f.image, m, l0, table);
      DegradationSpec at_identity{e.type, Severity::L1, table.identity(e.type), 1000 + i};
      const Image b = degrade::apply_degradation(f.image, m, at_identity, table);
      DegradationSpec at_zero{e.type, Severity::L1, table.params_at(e.type, 0.0), 7};
      const Image c0 = degrade::apply_degradation(f.image, m, at_zero, table);
      for (const Image* out : {&a, &b, &c0}) {
        ++cases;
        c.expect(identical(*out, f.image) && bytes_of(*out) == want,
                 std::string(e.name) + " changed fixture " + std::to_string(i));
      }
    }
  }
  const double secs = seconds_since(t0);
  c.expect(cases == 18 * 10 * 3, "case count " + std::to_string(cases));
  c.expect(secs < 5.0, "runtime " + fmt(secs) + " s");
  return c;
}

Check determinism_suite() {
  Check c;
  const auto& table = degrade::default_table();
  // Operators whose output depends on the seed through a continuous draw.
  const std::set<DegradationType> seeded = {
      DegradationType::GaussianNoise, DegradationType::LowDose,   DegradationType::Undersampling,
      DegradationType::BiasField,     DegradationType::BloodCell, DegradationType::DarkSpots,
      DegradationType::Bubble,        DegradationType::MotionBlur, DegradationType::ObjectMovement};
  // Operators whose seed only picks a sign.
  const std::set<DegradationType> sign_only = {DegradationType::AdjustBrightness, DegradationType::Exposure,
                                               DegradationType::ObjectRotation};

  struct Job {
    DegradationType type;
    int image;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  std::vector<std::pair<Image, Modality>> images;
  for (const auto& e : degradation_catalog()) {
    const Modality m = testing::modality_for(e.type);
    const int idx = static_cast<int>(images.size());
    images.emplace_back(testing::synthetic_image(40, 40, testing::channels_for(m), 300 + idx), m);
    const int seeds = sign_only.count(e.type) ? 8 : 2;
    for (int s = 1; s <= seeds; ++s) {
      jobs.push_back({e.type, idx, static_cast<std::uint64_t>(s)});
      jobs.push_back({e.type, idx, static_cast<std::uint64_t>(s)});
    }
  }
  auto run = [&](unsigned threads) {
    std::vector<std::vector<std::uint8_t>> out(jobs.size());
    parallel_for(jobs.size(), threads, [&](std::size_t j) {
      const auto& job = jobs[j];
      const auto& [img, m] = images[job.image];
      const DegradationSpec spec{job.type, Severity::L2, {}, job.seed};
      out[j] = bytes_of(degrade::apply_degradation(img, m, spec, table));
    });
    return out;
  };
  const auto serial = run(1);
  const auto parallel = run(8);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    c.expect(serial[j] == parallel[j], std::string(to_string(jobs[j].type)) + " differs between 1 and 8 threads");
  }
  std::map<DegradationType, std::vector<std::size_t>> by_type;
  for (std::size_t j = 0; j < jobs.size(); j += 2) {
    c.expect(serial[j] == serial[j + 1], std::string(to_string(jobs[j].type)) + " differs for equal seeds");
    by_type[jobs[j].type].push_back(j);
  }
  for (const auto& [type, idx] : by_type) {
    if (seeded.count(type)) {
      c.expect(serial[idx[0]] != serial[idx[1]], std::string(to_string(type)) + " ignores its seed");
    } else if (sign_only.count(type)) {
      std::set<std::vector<std::uint8_t>> distinct;
      for (std::size_t j : idx) distinct.insert(serial[j]);
      c.expect(distinct.size() == 2, std::string(to_string(type)) + " sign variants " + std::to_string(distinct.size()));
    }
  }
  return c;
}

Check monotonicity_suite() {
  Check c;
  const auto& table = degrade::default_table();
  for (const auto& e : degradation_catalog()) {
    const Modality m = testing::modality_for(e.type);
    std::vector<double> p1(20), p2(20);
    parallel_for(20, 8, [&](std::size_t i) {
      const Image clean = testing::synthetic_image(64, 64, testing::channels_for(m), 500 + i);
      const auto seed = hash64({"monotone", std::string(e.name), std::to_string(i)});
      const DegradationSpec l1{e.type, Severity::L1, {}, seed};
      const DegradationSpec l2{e.type, Severity::L2, {}, seed};
      p1[i] = psnr(clean, degrade::apply_degradation(clean, m, l1, table));
      p2[i] = psnr(clean, degrade::apply_degradation(clean, m, l2, table));
    });
    double m1 = 0, m2 = 0;
    for (int i = 0; i < 20; ++i) {
      m1 += p1[i] / 20;
      m2 += p2[i] / 20;
    }
    c.expect(m1 >= m2, std::string(e.name) + " L1 " + fmt(m1) + " dB < L2 " + fmt(m2) + " dB");
  }
  return c;
}

Check tomography_suite() {
  Check c;
  {
    const Image phantom = degrade::shepp_logan(256);
    const auto t0 = Clock::now();
    const auto sino = degrade::radon_forward(phantom, degrade::full_angles(360));
    const Image rec = degrade::fbp_reconstruct(sino, 256);
    const double secs = seconds_since(t0);
    const double p = psnr(phantom, rec);
    c.expect(p >= 25.0, "Shepp-Logan PSNR " + fmt(p) + " dB");
    c.expect(secs < 10.0, "radon+fbp took " + fmt(secs) + " s");
  }
  {
    const double r = 40.0;
    const auto s = degrade::radon_forward(degrade::disk_phantom(128, r), degrade::full_angles(12));
    const double half = 0.5 * (s.bins - 1);
    double worst = 0.0;
    for (int v = 0; v < s.views; ++v)
      for (int b = 0; b < s.bins; ++b) {
        const double u = b - half;
        if (std::abs(u) >= 0.9 * r) continue;
        const double chord = 2.0 * std::sqrt(r * r - u * u);
        worst = std::max(worst, std::abs(s.at(v, b) - chord) / chord);
      }
    c.expect(worst < 0.02, "disk chord relative error " + fmt(worst));
  }
  {
    const Image phantom = degrade::shepp_logan(128, 2);
    const Image full = degrade::ct_roundtrip(phantom);
    const double s4 = l2_diff(degrade::sparse_view(phantom, 4), full);
    const double s12 = l2_diff(degrade::sparse_view(phantom, 12), full);
    c.expect(s12 > s4, "sparse-view error stride 12 " + fmt(s12) + " <= stride 4 " + fmt(s4));
    const double a120 = l2_diff(degrade::limited_angle(phantom, 120.0), full);
    const double a90 = l2_diff(degrade::limited_angle(phantom, 90.0), full);
    c.expect(a90 > a120, "limited-angle error 90 " + fmt(a90) + " <= 120 " + fmt(a120));
  }
  return c;
}

Check fourier_suite() {
  Check c;
  using degrade::Complex;
  const Image img = testing::synthetic_image(96, 80, 1, 41);
  const auto k = degrade::kspace_forward(img);
  const auto back = degrade::kspace_inverse_complex(k);
  double worst = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i) worst = std::max(worst, std::abs(back[i] - Complex(img.pixels()[i])));
  c.expect(worst <= 1e-5, "round trip error " + fmt(worst));

  double e_img = 0.0, e_k = 0.0;
  for (float v : img.pixels()) e_img += double(v) * v;
  for (const auto& z : k.data) e_k += std::norm(z);
  c.expect(std::abs(e_img - e_k) / e_img <= 1e-6, "Parseval relative error " + fmt(std::abs(e_img - e_k) / e_img));

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const int rows = k.rows;
    const double acs = 0.1;
    const auto mask = degrade::phase_encode_mask(rows, 0.25, acs, seed);
    auto masked = k;
    degrade::apply_row_mask(masked, mask);
    const int acs_rows = static_cast<int>(std::lround(acs * rows));
    for (int r = rows / 2 - acs_rows / 2; r < rows / 2 - acs_rows / 2 + acs_rows; ++r) {
      bool exact = mask[r] == 1;
      for (int col = 0; col < k.cols; ++col) exact = exact && masked.at(r, col) == k.at(r, col);
      c.expect(exact, "ACS row " + std::to_string(r) + " altered for seed " + std::to_string(seed));
    }
  }

  const Image full = degrade::undersample_kspace(img, 1.0, 0.08, 3);
  double id = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) id = std::max(id, std::abs(double(full.pixels()[i]) - img.pixels()[i]));
  c.expect(id <= 1e-5, "retain=1 deviation " + fmt(id));

  for (int ghosts : {2, 4, 8}) {
    const int h = 64;
    Image impulse(32, h, 1, 0.0f);
    impulse.at(12, 9) = 1.0f;
    const Image g = degrade::ghosting(impulse, ghosts, 0.3);
    std::vector<int> lit;
    for (int y = 0; y < h; ++y)
      if (g.at(12, y) > 1e-4f) lit.push_back(y);
    std::vector<int> want;
    for (int j = 0; j < ghosts; ++j) want.push_back((9 + j * h / ghosts) % h);
    std::sort(want.begin(), want.end());
    c.expect(lit == want, "ghost rows for k=" + std::to_string(ghosts) + " not at spacing H/k");
  }
  return c;
}

double brute_confidence(const std::vector<int>& counts) {
  int m = 0;
  for (int v : counts) m += v;
  if (m == 0) return 0.0;
  double h = 0.0;
  for (int v : counts) {
    if (v == 0) continue;
    const double p = double(v) / m;
    h -= p * std::log(p);
  }
  return 1.0 - h / std::log(double(counts.size()));
}

Check metrics_oracle() {
  Check c;
  using Labels = std::vector<std::optional<char>>;
  double worst = 0.0;
  for (std::size_t k = 2; k <= 5; ++k) {
    for (int t = 1; t <= 6; ++t) {
      std::vector<int> counts(k + 1, 0);
      std::function<void(std::size_t, int)> rec = [&](std::size_t slot, int left) {
        if (slot == k) {
          counts[k] = left;
          Labels labels;
          for (std::size_t i = 0; i < k; ++i) labels.insert(labels.end(), counts[i], option_label(i));
          labels.insert(labels.end(), counts[k], std::nullopt);
          const double got = metrics::confidence(metrics::vote_distribution(labels, k));
          worst = std::max(worst, std::abs(got - brute_confidence({counts.begin(), counts.begin() + k})));
          return;
        }
        for (int v = 0; v <= left; ++v) {
          counts[slot] = v;
          rec(slot + 1, left - v);
        }
      };
      rec(0, t);
    }
    Labels uniform;
    for (std::size_t i = 0; i < k; ++i) uniform.push_back(option_label(i));
    c.expect(metrics::confidence(metrics::vote_distribution(uniform, k)) == 0.0, "uniform C != 0 for K=" + std::to_string(k));
    c.expect(metrics::confidence(metrics::vote_distribution(Labels(5, 'A'), k)) == 1.0,
             "unanimous C != 1 for K=" + std::to_string(k));
  }
  c.expect(worst <= 1e-12, "confidence vs brute force " + fmt(worst));

  std::mt19937_64 rng(99);
  double identity_err = 0.0;
  for (int run = 0; run < 200; ++run) {
    std::vector<metrics::SampleMetrics> samples;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      eval::TrialRecord r;
      r.sample_id = "s" + std::to_string(i);
      for (int t = 0; t < 5; ++t) {
        eval::Trial trial;
        const auto v = rng() % 5;
        if (v < 4) trial.label = option_label(v);
        r.trials.push_back(trial);
      }
      samples.push_back(metrics::sample_metrics(r, testing::make_pair("p", Modality::CT, 4, 'A')));
    }
    const auto m = metrics::run_metrics("r", samples);
    identity_err = std::max(identity_err, std::abs(m.calibration_shift + m.accuracy - m.mean_confidence));
  }
  c.expect(identity_err <= 4 * std::numeric_limits<double>::epsilon(), "shift + acc - mean C = " + fmt(identity_err));

  const std::vector<double> grid = {0.2, 0.5, 0.8};
  for (double a0 : grid)
    for (double a2 : grid)
      for (double d0 : grid)
        for (double d2 : grid) {
          c.expect(metrics::intra_model_dke(a0, a2, d0, d2) == (a2 < a0 && d2 >= d0), "intra DKE truth table");
        }
  for (double a0 : grid)
    for (double d0 : grid)
      for (double a1 : grid)
        for (double d1 : grid)
          for (double a2 : grid)
            for (double d2 : grid) {
              const std::vector<std::pair<double, double>> models = {{a0, d0}, {a1, d1}, {a2, d2}};
              int flagged = 0;
              for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j)
                  if (i != j && models[i].first < models[j].first && models[i].second > models[j].second) ++flagged;
              const auto r = metrics::inter_model_dke(models);
              c.expect(r.pairs.size() == 6 && r.fraction == flagged / 6.0, "inter DKE truth table");
            }
  return c;
}

Check report_arithmetic() {
  Check c;
  std::ifstream in(fs::path(MEDQ_TEST_DATA) / "severity_accuracy_reference.tsv");
  std::string line;
  std::size_t rows = 0;
  // 100 samples per level, 100 trials each: every two-decimal percentage is an exact trial count.
  constexpr int kSamples = 100;
  constexpr int kTrials = 100;
  std::vector<DegradedSample> manifest;
  for (Severity s : {Severity::L0, Severity::L1, Severity::L2}) {
    for (int i = 0; i < kSamples; ++i) {
      DegradedSample d;
      d.pair = testing::make_pair("q" + std::to_string(i), Modality::XRay, 4, 'A');
      if (s != Severity::L0) d.spec.type = DegradationType::GaussianNoise;
      d.spec.severity = s;
      d.sample_id = dataset::sample_id_for(d.pair.id, d.spec);
      manifest.push_back(d);
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string model, col;
    std::getline(fields, model, '\t');
    std::vector<double> v;
    while (std::getline(fields, col, '\t')) v.push_back(std::stod(col));
    if (v.size() != 5) {
      c.expect(false, "malformed reference row for " + model);
      continue;
    }
    ++rows;
    std::vector<eval::TrialRecord> results;
    for (int level = 0; level < 3; ++level) {
      const long correct = std::lround(v[level] * kTrials * kSamples / 100.0);
      for (int i = 0; i < kSamples; ++i) {
        eval::TrialRecord r;
        r.sample_id = manifest[level * kSamples + i].sample_id;
        r.model = model;
        for (int t = 0; t < kTrials; ++t) {
          eval::Trial trial;
          trial.label = static_cast<long>(i) * kTrials + t < correct ? 'A' : 'B';
          r.trials.push_back(trial);
        }
        results.push_back(std::move(r));
      }
    }
    const auto report = metrics::aggregate_report(results, manifest, {metrics::Axis::Severity, metrics::Axis::Model});
    if (report.rows.size() != 1 || !report.rows[0].drops.l1 || !report.rows[0].drops.l2) {
      c.expect(false, "no drop row for " + model);
      continue;
    }
    const auto& row = report.rows[0];
    c.expect(std::abs(100.0 * row.l0.accuracy - v[0]) < 1e-9, model + " L0 accuracy");
    c.expect(std::abs(*row.drops.l1 - v[3]) <= 0.01 + 1e-9,
             model + " L1-L0 " + fmt(*row.drops.l1) + " vs printed " + fmt(v[3]));
    c.expect(std::abs(*row.drops.l2 - v[4]) <= 0.01 + 1e-9,
             model + " L2-L0 " + fmt(*row.drops.l2) + " vs printed " + fmt(v[4]));
  }
  c.expect(rows == 40, "reference rows " + std::to_string(rows));
  return c;
}

ModelEndpoint endpoint_for(const eval::MockEndpoint& mock) {
  ModelEndpoint e;
  e.name = "mock-model";
  e.base_url = mock.base_url();
  e.timeout = std::chrono::milliseconds(5000);
  e.max_retries = 2;
  e.backoff_base = std::chrono::milliseconds(1);
  return e;
}

std::vector<DegradedSample> toy_manifest(const fs::path& root, std::size_t n) {
  save_image(testing::synthetic_image(16, 16, 1, 1), root / "images/shared.png");
  std::vector<DegradedSample> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i].sample_id = "s" + std::to_string(i);
    v[i].pair = testing::make_pair("p" + std::to_string(i), Modality::CT, 4, option_label(i % 4));
    v[i].pair.image_path = "images/shared.png";
  }
  return v;
}

double per_trial_accuracy(const fs::path& results, const std::vector<DegradedSample>& manifest) {
  std::map<std::string, const QAPair*> by_id;
  for (const auto& s : manifest) by_id[s.sample_id] = &s.pair;
  std::vector<metrics::SampleMetrics> m;
  for (const auto& r : eval::read_results(results)) m.push_back(metrics::sample_metrics(r, *by_id.at(r.sample_id)));
  return metrics::accuracy(m);
}

Check harness_end_to_end() {
  Check c;
  testing::TempDir dir("medq-accept");
  {
    const auto manifest = toy_manifest(dir.path(), 40);
    eval::MockConfig cfg;
    cfg.mode = eval::MockMode::Correct;
    cfg.answer_key = eval::answer_key_for(manifest);
    eval::MockEndpoint mock(cfg);
    mock.start();
    eval::HttpChatClient client(endpoint_for(mock), "");
    eval::BenchmarkOptions opt;
    opt.trials = 3;
    opt.image_root = dir.path();
    eval::run_benchmark(manifest, client, endpoint_for(mock), opt, dir / "correct.jsonl");
    const double acc = per_trial_accuracy(dir / "correct.jsonl", manifest);
    c.expect(acc == 1.0, "always-correct accuracy " + fmt(acc));
  }
  {
    const auto manifest = toy_manifest(dir.path(), 1200);
    eval::MockConfig cfg;
    cfg.mode = eval::MockMode::Random;
    cfg.seed = 2024;
    eval::MockEndpoint mock(cfg);
    mock.start();
    eval::HttpChatClient client(endpoint_for(mock), "");
    eval::BenchmarkOptions opt;
    opt.trials = 1;
    opt.parallel = 8;
    opt.image_root = dir.path();
    eval::run_benchmark(manifest, client, endpoint_for(mock), opt, dir / "random.jsonl");
    const double acc = per_trial_accuracy(dir / "random.jsonl", manifest);
    c.expect(acc >= 0.20 && acc <= 0.30, "uniform-random accuracy " + fmt(acc));
  }
  {
    const auto manifest = toy_manifest(dir.path(), 1);
    eval::MockConfig cfg;
    cfg.mode = eval::MockMode::Scripted;
    cfg.script = {"A", "A", "B"};
    eval::MockEndpoint mock(cfg);
    mock.start();
    eval::HttpChatClient client(endpoint_for(mock), "");
    const auto rec = eval::run_trials(client, endpoint_for(mock), manifest[0], dir.path(), 3);
    const auto shares = metrics::sample_metrics(rec, manifest[0].pair).votes.shares();
    c.expect(std::abs(shares[0] - 2.0 / 3.0) < 1e-12 && std::abs(shares[1] - 1.0 / 3.0) < 1e-12,
             "scripted votes " + fmt(shares[0]) + "/" + fmt(shares[1]));
  }
  {
    const auto manifest = toy_manifest(dir.path(), 12);
    eval::MockConfig cfg;
    cfg.mode = eval::MockMode::Correct;
    cfg.answer_key = eval::answer_key_for(manifest);
    eval::MockEndpoint mock(cfg);
    mock.start();
    eval::HttpChatClient client(endpoint_for(mock), "");
    eval::BenchmarkOptions opt;
    opt.trials = 1;
    opt.image_root = dir.path();
    opt.limit = 7;
    const auto out = dir / "resume.jsonl";
    eval::run_benchmark(manifest, client, endpoint_for(mock), opt, out);
    {
      std::ofstream torn(out, std::ios::app | std::ios::binary);
      torn << R"({"sample_id":"s11","mod)";
    }
    const auto before = mock.prompts();
    opt.limit.reset();
    const auto second = eval::run_benchmark(manifest, client, endpoint_for(mock), opt, out);
    const auto after = mock.prompts();
    std::set<std::string> first(before.begin(), before.end());
    bool fresh = after.size() == before.size() + 5;
    for (std::size_t i = before.size(); i < after.size(); ++i) fresh = fresh && !first.count(after[i]);
    c.expect(second.skipped == 7 && second.written == 5 && fresh, "resume re-issued completed samples");
    c.expect(eval::read_results(out).size() == 12, "resumed results incomplete");
  }
  {
    const std::string golden = read_text(fs::path(MEDQ_TEST_DATA) / "prompt_golden.txt");
    const std::string got = eval::render_prompt("Which abnormality is visible in this chest X-ray?",
                                                {"Pneumothorax", "Pleural effusion", "Cardiomegaly", "No abnormality"});
    c.expect(!golden.empty() && got == golden, "prompt differs from golden file");
  }
  return c;
}

Check pipeline_suite() {
  Check c;
  for (Modality m : kAllModalities) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const auto samples = dataset::assign_degradations(testing::make_pair("x" + std::to_string(seed), m), seed);
      std::set<DegradationType> types;
      int l0 = 0;
      bool compatible = true;
      for (const auto& s : samples) {
        if (s.spec.severity == Severity::L0) ++l0;
        if (s.spec.type) {
          types.insert(*s.spec.type);
          compatible = compatible && info(*s.spec.type).supports(m);
        }
      }
      c.expect(samples.size() == 7 && l0 == 1 && types.size() == 3 && compatible,
               "assignment for " + std::string(to_string(m)) + " seed " + std::to_string(seed));
    }
  }

  std::vector<DegradedSample> pending(100);
  for (std::size_t i = 0; i < pending.size(); ++i) {
    pending[i].sample_id = "s" + std::to_string(i);
    pending[i].pair = testing::make_pair("p" + std::to_string(i), Modality::CT);
  }
  std::vector<dataset::ReviewDecision> decisions;
  for (int i = 0; i < 8; ++i) {
    decisions.push_back({"s" + std::to_string(i * 11), dataset::ReviewAction::Discard, DiscardReason::PoorBaseline,
                         "ann", "2026-01-01T00:00:00Z"});
  }
  const auto outcome = dataset::apply_review(pending, decisions);
  c.expect(outcome.summary.removal_fraction == 0.08, "removal fraction " + fmt(outcome.summary.removal_fraction));

  testing::TempDir pool("medq-pool"), out1("medq-out"), out2("medq-out");
  std::vector<QAPair> pairs;
  std::vector<Image> images;
  int i = 0;
  for (Modality m : kAllModalities) {
    pairs.push_back(testing::make_pair("pair" + std::to_string(i), m));
    images.push_back(testing::synthetic_image(40, 40, testing::channels_for(m), 700 + i));
    ++i;
  }
  testing::write_pool(pool.path(), pairs, images);
  dataset::PipelineConfig cfg;
  cfg.threads = 1;
  const auto a = dataset::build_manifest(pool.path(), out1.path(), cfg, 11);
  cfg.threads = 8;
  const auto b = dataset::build_manifest(pool.path(), out2.path(), cfg, 11);
  bool same = read_text(out1 / "manifest.jsonl") == read_text(out2 / "manifest.jsonl") &&
              read_text(out1 / "stats.json") == read_text(out2 / "stats.json");
  for (const auto& s : a.samples) same = same && read_text(out1 / s.pair.image_path) == read_text(out2 / s.pair.image_path);
  c.expect(same && a.samples.size() == 7 * pairs.size(), "rebuild produced different manifest or images");
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"identity", identity_suite},
      {"determinism", determinism_suite},
      {"severity-monotonicity", monotonicity_suite},
      {"tomography", tomography_suite},
      {"fourier", fourier_suite},
      {"metrics-oracle", metrics_oracle},
      {"report-arithmetic", report_arithmetic},
      {"harness-end-to-end", harness_end_to_end},
      {"pipeline", pipeline_suite},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = Clock::now();
    Check c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(t0);
    if (c.failures.empty()) {
      std::printf("PASS %s (%.2f s)\n", name.c_str(), secs);
    } else {
      ++failed;
      std::printf("FAIL %s (%.2f s): %s%s\n", name.c_str(), secs, c.failures.front().c_str(),
                  c.failures.size() > 1 ? (" [+" + std::to_string(c.failures.size() - 1) + " more]").c_str() : "");
    }
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
