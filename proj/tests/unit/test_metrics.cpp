#include <doctest.h>

#include <cmath>
#include <functional>

#include "../support/fixtures.hpp"
#include "medq/error.hpp"
#include "medq/metrics/metrics.hpp"
#include "medq/metrics/report.hpp"

using namespace medq;
using namespace medq::metrics;

namespace {

using Labels = std::vector<std::optional<char>>;

eval::TrialRecord record(const std::string& id, const std::string& model, const std::string& labels) {
  eval::TrialRecord r;
  r.sample_id = id;
  r.model = model;
  for (char c : labels) {
    eval::Trial t;
    if (c != '-') {
      t.label = c;
      t.response = std::string(1, c);
    }
    r.trials.push_back(t);
  }
  return r;
}

SampleMetrics metrics_for(const std::string& labels, char answer = 'A', std::size_t k = 4) {
  return sample_metrics(record("s", "m", labels), testing::make_pair("p", Modality::CT, k, answer));
}

// Straight textbook evaluation, independent of the library's grouping.
double brute_confidence(const std::vector<int>& counts) {
  int m = 0;
  for (int c : counts) m += c;
  if (m == 0) return 0.0;
  double h = 0.0;
  for (int c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / m;
    h -= p * std::log(p);
  }
  return 1.0 - h / std::log(static_cast<double>(counts.size()));
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("vote distribution examples") {
    const Labels aab = {'A', 'A', 'B'};
    const auto v = vote_distribution(aab, 4);
    CHECK(v.shares() == std::vector<double>{2.0 / 3.0, 1.0 / 3.0, 0.0, 0.0});
    const Labels ten(10, 'A');
    CHECK(vote_distribution(ten, 4).shares() == std::vector<double>{1.0, 0.0, 0.0, 0.0});
    const Labels gap = {'A', std::nullopt, 'B'};
    const auto g = vote_distribution(gap, 4);
    CHECK(g.shares()[0] == doctest::Approx(1.0 / 3.0));
    CHECK(g.shares()[1] == doctest::Approx(1.0 / 3.0));
    CHECK(g.abstain_share() == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(vote_distribution(Labels{}, 4), InvalidArgument);
    CHECK_THROWS_AS(vote_distribution(Labels{'E'}, 4), InvalidArgument);
  }

  TEST_CASE("confidence examples") {
    const std::vector<double> p = {0.7, 0.3, 0.0, 0.0};
    CHECK(entropy(p) == doctest::Approx(0.6109).epsilon(1e-4));
    CHECK(std::abs(confidence(p, 4) - 0.5594) < 1e-4);
    CHECK(confidence(vote_distribution(Labels(7, 'C'), 4)) == 1.0);
    CHECK(confidence(vote_distribution(Labels{'A', 'B', 'C', 'D'}, 4)) == 0.0);
    CHECK(confidence(vote_distribution(Labels{'A', 'B', 'C', 'A', 'B', 'C'}, 3)) == 0.0);
    CHECK(confidence(vote_distribution(Labels(3, std::nullopt), 4)) == 0.0);
    CHECK_THROWS_AS(confidence(p, 1), InvalidArgument);
  }

  TEST_CASE("confidence matches brute force over every vote multiset") {
    double worst = 0.0;
    std::size_t cases = 0;
    for (std::size_t k = 2; k <= 5; ++k) {
      for (int t = 1; t <= 6; ++t) {
        // Counts over k options plus an abstain slot, summing to t.
        std::vector<int> counts(k + 1, 0);
        std::function<void(std::size_t, int)> rec = [&](std::size_t slot, int left) {
          if (slot == k) {
            counts[k] = left;
            Labels labels;
            for (std::size_t i = 0; i < k; ++i) labels.insert(labels.end(), counts[i], option_label(i));
            labels.insert(labels.end(), counts[k], std::nullopt);
            const double got = confidence(vote_distribution(labels, k));
            const double want = brute_confidence(std::vector<int>(counts.begin(), counts.begin() + k));
            worst = std::max(worst, std::abs(got - want));
            ++cases;
            return;
          }
          for (int c = 0; c <= left; ++c) {
            counts[slot] = c;
            rec(slot + 1, left - c);
          }
        };
        rec(0, t);
      }
    }
    CHECK(cases > 1000);
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("accuracy examples") {
    std::vector<SampleMetrics> four = {metrics_for("A"), metrics_for("A"), metrics_for("B"), metrics_for("-")};
    CHECK(accuracy(four) == 0.5);
    std::vector<SampleMetrics> two = {metrics_for("AAA"), metrics_for("AB-")};
    CHECK(accuracy(two) == doctest::Approx(2.0 / 3.0));
    CHECK(accuracy(two, AccuracyMode::Majority) == 1.0);
    CHECK_THROWS_AS(accuracy(std::vector<SampleMetrics>{}), InvalidArgument);
  }

  TEST_CASE("majority tie goes to the earliest option") {
    CHECK(majority_label(vote_distribution(Labels{'C', 'B'}, 4)) == 'B');
    CHECK(majority_label(vote_distribution(Labels{'C', 'C', 'B'}, 4)) == 'C');
    CHECK(majority_label(vote_distribution(Labels{std::nullopt}, 4)) == std::nullopt);
  }

  TEST_CASE("calibration shift examples and identity") {
    CHECK(calibration_shift(std::vector<double>{1.0, 0.5, 0.0}, 1.0 / 3.0) == doctest::Approx(0.1667).epsilon(1e-3));
    CHECK(calibration_shift(std::vector<double>{0.0, 0.0}, 0.25) == -0.25);
    CHECK(calibration_shift(std::vector<double>{0.5, 0.5}, 0.5) == 0.0);
    std::vector<SampleMetrics> s = {metrics_for("AAB"), metrics_for("BCD"), metrics_for("A-A"), metrics_for("DDD")};
    const auto r = run_metrics("set", s);
    CHECK(std::abs(r.calibration_shift + r.accuracy - r.mean_confidence) <= 4 * std::numeric_limits<double>::epsilon());
    CHECK(r.n == 4);
  }

  TEST_CASE("intra-model DKE truth table") {
    CHECK(intra_model_dke(0.70, 0.50, 0.10, 0.20));
    CHECK_FALSE(intra_model_dke(0.70, 0.50, 0.20, 0.10));
    const double lo = 0.3, mid = 0.5, hi = 0.7;
    for (double a2 : {lo, mid, hi}) {
      for (double d2 : {lo, mid, hi}) {
        const bool expect = (mid > a2) && (mid <= d2);
        CHECK(intra_model_dke(mid, a2, mid, d2) == expect);
      }
    }
    // Raising delta_L2 never clears a flag while accuracy drops.
    for (double d2 = 0.1; d2 < 1.0; d2 += 0.1) {
      if (intra_model_dke(0.8, 0.6, 0.3, d2)) CHECK(intra_model_dke(0.8, 0.6, 0.3, d2 + 0.05));
    }
  }

  TEST_CASE("inter-model DKE") {
    using M = std::pair<double, double>;
    const auto r = inter_model_dke(std::vector<M>{{0.4, 0.3}, {0.7, 0.1}});
    CHECK(r.fraction == 0.5);
    CHECK(r.pairs.size() == 2);
    CHECK(r.pairs[0].flagged);
    CHECK_FALSE(r.pairs[1].flagged);
    CHECK(inter_model_dke(std::vector<M>{{0.5, 0.2}, {0.5, 0.2}}).fraction == 0.0);
    const auto three = inter_model_dke(std::vector<M>{{0.3, 0.3}, {0.5, 0.2}, {0.7, 0.1}});
    CHECK(three.pairs.size() == 6);
    CHECK(three.fraction == 0.5);
    CHECK_THROWS_AS(inter_model_dke(std::vector<M>{{0.5, 0.1}}), InvalidArgument);

    // Exhaustive sign grid over one ordered pair.
    for (double a1 : {0.4, 0.5, 0.6})
      for (double d1 : {0.1, 0.2, 0.3}) {
        const auto x = inter_model_dke(std::vector<M>{{a1, d1}, {0.5, 0.2}});
        CHECK(x.pairs[0].flagged == (a1 < 0.5 && d1 > 0.2));
        CHECK(x.pairs[1].flagged == (0.5 < a1 && 0.2 > d1));
      }
  }
}

TEST_SUITE("report") {
  std::vector<DegradedSample> small_manifest() {
    std::vector<DegradedSample> v;
    auto add = [&](const std::string& pair, Modality m, std::optional<DegradationType> t, Severity s,
                   const std::string& mid) {
      DegradedSample d;
      d.pair = testing::make_pair(pair, m, 4, 'A');
      d.pair.capability.mid = mid;
      d.spec.type = t;
      d.spec.severity = s;
      d.sample_id = pair + "_" + (t ? std::string(to_string(*t)) : "clean") + "_" + std::string(to_string(s));
      v.push_back(d);
    };
    add("p1", Modality::CT, std::nullopt, Severity::L0, "Anomaly Detection");
    add("p1", Modality::CT, DegradationType::GaussianNoise, Severity::L1, "Anomaly Detection");
    add("p1", Modality::CT, DegradationType::GaussianNoise, Severity::L2, "Anomaly Detection");
    add("p1", Modality::CT, DegradationType::MotionBlur, Severity::L1, "Anomaly Detection");
    add("p1", Modality::CT, DegradationType::MotionBlur, Severity::L2, "Anomaly Detection");
    add("p2", Modality::MRI, std::nullopt, Severity::L0, "Modality Recognition");
    add("p2", Modality::MRI, DegradationType::Ghosting, Severity::L1, "Modality Recognition");
    add("p2", Modality::MRI, DegradationType::Ghosting, Severity::L2, "Modality Recognition");
    return v;
  }

  TEST_CASE("axis parsing") {
    CHECK(parse_axes("severity, model") == std::vector<Axis>{Axis::Severity, Axis::Model});
    CHECK_THROWS_AS(parse_axes("severity,severity"), InvalidArgument);
    CHECK_THROWS_AS(parse_axes("colour"), InvalidArgument);
  }

  TEST_CASE("drops from printed accuracies") {
    CHECK(severity_drop(72.46, 74.04) == doctest::Approx(-1.58).epsilon(1e-12));
    CHECK(severity_drop(68.63, 74.04) == doctest::Approx(-5.41).epsilon(1e-12));
    CHECK(severity_drop(69.09, 70.27) == doctest::Approx(-1.18).epsilon(1e-12));
    CHECK(severity_drop(64.30, 70.27) == doctest::Approx(-5.97).epsilon(1e-12));
  }

  TEST_CASE("single cell equals accuracy of the subset") {
    const auto manifest = small_manifest();
    std::vector<eval::TrialRecord> results;
    const std::vector<std::string> answers = {"AAA", "AB-", "BBB", "AAB", "CCC", "AAA", "ABA", "DDA"};
    for (std::size_t i = 0; i < manifest.size(); ++i) results.push_back(record(manifest[i].sample_id, "m1", answers[i]));
    const Report r = aggregate_report(results, manifest, {});
    REQUIRE(r.rows.size() == 1);
    std::vector<SampleMetrics> all;
    for (std::size_t i = 0; i < manifest.size(); ++i) all.push_back(sample_metrics(results[i], manifest[i].pair));
    CHECK(r.rows[0].all.accuracy == doctest::Approx(accuracy(all)).epsilon(1e-15));
    CHECK(r.overall.n == 8);
  }

  TEST_CASE("severity rows, pooled column and marginals") {
    const auto manifest = small_manifest();
    std::vector<eval::TrialRecord> results;
    const std::vector<std::string> answers = {"AAA", "AB-", "BBB", "AAB", "CCC", "AAA", "ABA", "DDA"};
    for (const std::string model : {"m1", "m2"})
      for (std::size_t i = 0; i < manifest.size(); ++i)
        results.push_back(record(manifest[i].sample_id, model, model == "m1" ? answers[i] : "ABC"));

    const Report r = aggregate_report(results, manifest, {Axis::Model, Axis::Severity});
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].key == std::vector<std::string>{"m1"});
    const auto& row = r.rows[0];
    CHECK(row.l0.n == 2);
    CHECK(row.l1.n == 3);
    CHECK(row.l2.n == 3);
    CHECK(row.l1l2.n == 6);
    CHECK(row.l0.accuracy == doctest::Approx(1.0));
    // L1: AB- (1/3), AAB (2/3), ABA (2/3)
    CHECK(row.l1.accuracy == doctest::Approx(5.0 / 9.0));
    // L2: BBB (0), CCC (0), DDA (1/3)
    CHECK(row.l2.accuracy == doctest::Approx(1.0 / 9.0));
    CHECK(row.l1l2.accuracy == doctest::Approx(1.0 / 3.0));
    CHECK(*row.drops.l1 == doctest::Approx(round2(100.0 * 5.0 / 9.0 - 100.0)));
    CHECK(*row.drops.l1l2 == doctest::Approx(-66.67));

    // N-weighted marginal over partition axes reproduces the global value.
    for (const auto& axes : std::vector<std::vector<Axis>>{{Axis::Modality}, {Axis::CapabilityMid, Axis::Model},
                                                            {Axis::Model, Axis::Modality, Axis::Severity}}) {
      const Report p = aggregate_report(results, manifest, axes);
      double acc = 0, conf = 0;
      std::size_t n = 0;
      for (const auto& rw : p.rows) {
        acc += rw.all.accuracy * rw.all.n;
        conf += rw.all.mean_confidence * rw.all.n;
        n += rw.all.n;
      }
      CHECK(n == p.overall.n);
      CHECK(std::abs(acc / n - p.overall.accuracy) < 1e-9);
      CHECK(std::abs(conf / n - p.overall.mean_confidence) < 1e-9);
    }
  }

  TEST_CASE("category axis attributes clean samples to each assigned category") {
    const auto manifest = small_manifest();
    std::vector<eval::TrialRecord> results;
    for (const auto& s : manifest) results.push_back(record(s.sample_id, "m", "A"));
    const Report r = aggregate_report(results, manifest, {Axis::DegradationCategory, Axis::Severity});
    std::map<std::string, const ReportRow*> rows;
    for (const auto& row : r.rows) rows[row.key[0]] = &row;
    REQUIRE(rows.count("Noise"));
    REQUIRE(rows.count("ResolutionBlur"));
    CHECK(rows.at("Noise")->l0.n == 1);
    CHECK(rows.at("Artifacts")->l0.n == 1);
    CHECK(rows.at("Artifacts")->l1.n == 1);
    CHECK(r.overall.n == manifest.size());
  }

  TEST_CASE("empty cells and unknown samples") {
    const auto manifest = small_manifest();
    std::vector<eval::TrialRecord> results = {record(manifest[1].sample_id, "m", "A")};
    const Report r = aggregate_report(results, manifest, {Axis::Severity});
    const Json j = to_json(r);
    CHECK(j["rows"][0]["L0"]["n"] == 0);
    CHECK(j["rows"][0]["L0"]["accuracy"].is_null());
    CHECK(j["rows"][0]["drops"]["L1-L0"].is_null());
    CHECK(format_markdown(r).find("| - |") != std::string::npos);
    CHECK_THROWS_AS(aggregate_report({record("ghost", "m", "A")}, manifest, {}), InvalidArgument);
  }

  TEST_CASE("csv and markdown layouts") {
    const auto manifest = small_manifest();
    std::vector<eval::TrialRecord> results;
    for (const auto& s : manifest) results.push_back(record(s.sample_id, "m", "AB"));
    const Report r = aggregate_report(results, manifest, {Axis::Modality, Axis::Severity});
    const std::string csv = format_csv(r);
    CHECK(csv.rfind("modality,L0_acc,L0_conf,L0_delta,L0_n,L1_acc", 0) == 0);
    // Rows follow the canonical modality order, which lists MRI first.
    CHECK(csv.find("\nMRI,") < csv.find("\nCT,"));
    const std::string md = format_markdown(r);
    CHECK(md.find("| modality | L0 | L1 | L2 | L1&L2 |") == 0);
    CHECK(md.find("| CT | 50.00 | 50.00 | 50.00 | 50.00 | 0.00 |") != std::string::npos);
  }
}
