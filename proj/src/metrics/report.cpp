#include "medq/metrics/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "medq/error.hpp"

namespace medq::metrics {

std::string_view to_string(Axis a) {
  switch (a) {
    case Axis::Severity: return "severity";
    case Axis::CapabilityMid: return "capability_mid";
    case Axis::DegradationCategory: return "degradation_category";
    case Axis::Modality: return "modality";
    case Axis::Model: return "model";
  }
  return "?";
}

Axis parse_axis(std::string_view name) {
  for (Axis a : {Axis::Severity, Axis::CapabilityMid, Axis::DegradationCategory, Axis::Modality, Axis::Model}) {
    if (to_string(a) == name) return a;
  }
  throw InvalidArgument("unknown report axis '" + std::string(name) + "'");
}

std::vector<Axis> parse_axes(std::string_view csv) {
  std::vector<Axis> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const auto comma = csv.find(',', pos);
    auto item = csv.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      const Axis a = parse_axis(item);
      if (std::find(out.begin(), out.end(), a) != out.end()) {
        throw InvalidArgument("axis '" + std::string(item) + "' given twice");
      }
      out.push_back(a);
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

double severity_drop(double level_pct, double base_pct) { return round2(level_pct - base_pct); }

Cell make_cell(std::span<const SampleMetrics* const> samples, AccuracyMode mode) {
  Cell c;
  c.n = samples.size();
  if (c.n == 0) return c;
  double acc = 0.0;
  double conf = 0.0;
  for (const auto* s : samples) {
    acc += s->accuracy(mode);
    conf += s->confidence;
  }
  c.accuracy = acc / static_cast<double>(c.n);
  c.mean_confidence = conf / static_cast<double>(c.n);
  c.calibration_shift = c.mean_confidence - c.accuracy;
  return c;
}

namespace {

struct Joined {
  const DegradedSample* sample;
  std::string model;
  SampleMetrics metrics;
};

// Orders axis values: enums in declaration order, models by first appearance, others
// alphabetically.
struct KeyRanker {
  std::vector<Axis> axes;
  std::unordered_map<std::string, std::size_t> model_rank;

  std::pair<std::size_t, std::string> rank(Axis a, const std::string& v) const {
    switch (a) {
      case Axis::DegradationCategory:
        for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
          if (to_string(kAllCategories[i]) == v) return {i, v};
        }
        break;
      case Axis::Modality:
        for (std::size_t i = 0; i < kAllModalities.size(); ++i) {
          if (to_string(kAllModalities[i]) == v) return {i, v};
        }
        break;
      case Axis::Model:
        if (auto it = model_rank.find(v); it != model_rank.end()) return {it->second, v};
        break;
      default:
        break;
    }
    return {0, v};
  }

  bool less(const std::vector<std::string>& a, const std::vector<std::string>& b) const {
    for (std::size_t i = 0; i < axes.size(); ++i) {
      const auto ra = rank(axes[i], a[i]);
      const auto rb = rank(axes[i], b[i]);
      if (ra != rb) return ra < rb;
    }
    return false;
  }
};

std::string pct(const Cell& c, double v) {
  if (c.empty()) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * v;
  return os.str();
}

std::string drop_text(const std::optional<double>& d) {
  if (!d) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << (*d == 0.0 ? 0.0 : *d);
  return os.str();
}

Json cell_json(const Cell& c) {
  Json j;
  j["n"] = c.n;
  if (c.empty()) {
    j["accuracy"] = nullptr;
    j["mean_confidence"] = nullptr;
    j["calibration_shift"] = nullptr;
  } else {
    j["accuracy"] = c.accuracy;
    j["mean_confidence"] = c.mean_confidence;
    j["calibration_shift"] = c.calibration_shift;
  }
  return j;
}

std::vector<std::string> key_axes_names(const Report& r) {
  std::vector<std::string> names;
  for (Axis a : r.axes) {
    if (a != Axis::Severity) names.emplace_back(to_string(a));
  }
  return names;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

std::string num(const Cell& c, double v) {
  if (c.empty()) return "";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

Report aggregate_report(const std::vector<eval::TrialRecord>& results, const std::vector<DegradedSample>& manifest,
                        const std::vector<Axis>& axes, AccuracyMode mode) {
  std::unordered_map<std::string, const DegradedSample*> by_id;
  std::unordered_map<std::string, std::set<Category>> pair_categories;
  for (const auto& s : manifest) {
    by_id.emplace(s.sample_id, &s);
    if (s.spec.type && s.spec.severity != Severity::L0) {
      pair_categories[s.pair.id].insert(info(*s.spec.type).category);
    }
  }

  Report report;
  report.axes = axes;
  report.mode = mode;
  report.by_severity = std::find(axes.begin(), axes.end(), Axis::Severity) != axes.end();

  KeyRanker ranker;
  std::vector<Joined> joined;
  joined.reserve(results.size());
  for (const auto& r : results) {
    auto it = by_id.find(r.sample_id);
    if (it == by_id.end()) throw InvalidArgument("result for sample not in manifest: " + r.sample_id);
    joined.push_back({it->second, r.model, sample_metrics(r, it->second->pair)});
    ranker.model_rank.emplace(r.model, ranker.model_rank.size());
  }
  for (Axis a : axes) {
    if (a != Axis::Severity) ranker.axes.push_back(a);
  }

  struct Bucket {
    std::vector<const SampleMetrics*> levels[3];
    std::vector<const SampleMetrics*> all;
  };
  std::map<std::vector<std::string>, Bucket> buckets;
  std::vector<const SampleMetrics*> everything;

  for (const auto& j : joined) {
    everything.push_back(&j.metrics);
    std::vector<std::vector<std::string>> keys{{}};
    for (Axis a : ranker.axes) {
      std::vector<std::string> values;
      switch (a) {
        case Axis::CapabilityMid: values.push_back(j.sample->pair.capability.mid); break;
        case Axis::Modality: values.emplace_back(to_string(j.sample->pair.modality)); break;
        case Axis::Model: values.push_back(j.model); break;
        case Axis::DegradationCategory:
          if (j.sample->spec.type && j.sample->spec.severity != Severity::L0) {
            values.emplace_back(to_string(info(*j.sample->spec.type).category));
          } else if (auto pc = pair_categories.find(j.sample->pair.id); pc != pair_categories.end()) {
            for (Category c : pc->second) values.emplace_back(to_string(c));
          }
          break;
        case Axis::Severity: break;
      }
      std::vector<std::vector<std::string>> next;
      for (const auto& k : keys) {
        for (const auto& v : values) {
          auto nk = k;
          nk.push_back(v);
          next.push_back(std::move(nk));
        }
      }
      keys = std::move(next);
    }
    for (const auto& k : keys) {
      auto& b = buckets[k];
      b.levels[static_cast<int>(j.sample->spec.severity)].push_back(&j.metrics);
      b.all.push_back(&j.metrics);
    }
  }

  for (auto& [key, b] : buckets) {
    ReportRow row;
    row.key = key;
    row.all = make_cell(b.all, mode);
    if (report.by_severity) {
      row.l0 = make_cell(b.levels[0], mode);
      row.l1 = make_cell(b.levels[1], mode);
      row.l2 = make_cell(b.levels[2], mode);
      std::vector<const SampleMetrics*> pooled = b.levels[1];
      pooled.insert(pooled.end(), b.levels[2].begin(), b.levels[2].end());
      row.l1l2 = make_cell(pooled, mode);
      if (!row.l0.empty()) {
        const double base = 100.0 * row.l0.accuracy;
        if (!row.l1.empty()) row.drops.l1 = severity_drop(100.0 * row.l1.accuracy, base);
        if (!row.l2.empty()) row.drops.l2 = severity_drop(100.0 * row.l2.accuracy, base);
        if (!row.l1l2.empty()) row.drops.l1l2 = severity_drop(100.0 * row.l1l2.accuracy, base);
      }
    }
    report.rows.push_back(std::move(row));
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [&](const ReportRow& a, const ReportRow& b) { return ranker.less(a.key, b.key); });
  report.overall = make_cell(everything, mode);
  return report;
}

std::string format_markdown(const Report& r) {
  std::vector<std::string> header = key_axes_names(r);
  if (header.empty()) header.push_back("scope");
  if (r.by_severity) {
    for (const char* h : {"L0", "L1", "L2", "L1&L2", "L1-L0", "L2-L0", "L1&L2-L0", "Δ L0", "Δ L1", "Δ L2", "N"}) {
      header.emplace_back(h);
    }
  } else {
    for (const char* h : {"Acc", "Conf", "Δ", "N"}) header.emplace_back(h);
  }
  std::ostringstream os;
  os << "|";
  for (const auto& h : header) os << " " << h << " |";
  os << "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) os << (i < std::max<std::size_t>(1, key_axes_names(r).size()) ? " --- |" : " ---: |");
  os << "\n";
  auto emit_row = [&](const std::vector<std::string>& key, const ReportRow& row) {
    os << "|";
    for (const auto& k : key) os << " " << k << " |";
    if (r.by_severity) {
      os << " " << pct(row.l0, row.l0.accuracy) << " | " << pct(row.l1, row.l1.accuracy) << " | "
         << pct(row.l2, row.l2.accuracy) << " | " << pct(row.l1l2, row.l1l2.accuracy) << " | "
         << drop_text(row.drops.l1) << " | " << drop_text(row.drops.l2) << " | " << drop_text(row.drops.l1l2)
         << " | " << pct(row.l0, row.l0.calibration_shift) << " | " << pct(row.l1, row.l1.calibration_shift)
         << " | " << pct(row.l2, row.l2.calibration_shift) << " | " << row.all.n << " |\n";
    } else {
      os << " " << pct(row.all, row.all.accuracy) << " | " << pct(row.all, row.all.mean_confidence) << " | "
         << pct(row.all, row.all.calibration_shift) << " | " << row.all.n << " |\n";
    }
  };
  for (const auto& row : r.rows) {
    emit_row(row.key.empty() ? std::vector<std::string>{"all"} : row.key, row);
  }
  return os.str();
}

std::string format_csv(const Report& r) {
  std::ostringstream os;
  const auto names = key_axes_names(r);
  for (const auto& n : names) os << n << ",";
  std::vector<std::pair<std::string, const Cell ReportRow::*>> cols;
  if (r.by_severity) {
    cols = {{"L0", &ReportRow::l0}, {"L1", &ReportRow::l1}, {"L2", &ReportRow::l2}, {"L1&L2", &ReportRow::l1l2}};
  } else {
    cols = {{"all", &ReportRow::all}};
  }
  bool first = true;
  for (const auto& [name, _] : cols) {
    for (const char* m : {"acc", "conf", "delta", "n"}) {
      os << (first ? "" : ",") << name << "_" << m;
      first = false;
    }
  }
  if (r.by_severity) os << ",drop_L1-L0,drop_L2-L0,drop_L1&L2-L0";
  os << "\n";
  for (const auto& row : r.rows) {
    for (const auto& k : row.key) os << csv_field(k) << ",";
    first = true;
    for (const auto& [_, member] : cols) {
      const Cell& c = row.*member;
      os << (first ? "" : ",") << num(c, c.accuracy) << "," << num(c, c.mean_confidence) << ","
         << num(c, c.calibration_shift) << "," << c.n;
      first = false;
    }
    if (r.by_severity) {
      os << "," << (row.drops.l1 ? drop_text(row.drops.l1) : "") << ","
         << (row.drops.l2 ? drop_text(row.drops.l2) : "") << "," << (row.drops.l1l2 ? drop_text(row.drops.l1l2) : "");
    }
    os << "\n";
  }
  return os.str();
}

Json to_json(const Report& r) {
  Json j;
  j["axes"] = Json::array();
  for (Axis a : r.axes) j["axes"].push_back(std::string(to_string(a)));
  j["accuracy_mode"] = r.mode == AccuracyMode::PerTrial ? "per_trial" : "majority";
  j["overall"] = cell_json(r.overall);
  j["rows"] = Json::array();
  const auto names = key_axes_names(r);
  for (const auto& row : r.rows) {
    Json rj;
    rj["key"] = Json::object();
    for (std::size_t i = 0; i < names.size(); ++i) rj["key"][names[i]] = row.key[i];
    if (r.by_severity) {
      rj["L0"] = cell_json(row.l0);
      rj["L1"] = cell_json(row.l1);
      rj["L2"] = cell_json(row.l2);
      rj["L1&L2"] = cell_json(row.l1l2);
      auto d = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
      rj["drops"] = {{"L1-L0", d(row.drops.l1)}, {"L2-L0", d(row.drops.l2)}, {"L1&L2-L0", d(row.drops.l1l2)}};
    }
    rj["all"] = cell_json(row.all);
    j["rows"].push_back(std::move(rj));
  }
  return j;
}

}  // namespace medq::metrics
