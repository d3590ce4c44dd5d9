// medq: command-line front end for degradation, dataset building, evaluation and review.
#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "medq/dataset/pipeline.hpp"
#include "medq/degrade/phantom.hpp"
#include "medq/degrade/registry.hpp"
#include "medq/error.hpp"
#include "medq/eval/harness.hpp"
#include "medq/eval/mock_endpoint.hpp"
#include "medq/image_io.hpp"
#include "medq/metrics/report.hpp"
#include "medq/server/calibration.hpp"

namespace fs = std::filesystem;
using namespace medq;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

degrade::SeverityTable table_from(const std::string& config) {
  if (config.empty()) return degrade::SeverityTable::defaults();
  const auto bytes = read_file(config);
  return degrade::SeverityTable::from_toml_text(std::string(bytes.begin(), bytes.end()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"medq: medical image degradation benchmark toolkit"};
  app.require_subcommand(1);

  // degrade
  auto* degrade_cmd = app.add_subcommand("degrade", "Apply one degradation to an image");
  std::string d_in, d_out, d_type, d_sev = "L1", d_modality = "CT", d_config;
  std::optional<double> d_t;
  std::uint64_t d_seed = 0;
  std::vector<std::string> d_params;
  degrade_cmd->add_option("input", d_in, "Input image (.png, .jpg, .npy)")->required();
  degrade_cmd->add_option("output", d_out, "Output image (.png or .npy)")->required();
  degrade_cmd->add_option("--type", d_type, "Degradation type name")->required();
  auto* sev_opt = degrade_cmd->add_option("--severity", d_sev, "L0, L1 or L2");
  degrade_cmd->add_option("--t", d_t, "Continuous severity in [0, 1]")->excludes(sev_opt);
  degrade_cmd->add_option("--seed", d_seed, "RNG seed");
  degrade_cmd->add_option("--modality", d_modality, "Image modality");
  degrade_cmd->add_option("--config", d_config, "Severity table TOML");
  degrade_cmd->add_option("--param", d_params, "Parameter override key=value (repeatable)");

  // phantom
  auto* phantom_cmd = app.add_subcommand("phantom", "Write a synthetic test phantom");
  std::string ph_kind, ph_out;
  int ph_size = 256;
  double ph_radius = 0.0;
  phantom_cmd->add_option("kind", ph_kind, "shepp-logan or disk")->required()->check(CLI::IsMember({"shepp-logan", "disk"}));
  phantom_cmd->add_option("--size", ph_size, "Edge length in pixels");
  phantom_cmd->add_option("--radius", ph_radius, "Disk radius in pixels (default size/4)");
  phantom_cmd->add_option("--out", ph_out, "Output path")->required();

  // severity-table
  auto* table_cmd = app.add_subcommand("severity-table", "Print the effective severity table as TOML");
  std::string st_config;
  table_cmd->add_option("--config", st_config, "Severity table TOML to merge over the defaults");

  // build-manifest
  auto* build_cmd = app.add_subcommand("build-manifest", "Dedup a QA pool, assign and render degradations");
  std::string b_pool, b_out, b_config;
  std::uint64_t b_seed = 0;
  unsigned b_threads = 0;
  build_cmd->add_option("--pool", b_pool, "Directory containing pool.jsonl")->required();
  build_cmd->add_option("--out", b_out, "Output directory")->required();
  build_cmd->add_option("--seed", b_seed, "Run seed")->required();
  build_cmd->add_option("--config", b_config, "Pipeline TOML");
  build_cmd->add_option("--threads", b_threads, "Render threads (overrides config)");

  // validate-manifest
  auto* validate_cmd = app.add_subcommand("validate-manifest", "Check every record of a manifest");
  std::string v_path;
  validate_cmd->add_option("manifest", v_path, "Manifest JSONL")->required();

  // apply-review
  auto* review_cmd = app.add_subcommand("apply-review", "Apply review decisions to a manifest");
  std::string r_manifest, r_decisions, r_out, r_summary;
  review_cmd->add_option("--manifest", r_manifest)->required();
  review_cmd->add_option("--decisions", r_decisions)->required();
  review_cmd->add_option("--out", r_out, "Reviewed manifest")->required();
  review_cmd->add_option("--summary", r_summary, "Write the summary JSON here as well");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Query a chat-completions endpoint over a manifest");
  std::string e_manifest, e_url, e_model, e_out, e_root;
  int e_trials = 3;
  unsigned e_parallel = 4;
  int e_timeout_ms = 60000, e_retries = 3, e_backoff_ms = 500;
  double e_temperature = 1.0;
  std::optional<std::size_t> e_limit;
  eval_cmd->add_option("--manifest", e_manifest)->required();
  eval_cmd->add_option("--endpoint", e_url, "Base URL, e.g. http://localhost:8000/v1")->required();
  eval_cmd->add_option("--model", e_model)->required();
  eval_cmd->add_option("--trials", e_trials, "Trials per sample")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--parallel", e_parallel, "Concurrent requests")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", e_out, "Results JSONL (appended; reruns resume)")->required();
  eval_cmd->add_option("--image-root", e_root, "Base for image paths (default: manifest directory)");
  eval_cmd->add_option("--timeout-ms", e_timeout_ms);
  eval_cmd->add_option("--max-retries", e_retries);
  eval_cmd->add_option("--backoff-ms", e_backoff_ms);
  eval_cmd->add_option("--temperature", e_temperature);
  eval_cmd->add_option("--limit", e_limit, "Process at most this many new samples");

  // report
  auto* report_cmd = app.add_subcommand("report", "Aggregate results into accuracy/calibration tables");
  std::vector<std::string> rp_results;
  std::string rp_manifest, rp_axes = "severity", rp_format = "md", rp_out;
  bool rp_majority = false;
  report_cmd->add_option("--results", rp_results, "Results JSONL (repeatable)")->required();
  report_cmd->add_option("--manifest", rp_manifest)->required();
  report_cmd->add_option("--axes", rp_axes, "Comma-separated: severity,capability_mid,degradation_category,modality,model");
  report_cmd->add_option("--format", rp_format)->check(CLI::IsMember({"md", "csv", "json"}));
  report_cmd->add_flag("--majority", rp_majority, "Score the majority-vote label instead of every trial");
  report_cmd->add_option("--out", rp_out, "Write to file instead of stdout");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the calibration and review server");
  std::string s_manifest, s_log, s_host = "127.0.0.1", s_static, s_annotators, s_config;
  int s_port = 8080;
  serve_cmd->add_option("--manifest", s_manifest)->required();
  serve_cmd->add_option("--decisions", s_log, "Append-only decision log")->required();
  serve_cmd->add_option("--port", s_port);
  serve_cmd->add_option("--host", s_host);
  serve_cmd->add_option("--static", s_static, "Directory with the review UI bundle");
  serve_cmd->add_option("--annotators", s_annotators, "Comma-separated allowlist of annotator ids");
  serve_cmd->add_option("--config", s_config, "Severity table TOML");

  // mock-endpoint
  auto* mock_cmd = app.add_subcommand("mock-endpoint", "Serve a local chat-completions mock");
  std::string m_mode = "correct", m_manifest, m_script, m_host = "127.0.0.1";
  int m_port = 8000, m_delay_ms = 2000;
  std::uint64_t m_seed = 0;
  mock_cmd->add_option("--mode", m_mode, "correct, random, scripted, timeout, unauthorized, malformed");
  mock_cmd->add_option("--manifest", m_manifest, "Answer key source for --mode correct");
  mock_cmd->add_option("--script", m_script, "Comma-separated replies for --mode scripted");
  mock_cmd->add_option("--seed", m_seed);
  mock_cmd->add_option("--delay-ms", m_delay_ms);
  mock_cmd->add_option("--port", m_port);
  mock_cmd->add_option("--host", m_host);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*degrade_cmd) {
      const auto table = table_from(d_config);
      const Modality modality = parse_modality(d_modality);
      DegradationSpec spec;
      spec.type = parse_degradation_type(d_type);
      spec.seed = d_seed;
      if (d_t) {
        spec.severity = Severity::L1;
        spec.params = table.params_at(*spec.type, *d_t);
      } else {
        spec.severity = parse_severity(d_sev);
      }
      for (const auto& kv : d_params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw InvalidArgument("--param expects key=value, got " + kv);
        if (spec.severity == Severity::L0) throw InvalidArgument("--param cannot be combined with L0");
        spec.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
      }
      const Image img = load_image(d_in);
      save_image(degrade::apply_degradation(img, modality, spec, table), d_out);
      const auto resolved = degrade::resolve_spec(spec, modality, img.width(), img.height(), table);
      std::cout << to_json(resolved).dump() << "\n";
    } else if (*phantom_cmd) {
      const Image img = ph_kind == "shepp-logan"
                            ? degrade::shepp_logan(ph_size, 4)
                            : degrade::disk_phantom(ph_size, ph_radius > 0 ? ph_radius : ph_size / 4.0);
      save_image(img, ph_out);
    } else if (*table_cmd) {
      std::cout << table_from(st_config).to_toml();
    } else if (*build_cmd) {
      dataset::PipelineConfig cfg = b_config.empty() ? dataset::PipelineConfig{} : dataset::load_config(b_config);
      if (b_threads > 0) cfg.threads = b_threads;
      const auto result = dataset::build_manifest(b_pool, b_out, cfg, b_seed);
      std::cerr << "pairs kept " << result.dedup.kept.size() << ", dropped " << result.dedup.dropped.size()
                << ", warnings " << result.dedup.warnings.size() << "; wrote " << result.samples.size()
                << " records to " << (fs::path(b_out) / "manifest.jsonl").string() << "\n";
      for (const auto& w : result.dedup.warnings) std::cerr << "warning: " << w.pair_id << ": " << w.message << "\n";
    } else if (*validate_cmd) {
      const auto violations = validate_manifest(v_path);
      for (const auto& v : violations) {
        std::cout << v_path << ":" << v.line << ": " << (v.sample_id.empty() ? "?" : v.sample_id) << ": " << v.message
                  << "\n";
      }
      if (!violations.empty()) {
        std::cerr << violations.size() << " violation(s)\n";
        return 1;
      }
      std::cerr << "ok\n";
    } else if (*review_cmd) {
      const auto outcome = dataset::apply_review(read_manifest(r_manifest), dataset::read_decisions(r_decisions));
      write_manifest(r_out, outcome.manifest);
      const std::string summary = to_json(outcome.summary).dump(2) + "\n";
      if (!r_summary.empty()) write_text(r_summary, summary);
      std::cout << summary;
    } else if (*eval_cmd) {
      ModelEndpoint ep;
      ep.name = e_model;
      ep.base_url = e_url;
      ep.timeout = std::chrono::milliseconds(e_timeout_ms);
      ep.max_retries = e_retries;
      ep.backoff_base = std::chrono::milliseconds(e_backoff_ms);
      ep.temperature = e_temperature;
      eval::HttpChatClient client(ep, eval::api_key_from_env(ep));
      eval::BenchmarkOptions opt;
      opt.trials = e_trials;
      opt.parallel = e_parallel;
      opt.image_root = e_root.empty() ? fs::path(e_manifest).parent_path() : fs::path(e_root);
      opt.limit = e_limit;
      const auto summary = eval::run_benchmark(read_manifest(e_manifest), client, ep, opt, e_out);
      std::cerr << "eligible " << summary.eligible << ", already done " << summary.skipped << ", written "
                << summary.written << "\n";
    } else if (*report_cmd) {
      std::vector<eval::TrialRecord> results;
      for (const auto& f : rp_results) {
        auto part = eval::read_results(f);
        results.insert(results.end(), part.begin(), part.end());
      }
      const auto report = metrics::aggregate_report(results, read_manifest(rp_manifest), metrics::parse_axes(rp_axes),
                                                    rp_majority ? metrics::AccuracyMode::Majority
                                                                : metrics::AccuracyMode::PerTrial);
      std::string text;
      if (rp_format == "md") text = metrics::format_markdown(report);
      else if (rp_format == "csv") text = metrics::format_csv(report);
      else text = metrics::to_json(report).dump(2) + "\n";
      if (rp_out.empty()) std::cout << text;
      else write_text(rp_out, text);
    } else if (*serve_cmd) {
      server::ServiceOptions opt;
      opt.manifest = s_manifest;
      opt.log = s_log;
      opt.annotators = split_csv(s_annotators);
      opt.table = table_from(s_config);
      server::CalibrationService service(opt);
      server::CalibrationServer srv(service, s_static);
      std::cerr << "serving " << service.sample_count() << " samples on http://" << s_host << ":" << s_port << "\n";
      srv.run(s_host, s_port);
    } else if (*mock_cmd) {
      eval::MockConfig cfg;
      cfg.mode = eval::parse_mock_mode(m_mode);
      cfg.seed = m_seed;
      cfg.script = split_csv(m_script);
      cfg.delay = std::chrono::milliseconds(m_delay_ms);
      if (!m_manifest.empty()) cfg.answer_key = eval::answer_key_for(read_manifest(m_manifest));
      if (cfg.mode == eval::MockMode::Correct && cfg.answer_key.empty()) {
        throw InvalidArgument("--mode correct needs --manifest");
      }
      eval::MockEndpoint mock(cfg);
      std::cerr << "mock endpoint (" << m_mode << ") on http://" << m_host << ":" << m_port << "\n";
      mock.run(m_host, m_port);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
