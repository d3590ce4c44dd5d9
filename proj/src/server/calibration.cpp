#include "medq/server/calibration.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <httplib.h>

#include "medq/error.hpp"
#include "medq/hashing.hpp"
#include "medq/image_io.hpp"

namespace medq::server {

namespace fs = std::filesystem;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ReviewState merged_state(const DegradedSample& s, const std::vector<dataset::ReviewDecision>& decisions) {
  if (s.review.state != ReviewState::Pending) return s.review.state;
  ReviewState state = ReviewState::Pending;
  for (const auto& d : decisions) {
    if (d.sample_id != s.sample_id) continue;
    if (d.action == dataset::ReviewAction::Discard) return ReviewState::Discarded;
    state = ReviewState::Retained;
  }
  return state;
}

Json threshold_json(const ThresholdLabel& l) {
  Json j;
  j["kind"] = "threshold";
  j["id"] = l.id;
  j["type"] = std::string(to_string(l.type));
  j["modality"] = std::string(to_string(l.modality));
  j["image_id"] = l.image_id;
  j["t_l1"] = l.t_l1;
  j["t_l2"] = l.t_l2;
  j["annotator"] = l.annotator;
  j["timestamp"] = l.timestamp;
  return j;
}

}  // namespace

CalibrationService::CalibrationService(ServiceOptions options) : options_(std::move(options)) {
  samples_ = read_manifest(options_.manifest);
  image_root_ = options_.manifest.parent_path();
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    by_id_.emplace(samples_[i].sample_id, i);
    if (samples_[i].spec.severity == Severity::L0) clean_by_pair_.emplace(samples_[i].pair.id, i);
  }
  if (options_.page_size == 0) throw InvalidArgument("page size must be positive");
  if (fs::exists(options_.log)) {
    std::ifstream in(options_.log, std::ios::binary);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    std::size_t number = 0;
    while (pos < text.size()) {
      const auto nl = text.find('\n', pos);
      if (nl == std::string::npos) break;  // torn final write
      ++number;
      const std::string line = text.substr(pos, nl - pos);
      pos = nl + 1;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        index_record(Json::parse(line));
      } catch (const Json::exception& e) {
        throw ParseError("decision log line " + std::to_string(number) + ": " + e.what());
      } catch (const Error& e) {
        throw ParseError("decision log line " + std::to_string(number) + ": " + e.what());
      }
    }
    if (!text.empty() && text.back() != '\n') {
      fs::resize_file(options_.log, text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1);
    }
  }
}

void CalibrationService::index_record(const Json& record) {
  const std::string kind = record.at("kind").get<std::string>();
  if (kind == "threshold") {
    ThresholdLabel l;
    l.id = record.at("id").get<std::string>();
    l.type = parse_degradation_type(record.at("type").get<std::string>());
    l.modality = parse_modality(record.at("modality").get<std::string>());
    l.image_id = record.value("image_id", "");
    l.t_l1 = record.at("t_l1").get<double>();
    l.t_l2 = record.at("t_l2").get<double>();
    l.annotator = record.at("annotator").get<std::string>();
    l.timestamp = record.value("timestamp", "");
    thresholds_.push_back(std::move(l));
  } else if (kind == "review") {
    auto d = dataset::decision_from_json(record);
    by_annotator_[{d.sample_id, d.annotator}] =
        d.action == dataset::ReviewAction::Discard ? ReviewState::Discarded : ReviewState::Retained;
    decisions_.push_back(std::move(d));
  } else {
    throw ParseError("unknown log record kind '" + kind + "'");
  }
}

void CalibrationService::append_log(const Json& record) {
  if (!options_.log.parent_path().empty()) fs::create_directories(options_.log.parent_path());
  std::ofstream out(options_.log, std::ios::binary | std::ios::app);
  out << record.dump() << "\n";
  out.flush();
  if (!out) throw IoError("cannot append to " + options_.log.string());
}

void CalibrationService::check_annotator(const std::string& annotator) const {
  if (annotator.empty()) throw ApiError(400, "annotator id required");
  if (!options_.annotators.empty() &&
      std::find(options_.annotators.begin(), options_.annotators.end(), annotator) == options_.annotators.end()) {
    throw ApiError(403, "unknown annotator '" + annotator + "'");
  }
}

ReviewState CalibrationService::state_for(const std::string& sample_id, const std::string& annotator) const {
  const auto& s = samples_[by_id_.at(sample_id)];
  if (annotator.empty()) return merged_state(s, decisions_);
  if (s.review.state != ReviewState::Pending) return s.review.state;
  auto it = by_annotator_.find({sample_id, annotator});
  return it == by_annotator_.end() ? ReviewState::Pending : it->second;
}

Json CalibrationService::queue(const std::string& annotator, std::optional<ReviewState> status, std::size_t page,
                               std::optional<std::size_t> page_size) const {
  const std::size_t size = page_size.value_or(options_.page_size);
  if (size == 0) throw ApiError(400, "page_size must be positive");
  if (page == 0) throw ApiError(400, "pages start at 1");
  std::vector<std::size_t> order(samples_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(hash64({"queue", annotator}));
  std::shuffle(order.begin(), order.end(), rng);

  std::shared_lock lock(mu_);
  std::vector<std::pair<std::size_t, ReviewState>> matching;
  for (std::size_t i : order) {
    const ReviewState st = state_for(samples_[i].sample_id, annotator);
    if (!status || *status == st) matching.emplace_back(i, st);
  }
  Json j;
  j["annotator"] = annotator;
  j["status"] = status ? Json(std::string(to_string(*status))) : Json(nullptr);
  j["page"] = page;
  j["page_size"] = size;
  j["total"] = matching.size();
  j["pages"] = (matching.size() + size - 1) / size;
  j["items"] = Json::array();
  for (std::size_t k = (page - 1) * size; k < std::min(matching.size(), page * size); ++k) {
    const auto& s = samples_[matching[k].first];
    Json item;
    item["sample_id"] = s.sample_id;
    item["pair_id"] = s.pair.id;
    item["modality"] = std::string(to_string(s.pair.modality));
    item["question"] = s.pair.question;
    item["options"] = s.pair.options;
    item["answer"] = std::string(1, s.pair.answer);
    item["severity"] = std::string(to_string(s.spec.severity));
    if (s.spec.type) {
      item["type"] = std::string(to_string(*s.spec.type));
      item["category"] = std::string(to_string(info(*s.spec.type).category));
      const auto [t1, t2] = options_.table.thresholds(*s.spec.type, s.pair.modality);
      item["snap"] = {{"t_l1", t1}, {"t_l2", t2}};
    } else {
      item["type"] = nullptr;
      item["category"] = nullptr;
    }
    item["status"] = std::string(to_string(matching[k].second));
    j["items"].push_back(std::move(item));
  }
  return j;
}

std::vector<std::uint8_t> CalibrationService::preview(const std::string& image_id, const std::string& type_name,
                                                      double t) const {
  std::size_t idx = 0;
  if (auto it = clean_by_pair_.find(image_id); it != clean_by_pair_.end()) {
    idx = it->second;
  } else if (auto s = by_id_.find(image_id); s != by_id_.end()) {
    auto c = clean_by_pair_.find(samples_[s->second].pair.id);
    if (c == clean_by_pair_.end()) throw ApiError(404, "no clean image for " + image_id);
    idx = c->second;
  } else {
    throw ApiError(404, "unknown image '" + image_id + "'");
  }
  if (!(t >= 0.0 && t <= 1.0)) throw ApiError(400, "t must be in [0, 1]");
  DegradationType type{};
  try {
    type = parse_degradation_type(type_name);
  } catch (const InvalidArgument& e) {
    throw ApiError(400, e.what());
  }
  const auto& clean = samples_[idx];
  if (!info(type).supports(clean.pair.modality)) {
    throw ApiError(400, "degradation '" + type_name + "' is not compatible with modality " +
                            std::string(to_string(clean.pair.modality)));
  }
  const Image img = load_image(image_root_ / clean.pair.image_path);
  DegradationSpec spec;
  spec.type = type;
  spec.severity = Severity::L1;
  spec.params = options_.table.params_at(type, t);
  spec.seed = hash64({"preview", clean.pair.id, type_name});
  return encode_png(degrade::apply_degradation(img, clean.pair.modality, spec, options_.table), 16);
}

std::string CalibrationService::record_threshold(ThresholdLabel label) {
  check_annotator(label.annotator);
  if (!(label.t_l1 > 0.0 && label.t_l1 < label.t_l2 && label.t_l2 <= 1.0)) {
    throw ApiError(400, "thresholds must satisfy 0 < t_l1 < t_l2 <= 1");
  }
  if (!info(label.type).supports(label.modality)) {
    throw ApiError(400, "degradation '" + std::string(to_string(label.type)) + "' does not apply to " +
                            std::string(to_string(label.modality)));
  }
  if (!label.image_id.empty() && !clean_by_pair_.count(label.image_id) && !by_id_.count(label.image_id)) {
    throw ApiError(404, "unknown image '" + label.image_id + "'");
  }
  std::lock_guard write(write_mu_);
  label.timestamp = dataset::utc_timestamp();
  {
    std::shared_lock lock(mu_);
    label.id = "th-" + std::to_string(thresholds_.size() + 1);
  }
  append_log(threshold_json(label));
  std::unique_lock lock(mu_);
  thresholds_.push_back(label);
  return label.id;
}

dataset::ReviewDecision CalibrationService::record_review(const std::string& sample_id, const std::string& action,
                                                          const std::optional<std::string>& reason,
                                                          const std::string& annotator) {
  check_annotator(annotator);
  dataset::ReviewDecision d;
  d.sample_id = sample_id;
  d.annotator = annotator;
  if (action == "retain") {
    d.action = dataset::ReviewAction::Retain;
    if (reason) throw ApiError(400, "retain takes no reason");
  } else if (action == "discard") {
    d.action = dataset::ReviewAction::Discard;
    if (!reason) throw ApiError(400, "discard requires a reason");
    try {
      d.reason = parse_discard_reason(*reason);
    } catch (const InvalidArgument& e) {
      throw ApiError(400, e.what());
    }
  } else {
    throw ApiError(400, "action must be retain or discard");
  }
  if (!by_id_.count(sample_id)) throw ApiError(404, "unknown sample '" + sample_id + "'");

  std::lock_guard write(write_mu_);
  {
    std::shared_lock lock(mu_);
    if (state_for(sample_id, annotator) != ReviewState::Pending) {
      throw ApiError(409, "sample " + sample_id + " already decided by " + annotator);
    }
  }
  d.timestamp = dataset::utc_timestamp();
  Json rec = dataset::to_json(d);
  Json logged;
  logged["kind"] = "review";
  for (auto& [k, v] : rec.items()) logged[k] = v;
  append_log(logged);
  std::unique_lock lock(mu_);
  by_annotator_[{sample_id, annotator}] =
      d.action == dataset::ReviewAction::Discard ? ReviewState::Discarded : ReviewState::Retained;
  decisions_.push_back(d);
  return d;
}

degrade::SeverityTable CalibrationService::export_table() const {
  std::shared_lock lock(mu_);
  std::map<std::pair<DegradationType, Modality>, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& l : thresholds_) {
    auto& g = groups[{l.type, l.modality}];
    g.first.push_back(l.t_l1);
    g.second.push_back(l.t_l2);
  }
  degrade::SeverityTable table = options_.table;
  for (const auto& [key, g] : groups) {
    table.set_thresholds(key.first, key.second, median(g.first), median(g.second));
  }
  return table;
}

std::string CalibrationService::export_decisions() const {
  std::shared_lock lock(mu_);
  std::string out;
  for (const auto& d : decisions_) out += dataset::to_json(d).dump() + "\n";
  return out;
}

// ---- HTTP --------------------------------------------------------------------------------

namespace {

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(Json{{"error", message}}.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ApiError& e) {
      send_error(res, e.status(), e.what());
    } catch (const InvalidArgument& e) {
      send_error(res, 400, e.what());
    } catch (const IncompatibleModality& e) {
      send_error(res, 400, e.what());
    } catch (const ParseError& e) {
      send_error(res, 400, e.what());
    } catch (const Json::exception& e) {
      send_error(res, 400, std::string("bad request body: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

std::string annotator_of(const httplib::Request& req, const Json& body) {
  if (body.contains("annotator") && body["annotator"].is_string()) return body["annotator"].get<std::string>();
  return req.get_header_value("X-Annotator");
}

double number_param(const httplib::Request& req, const std::string& name) {
  if (!req.has_param(name)) throw ApiError(400, "missing parameter '" + name + "'");
  const std::string v = req.get_param_value(name);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ApiError(400, "parameter '" + name + "' is not a number");
  }
}

constexpr const char* kPlaceholderPage =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>medq review</title></head>"
    "<body><p>Review UI bundle not installed. Start the server with --static pointing at the built bundle.</p>"
    "</body></html>";

}  // namespace

CalibrationServer::CalibrationServer(CalibrationService& service, fs::path static_dir)
    : service_(service), static_dir_(std::move(static_dir)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

CalibrationServer::~CalibrationServer() { stop(); }

void CalibrationServer::install_routes() {
  auto& s = *server_;
  s.Get("/api/queue", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::optional<ReviewState> status;
    if (req.has_param("status") && !req.get_param_value("status").empty()) {
      try {
        status = parse_review_state(req.get_param_value("status"));
      } catch (const InvalidArgument& e) {
        throw ApiError(400, e.what());
      }
    }
    std::size_t page = 1;
    if (req.has_param("page")) {
      const double p = number_param(req, "page");
      if (p < 1 || p != static_cast<double>(static_cast<std::size_t>(p))) throw ApiError(400, "invalid page");
      page = static_cast<std::size_t>(p);
    }
    std::optional<std::size_t> size;
    if (req.has_param("page_size")) {
      const double p = number_param(req, "page_size");
      if (p < 1 || p > 1000) throw ApiError(400, "page_size must be in [1, 1000]");
      size = static_cast<std::size_t>(p);
    }
    std::string annotator = req.get_param_value("annotator");
    if (annotator.empty()) annotator = req.get_header_value("X-Annotator");
    res.set_content(service_.queue(annotator, status, page, size).dump(), "application/json");
  }));

  s.Get("/api/preview", guarded([this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("image") || !req.has_param("type")) throw ApiError(400, "image and type are required");
    const auto png = service_.preview(req.get_param_value("image"), req.get_param_value("type"), number_param(req, "t"));
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }));

  s.Post("/api/threshold", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const Json body = Json::parse(req.body);
    ThresholdLabel l;
    try {
      l.type = parse_degradation_type(body.at("type").get<std::string>());
      l.modality = parse_modality(body.at("modality").get<std::string>());
    } catch (const InvalidArgument& e) {
      throw ApiError(400, e.what());
    }
    l.image_id = body.value("image_id", "");
    l.t_l1 = body.at("t_l1").get<double>();
    l.t_l2 = body.at("t_l2").get<double>();
    l.annotator = annotator_of(req, body);
    const std::string id = service_.record_threshold(l);
    res.status = 201;
    res.set_content(Json{{"id", id}}.dump(), "application/json");
  }));

  s.Post("/api/review", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const Json body = Json::parse(req.body);
    std::optional<std::string> reason;
    if (body.contains("reason") && !body["reason"].is_null()) reason = body["reason"].get<std::string>();
    const auto d = service_.record_review(body.at("sample_id").get<std::string>(), body.at("action").get<std::string>(),
                                          reason, annotator_of(req, body));
    res.status = 201;
    res.set_content(dataset::to_json(d).dump(), "application/json");
  }));

  s.Get("/api/export/severity-table", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto table = service_.export_table();
    const std::string format = req.has_param("format") ? req.get_param_value("format") : "toml";
    if (format == "toml") {
      res.set_content(table.to_toml(), "application/toml");
    } else if (format == "json") {
      Json j = Json::object();
      for (const auto& e : degradation_catalog()) {
        const auto [t1, t2] = table.thresholds(e.type);
        Json tj = {{"t_l1", t1}, {"t_l2", t2}, {"modality", Json::object()}};
        for (Modality m : kAllModalities) {
          if (!e.supports(m)) continue;
          const auto [m1, m2] = table.thresholds(e.type, m);
          if (m1 != t1 || m2 != t2) tj["modality"][std::string(to_string(m))] = {{"t_l1", m1}, {"t_l2", m2}};
        }
        j[std::string(e.name)] = std::move(tj);
      }
      res.set_content(j.dump(2), "application/json");
    } else {
      throw ApiError(400, "format must be toml or json");
    }
  }));

  s.Get("/api/export/decisions", guarded([this](const httplib::Request&, httplib::Response& res) {
    res.set_content(service_.export_decisions(), "application/x-ndjson");
  }));

  if (!static_dir_.empty() && fs::is_directory(static_dir_)) {
    s.set_mount_point("/", static_dir_.string());
  } else {
    s.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kPlaceholderPage, "text/html"); });
  }
}

int CalibrationServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void CalibrationServer::run(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
}

void CalibrationServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace medq::server
