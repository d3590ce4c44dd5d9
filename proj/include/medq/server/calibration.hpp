#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "medq/dataset/pipeline.hpp"
#include "medq/degrade/registry.hpp"
#include "medq/error.hpp"
#include "medq/manifest.hpp"

namespace httplib {
class Server;
}

namespace medq::server {

/// Error carrying the HTTP status the API should answer with.
class ApiError : public Error {
 public:
  ApiError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct ThresholdLabel {
  DegradationType type{};
  Modality modality{};
  std::string image_id;
  double t_l1 = 0.0;
  double t_l2 = 0.0;
  std::string annotator;
  std::string timestamp;
  std::string id;
};

struct ServiceOptions {
  std::filesystem::path manifest;
  /// Append-only JSONL log of threshold labels and review decisions.
  std::filesystem::path log;
  /// Empty accepts any non-empty annotator id.
  std::vector<std::string> annotators;
  degrade::SeverityTable table = degrade::SeverityTable::defaults();
  std::size_t page_size = 50;
};

/// State behind the annotation API. Reads run concurrently; log writes are serialized.
class CalibrationService {
 public:
  explicit CalibrationService(ServiceOptions options);

  /// Samples ordered by a shuffle seeded from the annotator id. `status` filters on the
  /// annotator's own decision (or the merged status when annotator is empty). Pages are 1-based.
  Json queue(const std::string& annotator, std::optional<ReviewState> status, std::size_t page,
             std::optional<std::size_t> page_size = std::nullopt) const;

  /// PNG of the pair's clean image degraded at continuous severity t with a fixed seed.
  std::vector<std::uint8_t> preview(const std::string& image_id, const std::string& type_name, double t) const;

  std::string record_threshold(ThresholdLabel label);
  dataset::ReviewDecision record_review(const std::string& sample_id, const std::string& action,
                                        const std::optional<std::string>& reason, const std::string& annotator);

  /// Base table with per-(type, modality) medians of the recorded labels.
  degrade::SeverityTable export_table() const;
  /// Review decisions as JSONL in the format read by apply_review.
  std::string export_decisions() const;

  std::size_t sample_count() const { return samples_.size(); }

 private:
  void check_annotator(const std::string& annotator) const;
  void append_log(const Json& record);
  void index_record(const Json& record);
  ReviewState state_for(const std::string& sample_id, const std::string& annotator) const;

  ServiceOptions options_;
  std::filesystem::path image_root_;
  std::vector<DegradedSample> samples_;
  std::map<std::string, std::size_t> by_id_;
  std::map<std::string, std::size_t> clean_by_pair_;

  mutable std::shared_mutex mu_;
  std::mutex write_mu_;
  std::vector<ThresholdLabel> thresholds_;
  std::vector<dataset::ReviewDecision> decisions_;
  std::map<std::pair<std::string, std::string>, ReviewState> by_annotator_;
};

/// HTTP front end: /api/* routes plus static files for the review UI.
class CalibrationServer {
 public:
  CalibrationServer(CalibrationService& service, std::filesystem::path static_dir = {});
  ~CalibrationServer();
  CalibrationServer(const CalibrationServer&) = delete;
  CalibrationServer& operator=(const CalibrationServer&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Blocks until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  CalibrationService& service_;
  std::filesystem::path static_dir_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace medq::server
