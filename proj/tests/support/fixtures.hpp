#pragma once

// Shared helpers for the unit and acceptance tests: synthetic images, temp dirs, toy pools.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "medq/image.hpp"
#include "medq/image_io.hpp"
#include "medq/manifest.hpp"
#include "medq/types.hpp"

namespace medq::testing {

/// Smooth blobs plus a gradient, optionally RGB. Values stay inside (0.05, 0.95).
inline Image synthetic_image(int width, int height, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Blob {
    double x, y, r, a;
  };
  std::vector<Blob> blobs(5);
  for (auto& b : blobs) b = {u(rng) * width, u(rng) * height, (0.1 + 0.25 * u(rng)) * std::min(width, height), u(rng) - 0.3};
  std::vector<double> tint(channels);
  for (auto& t : tint) t = 0.7 + 0.3 * u(rng);
  Image img(width, height, channels);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = 0.25 + 0.3 * x / width + 0.1 * y / height;
      for (const auto& b : blobs) {
        const double d2 = ((x - b.x) * (x - b.x) + (y - b.y) * (y - b.y)) / (b.r * b.r);
        v += 0.35 * b.a * std::exp(-d2);
      }
      for (int c = 0; c < channels; ++c) {
        img.at(x, y, c) = static_cast<float>(std::clamp(v * tint[c], 0.05, 0.95));
      }
    }
  }
  return img;
}

/// Modality matching the image kinds used in the corpus.
struct FixtureImage {
  Image image;
  Modality modality;
};

/// Ten mixed-modality images: gray for CT/MRI/X-ray/Ultrasound, RGB otherwise, varied sizes.
inline std::vector<FixtureImage> mixed_fixture_set() {
  const std::vector<std::pair<Modality, int>> kinds = {
      {Modality::CT, 1},         {Modality::CT, 1},         {Modality::MRI, 1},        {Modality::MRI, 1},
      {Modality::XRay, 1},       {Modality::Ultrasound, 1}, {Modality::Dermoscopy, 3}, {Modality::Histopathology, 3},
      {Modality::Histopathology, 3}, {Modality::Endoscopy, 3}};
  std::vector<FixtureImage> out;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const int w = 48 + 8 * static_cast<int>(i % 3);
    const int h = 48 + 8 * static_cast<int>((i + 1) % 3);
    out.push_back({synthetic_image(w, h, kinds[i].second, 100 + i), kinds[i].first});
  }
  return out;
}

/// A modality for which `type` is applicable.
inline Modality modality_for(DegradationType type) {
  const auto& e = info(type);
  return e.general() ? Modality::Endoscopy : e.modalities.front();
}

/// Channel count natural for a modality.
inline int channels_for(Modality m) {
  return m == Modality::Histopathology || m == Modality::Dermoscopy || m == Modality::Endoscopy ? 3 : 1;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "medq") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline QAPair make_pair(const std::string& id, Modality modality, std::size_t k = 4, char answer = 'B') {
  QAPair p;
  p.id = id;
  p.image_path = "images/" + id + ".png";
  p.question = "Which finding is visible in image " + id + "?";
  for (std::size_t i = 0; i < k; ++i) p.options.push_back("finding " + std::to_string(i + 1));
  p.answer = answer;
  p.modality = modality;
  p.capability = {"Perception", "Anomaly Detection", "Lesion Presence"};
  p.source = "toy";
  return p;
}

/// Writes `<dir>/pool.jsonl` plus one synthetic PNG per pair at the pair's image_path.
inline void write_pool(const std::filesystem::path& dir, const std::vector<QAPair>& pairs,
                       const std::vector<Image>& images) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "pool.jsonl");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    save_image(images[i], dir / pairs[i].image_path);
    out << to_json(pairs[i]).dump() << "\n";
  }
}

}  // namespace medq::testing
