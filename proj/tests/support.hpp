#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "simulpipe/core.hpp"
#include "simulpipe/engines.hpp"
#include "simulpipe/segmenter.hpp"

namespace simulpipe::testing {

inline std::string fixture(const std::string& relative) {
  return std::string(SIMULPIPE_FIXTURES) + "/" + relative;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("simulpipe-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// Small seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool coin(double p = 0.5) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[static_cast<std::size_t>(range(0, static_cast<std::int64_t>(items.size()) - 1))];
  }

  std::string word(int max_len = 5) {
    static const std::string letters = "abcdefghijklmnopqrstuvwxyz";
    std::string w;
    const auto n = range(1, max_len);
    for (std::int64_t i = 0; i < n; ++i) w += letters[static_cast<std::size_t>(range(0, 25))];
    return w;
  }

  std::vector<std::string> words(std::int64_t lo, std::int64_t hi,
                                 const std::vector<std::string>& vocab) {
    std::vector<std::string> out;
    const auto n = range(lo, hi);
    for (std::int64_t i = 0; i < n; ++i) out.push_back(pick(vocab));
    return out;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Rule model: a boundary right after any of `markers`, decided at shift 0.
inline std::shared_ptr<const SegmenterModel> marker_model(
    SegmentKind level, int max_delay, std::initializer_list<std::string> markers) {
  SegmenterConfig cfg;
  cfg.level = level;
  cfg.max_delay = max_delay;
  std::unordered_map<std::string, double> w{{"bias", -6.0}};
  for (const auto& m : markers) {
    for (int s = 0; s <= max_delay; ++s) w["s" + std::to_string(s) + "|w0=" + m] = 12.0;
  }
  return std::make_shared<const SegmenterModel>(cfg, std::move(w));
}

inline EngineDescriptor descriptor(const std::string& id, int priority,
                                   LatencySpec latency = {}) {
  EngineDescriptor d;
  d.id = id;
  d.priority = priority;
  d.latency = latency;
  return d;
}

inline std::vector<TokenEvent> token_events(const std::vector<std::string>& surfaces,
                                            std::int64_t gap_ms = 100,
                                            const std::string& session = "default") {
  std::vector<TokenEvent> out;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    out.push_back({session, static_cast<std::int64_t>(i), surfaces[i],
                   static_cast<std::int64_t>(i) * gap_ms});
  }
  return out;
}

}  // namespace simulpipe::testing
