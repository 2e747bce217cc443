#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "simulpipe/core.hpp"

namespace simulpipe {

struct SegmenterConfig {
  SegmentKind level = SegmentKind::Chunk;
  // Maximum number of following tokens a verdict may wait for.
  int max_delay = 2;
  double threshold = 0.5;
  int feature_window = 4;

  // Throws Error(InvalidConfig) when out of range.
  void validate() const;

  friend bool operator==(const SegmenterConfig&, const SegmenterConfig&) = default;
};

struct TrainOptions {
  int epochs = 5;
  std::uint64_t seed = 1;
  double learning_rate = 0.2;
  double l2 = 1e-3;  // per-instance weight decay
};

// A token stream with gold boundary positions (indices of segment-final tokens).
struct BoundaryStream {
  std::vector<std::string> tokens;
  std::vector<std::int64_t> boundaries;
};

struct BoundaryDecision {
  std::int64_t position = 0;
  bool boundary = false;
  std::int64_t decided_at = 0;
  double score = 0.0;

  friend bool operator==(const BoundaryDecision&, const BoundaryDecision&) = default;
};

// Feature names for the verdict on `position` after `shift` following tokens
// have been observed: identities and bigrams of the `feature_window` tokens
// ending at `position` (scoped by shift, "s2|w0=tea"), the `shift` tokens
// after it ("r1=so"), the shift itself and a bias. Missing left context is
// padded with "<s>". Sorted, unique.
std::vector<std::string> extract_features(std::span<const std::string> tokens,
                                          std::int64_t position, int shift,
                                          int feature_window);

// Logistic boundary classifier over extract_features. Immutable once built.
class SegmenterModel {
 public:
  static constexpr std::string_view kVersionTag = "simulpipe-segmenter 1 logistic-sgd";

  SegmenterModel() = default;
  SegmenterModel(SegmenterConfig config, std::unordered_map<std::string, double> weights);

  const SegmenterConfig& config() const noexcept { return config_; }
  const std::unordered_map<std::string, double>& weights() const noexcept { return weights_; }

  // Probability that the features describe a boundary; 0.5 for zero weights.
  double score(const std::vector<std::string>& features) const;

  void save(std::ostream& out) const;
  static SegmenterModel load(std::istream& in);
  void save_file(const std::string& path) const;
  static SegmenterModel load_file(const std::string& path);

  friend bool operator==(const SegmenterModel&, const SegmenterModel&) = default;

 private:
  SegmenterConfig config_;
  std::unordered_map<std::string, double> weights_;
};

// Streaming multi-shift segmenter. Each position is decided once: "yes" at the
// smallest shift whose score exceeds the threshold, "no" once shift N is
// reached. flush() decides the rest and forces a boundary on the final token
// if it is still pending (with N = 0 nothing is pending at flush).
class StreamingSegmenter {
 public:
  explicit StreamingSegmenter(std::shared_ptr<const SegmenterModel> model);

  std::vector<BoundaryDecision> feed(const TokenEvent& token);
  std::vector<BoundaryDecision> feed(std::string_view surface);
  std::vector<BoundaryDecision> feed_batch(std::span<const TokenEvent> tokens);
  std::vector<BoundaryDecision> flush();

  std::int64_t next_index() const noexcept { return next_index_; }
  const SegmenterModel& model() const noexcept { return *model_; }

 private:
  std::vector<BoundaryDecision> decide(bool at_flush);

  std::shared_ptr<const SegmenterModel> model_;
  std::deque<std::string> buffer_;
  std::vector<std::string> scratch_;
  std::int64_t buffer_base_ = 0;  // stream index of buffer_.front()
  std::int64_t next_index_ = 0;
  std::vector<std::int64_t> pending_;
  bool flushed_ = false;
};

// Runs a fresh streaming segmenter over `tokens` and flushes it.
std::vector<BoundaryDecision> segment_stream(std::shared_ptr<const SegmenterModel> model,
                                             std::span<const std::string> tokens);

std::vector<Segment> decisions_to_segments(const std::vector<BoundaryDecision>& decisions,
                                           std::span<const std::string> tokens,
                                           SegmentKind kind);

// Multi-shift supervision: every (position, shift <= N) pair with right
// context available becomes one instance labelled with the gold verdict.
// The final position of each stream is excluded since flush forces it.
SegmenterModel train_segmenter(const std::vector<BoundaryStream>& corpus,
                               const SegmenterConfig& config, const TrainOptions& options);

struct TuneRow {
  int max_delay = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mean_delay = 0.0;
};

struct TuneResult {
  int selected = 0;
  std::vector<TuneRow> rows;
};

// Trains one model per candidate N on `train`, scores boundary F1 on `dev`,
// and picks the best; ties go to the smallest N.
TuneResult tune_max_delay(const std::vector<BoundaryStream>& train,
                          const std::vector<BoundaryStream>& dev,
                          const std::vector<int>& candidates,
                          const SegmenterConfig& base, const TrainOptions& options);

}  // namespace simulpipe
