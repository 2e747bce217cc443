#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "simulpipe/context.hpp"
#include "simulpipe/core.hpp"
#include "simulpipe/segmenter.hpp"

namespace simulpipe {

class EngineBroker;
struct ChunkAlignedPair;

// ---- BLEU ------------------------------------------------------------------

enum class BleuSmoothing { None, AddOneForNGe2 };

struct BleuConfig {
  int max_n = 4;
  BleuSmoothing smoothing = BleuSmoothing::None;
};

// Corpus-level sufficient statistics: clipped matches and candidate n-gram
// totals per order, plus total lengths.
struct BleuStats {
  std::vector<std::int64_t> matches;
  std::vector<std::int64_t> totals;
  std::int64_t candidate_length = 0;
  std::int64_t reference_length = 0;

  double precision(int n) const;  // 1-based order, unsmoothed
  double score(const BleuConfig& config) const;
};

// min(1, exp(1 - r/c)); 0 for an empty candidate.
double brevity_penalty(std::int64_t candidate_length, std::int64_t reference_length);

BleuStats bleu_stats(const std::vector<std::string>& candidates,
                     const std::vector<std::string>& references, int max_n,
                     const LanguageCode& lang);

// Single-reference corpus BLEU in [0,1]. Throws LengthMismatch / EmptyInput.
double bleu(const std::vector<std::string>& candidates,
            const std::vector<std::string>& references, const BleuConfig& config = {},
            const LanguageCode& lang = LanguageCode::parse("en"));

// ---- Segment lengths ---------------------------------------------------------

struct LengthStats {
  double mean_utterance_len = 0.0;
  double mean_sentence_seg_len = 0.0;
  double mean_chunk_seg_len = 0.0;
  double reduction = 0.0;

  static LengthStats from_means(double utterance, double sentence, double chunk);
};

// (sentence - chunk) / sentence, 0 unless both are positive.
double length_reduction(double mean_sentence_len, double mean_chunk_len);

LengthStats length_stats(const std::vector<std::vector<std::string>>& utterances,
                         const std::vector<std::vector<Segment>>& sentence_segments,
                         const std::vector<std::vector<Segment>>& chunk_segments);

double mean_segment_length(const std::vector<std::vector<Segment>>& segments);

// BASE baseline: consecutive segments of `length` tokens, remainder last.
std::vector<Segment> fixed_length_segment(std::span<const std::string> tokens, int length);

// ---- Boundary accuracy -------------------------------------------------------

struct BoundaryCounts {
  std::int64_t true_positives = 0;
  std::int64_t false_positives = 0;
  std::int64_t false_negatives = 0;
  std::int64_t delay_sum = 0;  // over true positives

  BoundaryCounts& operator+=(const BoundaryCounts& other);

  // Empty denominators count as 1 (nothing predicted / nothing to find).
  double precision() const;
  double recall() const;
  double f1() const;
  double mean_delay() const;
};

// Throws IncompleteDecisions unless positions 0..n-1 are each decided once.
BoundaryCounts boundary_counts(const std::vector<std::int64_t>& gold,
                               const std::vector<BoundaryDecision>& predicted);

struct BoundaryScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mean_delay = 0.0;
};

BoundaryScore boundary_f1(const std::vector<std::int64_t>& gold,
                          const std::vector<BoundaryDecision>& predicted);

// ---- Engine comparison --------------------------------------------------------

enum class SegmentationMode { ChunkModel, SentenceModel, FixedLength };

std::string_view to_string(SegmentationMode mode);

struct CompareConfig {
  std::string name;
  SegmentationMode mode = SegmentationMode::SentenceModel;
  std::shared_ptr<const SegmenterModel> model;  // chunk/sentence modes
  int fixed_length = 7;
  std::shared_ptr<const EngineBroker> broker;
  ContextTags tags;  // prepended when non-empty
};

struct TestPair {
  LanguageCode src;
  LanguageCode tgt;
  std::vector<std::string> source_tokens;
  std::string reference;
};

std::vector<TestPair> to_test_pairs(const std::vector<ChunkAlignedPair>& pairs);

struct CompareOptions {
  int concat = 3;  // consecutive utterances joined into one evaluation stream
  BleuConfig bleu;
};

struct CompareRow {
  std::string config;
  std::string direction;
  std::string mode;
  double bleu = 0.0;
  std::int64_t segments = 0;
  bool failed = false;
  std::string error;
};

struct CompareDelta {
  std::string config_a;
  std::string config_b;
  std::string direction;
  double delta_points = 0.0;  // 100 * (bleu_a - bleu_b)
};

struct CompareReport {
  std::vector<CompareRow> rows;
  std::vector<CompareDelta> deltas;

  bool any_failed() const;
  void write_tsv(std::ostream& out) const;
  void write_jsonl(std::ostream& out) const;
};

// Translates every direction under each configuration's segmentation and
// engines and scores BLEU. Rows are sorted by (config, direction). Engine
// failures mark the row failed instead of aborting.
CompareReport compare_engines(const std::vector<TestPair>& pairs,
                              const std::vector<CompareConfig>& configs,
                              const CompareOptions& options = {});

}  // namespace simulpipe
