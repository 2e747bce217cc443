#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <future>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "simulpipe/context.hpp"
#include "simulpipe/core.hpp"
#include "simulpipe/engines.hpp"
#include "simulpipe/segmenter.hpp"

namespace simulpipe {

enum class ClockMode { Simulated, Real };
enum class PipelineMode {
  ChunkAndSentence,  // chunk captions, replaced by sentence retranslation
  SentenceOnly,      // sentence translations only (latency baseline)
};

struct SessionConfig {
  LanguageCode src = LanguageCode::parse("ja");
  LanguageCode tgt = LanguageCode::parse("en");
  std::shared_ptr<const SegmenterModel> chunk_model;
  std::shared_ptr<const SegmenterModel> sentence_model;
  std::shared_ptr<const EngineBroker> broker;
  ContextTags tags;
  std::size_t history_window = 3;
  ClockMode clock = ClockMode::Simulated;
  PipelineMode mode = PipelineMode::ChunkAndSentence;
  std::uint64_t seed = 0;  // simulated engine latencies
  std::string session_id = "default";
};

// One interpretation session. Tokens go to the chunk and sentence segmenters;
// closed chunks are translated right away and every closed sentence is
// retranslated as a whole, its terminal event replacing the chunk captions.
//
// Under the simulated clock a translation finishes at close time plus the
// sampled engine latency, and events are released once the stream clock
// (token t_ms) passes that point. Captions of one sentence are released in
// chunk order and sentence terminals in sentence order.
class Session {
 public:
  explicit Session(SessionConfig config);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  std::vector<CaptionEvent> feed_token(const TokenEvent& token);
  // Idempotent; closes the trailing chunk and sentence and drains all events.
  std::vector<CaptionEvent> flush();

  const std::vector<TokenEvent>& tokens() const noexcept { return tokens_; }
  const std::vector<Segment>& chunk_segments() const noexcept { return chunk_segments_; }
  const std::vector<Segment>& sentence_segments() const noexcept { return sentence_segments_; }
  const HistoryBuffer& history() const noexcept { return history_; }
  const SessionConfig& config() const noexcept { return config_; }

 private:
  struct Outcome {
    bool ok = false;
    std::string text;
    std::string engine;
  };
  struct Job {
    std::optional<Outcome> outcome;      // simulated clock
    std::shared_future<Outcome> future;  // real clock
    std::int64_t ready_at = 0;
  };
  enum class ChunkStatus { Pending, Emitted, Superseded };
  struct Chunk {
    Segment segment;
    std::optional<Job> job;
    ChunkStatus status = ChunkStatus::Pending;
    std::string caption;
  };
  struct Sentence {
    std::int64_t id = 0;
    std::int64_t start = 0;
    std::vector<Chunk> chunks;
    std::size_t released = 0;
    bool closed = false;
    std::string source;
    std::optional<Job> retranslation;
    std::int64_t last_emit = 0;
  };

  void process(const std::vector<BoundaryDecision>& chunk_decisions,
               const std::vector<BoundaryDecision>& sentence_decisions, std::int64_t time);
  void close_chunk(std::int64_t end, std::int64_t time);
  void close_sentence(std::int64_t end, std::int64_t time);
  Job launch(const std::string& original, SegmentKind granularity, std::int64_t time);
  std::int64_t sample_latency(SegmentKind granularity);
  std::vector<CaptionEvent> release(std::int64_t now, bool drain);
  std::optional<std::int64_t> due(const Job& job, std::int64_t last_emit, std::int64_t now,
                                  bool drain) const;
  static const Outcome& outcome_of(const Job& job);
  CaptionEvent make_terminal(Sentence& sentence);
  std::int64_t wall_ms() const;

  SessionConfig config_;
  std::unique_ptr<StreamingSegmenter> chunk_segmenter_;
  std::unique_ptr<StreamingSegmenter> sentence_segmenter_;
  HistoryBuffer history_;
  std::mt19937_64 latency_rng_;
  std::chrono::steady_clock::time_point started_;

  std::vector<TokenEvent> tokens_;
  std::vector<Segment> chunk_segments_;
  std::vector<Segment> sentence_segments_;
  std::deque<Sentence> open_;  // sentences without a released terminal event
  std::int64_t chunk_start_ = 0;
  std::int64_t sentence_start_ = 0;
  std::int64_t next_sentence_id_ = 0;
  std::int64_t next_seq_ = 0;
  bool flushed_ = false;
};

// Text of a fallback_final: the sentence's chunk captions joined in order.
std::string fallback_text(const std::vector<std::string>& chunk_captions,
                          const LanguageCode& tgt);

struct SentenceLatency {
  std::int64_t sentence_id = 0;
  std::int64_t first_token_ms = 0;
  std::int64_t time_to_first_caption = 0;
  std::int64_t time_to_final = 0;
};

struct LatencyReport {
  std::vector<SentenceLatency> sentences;
  double mean_time_to_first_caption = 0.0;
  std::int64_t max_time_to_first_caption = 0;
  double mean_time_to_final = 0.0;
  std::int64_t max_time_to_final = 0;
};

// Per-sentence latency measured from the sentence's first token. Sentence
// spans come from `sentence_segments` (as produced by the session). Throws
// IncompleteLog when tokens exist but some sentence has no terminal event.
LatencyReport latency_report(const std::vector<CaptionEvent>& events,
                             const std::vector<TokenEvent>& tokens,
                             const std::vector<Segment>& sentence_segments);

// Checks the append/replace protocol of a complete log and returns a
// description of every violation found (empty when the log is valid).
std::vector<std::string> verify_caption_log(const std::vector<CaptionEvent>& events);

}  // namespace simulpipe
