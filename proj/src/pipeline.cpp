#include "simulpipe/pipeline.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "simulpipe/error.hpp"

namespace simulpipe {

Session::Session(SessionConfig config)
    : config_(std::move(config)),
      history_(config_.history_window),
      latency_rng_(config_.seed),
      started_(std::chrono::steady_clock::now()) {
  if (!config_.broker || config_.broker->engines().empty()) {
    throw Error(ErrorCode::InvalidConfig, "session needs at least one engine");
  }
  if (!config_.sentence_model || config_.sentence_model->config().level != SegmentKind::Sentence) {
    throw Error(ErrorCode::InvalidConfig, "sentence model missing or not sentence-level");
  }
  sentence_segmenter_ = std::make_unique<StreamingSegmenter>(config_.sentence_model);
  if (config_.mode == PipelineMode::ChunkAndSentence) {
    if (!config_.chunk_model || config_.chunk_model->config().level != SegmentKind::Chunk) {
      throw Error(ErrorCode::InvalidConfig, "chunk model missing or not chunk-level");
    }
    chunk_segmenter_ = std::make_unique<StreamingSegmenter>(config_.chunk_model);
  }
}

Session::~Session() = default;

std::int64_t Session::wall_ms() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                               started_)
      .count();
}

std::vector<CaptionEvent> Session::feed_token(const TokenEvent& token) {
  if (flushed_) throw Error(ErrorCode::OutOfOrderToken, "session already flushed");
  if (token.index != static_cast<std::int64_t>(tokens_.size())) {
    throw Error(ErrorCode::OutOfOrderToken, "expected index " + std::to_string(tokens_.size()) +
                                                ", got " + std::to_string(token.index));
  }
  if (token.t_ms < 0 || (!tokens_.empty() && token.t_ms < tokens_.back().t_ms)) {
    throw Error(ErrorCode::MalformedRecord, "t_ms must be non-negative and non-decreasing");
  }
  tokens_.push_back(token);
  if (open_.empty() || open_.back().closed) {
    Sentence s;
    s.id = next_sentence_id_++;
    s.start = token.index;
    open_.push_back(std::move(s));
  }

  const auto now = config_.clock == ClockMode::Simulated ? token.t_ms : wall_ms();
  auto out = release(now, false);
  std::vector<BoundaryDecision> chunk_decisions;
  if (chunk_segmenter_) chunk_decisions = chunk_segmenter_->feed(token);
  const auto sentence_decisions = sentence_segmenter_->feed(token);
  process(chunk_decisions, sentence_decisions, now);
  auto later = release(now, false);
  out.insert(out.end(), later.begin(), later.end());
  return out;
}

std::vector<CaptionEvent> Session::flush() {
  if (flushed_) return {};
  flushed_ = true;
  const auto now = config_.clock == ClockMode::Simulated
                       ? (tokens_.empty() ? 0 : tokens_.back().t_ms)
                       : wall_ms();
  std::vector<BoundaryDecision> chunk_decisions;
  if (chunk_segmenter_) chunk_decisions = chunk_segmenter_->flush();
  process(chunk_decisions, sentence_segmenter_->flush(), now);
  // A zero-delay model commits its verdict on the last token before flush,
  // so the stream end itself closes whatever is still open.
  const auto last = static_cast<std::int64_t>(tokens_.size()) - 1;
  if (sentence_start_ <= last) {
    if (chunk_start_ <= last) close_chunk(last, now);
    close_sentence(last, now);
  }
  return release(now, true);
}

void Session::process(const std::vector<BoundaryDecision>& chunk_decisions,
                      const std::vector<BoundaryDecision>& sentence_decisions,
                      std::int64_t time) {
  std::map<std::int64_t, bool> ends;  // position -> closes a sentence
  for (const auto& d : chunk_decisions) {
    if (d.boundary) ends.emplace(d.position, false);
  }
  for (const auto& d : sentence_decisions) {
    if (d.boundary) ends[d.position] = true;
  }
  for (const auto& [position, sentence] : ends) {
    if (sentence) {
      if (position < sentence_start_) continue;
      if (chunk_start_ <= position) close_chunk(position, time);
      close_sentence(position, time);
    } else if (position >= chunk_start_) {
      close_chunk(position, time);
    }
  }
}

void Session::close_chunk(std::int64_t end, std::int64_t time) {
  auto& sentence = open_.back();
  Chunk chunk;
  chunk.segment.kind = SegmentKind::Chunk;
  chunk.segment.start = chunk_start_;
  chunk.segment.end = end;
  for (auto i = chunk_start_; i <= end; ++i) {
    chunk.segment.tokens.push_back(tokens_[static_cast<std::size_t>(i)].surface);
  }
  if (config_.mode == PipelineMode::ChunkAndSentence) {
    chunk.job = launch(join_tokens(chunk.segment.tokens, config_.src), SegmentKind::Chunk, time);
    chunk_segments_.push_back(chunk.segment);
  }
  sentence.chunks.push_back(std::move(chunk));
  chunk_start_ = end + 1;
}

void Session::close_sentence(std::int64_t end, std::int64_t time) {
  auto& sentence = open_.back();
  Segment seg;
  seg.kind = SegmentKind::Sentence;
  seg.start = sentence.start;
  seg.end = end;
  for (auto i = sentence.start; i <= end; ++i) {
    seg.tokens.push_back(tokens_[static_cast<std::size_t>(i)].surface);
  }
  sentence.closed = true;
  sentence.source = join_tokens(seg.tokens, config_.src);
  sentence.retranslation = launch(sentence.source, SegmentKind::Sentence, time);
  sentence_segments_.push_back(std::move(seg));
  sentence_start_ = end + 1;
}

Session::Job Session::launch(const std::string& original, SegmentKind granularity,
                             std::int64_t time) {
  TranslationRequest request{config_.src, config_.tgt, serialize_tags(config_.tags) + original,
                             build_request_context(config_.tags, history_), granularity};
  auto run = [broker = config_.broker, request, original]() {
    Outcome out;
    try {
      const auto selection = select_best(original, request, *broker);
      out.ok = true;
      out.text = selection.winner.forward;
      out.engine = selection.winner.engine_id;
    } catch (const Error& e) {
      out.text = e.what();
    }
    return out;
  };
  Job job;
  if (config_.clock == ClockMode::Simulated) {
    job.outcome = run();
    job.ready_at = time + sample_latency(granularity);
  } else {
    job.future = std::async(std::launch::async, run).share();
  }
  return job;
}

// Engines run concurrently, so a selection takes as long as the slowest
// forward + back round trip.
std::int64_t Session::sample_latency(SegmentKind granularity) {
  std::int64_t latency = 0;
  for (const auto& engine : config_.broker->eligible(config_.src, config_.tgt, granularity)) {
    const auto& spec = engine->descriptor().latency;
    // Plain modulo keeps simulated timings identical across standard libraries.
    const auto span = static_cast<std::uint64_t>(spec.max_ms - spec.min_ms) + 1;
    const auto forward = spec.min_ms + static_cast<std::int64_t>(latency_rng_() % span);
    const auto back = spec.min_ms + static_cast<std::int64_t>(latency_rng_() % span);
    latency = std::max(latency, forward + back);
  }
  return latency;
}

const Session::Outcome& Session::outcome_of(const Job& job) {
  return job.outcome ? *job.outcome : job.future.get();
}

std::optional<std::int64_t> Session::due(const Job& job, std::int64_t last_emit,
                                         std::int64_t now, bool drain) const {
  if (config_.clock == ClockMode::Simulated) {
    const auto t = std::max(job.ready_at, last_emit);
    if (drain || t <= now) return t;
    return std::nullopt;
  }
  if (drain) {
    job.future.wait();
  } else if (job.future.wait_for(std::chrono::seconds(0)) != std::future_status::ready) {
    return std::nullopt;
  }
  return std::max(wall_ms(), last_emit);
}

std::vector<CaptionEvent> Session::release(std::int64_t now, bool drain) {
  std::vector<CaptionEvent> out;
  const bool chunk_mode = config_.mode == PipelineMode::ChunkAndSentence;
  while (true) {
    std::optional<std::int64_t> best_time;
    std::size_t best_index = 0;
    bool best_terminal = false;
    for (std::size_t i = 0; i < open_.size(); ++i) {
      const auto& s = open_[i];
      std::optional<std::int64_t> t;
      bool terminal = false;
      if (chunk_mode && s.released < s.chunks.size()) {
        t = due(*s.chunks[s.released].job, s.last_emit, now, drain);
      } else if (i == 0 && s.closed) {
        t = due(*s.retranslation, s.last_emit, now, drain);
        terminal = true;
      }
      if (t && (!best_time || *t < *best_time)) {
        best_time = t;
        best_index = i;
        best_terminal = terminal;
      }
    }
    if (!best_time) break;

    auto& s = open_[best_index];
    if (best_terminal) {
      auto event = make_terminal(s);
      event.emit_ms = *best_time;
      out.push_back(std::move(event));
      open_.pop_front();
    } else {
      auto& chunk = s.chunks[s.released];
      const auto& outcome = outcome_of(*chunk.job);
      CaptionEvent event;
      event.seq = next_seq_++;
      event.kind = CaptionKind::ChunkCaption;
      event.sentence_id = s.id;
      event.chunk_index = static_cast<std::int64_t>(s.released);
      event.text = outcome.ok ? outcome.text : join_tokens(chunk.segment.tokens, config_.src);
      event.engine = outcome.ok ? outcome.engine : "none";
      event.emit_ms = *best_time;
      chunk.caption = event.text;
      chunk.status = ChunkStatus::Emitted;
      ++s.released;
      s.last_emit = *best_time;
      out.push_back(std::move(event));
    }
  }
  return out;
}

CaptionEvent Session::make_terminal(Sentence& sentence) {
  const auto& outcome = outcome_of(*sentence.retranslation);
  CaptionEvent event;
  event.seq = next_seq_++;
  event.sentence_id = sentence.id;
  std::vector<std::string> captions;
  for (std::size_t i = 0; i < sentence.chunks.size(); ++i) {
    auto& chunk = sentence.chunks[i];
    if (chunk.status != ChunkStatus::Emitted) continue;
    event.replaces.push_back({sentence.id, static_cast<std::int64_t>(i)});
    captions.push_back(chunk.caption);
    chunk.status = ChunkStatus::Superseded;
  }
  if (outcome.ok) {
    event.kind = CaptionKind::SentenceFinal;
    event.text = outcome.text;
    event.engine = outcome.engine;
  } else {
    event.kind = CaptionKind::FallbackFinal;
    event.text = captions.empty() ? sentence.source : fallback_text(captions, config_.tgt);
    event.engine = "fallback";
  }
  history_.push(sentence.source, event.text);
  return event;
}

std::string fallback_text(const std::vector<std::string>& chunk_captions,
                          const LanguageCode& tgt) {
  return join_tokens(chunk_captions, tgt);
}

LatencyReport latency_report(const std::vector<CaptionEvent>& events,
                             const std::vector<TokenEvent>& tokens,
                             const std::vector<Segment>& sentence_segments) {
  LatencyReport report;
  if (tokens.empty()) return report;
  if (sentence_segments.empty()) {
    throw Error(ErrorCode::IncompleteLog, "tokens were consumed but no sentence was closed");
  }
  std::map<std::int64_t, std::int64_t> first_emit;
  std::map<std::int64_t, std::int64_t> terminal_emit;
  for (const auto& e : events) {
    first_emit.try_emplace(e.sentence_id, e.emit_ms);
    if (e.terminal()) terminal_emit.try_emplace(e.sentence_id, e.emit_ms);
  }
  double sum_first = 0.0;
  double sum_final = 0.0;
  for (std::size_t k = 0; k < sentence_segments.size(); ++k) {
    const auto id = static_cast<std::int64_t>(k);
    const auto& seg = sentence_segments[k];
    if (seg.start < 0 || static_cast<std::size_t>(seg.start) >= tokens.size()) {
      throw Error(ErrorCode::IncompleteLog, "sentence segment outside the token stream");
    }
    auto fin = terminal_emit.find(id);
    if (fin == terminal_emit.end()) {
      throw Error(ErrorCode::IncompleteLog, "sentence " + std::to_string(id) + " has no final");
    }
    SentenceLatency row;
    row.sentence_id = id;
    row.first_token_ms = tokens[static_cast<std::size_t>(seg.start)].t_ms;
    row.time_to_first_caption = first_emit.at(id) - row.first_token_ms;
    row.time_to_final = fin->second - row.first_token_ms;
    sum_first += static_cast<double>(row.time_to_first_caption);
    sum_final += static_cast<double>(row.time_to_final);
    report.max_time_to_first_caption =
        std::max(report.max_time_to_first_caption, row.time_to_first_caption);
    report.max_time_to_final = std::max(report.max_time_to_final, row.time_to_final);
    report.sentences.push_back(row);
  }
  const auto n = static_cast<double>(report.sentences.size());
  report.mean_time_to_first_caption = sum_first / n;
  report.mean_time_to_final = sum_final / n;
  return report;
}

std::vector<std::string> verify_caption_log(const std::vector<CaptionEvent>& events) {
  std::vector<std::string> problems;
  struct State {
    std::int64_t chunks = 0;
    bool terminated = false;
  };
  std::map<std::int64_t, State> sentences;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const auto where = "event " + std::to_string(i) + ": ";
    if (e.seq != static_cast<std::int64_t>(i)) {
      problems.push_back(where + "seq " + std::to_string(e.seq) + " breaks the 0,1,2,... order");
    }
    auto& s = sentences[e.sentence_id];
    if (s.terminated) {
      problems.push_back(where + "event after the sentence's terminal event");
      continue;
    }
    if (e.kind == CaptionKind::ChunkCaption) {
      if (!e.chunk_index || *e.chunk_index != s.chunks) {
        problems.push_back(where + "chunk caption out of index order");
      }
      if (!e.replaces.empty()) problems.push_back(where + "chunk caption replaces something");
      ++s.chunks;
    } else {
      if (e.chunk_index) problems.push_back(where + "terminal event carries a chunk index");
      std::vector<ChunkRef> expected;
      for (std::int64_t c = 0; c < s.chunks; ++c) expected.push_back({e.sentence_id, c});
      if (e.replaces != expected) {
        problems.push_back(where + "replaces list differs from the sentence's chunk captions");
      }
      s.terminated = true;
    }
  }
  for (const auto& [id, s] : sentences) {
    if (!s.terminated) problems.push_back("sentence " + std::to_string(id) + " never terminated");
  }
  return problems;
}

}  // namespace simulpipe
