#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "simulpipe/context.hpp"
#include "simulpipe/core.hpp"

namespace simulpipe {

// Simulated per-call latency; fixed when min_ms == max_ms.
struct LatencySpec {
  std::int64_t min_ms = 0;
  std::int64_t max_ms = 0;
};

struct EngineDescriptor {
  std::string id;
  // (src, tgt) codes. Empty means every pair.
  std::set<std::pair<std::string, std::string>> supports;
  bool reverse_capable = true;
  int priority = 0;  // lower is preferred on ties
  std::set<SegmentKind> granularities{SegmentKind::Chunk, SegmentKind::Sentence};
  LatencySpec latency;

  bool supports_pair(const LanguageCode& src, const LanguageCode& tgt) const;
};

struct TranslationRequest {
  LanguageCode src;
  LanguageCode tgt;
  std::string text;  // tag prefix already prepended
  RequestContext context;
  SegmentKind granularity = SegmentKind::Sentence;
};

// Adapter contract. translate/back_translate validate the request and the
// response; subclasses only implement the two directions.
class TranslationEngine {
 public:
  virtual ~TranslationEngine() = default;

  const EngineDescriptor& descriptor() const noexcept { return descriptor_; }
  const std::string& id() const noexcept { return descriptor_.id; }

  std::string translate(const TranslationRequest& request);
  // Translates `target_text` from request.tgt back into request.src.
  std::string back_translate(std::string_view target_text, const TranslationRequest& request);

 protected:
  explicit TranslationEngine(EngineDescriptor descriptor);

  virtual std::string forward(const TranslationRequest& request) = 0;
  virtual std::string reverse(std::string_view target_text, const TranslationRequest& request) = 0;

 private:
  EngineDescriptor descriptor_;
};

// Echoes the (tag-stripped) input in both directions.
class IdentityEngine final : public TranslationEngine {
 public:
  explicit IdentityEngine(EngineDescriptor descriptor);

 protected:
  std::string forward(const TranslationRequest& request) override;
  std::string reverse(std::string_view text, const TranslationRequest& request) override;
};

// ROT13 over ASCII letters; an involution, so the reverse model recovers the
// input exactly.
class CipherEngine final : public TranslationEngine {
 public:
  explicit CipherEngine(EngineDescriptor descriptor);

  static std::string rot13(std::string_view text);

 protected:
  std::string forward(const TranslationRequest& request) override;
  std::string reverse(std::string_view text, const TranslationRequest& request) override;
};

// Phrase entries matched greedily (longest first) over language-aware tokens;
// unmatched tokens pass through untouched.
class PhraseTable {
 public:
  PhraseTable() = default;

  void add(std::string source, std::string target);
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept {
    return entries_;
  }
  // Swapped entries; the first target occurrence wins.
  PhraseTable inverted() const;

  std::string apply(std::string_view text, const LanguageCode& from,
                    const LanguageCode& to) const;

  // "source<TAB>target" per line; blank and '#' lines ignored.
  static PhraseTable load(std::istream& in);
  static PhraseTable load_file(const std::string& path);

 private:
  struct Index {
    std::map<std::vector<std::string>, std::string> phrases;
    std::size_t max_length = 0;
  };
  struct Cache {
    std::mutex mutex;
    std::map<std::pair<std::string, bool>, Index> by_language;
  };
  const Index& index_for(const LanguageCode& from) const;

  std::vector<std::pair<std::string, std::string>> entries_;
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

class DictionaryEngine final : public TranslationEngine {
 public:
  DictionaryEngine(EngineDescriptor descriptor, PhraseTable forward_table,
                   std::optional<PhraseTable> reverse_table = std::nullopt);

 protected:
  std::string forward(const TranslationRequest& request) override;
  std::string reverse(std::string_view text, const TranslationRequest& request) override;

 private:
  PhraseTable forward_table_;
  PhraseTable reverse_table_;
};

// Identity with seeded token dropout. The dropped set is a pure function of
// (seed, direction, text); at least one token always survives.
class NoisyEngine final : public TranslationEngine {
 public:
  NoisyEngine(EngineDescriptor descriptor, double dropout, std::uint64_t seed);

 protected:
  std::string forward(const TranslationRequest& request) override;
  std::string reverse(std::string_view text, const TranslationRequest& request) override;

 private:
  std::string drop(std::string_view text, const LanguageCode& from, const LanguageCode& to,
                   std::uint64_t salt) const;

  double dropout_;
  std::uint64_t seed_;
};

// Always reports EngineUnavailable.
class FailingEngine final : public TranslationEngine {
 public:
  explicit FailingEngine(EngineDescriptor descriptor);

 protected:
  std::string forward(const TranslationRequest& request) override;
  std::string reverse(std::string_view text, const TranslationRequest& request) override;
};

// HTTP JSON adapter: POST {src, tgt, text, history, granularity} -> {text}.
class RemoteEngine final : public TranslationEngine {
 public:
  RemoteEngine(EngineDescriptor descriptor, std::string url, std::int64_t timeout_ms,
               int max_connections);

  // Request body for the given direction, exposed for wire-format tests.
  static std::string request_body(const LanguageCode& src, const LanguageCode& tgt,
                                  std::string_view text, const RequestContext& context,
                                  SegmentKind granularity);

 protected:
  std::string forward(const TranslationRequest& request) override;
  std::string reverse(std::string_view text, const TranslationRequest& request) override;

 private:
  std::string post(const std::string& body);

  std::string origin_;
  std::string path_;
  std::int64_t timeout_ms_;
  int max_connections_;
  int active_ = 0;
  std::mutex mutex_;
  std::condition_variable slot_free_;
};

using TermVector = std::map<std::string, double>;

// Term frequencies over language-aware tokens.
TermVector vectorize(std::string_view text, const LanguageCode& lang);

// dot(u,v)/(|u||v|), 0 when either vector is zero.
double cosine(const TermVector& u, const TermVector& v);

struct TranslationCandidate {
  std::string engine_id;
  int priority = 0;
  std::string forward;
  std::string back;
  double similarity = 0.0;
  bool failed = false;
  std::string error;
};

// Index of the best non-failed candidate: highest similarity, then lowest
// priority, then id. Independent of input order.
std::optional<std::size_t> pick_winner(std::span<const TranslationCandidate> candidates);

class EngineBroker {
 public:
  explicit EngineBroker(bool parallel = false) : parallel_(parallel) {}

  // Throws Error(InvalidConfig) on duplicate id or priority.
  void add(std::shared_ptr<TranslationEngine> engine);

  const std::vector<std::shared_ptr<TranslationEngine>>& engines() const noexcept {
    return engines_;
  }
  // Reverse-capable engines serving the pair and granularity, by priority.
  std::vector<std::shared_ptr<TranslationEngine>> eligible(const LanguageCode& src,
                                                           const LanguageCode& tgt,
                                                           SegmentKind granularity) const;
  bool parallel() const noexcept { return parallel_; }

 private:
  bool parallel_;
  std::vector<std::shared_ptr<TranslationEngine>> engines_;
};

struct Selection {
  TranslationCandidate winner;
  std::vector<TranslationCandidate> candidates;  // by engine priority
};

// Similarity of the original source and a back-translation.
using SimilarityFn =
    std::function<double(std::string_view original, std::string_view back, const LanguageCode&)>;

// Term-frequency cosine.
double tf_cosine(std::string_view original, std::string_view back, const LanguageCode& lang);

// Back-translation selection: each eligible engine translates, translates
// back, and is scored against `original` (the untagged source).
// Throws NoEngineAvailable or AllEnginesFailed.
Selection select_best(std::string_view original, const TranslationRequest& request,
                      const EngineBroker& broker, const SimilarityFn& score = tf_cosine);

struct EngineSpec {
  std::string id;
  std::string kind;  // identity | cipher | dictionary | noisy | failing | remote
  int priority = 0;
  std::set<std::pair<std::string, std::string>> pairs;
  bool reverse_capable = true;
  std::set<SegmentKind> granularities{SegmentKind::Chunk, SegmentKind::Sentence};
  LatencySpec latency;
  std::string dictionary;
  std::string reverse_dictionary;
  double dropout = 0.3;
  std::uint64_t seed = 0;
  std::string url;
  std::int64_t timeout_ms = 2000;
  int max_connections = 4;
};

std::shared_ptr<TranslationEngine> make_engine(const EngineSpec& spec);

}  // namespace simulpipe
