#include "simulpipe/engines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <istream>
#include <random>

#include "simulpipe/error.hpp"

namespace simulpipe {

namespace {

std::string body_of(const TranslationRequest& request) {
  return split_tag_prefix(request.text).body;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t basis) {
  std::uint64_t h = 1469598103934665603ULL ^ basis;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string join_pieces(const std::vector<std::string>& pieces, const LanguageCode& lang) {
  return pieces.empty() ? std::string() : join_tokens(pieces, lang);
}

}  // namespace

bool EngineDescriptor::supports_pair(const LanguageCode& src, const LanguageCode& tgt) const {
  return supports.empty() || supports.count({src.code(), tgt.code()}) > 0;
}

TranslationEngine::TranslationEngine(EngineDescriptor descriptor)
    : descriptor_(std::move(descriptor)) {}

std::string TranslationEngine::translate(const TranslationRequest& request) {
  if (!descriptor_.supports_pair(request.src, request.tgt)) {
    throw Error(ErrorCode::UnsupportedPair,
                id() + " cannot translate " + request.src.code() + "->" + request.tgt.code());
  }
  if (request.text.empty()) throw Error(ErrorCode::EmptyInput, "empty translation request");
  auto out = forward(request);
  if (out.empty()) throw Error(ErrorCode::EmptyResponse, id() + " returned no text");
  return out;
}

std::string TranslationEngine::back_translate(std::string_view target_text,
                                              const TranslationRequest& request) {
  if (!descriptor_.reverse_capable) {
    throw Error(ErrorCode::NotReverseCapable, id() + " has no reverse model");
  }
  auto out = reverse(target_text, request);
  if (out.empty()) throw Error(ErrorCode::EmptyResponse, id() + " returned no back-translation");
  return out;
}

IdentityEngine::IdentityEngine(EngineDescriptor descriptor)
    : TranslationEngine(std::move(descriptor)) {}

std::string IdentityEngine::forward(const TranslationRequest& request) {
  return body_of(request);
}

std::string IdentityEngine::reverse(std::string_view text, const TranslationRequest&) {
  return std::string(text);
}

CipherEngine::CipherEngine(EngineDescriptor descriptor)
    : TranslationEngine(std::move(descriptor)) {}

std::string CipherEngine::rot13(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c >= 'a' && c <= 'z') {
      c = static_cast<char>('a' + (c - 'a' + 13) % 26);
    } else if (c >= 'A' && c <= 'Z') {
      c = static_cast<char>('A' + (c - 'A' + 13) % 26);
    }
  }
  return out;
}

std::string CipherEngine::forward(const TranslationRequest& request) {
  return rot13(body_of(request));
}

std::string CipherEngine::reverse(std::string_view text, const TranslationRequest&) {
  return rot13(text);
}

void PhraseTable::add(std::string source, std::string target) {
  entries_.emplace_back(std::move(source), std::move(target));
  cache_ = std::make_shared<Cache>();
}

PhraseTable PhraseTable::inverted() const {
  PhraseTable out;
  std::set<std::string> seen;
  for (const auto& [src, tgt] : entries_) {
    if (seen.insert(tgt).second) out.add(tgt, src);
  }
  return out;
}

const PhraseTable::Index& PhraseTable::index_for(const LanguageCode& from) const {
  std::lock_guard lock(cache_->mutex);
  const auto key = std::make_pair(from.code(), from.spaceless());
  auto it = cache_->by_language.find(key);
  if (it != cache_->by_language.end()) return it->second;
  Index index;
  for (const auto& [src, tgt] : entries_) {
    auto tokens = tokenize(src, from);
    if (tokens.empty()) continue;
    index.max_length = std::max(index.max_length, tokens.size());
    index.phrases.try_emplace(std::move(tokens), tgt);
  }
  return cache_->by_language.emplace(key, std::move(index)).first->second;
}

std::string PhraseTable::apply(std::string_view text, const LanguageCode& from,
                               const LanguageCode& to) const {
  const auto& index = index_for(from);
  const auto tokens = tokenize(text, from);
  std::vector<std::string> pieces;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    for (auto len = std::min(index.max_length, tokens.size() - i); len > 0; --len) {
      std::vector<std::string> key(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
      if (auto it = index.phrases.find(key); it != index.phrases.end()) {
        pieces.push_back(it->second);
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) pieces.push_back(tokens[i++]);
  }
  return join_pieces(pieces, to);
}

PhraseTable PhraseTable::load(std::istream& in) {
  PhraseTable table;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(ErrorCode::MalformedRecord, "dictionary lines are source<TAB>target", number);
    }
    table.add(line.substr(0, tab), line.substr(tab + 1));
  }
  return table;
}

PhraseTable PhraseTable::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read dictionary " + path);
  return load(in);
}

DictionaryEngine::DictionaryEngine(EngineDescriptor descriptor, PhraseTable forward_table,
                                   std::optional<PhraseTable> reverse_table)
    : TranslationEngine(std::move(descriptor)),
      forward_table_(std::move(forward_table)),
      reverse_table_(reverse_table ? std::move(*reverse_table) : forward_table_.inverted()) {}

std::string DictionaryEngine::forward(const TranslationRequest& request) {
  return forward_table_.apply(body_of(request), request.src, request.tgt);
}

std::string DictionaryEngine::reverse(std::string_view text, const TranslationRequest& request) {
  return reverse_table_.apply(text, request.tgt, request.src);
}

NoisyEngine::NoisyEngine(EngineDescriptor descriptor, double dropout, std::uint64_t seed)
    : TranslationEngine(std::move(descriptor)), dropout_(dropout), seed_(seed) {
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "dropout must lie in [0,1)");
  }
}

std::string NoisyEngine::drop(std::string_view text, const LanguageCode& from,
                              const LanguageCode& to, std::uint64_t salt) const {
  const auto tokens = tokenize(text, from);
  if (tokens.empty()) return {};
  std::mt19937_64 rng(fnv1a(text, seed_ * 2654435761ULL + salt));
  std::bernoulli_distribution dropped(dropout_);
  std::vector<std::string> kept;
  for (const auto& t : tokens) {
    if (!dropped(rng)) kept.push_back(t);
  }
  if (kept.empty()) kept.push_back(tokens.front());
  return join_tokens(kept, to);
}

std::string NoisyEngine::forward(const TranslationRequest& request) {
  return drop(body_of(request), request.src, request.tgt, 1);
}

std::string NoisyEngine::reverse(std::string_view text, const TranslationRequest& request) {
  return drop(text, request.tgt, request.src, 2);
}

FailingEngine::FailingEngine(EngineDescriptor descriptor)
    : TranslationEngine(std::move(descriptor)) {}

std::string FailingEngine::forward(const TranslationRequest&) {
  throw Error(ErrorCode::EngineUnavailable, id() + " is down");
}

std::string FailingEngine::reverse(std::string_view, const TranslationRequest&) {
  throw Error(ErrorCode::EngineUnavailable, id() + " is down");
}

TermVector vectorize(std::string_view text, const LanguageCode& lang) {
  TermVector v;
  for (auto& t : tokenize(text, lang)) v[std::move(t)] += 1.0;
  return v;
}

double cosine(const TermVector& u, const TermVector& v) {
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (const auto& [term, x] : u) {
    uu += x * x;
    if (auto it = v.find(term); it != v.end()) dot += x * it->second;
  }
  for (const auto& [term, y] : v) vv += y * y;
  if (uu == 0.0 || vv == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(uu * vv), 0.0, 1.0);
}

std::optional<std::size_t> pick_winner(std::span<const TranslationCandidate> candidates) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.failed) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = candidates[*best];
    if (c.similarity > b.similarity ||
        (c.similarity == b.similarity &&
         (c.priority < b.priority || (c.priority == b.priority && c.engine_id < b.engine_id)))) {
      best = i;
    }
  }
  return best;
}

void EngineBroker::add(std::shared_ptr<TranslationEngine> engine) {
  for (const auto& e : engines_) {
    if (e->id() == engine->id()) {
      throw Error(ErrorCode::InvalidConfig, "duplicate engine id '" + engine->id() + "'");
    }
    if (e->descriptor().priority == engine->descriptor().priority) {
      throw Error(ErrorCode::InvalidConfig, "engines '" + e->id() + "' and '" + engine->id() +
                                                "' share a priority");
    }
  }
  engines_.push_back(std::move(engine));
  std::sort(engines_.begin(), engines_.end(), [](const auto& a, const auto& b) {
    return a->descriptor().priority < b->descriptor().priority;
  });
}

std::vector<std::shared_ptr<TranslationEngine>> EngineBroker::eligible(
    const LanguageCode& src, const LanguageCode& tgt, SegmentKind granularity) const {
  std::vector<std::shared_ptr<TranslationEngine>> out;
  for (const auto& e : engines_) {
    const auto& d = e->descriptor();
    if (d.reverse_capable && d.supports_pair(src, tgt) && d.granularities.count(granularity)) {
      out.push_back(e);
    }
  }
  return out;
}

namespace {

TranslationCandidate run_candidate(TranslationEngine& engine, std::string_view original,
                                   const TranslationRequest& request, const SimilarityFn& score) {
  TranslationCandidate c;
  c.engine_id = engine.id();
  c.priority = engine.descriptor().priority;
  try {
    c.forward = engine.translate(request);
    c.back = engine.back_translate(c.forward, request);
    c.similarity = score(original, c.back, request.src);
  } catch (const Error& e) {
    c.failed = true;
    c.error = e.what();
  }
  return c;
}

}  // namespace

double tf_cosine(std::string_view original, std::string_view back, const LanguageCode& lang) {
  return cosine(vectorize(original, lang), vectorize(back, lang));
}

Selection select_best(std::string_view original, const TranslationRequest& request,
                      const EngineBroker& broker, const SimilarityFn& score) {
  const auto engines = broker.eligible(request.src, request.tgt, request.granularity);
  if (engines.empty()) {
    throw Error(ErrorCode::NoEngineAvailable,
                "no reverse-capable engine for " + request.src.code() + "->" + request.tgt.code());
  }
  Selection sel;
  if (broker.parallel() && engines.size() > 1) {
    std::vector<std::future<TranslationCandidate>> futures;
    for (const auto& e : engines) {
      futures.push_back(std::async(std::launch::async, [&e, original, &request, &score] {
        return run_candidate(*e, original, request, score);
      }));
    }
    for (auto& f : futures) sel.candidates.push_back(f.get());
  } else {
    for (const auto& e : engines) sel.candidates.push_back(run_candidate(*e, original, request, score));
  }
  const auto best = pick_winner(sel.candidates);
  if (!best) {
    std::string reasons;
    for (const auto& c : sel.candidates) reasons += (reasons.empty() ? "" : "; ") + c.error;
    throw Error(ErrorCode::AllEnginesFailed, reasons);
  }
  sel.winner = sel.candidates[*best];
  return sel;
}

std::shared_ptr<TranslationEngine> make_engine(const EngineSpec& spec) {
  EngineDescriptor d;
  d.id = spec.id;
  d.supports = spec.pairs;
  d.reverse_capable = spec.reverse_capable;
  d.priority = spec.priority;
  d.granularities = spec.granularities;
  d.latency = spec.latency;
  if (d.id.empty()) throw Error(ErrorCode::InvalidConfig, "engine id is empty");
  if (spec.latency.min_ms < 0 || spec.latency.max_ms < spec.latency.min_ms) {
    throw Error(ErrorCode::InvalidConfig, "engine '" + d.id + "' has an invalid latency range");
  }
  if (spec.kind == "identity") return std::make_shared<IdentityEngine>(std::move(d));
  if (spec.kind == "cipher") return std::make_shared<CipherEngine>(std::move(d));
  if (spec.kind == "noisy") return std::make_shared<NoisyEngine>(std::move(d), spec.dropout, spec.seed);
  if (spec.kind == "failing") return std::make_shared<FailingEngine>(std::move(d));
  if (spec.kind == "dictionary") {
    if (spec.dictionary.empty()) {
      throw Error(ErrorCode::InvalidConfig, "dictionary engine '" + d.id + "' needs a dictionary");
    }
    std::optional<PhraseTable> reverse;
    if (!spec.reverse_dictionary.empty()) reverse = PhraseTable::load_file(spec.reverse_dictionary);
    return std::make_shared<DictionaryEngine>(std::move(d), PhraseTable::load_file(spec.dictionary),
                                              std::move(reverse));
  }
  if (spec.kind == "remote") {
    return std::make_shared<RemoteEngine>(std::move(d), spec.url, spec.timeout_ms,
                                          spec.max_connections);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown engine kind '" + spec.kind + "'");
}

}  // namespace simulpipe
