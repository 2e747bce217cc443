#include "simulpipe/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "json.hpp"
#include "simulpipe/error.hpp"

namespace simulpipe {

namespace {

std::string trim_copy(std::string_view s) {
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && space(s.front())) s.remove_prefix(1);
  while (!s.empty() && space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_on(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_chunks(std::string_view text, std::size_t line) {
  auto chunks = split_on(text, '/');
  for (auto& c : chunks) {
    c = trim_copy(c);
    if (c.empty()) throw Error(ErrorCode::MalformedRecord, "empty chunk", line);
  }
  return chunks;
}

std::string join_chunks(const std::vector<std::string>& chunks) {
  std::string out;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (i > 0) out += " / ";
    out += chunks[i];
  }
  return out;
}

template <typename Fn>
auto with_file(const std::string& path, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  return fn(in);
}

bool skippable(const std::string& line) {
  const auto t = trim_copy(line);
  return t.empty() || t.front() == '#';
}

}  // namespace

void LabeledStream::validate() const {
  const auto n = static_cast<std::int64_t>(tokens.size());
  if (n == 0) throw Error(ErrorCode::MalformedRecord, "labeled stream has no tokens");
  auto check = [n](const std::vector<std::int64_t>& ends, const char* what) {
    for (std::size_t i = 0; i < ends.size(); ++i) {
      if (ends[i] < 0 || ends[i] >= n || (i > 0 && ends[i] <= ends[i - 1])) {
        throw Error(ErrorCode::MalformedRecord,
                    std::string(what) + " must be sorted, unique and inside the stream");
      }
    }
  };
  check(chunk_ends, "chunk_ends");
  check(sentence_ends, "sentence_ends");
  if (!std::includes(chunk_ends.begin(), chunk_ends.end(), sentence_ends.begin(),
                     sentence_ends.end())) {
    throw Error(ErrorCode::MalformedRecord, "sentence_ends must be a subset of chunk_ends");
  }
  if (sentence_ends.empty() || sentence_ends.back() != n - 1) {
    throw Error(ErrorCode::MalformedRecord, "the last token must end a sentence");
  }
}

BoundaryStream LabeledStream::for_level(SegmentKind level) const {
  return {tokens, level == SegmentKind::Chunk ? chunk_ends : sentence_ends};
}

std::vector<ChunkAlignedPair> parse_chunk_corpus(std::istream& in) {
  std::vector<ChunkAlignedPair> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (skippable(line)) continue;
    const auto cols = split_on(line, '\t');
    if (cols.size() != 4 && cols.size() != 5) {
      throw Error(ErrorCode::MalformedRecord,
                  "expected 4 or 5 tab-separated columns, found " + std::to_string(cols.size()),
                  number);
    }
    try {
      ChunkAlignedPair pair{LanguageCode::parse(trim_copy(cols[0])),
                            LanguageCode::parse(trim_copy(cols[1])),
                            split_chunks(cols[2], number),
                            split_chunks(cols[3], number),
                            std::nullopt};
      if (cols.size() == 5 && !trim_copy(cols[4]).empty()) {
        pair.sentence_translation = trim_copy(cols[4]);
      }
      if (pair.src_chunks.size() != pair.tgt_chunks.size()) {
        throw Error(ErrorCode::ChunkCountMismatch,
                    std::to_string(pair.src_chunks.size()) + " source vs " +
                        std::to_string(pair.tgt_chunks.size()) + " target chunks",
                    number);
      }
      out.push_back(std::move(pair));
    } catch (const Error& e) {
      if (e.line()) throw;
      throw Error(ErrorCode::MalformedRecord, e.what(), number);
    }
  }
  if (out.empty()) throw Error(ErrorCode::EmptyFile, "chunk corpus has no records");
  return out;
}

std::vector<ChunkAlignedPair> parse_chunk_corpus_file(const std::string& path) {
  return with_file(path, [](std::istream& in) { return parse_chunk_corpus(in); });
}

void write_chunk_corpus(std::ostream& out, const std::vector<ChunkAlignedPair>& pairs) {
  for (const auto& p : pairs) {
    out << p.src_lang.code() << '\t' << p.tgt_lang.code() << '\t' << join_chunks(p.src_chunks)
        << '\t' << join_chunks(p.tgt_chunks);
    if (p.sentence_translation) out << '\t' << *p.sentence_translation;
    out << '\n';
  }
}

std::vector<DialogTurn> parse_dialog_corpus(std::istream& in) {
  std::vector<DialogTurn> out;
  std::optional<Scene> domain;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (skippable(line)) continue;
    const auto cols = split_on(line, '\t');
    if (trim_copy(cols[0]) == "@domain") {
      if (cols.size() != 2) throw Error(ErrorCode::MalformedRecord, "@domain<TAB>scene", number);
      try {
        domain = parse_scene(trim_copy(cols[1]));
      } catch (const Error&) {
        throw Error(ErrorCode::UnknownDomain, "'" + trim_copy(cols[1]) + "'", number);
      }
      continue;
    }
    if (!domain) throw Error(ErrorCode::MalformedRecord, "turn before any @domain header", number);
    if (cols.size() != 3) {
      throw Error(ErrorCode::MalformedRecord, "turns are speaker<TAB>source<TAB>target", number);
    }
    DialogTurn turn;
    const auto speaker = trim_copy(cols[0]);
    if (speaker == "J") {
      turn.speaker = DialogSpeaker::Japanese;
    } else if (speaker == "F") {
      turn.speaker = DialogSpeaker::Foreigner;
    } else {
      throw Error(ErrorCode::UnknownSpeaker, "'" + speaker + "'", number);
    }
    turn.domain = *domain;
    turn.src_text = trim_copy(cols[1]);
    turn.tgt_text = trim_copy(cols[2]);
    if (turn.src_text.empty() || turn.tgt_text.empty()) {
      throw Error(ErrorCode::MalformedRecord, "empty utterance", number);
    }
    out.push_back(std::move(turn));
  }
  return out;
}

std::vector<DialogTurn> parse_dialog_corpus_file(const std::string& path) {
  return with_file(path, [](std::istream& in) { return parse_dialog_corpus(in); });
}

std::vector<LabeledStream> derive_labels(const std::vector<ChunkAlignedPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyCorpus, "no records to label");
  std::vector<LabeledStream> out;
  for (const auto& p : pairs) {
    LabeledStream s;
    for (const auto& chunk : p.src_chunks) {
      auto tokens = tokenize(chunk, p.src_lang);
      if (tokens.empty()) throw Error(ErrorCode::EmptyChunk, "chunk has no tokens");
      for (auto& t : tokens) s.tokens.push_back(std::move(t));
      s.chunk_ends.push_back(static_cast<std::int64_t>(s.tokens.size()) - 1);
    }
    if (s.tokens.empty()) throw Error(ErrorCode::EmptyChunk, "record has no chunks");
    s.sentence_ends.push_back(static_cast<std::int64_t>(s.tokens.size()) - 1);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledStream> concatenate_streams(const std::vector<LabeledStream>& streams,
                                               std::size_t group) {
  group = std::max<std::size_t>(1, group);
  std::vector<LabeledStream> out;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    if (i % group == 0) out.emplace_back();
    auto& dst = out.back();
    const auto offset = static_cast<std::int64_t>(dst.tokens.size());
    const auto& src = streams[i];
    dst.tokens.insert(dst.tokens.end(), src.tokens.begin(), src.tokens.end());
    for (const auto e : src.chunk_ends) dst.chunk_ends.push_back(e + offset);
    for (const auto e : src.sentence_ends) dst.sentence_ends.push_back(e + offset);
  }
  return out;
}

std::vector<BoundaryStream> for_level(const std::vector<LabeledStream>& streams,
                                      SegmentKind level) {
  std::vector<BoundaryStream> out;
  out.reserve(streams.size());
  for (const auto& s : streams) out.push_back(s.for_level(level));
  return out;
}

std::vector<LabeledStream> read_labeled_streams(std::istream& in) {
  std::vector<LabeledStream> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (skippable(line)) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LabeledStream s;
      s.tokens = j.at("tokens").get<std::vector<std::string>>();
      s.chunk_ends = j.at("chunk_ends").get<std::vector<std::int64_t>>();
      s.sentence_ends = j.at("sentence_ends").get<std::vector<std::int64_t>>();
      for (auto& t : s.tokens) t = normalize_token(t);
      s.validate();
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, e.what(), number);
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRecord, e.what(), number);
    }
  }
  return out;
}

void write_labeled_streams(std::ostream& out, const std::vector<LabeledStream>& streams) {
  for (const auto& s : streams) {
    nlohmann::ordered_json j;
    j["tokens"] = s.tokens;
    j["chunk_ends"] = s.chunk_ends;
    j["sentence_ends"] = s.sentence_ends;
    out << j.dump() << '\n';
  }
}

std::string_view to_string(BoundaryPolicy policy) {
  switch (policy) {
    case BoundaryPolicy::Marker: return "marker";
    case BoundaryPolicy::Follower: return "follower";
    case BoundaryPolicy::Distributional: return "distributional";
    case BoundaryPolicy::Unmarked: return "none";
  }
  return "";
}

BoundaryPolicy parse_boundary_policy(std::string_view text) {
  if (text == "marker") return BoundaryPolicy::Marker;
  if (text == "follower") return BoundaryPolicy::Follower;
  if (text == "distributional") return BoundaryPolicy::Distributional;
  if (text == "none") return BoundaryPolicy::Unmarked;
  throw Error(ErrorCode::InvalidSpec, "unknown boundary policy '" + std::string(text) + "'");
}

void GeneratorSpec::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidSpec, why); };
  if (vocab_size < 1) fail("vocab_size must be >= 1");
  if (!(mean_chunk_len >= 1.0)) fail("mean_chunk_len must be >= 1");
  if (min_sentence_chunks < 1 || max_sentence_chunks < min_sentence_chunks) {
    fail("sentence chunk range must satisfy 1 <= min <= max");
  }
  if (!sentence_chunk_weights.empty()) {
    if (sentence_chunk_weights.size() !=
        static_cast<std::size_t>(max_sentence_chunks - min_sentence_chunks + 1)) {
      fail("sentence_chunk_weights needs one weight per chunk count in [min, max]");
    }
    double total = 0.0;
    for (const auto w : sentence_chunk_weights) {
      if (!(w >= 0.0)) fail("sentence_chunk_weights must be non-negative");
      total += w;
    }
    if (total <= 0.0) fail("sentence_chunk_weights must not all be zero");
  }
  if (min_sentences < 1 || max_sentences < min_sentences) {
    fail("sentences per stream must satisfy 1 <= min <= max");
  }
  if (!(cue_noise >= 0.0 && cue_noise < 1.0)) fail("cue_noise must lie in [0,1)");
  for (const auto* marker :
       {&chunk_marker, &sentence_marker, &chunk_follower, &sentence_follower}) {
    if (marker->empty() || marker->find_first_of(" \t\r\n") != std::string::npos) {
      fail("marker and follower words must be single tokens");
    }
  }
  if (chunk_marker == sentence_marker || chunk_follower == sentence_follower) {
    fail("chunk and sentence cue words must differ");
  }
}

std::vector<LabeledStream> generate_synthetic(const GeneratorSpec& spec, std::size_t count,
                                              std::uint64_t seed) {
  spec.validate();
  static const std::vector<std::string> kChunkCues{"ga", "wa", "de", "ni"};
  static const std::vector<std::string> kSentenceCues{"desu", "masu"};

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> word(0, spec.vocab_size - 1);
  std::poisson_distribution<int> poisson(spec.mean_chunk_len > 1.0 ? spec.mean_chunk_len - 1.0 : 1.0);
  auto extra = [&] { return spec.mean_chunk_len > 1.0 ? poisson(rng) : 0; };
  std::uniform_int_distribution<int> sentences(spec.min_sentences, spec.max_sentences);
  std::vector<double> weights = spec.sentence_chunk_weights;
  if (weights.empty()) {
    weights.assign(static_cast<std::size_t>(spec.max_sentence_chunks - spec.min_sentence_chunks + 1),
                   1.0);
  }
  std::discrete_distribution<int> chunks_per_sentence(weights.begin(), weights.end());
  std::bernoulli_distribution noisy(spec.cue_noise);
  std::uniform_int_distribution<std::size_t> chunk_cue(0, kChunkCues.size() - 1);
  std::uniform_int_distribution<std::size_t> sentence_cue(0, kSentenceCues.size() - 1);
  auto content = [&] {
    if (spec.policy == BoundaryPolicy::Distributional && noisy(rng)) return kChunkCues[chunk_cue(rng)];
    return "w" + std::to_string(word(rng));
  };

  std::vector<LabeledStream> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    LabeledStream stream;
    const int n_sentences = sentences(rng);
    for (int sent = 0; sent < n_sentences; ++sent) {
      const int n_chunks = spec.min_sentence_chunks + chunks_per_sentence(rng);
      for (int c = 0; c < n_chunks; ++c) {
        const int length = 1 + extra();
        const bool last_in_sentence = c + 1 == n_chunks;
        const bool first_in_stream = stream.tokens.empty();
        std::vector<std::string> chunk;
        switch (spec.policy) {
          case BoundaryPolicy::Marker:
            for (int k = 0; k < length; ++k) chunk.push_back(content());
            chunk.push_back(last_in_sentence ? spec.sentence_marker : spec.chunk_marker);
            break;
          case BoundaryPolicy::Follower:
            if (!first_in_stream) {
              chunk.push_back(c == 0 ? spec.sentence_follower : spec.chunk_follower);
            }
            for (int k = 0; k < length; ++k) chunk.push_back(content());
            break;
          case BoundaryPolicy::Distributional:
            for (int k = 0; k < length; ++k) chunk.push_back(content());
            chunk.push_back(last_in_sentence ? kSentenceCues[sentence_cue(rng)]
                                             : kChunkCues[chunk_cue(rng)]);
            break;
          case BoundaryPolicy::Unmarked:
            for (int k = 0; k < length; ++k) chunk.push_back(content());
            break;
        }
        stream.tokens.insert(stream.tokens.end(), chunk.begin(), chunk.end());
        stream.chunk_ends.push_back(static_cast<std::int64_t>(stream.tokens.size()) - 1);
      }
      stream.sentence_ends.push_back(stream.chunk_ends.back());
    }
    out.push_back(std::move(stream));
  }
  return out;
}

std::string synthetic_chunk_translation(const std::vector<std::string>& chunk_tokens) {
  std::string out;
  for (auto it = chunk_tokens.rbegin(); it != chunk_tokens.rend(); ++it) {
    if (!out.empty()) out += ' ';
    for (const char c : *it) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

std::vector<ChunkAlignedPair> synthetic_parallel(const std::vector<LabeledStream>& streams,
                                                 const LanguageCode& src,
                                                 const LanguageCode& tgt) {
  std::vector<ChunkAlignedPair> out;
  for (const auto& stream : streams) {
    std::int64_t chunk_start = 0;
    std::size_t next_sentence = 0;
    ChunkAlignedPair pair{src, tgt, {}, {}, std::nullopt};
    for (const auto end : stream.chunk_ends) {
      const std::vector<std::string> tokens(stream.tokens.begin() + chunk_start,
                                            stream.tokens.begin() + end + 1);
      pair.src_chunks.push_back(join_tokens(tokens, src));
      pair.tgt_chunks.push_back(synthetic_chunk_translation(tokens));
      chunk_start = end + 1;
      if (next_sentence < stream.sentence_ends.size() && stream.sentence_ends[next_sentence] == end) {
        ++next_sentence;
        out.push_back(std::move(pair));
        pair = ChunkAlignedPair{src, tgt, {}, {}, std::nullopt};
      }
    }
  }
  return out;
}

PhraseTable synthetic_phrase_table(const std::vector<ChunkAlignedPair>& pairs) {
  PhraseTable table;
  std::set<std::string> seen;
  for (const auto& p : pairs) {
    for (std::size_t i = 0; i < p.src_chunks.size(); ++i) {
      if (seen.insert(p.src_chunks[i]).second) table.add(p.src_chunks[i], p.tgt_chunks[i]);
    }
  }
  return table;
}

SplitPlan plan_split(std::size_t n, const SplitRatios& r) {
  constexpr double kEps = 1e-9;
  if (!(r.train > 0.0) || r.dev < 0.0 || r.test < 0.0 ||
      std::abs(r.train + r.dev + r.test - 1.0) > 1e-6) {
    throw Error(ErrorCode::InvalidRatios, "ratios must be non-negative, train > 0, summing to 1");
  }
  SplitPlan plan;
  const auto train = std::min(n, static_cast<std::size_t>(std::floor(r.train * n + kEps)));
  const auto rest = n - train;
  const double held_out = r.dev + r.test;
  std::size_t dev = 0;
  if (held_out > 0.0) {
    dev = std::min(rest, static_cast<std::size_t>(std::llround(rest * (r.dev / held_out))));
  }
  plan.sizes = {train, dev, rest - dev};
  if (plan.sizes[1] == 0) plan.warnings.emplace_back("dev split is empty");
  if (plan.sizes[2] == 0) plan.warnings.emplace_back("test split is empty");
  return plan;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace simulpipe
