#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "simulpipe/context.hpp"
#include "simulpipe/core.hpp"
#include "simulpipe/engines.hpp"
#include "simulpipe/segmenter.hpp"

namespace simulpipe {

// One interpretation record: source and target split into aligned chunks.
struct ChunkAlignedPair {
  LanguageCode src_lang;
  LanguageCode tgt_lang;
  std::vector<std::string> src_chunks;
  std::vector<std::string> tgt_chunks;
  std::optional<std::string> sentence_translation;

  friend bool operator==(const ChunkAlignedPair&, const ChunkAlignedPair&) = default;
};

enum class DialogSpeaker { Japanese, Foreigner };

struct DialogTurn {
  DialogSpeaker speaker = DialogSpeaker::Japanese;
  Scene domain = Scene::Others;
  std::string src_text;
  std::string tgt_text;
};

struct LabeledStream {
  std::vector<std::string> tokens;
  std::vector<std::int64_t> chunk_ends;
  std::vector<std::int64_t> sentence_ends;

  // Throws MalformedRecord unless sentence_ends ⊆ chunk_ends, indices are in
  // range and sorted, and the last token ends a sentence.
  void validate() const;
  BoundaryStream for_level(SegmentKind level) const;

  friend bool operator==(const LabeledStream&, const LabeledStream&) = default;
};

// TSV: src_lang, tgt_lang, src_text, tgt_text[, sentence_translation]. Chunks
// inside the text columns are separated by '/'. '#' lines are comments.
std::vector<ChunkAlignedPair> parse_chunk_corpus(std::istream& in);
std::vector<ChunkAlignedPair> parse_chunk_corpus_file(const std::string& path);
void write_chunk_corpus(std::ostream& out, const std::vector<ChunkAlignedPair>& pairs);

// Blocks introduced by "@domain<TAB>scene", followed by turns
// "J|F<TAB>source<TAB>target".
std::vector<DialogTurn> parse_dialog_corpus(std::istream& in);
std::vector<DialogTurn> parse_dialog_corpus_file(const std::string& path);

// Tokenizes each record's source chunks; every chunk-final token is a chunk
// end and the record's final token a sentence end.
std::vector<LabeledStream> derive_labels(const std::vector<ChunkAlignedPair>& pairs);

// Joins every `group` consecutive streams into one (utterance concatenation).
std::vector<LabeledStream> concatenate_streams(const std::vector<LabeledStream>& streams,
                                               std::size_t group);

std::vector<BoundaryStream> for_level(const std::vector<LabeledStream>& streams,
                                      SegmentKind level);

// One JSON object per line: {"tokens":[...],"chunk_ends":[...],"sentence_ends":[...]}.
std::vector<LabeledStream> read_labeled_streams(std::istream& in);
void write_labeled_streams(std::ostream& out, const std::vector<LabeledStream>& streams);

enum class BoundaryPolicy {
  Marker,          // chunk ends with chunk_marker, sentence with sentence_marker
  Follower,        // the token after a boundary is a follower word
  Distributional,  // ambiguous cue words that also occur mid-chunk
  Unmarked,        // no cue tokens at all ("none")
};

struct GeneratorSpec {
  int vocab_size = 200;
  // Content tokens per chunk: 1 + Poisson(mean_chunk_len - 1). The policy's
  // cue token (marker or follower) comes on top.
  double mean_chunk_len = 4.0;
  // Sentence length in chunks: weights over min..max (uniform when empty).
  int min_sentence_chunks = 1;
  int max_sentence_chunks = 3;
  std::vector<double> sentence_chunk_weights;
  int min_sentences = 1;
  int max_sentences = 3;
  BoundaryPolicy policy = BoundaryPolicy::Marker;
  std::string chunk_marker = ",";
  std::string sentence_marker = ".";
  std::string chunk_follower = "so";
  std::string sentence_follower = "well";
  double cue_noise = 0.1;  // distributional policy only

  void validate() const;  // throws InvalidSpec
};

std::string_view to_string(BoundaryPolicy policy);
BoundaryPolicy parse_boundary_policy(std::string_view text);

std::vector<LabeledStream> generate_synthetic(const GeneratorSpec& spec, std::size_t count,
                                              std::uint64_t seed);

// Deterministic stand-in translation of one source chunk: tokens reversed and
// upper-cased. Used to build parallel fixtures and a matching phrase table.
std::string synthetic_chunk_translation(const std::vector<std::string>& chunk_tokens);

std::vector<ChunkAlignedPair> synthetic_parallel(const std::vector<LabeledStream>& streams,
                                                 const LanguageCode& src,
                                                 const LanguageCode& tgt);
PhraseTable synthetic_phrase_table(const std::vector<ChunkAlignedPair>& pairs);

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

struct SplitPlan {
  std::array<std::size_t, 3> sizes{};
  std::vector<std::string> warnings;
};

// floor(n * train) for train; the remainder is divided between dev and test
// in proportion to their ratios (dev rounded to nearest).
SplitPlan plan_split(std::size_t n, const SplitRatios& ratios);
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

template <typename T>
struct Split {
  std::vector<T> train;
  std::vector<T> dev;
  std::vector<T> test;
  std::vector<std::string> warnings;
};

template <typename T>
Split<T> split(const std::vector<T>& items, const SplitRatios& ratios, std::uint64_t seed) {
  auto plan = plan_split(items.size(), ratios);
  const auto order = shuffled_indices(items.size(), seed);
  Split<T> out;
  out.warnings = std::move(plan.warnings);
  std::size_t i = 0;
  for (; i < plan.sizes[0]; ++i) out.train.push_back(items[order[i]]);
  for (; i < plan.sizes[0] + plan.sizes[1]; ++i) out.dev.push_back(items[order[i]]);
  for (; i < order.size(); ++i) out.test.push_back(items[order[i]]);
  return out;
}

}  // namespace simulpipe
