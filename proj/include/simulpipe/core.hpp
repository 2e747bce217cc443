#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace simulpipe {

// Two-letter language identifier restricted to the 15 supported languages.
// `spaceless` controls how tokens are joined and split: scripts written
// without inter-word spaces are joined with no separator and tokenized into
// characters.
class LanguageCode {
 public:
  // Throws Error(UnknownLanguage) for codes outside the registry.
  static LanguageCode parse(std::string_view code);

  static const std::array<std::string_view, 15>& registry();

  const std::string& code() const noexcept { return code_; }
  bool spaceless() const noexcept { return spaceless_; }

  // Same code with the joining flag overridden (config escape hatch).
  LanguageCode with_spaceless(bool spaceless) const;

  friend bool operator==(const LanguageCode& a, const LanguageCode& b) {
    return a.code_ == b.code_;
  }
  friend bool operator<(const LanguageCode& a, const LanguageCode& b) {
    return a.code_ < b.code_;
  }

 private:
  LanguageCode(std::string code, bool spaceless)
      : code_(std::move(code)), spaceless_(spaceless) {}

  std::string code_;
  bool spaceless_;
};

struct TokenEvent {
  std::string session_id;
  std::int64_t index = 0;
  std::string surface;
  std::int64_t t_ms = 0;

  friend bool operator==(const TokenEvent&, const TokenEvent&) = default;
};

enum class SegmentKind { Chunk, Sentence };

std::string_view to_string(SegmentKind kind);
SegmentKind parse_segment_kind(std::string_view text);

// Inclusive token range [start, end] of one stream.
struct Segment {
  SegmentKind kind = SegmentKind::Chunk;
  std::int64_t start = 0;
  std::int64_t end = 0;
  std::vector<std::string> tokens;

  std::int64_t length() const noexcept { return end - start + 1; }

  friend bool operator==(const Segment&, const Segment&) = default;
};

enum class CaptionKind { ChunkCaption, SentenceFinal, FallbackFinal };

std::string_view to_string(CaptionKind kind);
CaptionKind parse_caption_kind(std::string_view text);

struct ChunkRef {
  std::int64_t sentence_id = 0;
  std::int64_t chunk_index = 0;

  friend auto operator<=>(const ChunkRef&, const ChunkRef&) = default;
};

struct CaptionEvent {
  std::int64_t seq = 0;
  CaptionKind kind = CaptionKind::ChunkCaption;
  std::int64_t sentence_id = 0;
  std::optional<std::int64_t> chunk_index;  // chunk_caption only
  std::string text;
  std::string engine;
  std::vector<ChunkRef> replaces;  // terminal events only
  std::int64_t emit_ms = 0;

  bool terminal() const noexcept { return kind != CaptionKind::ChunkCaption; }

  friend bool operator==(const CaptionEvent&, const CaptionEvent&) = default;
};

// Trims surrounding whitespace. Interior whitespace is rejected rather than
// split; no case or Unicode normalization is applied.
std::string normalize_token(std::string_view raw);

std::string join_tokens(const std::vector<std::string>& tokens,
                        const LanguageCode& lang);

// Splits `text` into code points (UTF-8), dropping whitespace.
std::vector<std::string> utf8_characters(std::string_view text);

// Language-aware tokenization shared by vectorization, corpus labeling and
// BLEU: whitespace split for spaced languages, characters otherwise.
std::vector<std::string> tokenize(std::string_view text, const LanguageCode& lang);

// Caption log: one JSON object per line with fixed key order
// seq, kind, sentence_id, chunk_index, engine, replaces, emit_ms, text.
// The returned line has no trailing newline.
std::string encode_event(const CaptionEvent& event);
CaptionEvent decode_event(std::string_view line);

std::vector<CaptionEvent> read_caption_log(std::istream& in);
void write_caption_log(std::ostream& out, const std::vector<CaptionEvent>& events);

enum class TokenInputFormat { Jsonl, PlainText };

// Token stream file: JSONL records {index, surface, t_ms}, or one token per
// line with t_ms = index * gap_ms. Indices and times are validated.
std::vector<TokenEvent> read_token_stream(std::istream& in, TokenInputFormat format,
                                          std::int64_t gap_ms,
                                          const std::string& session_id = "default");

std::string encode_token(const TokenEvent& token);
TokenEvent decode_token(std::string_view line, const std::string& session_id = "default");

}  // namespace simulpipe
