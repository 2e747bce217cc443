#include "simulpipe/core.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "simulpipe/error.hpp"

namespace simulpipe {

namespace {

using ordered_json = nlohmann::ordered_json;

struct RegistryEntry {
  std::string_view code;
  bool spaceless;
};

constexpr std::array<RegistryEntry, 15> kRegistry{{
    {"ja", true},  {"en", false}, {"es", false}, {"fp", false}, {"fr", false},
    {"id", false}, {"km", true},  {"ko", false}, {"mn", false}, {"my", true},
    {"ne", false}, {"pt", false}, {"th", true},  {"vi", false}, {"zh", true},
}};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

LanguageCode LanguageCode::parse(std::string_view code) {
  for (const auto& entry : kRegistry) {
    if (entry.code == code) return LanguageCode(std::string(entry.code), entry.spaceless);
  }
  throw Error(ErrorCode::UnknownLanguage, "'" + std::string(code) + "'");
}

const std::array<std::string_view, 15>& LanguageCode::registry() {
  static const std::array<std::string_view, 15> codes = [] {
    std::array<std::string_view, 15> out{};
    for (std::size_t i = 0; i < kRegistry.size(); ++i) out[i] = kRegistry[i].code;
    return out;
  }();
  return codes;
}

LanguageCode LanguageCode::with_spaceless(bool spaceless) const {
  return LanguageCode(code_, spaceless);
}

std::string_view to_string(SegmentKind kind) {
  return kind == SegmentKind::Chunk ? "chunk" : "sentence";
}

SegmentKind parse_segment_kind(std::string_view text) {
  if (text == "chunk") return SegmentKind::Chunk;
  if (text == "sentence") return SegmentKind::Sentence;
  throw Error(ErrorCode::MalformedRecord, "unknown segment kind '" + std::string(text) + "'");
}

std::string_view to_string(CaptionKind kind) {
  switch (kind) {
    case CaptionKind::ChunkCaption: return "chunk_caption";
    case CaptionKind::SentenceFinal: return "sentence_final";
    case CaptionKind::FallbackFinal: return "fallback_final";
  }
  return "";
}

CaptionKind parse_caption_kind(std::string_view text) {
  if (text == "chunk_caption") return CaptionKind::ChunkCaption;
  if (text == "sentence_final") return CaptionKind::SentenceFinal;
  if (text == "fallback_final") return CaptionKind::FallbackFinal;
  throw Error(ErrorCode::MalformedRecord, "unknown caption kind '" + std::string(text) + "'");
}

std::string normalize_token(std::string_view raw) {
  const auto trimmed = trim(raw);
  if (trimmed.empty()) throw Error(ErrorCode::EmptyToken, "token is blank");
  if (std::any_of(trimmed.begin(), trimmed.end(), is_space)) {
    throw Error(ErrorCode::InternalWhitespace, "'" + std::string(trimmed) + "'");
  }
  return std::string(trimmed);
}

std::string join_tokens(const std::vector<std::string>& tokens, const LanguageCode& lang) {
  if (tokens.empty()) throw Error(ErrorCode::EmptyInput, "join_tokens on empty list");
  std::string out = tokens.front();
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (!lang.spaceless()) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::vector<std::string> utf8_characters(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t width = 1;
    if (lead >= 0xF0) {
      width = 4;
    } else if (lead >= 0xE0) {
      width = 3;
    } else if (lead >= 0xC0) {
      width = 2;
    }
    width = std::min(width, text.size() - i);
    if (!(width == 1 && is_space(text[i]))) out.emplace_back(text.substr(i, width));
    i += width;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text, const LanguageCode& lang) {
  if (lang.spaceless()) return utf8_characters(text);
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const auto start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::string encode_event(const CaptionEvent& event) {
  ordered_json j;
  j["seq"] = event.seq;
  j["kind"] = std::string(to_string(event.kind));
  j["sentence_id"] = event.sentence_id;
  if (event.chunk_index) {
    j["chunk_index"] = *event.chunk_index;
  } else {
    j["chunk_index"] = nullptr;
  }
  j["engine"] = event.engine;
  auto replaces = ordered_json::array();
  for (const auto& ref : event.replaces) {
    replaces.push_back(ordered_json::array({ref.sentence_id, ref.chunk_index}));
  }
  j["replaces"] = std::move(replaces);
  j["emit_ms"] = event.emit_ms;
  j["text"] = event.text;
  return j.dump();
}

CaptionEvent decode_event(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, e.what());
  }
  static constexpr std::array<std::string_view, 8> kKeys{
      "seq", "kind", "sentence_id", "chunk_index", "engine", "replaces", "emit_ms", "text"};
  if (!j.is_object() || j.size() != kKeys.size()) {
    throw Error(ErrorCode::MalformedRecord, "caption record must have exactly 8 keys");
  }
  std::size_t k = 0;
  for (auto it = j.begin(); it != j.end(); ++it, ++k) {
    if (it.key() != kKeys[k]) {
      throw Error(ErrorCode::MalformedRecord, "unexpected key '" + it.key() + "'");
    }
  }
  try {
    CaptionEvent e;
    e.seq = j.at("seq").get<std::int64_t>();
    e.kind = parse_caption_kind(j.at("kind").get<std::string>());
    e.sentence_id = j.at("sentence_id").get<std::int64_t>();
    if (!j.at("chunk_index").is_null()) e.chunk_index = j.at("chunk_index").get<std::int64_t>();
    e.engine = j.at("engine").get<std::string>();
    for (const auto& ref : j.at("replaces")) {
      if (!ref.is_array() || ref.size() != 2) {
        throw Error(ErrorCode::MalformedRecord, "replaces entries are [sentence_id, chunk_index]");
      }
      e.replaces.push_back({ref[0].get<std::int64_t>(), ref[1].get<std::int64_t>()});
    }
    e.emit_ms = j.at("emit_ms").get<std::int64_t>();
    e.text = j.at("text").get<std::string>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::MalformedRecord, ex.what());
  }
}

std::vector<CaptionEvent> read_caption_log(std::istream& in) {
  std::vector<CaptionEvent> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    try {
      out.push_back(decode_event(line));
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), number);
    }
  }
  return out;
}

void write_caption_log(std::ostream& out, const std::vector<CaptionEvent>& events) {
  for (const auto& e : events) out << encode_event(e) << '\n';
}

std::string encode_token(const TokenEvent& token) {
  ordered_json j;
  j["index"] = token.index;
  j["surface"] = token.surface;
  j["t_ms"] = token.t_ms;
  return j.dump();
}

TokenEvent decode_token(std::string_view line, const std::string& session_id) {
  try {
    const auto j = nlohmann::json::parse(line);
    TokenEvent tok;
    tok.session_id = session_id;
    tok.index = j.at("index").get<std::int64_t>();
    tok.surface = normalize_token(j.at("surface").get<std::string>());
    tok.t_ms = j.at("t_ms").get<std::int64_t>();
    return tok;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, e.what());
  }
}

std::vector<TokenEvent> read_token_stream(std::istream& in, TokenInputFormat format,
                                          std::int64_t gap_ms, const std::string& session_id) {
  std::vector<TokenEvent> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    TokenEvent tok;
    try {
      if (format == TokenInputFormat::Jsonl) {
        tok = decode_token(line, session_id);
      } else {
        tok.session_id = session_id;
        tok.index = static_cast<std::int64_t>(out.size());
        tok.surface = normalize_token(line);
        tok.t_ms = tok.index * gap_ms;
      }
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), number);
    }
    if (tok.index != static_cast<std::int64_t>(out.size())) {
      throw Error(ErrorCode::OutOfOrderToken,
                  "expected index " + std::to_string(out.size()) + ", got " +
                      std::to_string(tok.index),
                  number);
    }
    if (tok.t_ms < 0 || (!out.empty() && tok.t_ms < out.back().t_ms)) {
      throw Error(ErrorCode::MalformedRecord, "t_ms must be non-negative and non-decreasing",
                  number);
    }
    out.push_back(std::move(tok));
  }
  return out;
}

}  // namespace simulpipe
