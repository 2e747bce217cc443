#include "simulpipe/context.hpp"

#include <array>

#include "simulpipe/error.hpp"

namespace simulpipe {

namespace {

constexpr std::array<std::string_view, 2> kSpeakers{"japanese", "foreigner"};
constexpr std::array<std::string_view, 10> kScenes{
    "business", "disaster",    "education", "medical",        "municipality",
    "shopping", "sightseeing", "sports",    "transportation", "others"};
constexpr std::array<std::string_view, 2> kSubjects{"watashi", "anata"};
constexpr std::array<std::string_view, 2> kGenders{"female", "male"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& vocab, std::string_view v) {
  for (std::size_t i = 0; i < N; ++i) {
    if (vocab[i] == v) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

template <typename Enum, std::size_t N>
Enum require(const std::array<std::string_view, N>& vocab, std::string_view category,
             std::string_view v) {
  if (auto e = lookup<Enum>(vocab, v)) return *e;
  throw Error(ErrorCode::UnknownValue,
              std::string(category) + " does not accept '" + std::string(v) + "'");
}

}  // namespace

std::string_view to_string(Speaker v) { return kSpeakers[static_cast<std::size_t>(v)]; }
std::string_view to_string(Scene v) { return kScenes[static_cast<std::size_t>(v)]; }
std::string_view to_string(Subject v) { return kSubjects[static_cast<std::size_t>(v)]; }
std::string_view to_string(Gender v) { return kGenders[static_cast<std::size_t>(v)]; }

Scene parse_scene(std::string_view text) { return require<Scene>(kScenes, "scene", text); }

ContextTags validate_tags(const std::map<std::string, std::string>& raw,
                          const LanguageCode& src, const LanguageCode& tgt) {
  ContextTags tags;
  for (const auto& [category, value] : raw) {
    if (category == "speaker") {
      tags.speaker = require<Speaker>(kSpeakers, category, value);
    } else if (category == "scene") {
      tags.scene = require<Scene>(kScenes, category, value);
    } else if (category == "subject") {
      tags.subject = require<Subject>(kSubjects, category, value);
      if (src.code() != "ja") {
        throw Error(ErrorCode::LanguageRestriction, "subject tags require a ja source");
      }
    } else if (category == "gender") {
      tags.gender = require<Gender>(kGenders, category, value);
      if (tgt.code() != "th") {
        throw Error(ErrorCode::LanguageRestriction, "gender tags require a th target");
      }
    } else {
      throw Error(ErrorCode::UnknownCategory, "'" + category + "'");
    }
  }
  return tags;
}

std::string serialize_tags(const ContextTags& tags) {
  std::string out;
  auto emit = [&](std::string_view key, std::string_view value) {
    out += '<';
    out += key;
    out += ':';
    out += value;
    out += "> ";
  };
  if (tags.speaker) emit("spk", to_string(*tags.speaker));
  if (tags.scene) emit("scn", to_string(*tags.scene));
  if (tags.subject) emit("subj", to_string(*tags.subject));
  if (tags.gender) emit("gen", to_string(*tags.gender));
  return out;
}

TaggedText split_tag_prefix(std::string_view text) {
  TaggedText out;
  int stage = 0;  // categories must appear in fixed order
  while (!text.empty() && text.front() == '<') {
    const auto close = text.find("> ");
    if (close == std::string_view::npos) break;
    const auto inner = text.substr(1, close - 1);
    const auto colon = inner.find(':');
    if (colon == std::string_view::npos) break;
    const auto key = inner.substr(0, colon);
    const auto value = inner.substr(colon + 1);
    if (key == "spk" && stage < 1) {
      auto v = lookup<Speaker>(kSpeakers, value);
      if (!v) break;
      out.tags.speaker = v;
      stage = 1;
    } else if (key == "scn" && stage < 2) {
      auto v = lookup<Scene>(kScenes, value);
      if (!v) break;
      out.tags.scene = v;
      stage = 2;
    } else if (key == "subj" && stage < 3) {
      auto v = lookup<Subject>(kSubjects, value);
      if (!v) break;
      out.tags.subject = v;
      stage = 3;
    } else if (key == "gen" && stage < 4) {
      auto v = lookup<Gender>(kGenders, value);
      if (!v) break;
      out.tags.gender = v;
      stage = 4;
    } else {
      break;
    }
    text.remove_prefix(close + 2);
  }
  out.body = std::string(text);
  return out;
}

void HistoryBuffer::push(std::string source, std::string translation) {
  if (window_ == 0) return;
  entries_.push_back({std::move(source), std::move(translation)});
  while (entries_.size() > window_) entries_.pop_front();
}

RequestContext build_request_context(const ContextTags& tags, const HistoryBuffer& history) {
  return {serialize_tags(tags), history.entries()};
}

}  // namespace simulpipe
