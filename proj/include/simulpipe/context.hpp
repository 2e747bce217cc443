#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "simulpipe/core.hpp"

namespace simulpipe {

enum class Speaker { Japanese, Foreigner };
enum class Scene {
  Business,
  Disaster,
  Education,
  Medical,
  Municipality,
  Shopping,
  Sightseeing,
  Sports,
  Transportation,
  Others,
};
enum class Subject { Watashi, Anata };
enum class Gender { Female, Male };

std::string_view to_string(Speaker v);
std::string_view to_string(Scene v);
std::string_view to_string(Subject v);
std::string_view to_string(Gender v);

// Throws Error(UnknownValue) outside the tag vocabulary.
Scene parse_scene(std::string_view text);

// Dialog tags steering translation style. `subject` is only meaningful for
// Japanese sources and `gender` for Thai targets; validate_tags enforces it.
struct ContextTags {
  std::optional<Speaker> speaker;
  std::optional<Scene> scene;
  std::optional<Subject> subject;
  std::optional<Gender> gender;

  bool empty() const noexcept { return !speaker && !scene && !subject && !gender; }

  friend bool operator==(const ContextTags&, const ContextTags&) = default;
};

ContextTags validate_tags(const std::map<std::string, std::string>& raw,
                          const LanguageCode& src, const LanguageCode& tgt);

// "<spk:V> <scn:V> <subj:V> <gen:V> " in that order, unset categories omitted.
std::string serialize_tags(const ContextTags& tags);

struct TaggedText {
  ContextTags tags;
  std::string body;
};

// Inverse of serialize_tags applied to the front of `text`. Leading
// pseudo-tokens that are not well-formed tags are left in the body.
TaggedText split_tag_prefix(std::string_view text);

struct HistoryEntry {
  std::string source;
  std::string translation;

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

// FIFO of the last K (utterance, translation) pairs.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(std::size_t window = 3) : window_(window) {}

  void push(std::string source, std::string translation);

  std::size_t window() const noexcept { return window_; }
  std::vector<HistoryEntry> entries() const { return {entries_.begin(), entries_.end()}; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::size_t window_;
  std::deque<HistoryEntry> entries_;
};

struct RequestContext {
  std::string tag_prefix;
  std::vector<HistoryEntry> history;

  friend bool operator==(const RequestContext&, const RequestContext&) = default;
};

RequestContext build_request_context(const ContextTags& tags, const HistoryBuffer& history);

}  // namespace simulpipe
