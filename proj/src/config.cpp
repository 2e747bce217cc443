#include "simulpipe/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "simulpipe/error.hpp"

namespace simulpipe {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---- TOML subset -------------------------------------------------------------

class TomlParser {
 public:
  explicit TomlParser(std::string_view text) : s_(text) {}

  json document() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        table = header(root);
      } else {
        key_value(*table);
      }
      end_of_line();
    }
    return root;
  }

  json lone_value() {
    skip_spaces();
    auto v = value();
    skip_spaces();
    if (!eof()) fail("trailing characters after value");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorCode::InvalidConfig, why, line_);
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  char take() {
    const char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) take();
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') take();
    }
  }
  void skip_blank_lines() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\r' || peek() == '\n') {
        take();
      } else {
        break;
      }
    }
  }
  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (peek() == '\r') take();
    if (eof()) return;
    if (peek() != '\n') fail("expected end of line");
    take();
  }

  static bool bare_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> parts;
    while (true) {
      skip_spaces();
      if (peek() == '"') {
        take();
        parts.push_back(basic_string());
      } else if (peek() == '\'') {
        take();
        parts.push_back(literal_string());
      } else {
        std::string part;
        while (!eof() && bare_char(peek())) part += take();
        if (part.empty()) fail("expected a key");
        parts.push_back(std::move(part));
      }
      skip_spaces();
      if (peek() != '.') return parts;
      take();
    }
  }

  static json* descend(json& node, const std::string& key) {
    auto& child = node[key];
    if (child.is_null()) child = json::object();
    if (child.is_array() && !child.empty() && child.back().is_object()) return &child.back();
    return &child;
  }

  json* header(json& root) {
    take();
    const bool array = peek() == '[';
    if (array) take();
    const auto path = key_path();
    if (peek() != ']') fail("unterminated table header");
    take();
    if (array) {
      if (peek() != ']') fail("unterminated array-of-tables header");
      take();
    }
    json* node = &root;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      node = descend(*node, path[i]);
      if (!node->is_object()) fail("'" + path[i] + "' is not a table");
    }
    auto& last = (*node)[path.back()];
    if (array) {
      if (last.is_null()) last = json::array();
      if (!last.is_array()) fail("'" + path.back() + "' is not an array of tables");
      last.push_back(json::object());
      return &last.back();
    }
    if (last.is_null()) last = json::object();
    if (!last.is_object()) fail("'" + path.back() + "' is not a table");
    return &last;
  }

  void key_value(json& table) {
    const auto path = key_path();
    if (peek() != '=') fail("expected '=' after key");
    take();
    skip_spaces();
    json* node = &table;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      node = descend(*node, path[i]);
      if (!node->is_object()) fail("'" + path[i] + "' is not a table");
    }
    if (node->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*node)[path.back()] = value();
  }

  json value() {
    const char c = peek();
    if (c == '"') {
      take();
      return basic_string();
    }
    if (c == '\'') {
      take();
      return literal_string();
    }
    if (c == '[') {
      take();
      return array();
    }
    std::string word;
    while (!eof() && (bare_char(peek()) || peek() == '.' || peek() == '+')) word += take();
    if (word == "true") return true;
    if (word == "false") return false;
    if (word.empty()) fail("expected a value");
    return number(word);
  }

  json number(std::string word) {
    std::erase(word, '_');
    const char* first = word.data();
    const char* last = word.data() + word.size();
    if (*first == '+') ++first;
    const bool is_float = word.find_first_of(".eE") != std::string::npos;
    if (is_float) {
      double d = 0.0;
      const auto [ptr, ec] = std::from_chars(first, last, d);
      if (ec == std::errc() && ptr == last) return d;
    } else {
      std::int64_t i = 0;
      const auto [ptr, ec] = std::from_chars(first, last, i);
      if (ec == std::errc() && ptr == last) return i;
    }
    fail("invalid value '" + word + "'");
  }

  json array() {
    json out = json::array();
    while (true) {
      skip_blank_lines();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        take();
        return out;
      }
      out.push_back(value());
      skip_blank_lines();
      if (peek() == ',') {
        take();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  std::string literal_string() {
    std::string out;
    while (!eof() && peek() != '\'' && peek() != '\n') out += take();
    if (peek() != '\'') fail("unterminated string");
    take();
    return out;
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  std::string basic_string() {
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = take();
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (eof()) fail("unterminated escape");
      switch (const char e = take()) {
        case 'b': out += '\b'; break;
        case 't': out += '\t'; break;
        case 'n': out += '\n'; break;
        case 'f': out += '\f'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'u':
        case 'U': {
          const std::size_t digits = e == 'u' ? 4 : 8;
          if (pos_ + digits > s_.size()) fail("truncated unicode escape");
          std::uint32_t cp = 0;
          const auto hex = s_.substr(pos_, digits);
          const auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + digits, cp, 16);
          if (ec != std::errc() || ptr != hex.data() + digits || cp > 0x10FFFF) {
            fail("invalid unicode escape");
          }
          pos_ += digits;
          append_utf8(out, cp);
          break;
        }
        default:
          fail(std::string("unknown escape \\") + e);
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

// ---- schema ------------------------------------------------------------------

enum class Kind { Int, UInt, Float, Bool, String, Path, IntList, FloatList, StringList, Latency };

const std::map<std::string, Kind>& scalar_keys() {
  static const std::map<std::string, Kind> keys = {
      {"seed", Kind::UInt},
      {"clock", Kind::String},
      {"mode", Kind::String},
      {"session.src", Kind::String},
      {"session.tgt", Kind::String},
      {"session.id", Kind::String},
      {"session.token_gap_ms", Kind::Int},
      {"session.input_format", Kind::String},
      {"session.src_spaceless", Kind::Bool},
      {"session.tgt_spaceless", Kind::Bool},
      {"session.parallel_engines", Kind::Bool},
      {"segmenter.max_delay", Kind::Int},
      {"segmenter.threshold", Kind::Float},
      {"segmenter.feature_window", Kind::Int},
      {"segmenter.epochs", Kind::Int},
      {"segmenter.learning_rate", Kind::Float},
      {"segmenter.tune_candidates", Kind::IntList},
      {"models.chunk", Kind::Path},
      {"models.sentence", Kind::Path},
      {"context.window_k", Kind::Int},
      {"context.tags.speaker", Kind::String},
      {"context.tags.scene", Kind::String},
      {"context.tags.subject", Kind::String},
      {"context.tags.gender", Kind::String},
      {"corpus.train", Kind::Path},
      {"corpus.dev", Kind::Path},
      {"corpus.test", Kind::Path},
      {"corpus.concat", Kind::Int},
      {"corpus.split", Kind::FloatList},
      {"generator.count", Kind::Int},
      {"generator.vocab_size", Kind::Int},
      {"generator.mean_chunk_len", Kind::Float},
      {"generator.min_sentence_chunks", Kind::Int},
      {"generator.max_sentence_chunks", Kind::Int},
      {"generator.sentence_chunk_weights", Kind::FloatList},
      {"generator.min_sentences", Kind::Int},
      {"generator.max_sentences", Kind::Int},
      {"generator.policy", Kind::String},
      {"generator.chunk_marker", Kind::String},
      {"generator.sentence_marker", Kind::String},
      {"generator.chunk_follower", Kind::String},
      {"generator.sentence_follower", Kind::String},
      {"generator.cue_noise", Kind::Float},
      {"eval.max_n", Kind::Int},
      {"eval.smoothing", Kind::String},
      {"eval.fixed_length", Kind::Int},
      {"eval.format", Kind::String},
  };
  return keys;
}

const std::map<std::string, Kind>& engine_keys() {
  static const std::map<std::string, Kind> keys = {
      {"id", Kind::String},          {"kind", Kind::String},
      {"priority", Kind::Int},       {"pairs", Kind::StringList},
      {"reverse_capable", Kind::Bool}, {"granularities", Kind::StringList},
      {"latency_ms", Kind::Latency}, {"dictionary", Kind::Path},
      {"reverse_dictionary", Kind::Path}, {"dropout", Kind::Float},
      {"seed", Kind::UInt},          {"url", Kind::String},
      {"timeout_ms", Kind::Int},     {"max_connections", Kind::Int},
  };
  return keys;
}

const std::map<std::string, Kind>& compare_keys() {
  static const std::map<std::string, Kind> keys = {
      {"name", Kind::String},  {"mode", Kind::String},     {"engines", Kind::StringList},
      {"fixed_length", Kind::Int}, {"use_tags", Kind::Bool},
  };
  return keys;
}

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::InvalidConfig, why); }

bool is_number(const json& v) { return v.is_number_integer() || v.is_number_float(); }

void check_kind(const std::string& key, const json& v, Kind kind) {
  auto all = [&](auto pred) {
    return v.is_array() && std::all_of(v.begin(), v.end(), pred);
  };
  bool ok = false;
  switch (kind) {
    case Kind::Int: ok = v.is_number_integer(); break;
    case Kind::UInt: ok = v.is_number_integer() && v.get<std::int64_t>() >= 0; break;
    case Kind::Float: ok = is_number(v); break;
    case Kind::Bool: ok = v.is_boolean(); break;
    case Kind::String:
    case Kind::Path: ok = v.is_string(); break;
    case Kind::IntList: ok = all([](const json& e) { return e.is_number_integer(); }); break;
    case Kind::FloatList: ok = all(is_number); break;
    case Kind::StringList: ok = all([](const json& e) { return e.is_string(); }); break;
    case Kind::Latency:
      ok = (v.is_number_integer() && v.get<std::int64_t>() >= 0) ||
           (v.is_array() && v.size() == 2 &&
            all([](const json& e) { return e.is_number_integer(); }));
      break;
  }
  if (!ok) bad("key '" + key + "' has a value of the wrong type");
}

std::string resolve(const fs::path& base, const std::string& path) {
  if (path == "-" || fs::path(path).is_absolute() || base.empty()) return path;
  return (base / path).lexically_normal().string();
}

// Flattens the non-array tables of `node` into dotted keys, validating names,
// types and resolving file paths against `base`.
void flatten(const json& node, const std::string& prefix, const fs::path& base,
             std::map<std::string, json>& flat) {
  for (const auto& [key, value] : node.items()) {
    const auto dotted = prefix.empty() ? key : prefix + "." + key;
    const auto& schema = scalar_keys();
    const auto found = schema.find(dotted);
    if (found == schema.end()) {
      if (value.is_object()) {
        flatten(value, dotted, base, flat);
        continue;
      }
      bad("unknown config key '" + dotted + "'");
    }
    check_kind(dotted, value, found->second);
    flat[dotted] = found->second == Kind::Path ? json(resolve(base, value.get<std::string>())) : value;
  }
}

json checked_table(const json& table, const std::map<std::string, Kind>& schema,
                   const std::string& section, const fs::path& base) {
  if (!table.is_object()) bad("'" + section + "' must be an array of tables");
  json out = json::object();
  for (const auto& [key, value] : table.items()) {
    const auto found = schema.find(key);
    if (found == schema.end()) bad("unknown config key '" + section + "." + key + "'");
    check_kind(section + "." + key, value, found->second);
    out[key] = found->second == Kind::Path ? json(resolve(base, value.get<std::string>())) : value;
  }
  return out;
}

json override_value(const std::string& key, const std::string& raw) {
  const auto found = scalar_keys().find(key);
  if (found == scalar_keys().end()) bad("unknown config key '" + key + "'");
  const auto kind = found->second;
  if (kind == Kind::String || kind == Kind::Path) return raw;
  json v;
  try {
    v = parse_toml_value(raw);
  } catch (const Error&) {
    bad("cannot parse value '" + raw + "' for key '" + key + "'");
  }
  check_kind(key, v, kind);
  return v;
}

void require_file(const std::string& path, const std::string& key) {
  if (path == "-") return;
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::IoError, "file not found: " + path + " (" + key + ")");
  }
}

template <typename Map>
auto pick(const Map& values, const std::string& name, std::string_view key) {
  const auto it = values.find(name);
  if (it == values.end()) bad("unknown value '" + name + "' for " + std::string(key));
  return it->second;
}

EngineSpec engine_spec(const json& t) {
  EngineSpec spec;
  if (!t.contains("id")) bad("engine entry without an id");
  if (!t.contains("kind")) bad("engine '" + t["id"].get<std::string>() + "' has no kind");
  spec.id = t["id"];
  spec.kind = t["kind"];
  spec.priority = t.value("priority", 0);
  spec.reverse_capable = t.value("reverse_capable", true);
  if (t.contains("pairs")) {
    for (const auto& p : t["pairs"]) {
      const auto text = p.get<std::string>();
      const auto dash = text.find('-');
      if (dash == std::string::npos) bad("engine pair '" + text + "' is not of the form src-tgt");
      const auto a = LanguageCode::parse(text.substr(0, dash));
      const auto b = LanguageCode::parse(text.substr(dash + 1));
      spec.pairs.emplace(a.code(), b.code());
    }
  }
  if (t.contains("granularities")) {
    spec.granularities.clear();
    for (const auto& g : t["granularities"]) spec.granularities.insert(parse_segment_kind(g.get<std::string>()));
  }
  if (t.contains("latency_ms")) {
    const auto& l = t["latency_ms"];
    if (l.is_array()) {
      spec.latency = {l[0].get<std::int64_t>(), l[1].get<std::int64_t>()};
    } else {
      spec.latency = {l.get<std::int64_t>(), l.get<std::int64_t>()};
    }
  }
  spec.dictionary = t.value("dictionary", "");
  spec.reverse_dictionary = t.value("reverse_dictionary", "");
  spec.dropout = t.value("dropout", spec.dropout);
  spec.seed = t.value("seed", std::uint64_t{0});
  spec.url = t.value("url", "");
  spec.timeout_ms = t.value("timeout_ms", spec.timeout_ms);
  spec.max_connections = t.value("max_connections", spec.max_connections);
  if (spec.kind == "dictionary" && spec.dictionary.empty()) {
    bad("dictionary engine '" + spec.id + "' needs a dictionary file");
  }
  if (spec.kind == "remote" && spec.url.empty()) bad("remote engine '" + spec.id + "' needs a url");
  return spec;
}

}  // namespace

json parse_toml(std::istream& in) {
  std::ostringstream text;
  text << in.rdbuf();
  return TomlParser(text.str()).document();
}

json parse_toml_value(std::string_view text) { return TomlParser(text).lone_value(); }

std::string env_name(std::string_view dotted_key) {
  std::string out = "SIMULPIPE_";
  for (const char c : dotted_key) {
    out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

Config load_config(const ConfigSources& sources) {
  json root = json::object();
  fs::path base;
  if (sources.file) {
    std::ifstream in(*sources.file, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read config " + *sources.file);
    try {
      root = parse_toml(in);
    } catch (const Error& e) {
      throw Error(e.code(), *sources.file + ": " + e.what());
    }
    base = fs::path(*sources.file).parent_path();
  }

  std::vector<json> engine_tables;
  std::vector<json> compare_tables;
  for (const auto& [section, schema, sink] :
       {std::tuple{"engines", &engine_keys(), &engine_tables},
        std::tuple{"compare", &compare_keys(), &compare_tables}}) {
    if (!root.contains(section)) continue;
    if (!root[section].is_array()) bad(std::string("'") + section + "' must be an array of tables");
    for (const auto& t : root[section]) sink->push_back(checked_table(t, *schema, section, base));
    root.erase(section);
  }

  std::map<std::string, json> flat;
  flatten(root, "", base, flat);
  if (sources.use_environment) {
    for (const auto& [key, kind] : scalar_keys()) {
      if (const char* v = std::getenv(env_name(key).c_str())) flat[key] = override_value(key, v);
    }
  }
  for (const auto& [key, raw] : sources.overrides) flat[key] = override_value(key, raw);

  auto get = [&](const std::string& key) -> const json* {
    const auto it = flat.find(key);
    return it == flat.end() ? nullptr : &it->second;
  };
  auto str = [&](const std::string& key, std::string fallback) {
    const auto* v = get(key);
    return v ? v->get<std::string>() : fallback;
  };
  auto integer = [&](const std::string& key, std::int64_t fallback) {
    const auto* v = get(key);
    return v ? v->get<std::int64_t>() : fallback;
  };
  auto real = [&](const std::string& key, double fallback) {
    const auto* v = get(key);
    return v ? v->get<double>() : fallback;
  };
  auto path = [&](const std::string& key) -> std::optional<std::string> {
    const auto* v = get(key);
    if (!v) return std::nullopt;
    require_file(v->get<std::string>(), key);
    return v->get<std::string>();
  };

  Config c;
  c.seed = static_cast<std::uint64_t>(integer("seed", 0));
  c.clock = pick(std::map<std::string, ClockMode>{{"simulated", ClockMode::Simulated},
                                                  {"real", ClockMode::Real}},
                 str("clock", "simulated"), "clock");
  c.mode = pick(std::map<std::string, PipelineMode>{{"chunk+sentence", PipelineMode::ChunkAndSentence},
                                                    {"sentence-only", PipelineMode::SentenceOnly}},
                str("mode", "chunk+sentence"), "mode");

  c.src = LanguageCode::parse(str("session.src", "ja"));
  c.tgt = LanguageCode::parse(str("session.tgt", "en"));
  if (const auto* v = get("session.src_spaceless")) c.src = c.src.with_spaceless(v->get<bool>());
  if (const auto* v = get("session.tgt_spaceless")) c.tgt = c.tgt.with_spaceless(v->get<bool>());
  c.session_id = str("session.id", "default");
  c.token_gap_ms = integer("session.token_gap_ms", 300);
  if (c.token_gap_ms < 0) bad("session.token_gap_ms must be >= 0");
  c.input_format = pick(std::map<std::string, TokenInputFormat>{{"jsonl", TokenInputFormat::Jsonl},
                                                                {"text", TokenInputFormat::PlainText}},
                        str("session.input_format", "jsonl"), "session.input_format");
  if (const auto* v = get("session.parallel_engines")) c.parallel_engines = v->get<bool>();

  c.segmenter.max_delay = static_cast<int>(integer("segmenter.max_delay", c.segmenter.max_delay));
  c.segmenter.threshold = real("segmenter.threshold", c.segmenter.threshold);
  c.segmenter.feature_window =
      static_cast<int>(integer("segmenter.feature_window", c.segmenter.feature_window));
  c.segmenter.validate();
  c.train.epochs = static_cast<int>(integer("segmenter.epochs", c.train.epochs));
  if (c.train.epochs < 0) bad("segmenter.epochs must be >= 0");
  c.train.learning_rate = real("segmenter.learning_rate", c.train.learning_rate);
  if (!(c.train.learning_rate > 0.0)) bad("segmenter.learning_rate must be > 0");
  c.train.seed = c.seed;
  if (const auto* v = get("segmenter.tune_candidates")) c.tune_candidates = v->get<std::vector<int>>();

  c.chunk_model = path("models.chunk");
  c.sentence_model = path("models.sentence");

  const auto window = integer("context.window_k", 3);
  if (window < 0) bad("context.window_k must be >= 0");
  c.window_k = static_cast<std::size_t>(window);
  std::map<std::string, std::string> raw_tags;
  for (const auto* category : {"speaker", "scene", "subject", "gender"}) {
    if (const auto* v = get(std::string("context.tags.") + category)) raw_tags[category] = *v;
  }
  c.tags = validate_tags(raw_tags, c.src, c.tgt);

  for (const auto& t : engine_tables) {
    c.engines.push_back(engine_spec(t));
    for (const auto* key : {"dictionary", "reverse_dictionary"}) {
      if (t.contains(key)) require_file(t[key], "engines." + c.engines.back().id + "." + key);
    }
  }

  c.corpus_train = path("corpus.train");
  c.corpus_dev = path("corpus.dev");
  c.corpus_test = path("corpus.test");
  c.concat = static_cast<int>(integer("corpus.concat", 3));
  if (c.concat < 1) bad("corpus.concat must be >= 1");
  if (const auto* v = get("corpus.split")) {
    const auto r = v->get<std::vector<double>>();
    if (r.size() != 3) bad("corpus.split needs three ratios (train, dev, test)");
    c.split = {r[0], r[1], r[2]};
  }

  auto& g = c.generator;
  const auto count = integer("generator.count", 1000);
  if (count < 1) bad("generator.count must be >= 1");
  c.generator_count = static_cast<std::size_t>(count);
  g.vocab_size = static_cast<int>(integer("generator.vocab_size", g.vocab_size));
  g.mean_chunk_len = real("generator.mean_chunk_len", g.mean_chunk_len);
  g.min_sentence_chunks = static_cast<int>(integer("generator.min_sentence_chunks", g.min_sentence_chunks));
  g.max_sentence_chunks = static_cast<int>(integer("generator.max_sentence_chunks", g.max_sentence_chunks));
  if (const auto* v = get("generator.sentence_chunk_weights")) {
    g.sentence_chunk_weights = v->get<std::vector<double>>();
  }
  g.min_sentences = static_cast<int>(integer("generator.min_sentences", g.min_sentences));
  g.max_sentences = static_cast<int>(integer("generator.max_sentences", g.max_sentences));
  g.policy = parse_boundary_policy(str("generator.policy", std::string(to_string(g.policy))));
  g.chunk_marker = str("generator.chunk_marker", g.chunk_marker);
  g.sentence_marker = str("generator.sentence_marker", g.sentence_marker);
  g.chunk_follower = str("generator.chunk_follower", g.chunk_follower);
  g.sentence_follower = str("generator.sentence_follower", g.sentence_follower);
  g.cue_noise = real("generator.cue_noise", g.cue_noise);
  g.validate();

  c.bleu.max_n = static_cast<int>(integer("eval.max_n", 4));
  if (c.bleu.max_n < 1) bad("eval.max_n must be >= 1");
  c.bleu.smoothing = pick(std::map<std::string, BleuSmoothing>{{"none", BleuSmoothing::None},
                                                               {"add-one", BleuSmoothing::AddOneForNGe2}},
                          str("eval.smoothing", "none"), "eval.smoothing");
  c.fixed_length = static_cast<int>(integer("eval.fixed_length", 7));
  if (c.fixed_length < 1) bad("eval.fixed_length must be >= 1");
  c.report_format = str("eval.format", "tsv");
  if (c.report_format != "tsv" && c.report_format != "jsonl") bad("eval.format must be tsv or jsonl");

  std::set<std::string> names;
  for (const auto& t : compare_tables) {
    CompareSpec spec;
    if (!t.contains("name")) bad("compare entry without a name");
    spec.name = t["name"];
    if (!names.insert(spec.name).second) bad("duplicate compare name '" + spec.name + "'");
    spec.mode = pick(std::map<std::string, SegmentationMode>{{"chunk", SegmentationMode::ChunkModel},
                                                             {"sentence", SegmentationMode::SentenceModel},
                                                             {"fixed", SegmentationMode::FixedLength}},
                     t.value("mode", "sentence"), "compare.mode");
    spec.engines = t.value("engines", std::vector<std::string>{});
    for (const auto& id : spec.engines) {
      const bool known = std::any_of(c.engines.begin(), c.engines.end(),
                                     [&](const EngineSpec& e) { return e.id == id; });
      if (!known) bad("compare '" + spec.name + "' names unknown engine '" + id + "'");
    }
    spec.fixed_length = t.value("fixed_length", c.fixed_length);
    if (spec.fixed_length < 1) bad("compare.fixed_length must be >= 1");
    spec.use_tags = t.value("use_tags", true);
    c.compare.push_back(std::move(spec));
  }
  return c;
}

std::shared_ptr<EngineBroker> build_broker(const Config& config,
                                           const std::vector<std::string>& ids) {
  auto broker = std::make_shared<EngineBroker>(config.parallel_engines);
  for (const auto& id : ids) {
    const bool known = std::any_of(config.engines.begin(), config.engines.end(),
                                   [&](const EngineSpec& e) { return e.id == id; });
    if (!known) bad("unknown engine '" + id + "'");
  }
  for (const auto& spec : config.engines) {
    if (!ids.empty() && std::find(ids.begin(), ids.end(), spec.id) == ids.end()) continue;
    broker->add(make_engine(spec));
  }
  if (broker->engines().empty()) bad("no translation engine configured");
  return broker;
}

std::shared_ptr<const SegmenterModel> load_model(const std::optional<std::string>& path,
                                                 std::string_view what) {
  if (!path) bad("no " + std::string(what) + " model configured");
  require_file(*path, std::string(what) + " model");
  return std::make_shared<const SegmenterModel>(SegmenterModel::load_file(*path));
}

SessionConfig session_config(const Config& config) {
  SessionConfig s;
  s.src = config.src;
  s.tgt = config.tgt;
  s.tags = config.tags;
  s.history_window = config.window_k;
  s.clock = config.clock;
  s.mode = config.mode;
  s.seed = config.seed;
  s.session_id = config.session_id;
  return s;
}

}  // namespace simulpipe
