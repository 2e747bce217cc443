#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "simulpipe/context.hpp"
#include "simulpipe/core.hpp"
#include "simulpipe/corpus.hpp"
#include "simulpipe/engines.hpp"
#include "simulpipe/eval.hpp"
#include "simulpipe/pipeline.hpp"
#include "simulpipe/segmenter.hpp"

namespace simulpipe {

// Subset of TOML: [table], [[array-of-tables]], dotted keys, basic and literal
// strings, integers, floats, booleans and (multi-line) arrays. Throws
// Error(InvalidConfig) with the offending line.
nlohmann::json parse_toml(std::istream& in);
nlohmann::json parse_toml_value(std::string_view text);

struct CompareSpec {
  std::string name;
  SegmentationMode mode = SegmentationMode::SentenceModel;
  std::vector<std::string> engines;  // roster ids; empty = whole roster
  int fixed_length = 7;
  bool use_tags = true;
};

struct Config {
  std::uint64_t seed = 0;
  ClockMode clock = ClockMode::Simulated;
  PipelineMode mode = PipelineMode::ChunkAndSentence;

  LanguageCode src = LanguageCode::parse("ja");
  LanguageCode tgt = LanguageCode::parse("en");
  std::string session_id = "default";
  std::int64_t token_gap_ms = 300;
  TokenInputFormat input_format = TokenInputFormat::Jsonl;
  bool parallel_engines = false;

  SegmenterConfig segmenter;
  TrainOptions train;
  std::vector<int> tune_candidates{0, 1, 2, 3};

  std::optional<std::string> chunk_model;
  std::optional<std::string> sentence_model;

  std::size_t window_k = 3;
  ContextTags tags;

  std::vector<EngineSpec> engines;

  std::optional<std::string> corpus_train;
  std::optional<std::string> corpus_dev;
  std::optional<std::string> corpus_test;
  int concat = 3;
  SplitRatios split;

  GeneratorSpec generator;
  std::size_t generator_count = 1000;

  BleuConfig bleu;
  int fixed_length = 7;
  std::string report_format = "tsv";
  std::vector<CompareSpec> compare;
};

struct ConfigSources {
  std::optional<std::string> file;
  // "dotted.key" -> raw value, applied after the file and the environment.
  std::vector<std::pair<std::string, std::string>> overrides;
  bool use_environment = true;
};

// Layers defaults, the config file, SIMULPIPE_* environment variables and
// overrides (in that order), rejects unknown keys and checks that every
// referenced file exists. Relative paths in the file resolve against its
// directory.
Config load_config(const ConfigSources& sources);

// Environment variable consulted for a scalar key, e.g. "session.src" ->
// "SIMULPIPE_SESSION_SRC".
std::string env_name(std::string_view dotted_key);

std::shared_ptr<EngineBroker> build_broker(const Config& config,
                                           const std::vector<std::string>& ids = {});
std::shared_ptr<const SegmenterModel> load_model(const std::optional<std::string>& path,
                                                 std::string_view what);
SessionConfig session_config(const Config& config);

}  // namespace simulpipe
