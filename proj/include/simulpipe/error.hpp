#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace simulpipe {

enum class ErrorCode {
  // core
  EmptyToken,
  InternalWhitespace,
  EmptyInput,
  UnknownLanguage,
  MalformedRecord,
  // segmenter
  OutOfOrderToken,
  IncompleteDecisions,
  EmptyCorpus,
  EmptyCandidates,
  VersionMismatch,
  // context
  UnknownCategory,
  UnknownValue,
  LanguageRestriction,
  // engines
  UnsupportedPair,
  EngineUnavailable,
  EmptyResponse,
  NotReverseCapable,
  NoEngineAvailable,
  AllEnginesFailed,
  // pipeline
  IncompleteLog,
  // corpus
  ChunkCountMismatch,
  EmptyFile,
  UnknownSpeaker,
  UnknownDomain,
  EmptyChunk,
  InvalidSpec,
  InvalidRatios,
  // eval
  LengthMismatch,
  InvalidLength,
  // plumbing
  InvalidConfig,
  IoError,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported as Error; `line` is set for record-level
// parse failures (1-based).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace simulpipe
