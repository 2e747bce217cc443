#include "simulpipe/error.hpp"

namespace simulpipe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyToken: return "EmptyToken";
    case ErrorCode::InternalWhitespace: return "InternalWhitespace";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::UnknownLanguage: return "UnknownLanguage";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::OutOfOrderToken: return "OutOfOrderToken";
    case ErrorCode::IncompleteDecisions: return "IncompleteDecisions";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::UnknownValue: return "UnknownValue";
    case ErrorCode::LanguageRestriction: return "LanguageRestriction";
    case ErrorCode::UnsupportedPair: return "UnsupportedPair";
    case ErrorCode::EngineUnavailable: return "EngineUnavailable";
    case ErrorCode::EmptyResponse: return "EmptyResponse";
    case ErrorCode::NotReverseCapable: return "NotReverseCapable";
    case ErrorCode::NoEngineAvailable: return "NoEngineAvailable";
    case ErrorCode::AllEnginesFailed: return "AllEnginesFailed";
    case ErrorCode::IncompleteLog: return "IncompleteLog";
    case ErrorCode::ChunkCountMismatch: return "ChunkCountMismatch";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::UnknownSpeaker: return "UnknownSpeaker";
    case ErrorCode::UnknownDomain: return "UnknownDomain";
    case ErrorCode::EmptyChunk: return "EmptyChunk";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidRatios: return "InvalidRatios";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidLength: return "InvalidLength";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> line) {
  std::string out(to_string(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line) {}

}  // namespace simulpipe
