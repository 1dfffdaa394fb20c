#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sats {

enum class ErrorKind {
    NoSpeakerTags,
    InvalidSpeakerIndex,
    MalformedRecord,
    InvalidTimestamp,
    InvalidInterval,
    MissingTimestamps,
    EmptyReference,
    EmptyCorpus,
    EmptyUtterance,
    InsufficientSpeakers,
    SampleRateMismatch,
    SilentNoise,
    SilentSpeech,
    MissingMetadata,
    BadAudioFile,
    BadManifest,
    IoError,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::NoSpeakerTags:        return "NoSpeakerTags";
        case ErrorKind::InvalidSpeakerIndex:  return "InvalidSpeakerIndex";
        case ErrorKind::MalformedRecord:      return "MalformedRecord";
        case ErrorKind::InvalidTimestamp:     return "InvalidTimestamp";
        case ErrorKind::InvalidInterval:      return "InvalidInterval";
        case ErrorKind::MissingTimestamps:    return "MissingTimestamps";
        case ErrorKind::EmptyReference:       return "EmptyReference";
        case ErrorKind::EmptyCorpus:          return "EmptyCorpus";
        case ErrorKind::EmptyUtterance:       return "EmptyUtterance";
        case ErrorKind::InsufficientSpeakers: return "InsufficientSpeakers";
        case ErrorKind::SampleRateMismatch:   return "SampleRateMismatch";
        case ErrorKind::SilentNoise:          return "SilentNoise";
        case ErrorKind::SilentSpeech:         return "SilentSpeech";
        case ErrorKind::MissingMetadata:      return "MissingMetadata";
        case ErrorKind::BadAudioFile:         return "BadAudioFile";
        case ErrorKind::BadManifest:          return "BadManifest";
        case ErrorKind::IoError:              return "IoError";
    }
    return "Unknown";
}

// Fatal failure. `offset` is a byte offset into the offending input where
// that makes sense (parse errors), npos otherwise.
class Error : public std::runtime_error {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    Error(ErrorKind kind, std::string message, std::size_t offset = npos)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message),
          kind_(kind),
          offset_(offset) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    ErrorKind kind_;
    std::size_t offset_;
};

// Non-fatal finding surfaced alongside a successful result (leading
// unattributed text, non-monotonic timestamps, unclosed tags, ...).
struct Diagnostic {
    std::string code;
    std::string message;
    std::size_t offset = Error::npos;
};

using Diagnostics = std::vector<Diagnostic>;

inline void diag(Diagnostics* sink, std::string code, std::string message,
                 std::size_t offset = Error::npos) {
    if (sink) sink->push_back({std::move(code), std::move(message), offset});
}

}  // namespace sats
