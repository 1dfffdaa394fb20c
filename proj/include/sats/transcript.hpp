#pragma once

#include <cmath>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sats/error.hpp"
#include "sats/unicode.hpp"

namespace sats {

// ─── Domain types ────────────────────────────────────────────────────────────

// 1-based speaker label. Short form renders unpadded (`[S3]`), long form
// zero-padded to two digits (`[S03]`).
struct SpeakerId {
    int index = 1;

    auto operator<=>(const SpeakerId&) const = default;

    std::string short_tag() const { return "[S" + std::to_string(index) + "]"; }
    std::string long_tag() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "[S%02d]", index);
        return buf;
    }
};

enum class AnnotationKind { Overlap, Insertion, Emotion, Event };

inline const char* to_string(AnnotationKind k) {
    switch (k) {
        case AnnotationKind::Overlap:   return "overlap";
        case AnnotationKind::Insertion: return "insertion";
        case AnnotationKind::Emotion:   return "emotion";
        case AnnotationKind::Event:     return "event";
    }
    return "?";
}

struct Annotation {
    AnnotationKind kind = AnnotationKind::Event;
    std::optional<std::string> payload;  // emotion/event content

    bool operator==(const Annotation&) const = default;
};

struct Segment {
    SpeakerId speaker;
    std::string text;  // spoken content only; tags and timestamps live in structure
    std::optional<double> start;  // seconds
    std::optional<double> end;
    std::vector<Annotation> annotations;

    bool operator==(const Segment&) const = default;
};

enum class TranscriptFormat { Short, Long };

inline const char* to_string(TranscriptFormat f) {
    return f == TranscriptFormat::Short ? "short" : "long";
}

struct Transcript {
    std::vector<Segment> segments;
    TranscriptFormat format = TranscriptFormat::Short;

    bool operator==(const Transcript&) const = default;
};

// ─── Timestamp codec ─────────────────────────────────────────────────────────
//
// Canonical rendering is `[hh:mm:ss.mmm]`, zero-padded, millisecond-exact.
// Square brackets mean the token is swept up by the non-speaker-bracket
// normalization rule, so timestamps vanish from scoring input with no special
// case.

inline constexpr double kMaxTimestampSeconds = 100.0 * 3600.0;  // render limit

inline std::string render_timestamp(double seconds) {
    if (!(seconds >= 0.0) || seconds >= kMaxTimestampSeconds)
        throw Error(ErrorKind::InvalidTimestamp,
                    "render requires 0 <= seconds < 100 hours, got " + std::to_string(seconds));
    const long long total_ms = std::llround(seconds * 1000.0);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "[%02lld:%02lld:%02lld.%03lld]", total_ms / 3600000,
                  (total_ms / 60000) % 60, (total_ms / 1000) % 60, total_ms % 1000);
    return buf;
}

namespace detail {

// Matches `[hh:mm:ss.mmm]` starting at cps[i]. Returns the token length in
// code points (14) or 0 if the shape does not match. Range errors are
// reported through `range_error` so callers can distinguish "not a
// timestamp" from "a timestamp with minutes/seconds >= 60".
inline std::size_t match_timestamp(std::u32string_view cps, std::size_t i, bool* range_error,
                                   double* seconds) {
    // [ d d : d d : d d . d d d ]
    static constexpr std::size_t kLen = 14;
    if (i + kLen > cps.size()) return 0;
    if (cps[i] != U'[' || cps[i + 13] != U']') return 0;
    if (cps[i + 3] != U':' || cps[i + 6] != U':' || cps[i + 9] != U'.') return 0;
    for (std::size_t d : {1u, 2u, 4u, 5u, 7u, 8u, 10u, 11u, 12u})
        if (!uni::is_ascii_digit(cps[i + d])) return 0;
    const auto num = [&](std::size_t a, std::size_t b) {
        long v = 0;
        for (std::size_t k = a; k <= b; ++k) v = v * 10 + static_cast<long>(cps[i + k] - U'0');
        return v;
    };
    const long h = num(1, 2), m = num(4, 5), s = num(7, 8), ms = num(10, 12);
    if (m >= 60 || s >= 60) {
        if (range_error) *range_error = true;
        return 0;
    }
    // single division keeps parse(render(x)) bit-identical on the ms grid
    if (seconds)
        *seconds = static_cast<double>(((h * 60 + m) * 60 + s) * 1000 + ms) / 1000.0;
    return kLen;
}

// Matches `[S<digits>]` at cps[i]; returns token length and the parsed index.
inline std::size_t match_speaker_tag(std::u32string_view cps, std::size_t i, long* index) {
    if (i + 3 > cps.size() || cps[i] != U'[' || cps[i + 1] != U'S') return 0;
    std::size_t j = i + 2;
    long v = 0;
    while (j < cps.size() && uni::is_ascii_digit(cps[j])) {
        if (v < 1000000) v = v * 10 + static_cast<long>(cps[j] - U'0');
        ++j;
    }
    if (j == i + 2 || j >= cps.size() || cps[j] != U']') return 0;
    if (index) *index = v;
    return j - i + 1;
}

}  // namespace detail

inline double parse_timestamp(std::string_view text) {
    const std::u32string cps = uni::decode_utf8(text);
    bool range_error = false;
    double seconds = 0.0;
    const std::size_t len = detail::match_timestamp(cps, 0, &range_error, &seconds);
    if (len == 0 || len != cps.size())
        throw Error(ErrorKind::InvalidTimestamp,
                    range_error ? "field out of range in " + std::string(text)
                                : "expected [hh:mm:ss.mmm], got " + std::string(text));
    return seconds;
}

// ─── Annotation extraction ───────────────────────────────────────────────────

namespace detail {

inline std::u32string trim(std::u32string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && uni::is_space(s[a])) ++a;
    while (b > a && uni::is_space(s[b - 1])) --b;
    return std::u32string(s.substr(a, b - a));
}

// Pulls `<ovl>`, `<ins>...</ins>`, `<emotion>...</emotion>` and `[event]`
// markup out of segment content. Tag tokens are dropped; the text wrapped by
// paired tags stays in place (it is spoken content). Unclosed paired tags
// extend to the end of the segment and are reported. `stop_at_speaker_tag`
// and `stop_at_timestamp` make the same scanner usable for both formats; the
// returned `consumed` is the number of code points eaten.
struct ExtractedContent {
    std::u32string text;
    std::vector<Annotation> annotations;
    std::size_t consumed = 0;
};

inline bool tag_matches(std::u32string_view cps, std::size_t i, std::u32string_view tag) {
    if (i + tag.size() > cps.size()) return false;
    return cps.substr(i, tag.size()) == tag;
}

inline ExtractedContent extract_content(std::u32string_view cps, std::size_t begin,
                                        const std::vector<std::size_t>& offsets,
                                        bool stop_at_speaker_tag, bool stop_at_timestamp,
                                        Diagnostics* diags) {
    ExtractedContent out;
    std::size_t i = begin;
    bool ins_open = false, emotion_open = false;
    std::size_t emotion_payload_from = 0;
    const auto byte_at = [&](std::size_t k) {
        return k < offsets.size() ? offsets[k] : Error::npos;
    };

    while (i < cps.size()) {
        const char32_t c = cps[i];
        if (c == U'[') {
            long idx = 0;
            if (stop_at_speaker_tag && match_speaker_tag(cps, i, &idx)) break;
            if (stop_at_timestamp) {
                bool range_error = false;
                if (match_timestamp(cps, i, &range_error, nullptr) || range_error) break;
            }
            // Event-like bracket: consumed whole, kind=event, payload = inner text.
            std::size_t j = i + 1;
            while (j < cps.size() && cps[j] != U']' && cps[j] != U'\n') ++j;
            if (j < cps.size() && cps[j] == U']') {
                out.annotations.push_back(
                    {AnnotationKind::Event, uni::encode_utf8(cps.substr(i + 1, j - i - 1))});
                i = j + 1;
                continue;
            }
            out.text.push_back(c);  // unclosed bracket is literal text
            ++i;
        } else if (c == U'<') {
            if (tag_matches(cps, i, U"<ovl>")) {
                out.annotations.push_back({AnnotationKind::Overlap, std::nullopt});
                i += 5;
            } else if (tag_matches(cps, i, U"<ins>")) {
                out.annotations.push_back({AnnotationKind::Insertion, std::nullopt});
                ins_open = true;
                i += 5;
            } else if (tag_matches(cps, i, U"</ins>")) {
                if (!ins_open)
                    diag(diags, "stray-closing-tag", "</ins> without opening tag", byte_at(i));
                ins_open = false;
                i += 6;
            } else if (tag_matches(cps, i, U"<emotion>")) {
                if (emotion_open)
                    diag(diags, "unclosed-tag", "<emotion> reopened before closing", byte_at(i));
                emotion_open = true;
                emotion_payload_from = out.text.size();
                i += 9;
            } else if (tag_matches(cps, i, U"</emotion>")) {
                if (emotion_open) {
                    out.annotations.push_back(
                        {AnnotationKind::Emotion,
                         uni::encode_utf8(std::u32string_view(out.text).substr(emotion_payload_from))});
                    emotion_open = false;
                } else {
                    diag(diags, "stray-closing-tag", "</emotion> without opening tag", byte_at(i));
                }
                i += 10;
            } else {
                // Any other angle token is dropped, mirroring markup removal.
                std::size_t j = i + 1;
                while (j < cps.size() && cps[j] != U'>' && cps[j] != U'\n') ++j;
                if (j < cps.size() && cps[j] == U'>') {
                    diag(diags, "unknown-tag",
                         "dropped tag " + uni::encode_utf8(cps.substr(i, j - i + 1)), byte_at(i));
                    i = j + 1;
                } else {
                    out.text.push_back(c);  // bare '<' is literal text
                    ++i;
                }
            }
        } else {
            out.text.push_back(c);
            ++i;
        }
    }

    if (ins_open)
        diag(diags, "unclosed-tag", "<ins> extends to end of segment", byte_at(begin));
    if (emotion_open) {
        out.annotations.push_back(
            {AnnotationKind::Emotion,
             uni::encode_utf8(std::u32string_view(out.text).substr(emotion_payload_from))});
        diag(diags, "unclosed-tag", "<emotion> extends to end of segment", byte_at(begin));
    }
    out.consumed = i - begin;
    return out;
}

inline SpeakerId make_speaker(long index, std::size_t byte_offset) {
    if (index < 1)
        throw Error(ErrorKind::InvalidSpeakerIndex,
                    "speaker index must be >= 1, got S" + std::to_string(index), byte_offset);
    return SpeakerId{static_cast<int>(index)};
}

}  // namespace detail

// ─── Parsing ─────────────────────────────────────────────────────────────────

// Short form: `[S1]你好[S2]你好…`. One segment per tag; text before the first
// tag is reported, never attributed.
inline Transcript parse_short(std::string_view text, Diagnostics* diags = nullptr) {
    const auto [cps, offsets] = uni::decode_utf8_with_offsets(text);
    Transcript t;
    t.format = TranscriptFormat::Short;

    std::size_t i = 0;
    long first_index = 0;
    while (i < cps.size() && !detail::match_speaker_tag(cps, i, &first_index)) ++i;
    if (i == cps.size())
        throw Error(ErrorKind::NoSpeakerTags, "no [S<n>] tag in input", 0);
    if (i > 0) {
        const std::u32string lead = detail::trim(std::u32string_view(cps).substr(0, i));
        if (!lead.empty())
            diag(diags, "leading-text",
                 "unattributed text before first speaker tag: " + uni::encode_utf8(lead), 0);
    }

    while (i < cps.size()) {
        long index = 0;
        const std::size_t tag_len = detail::match_speaker_tag(cps, i, &index);
        const SpeakerId speaker = detail::make_speaker(index, offsets[i]);
        auto content = detail::extract_content(cps, i + tag_len, offsets,
                                               /*stop_at_speaker_tag=*/true,
                                               /*stop_at_timestamp=*/false, diags);
        Segment seg;
        seg.speaker = speaker;
        seg.text = uni::encode_utf8(content.text);
        seg.annotations = std::move(content.annotations);
        t.segments.push_back(std::move(seg));
        i += tag_len + content.consumed;
    }
    return t;
}

// Long form: records of `[hh:mm:ss.mmm] [S01] content [hh:mm:ss.mmm]`,
// whitespace-tolerant between fields and records.
inline Transcript parse_long(std::string_view text, Diagnostics* diags = nullptr) {
    const auto [cps, offsets] = uni::decode_utf8_with_offsets(text);
    Transcript t;
    t.format = TranscriptFormat::Long;

    std::size_t i = 0;
    const auto skip_ws = [&] {
        while (i < cps.size() && uni::is_space(cps[i])) ++i;
    };
    const auto expect_timestamp = [&](const char* where) {
        bool range_error = false;
        double seconds = 0.0;
        const std::size_t len = detail::match_timestamp(cps, i, &range_error, &seconds);
        if (len == 0) {
            if (range_error)
                throw Error(ErrorKind::InvalidTimestamp, "minutes/seconds out of range",
                            offsets[i]);
            throw Error(ErrorKind::MalformedRecord,
                        std::string("expected ") + where + " timestamp",
                        i < cps.size() ? offsets[i] : offsets.back());
        }
        i += len;
        return seconds;
    };

    double prev_start = -1.0;
    skip_ws();
    while (i < cps.size()) {
        const double start = expect_timestamp("record start");
        skip_ws();
        long index = 0;
        const std::size_t tag_len = detail::match_speaker_tag(cps, i, &index);
        if (tag_len == 0)
            throw Error(ErrorKind::MalformedRecord, "expected [S<nn>] speaker tag",
                        i < cps.size() ? offsets[i] : offsets.back());
        const SpeakerId speaker = detail::make_speaker(index, offsets[i]);
        i += tag_len;

        auto content = detail::extract_content(cps, i, offsets,
                                               /*stop_at_speaker_tag=*/true,
                                               /*stop_at_timestamp=*/true, diags);
        i += content.consumed;
        if (i < cps.size() && detail::match_speaker_tag(cps, i, nullptr))
            throw Error(ErrorKind::MalformedRecord, "speaker tag inside record content",
                        offsets[i]);
        const double end = expect_timestamp("record end");
        if (start > end)
            throw Error(ErrorKind::InvalidInterval,
                        "record start " + render_timestamp(start) + " after end " +
                            render_timestamp(end),
                        offsets[i - 1]);
        if (start < prev_start)
            diag(diags, "non-monotonic-timestamps",
                 "record starts at " + render_timestamp(start) + " before previous record",
                 offsets[i - 1]);
        prev_start = start;

        Segment seg;
        seg.speaker = speaker;
        seg.text = uni::encode_utf8(detail::trim(content.text));
        seg.start = start;
        seg.end = end;
        seg.annotations = std::move(content.annotations);
        t.segments.push_back(std::move(seg));
        skip_ws();
    }
    return t;
}

inline Transcript parse(std::string_view text, TranscriptFormat format,
                        Diagnostics* diags = nullptr) {
    return format == TranscriptFormat::Short ? parse_short(text, diags)
                                             : parse_long(text, diags);
}

// A leading `[hh:mm:ss.mmm]` token (after optional whitespace) selects the
// long form; the two grammars are disjoint at position 0.
inline TranscriptFormat detect_format(std::string_view text) {
    const std::u32string cps = uni::decode_utf8(text);
    std::size_t i = 0;
    while (i < cps.size() && uni::is_space(cps[i])) ++i;
    bool range_error = false;
    if (detail::match_timestamp(cps, i, &range_error, nullptr) || range_error)
        return TranscriptFormat::Long;
    return TranscriptFormat::Short;
}

// ─── Emission ────────────────────────────────────────────────────────────────

namespace detail {

// Renders a segment's content with annotations in canonical positions:
// overlap tokens, then event markers, then the text with insertion wrapping
// the whole segment and emotion spans wrapping their payload occurrence.
inline std::string render_content(const Segment& seg) {
    std::string pre;
    bool wrap_ins = false;
    std::vector<std::string_view> emotions;
    for (const auto& a : seg.annotations) {
        switch (a.kind) {
            case AnnotationKind::Overlap: pre += "<ovl>"; break;
            case AnnotationKind::Event:
                pre += "[" + a.payload.value_or("event") + "]";
                break;
            case AnnotationKind::Insertion: wrap_ins = true; break;
            case AnnotationKind::Emotion:
                if (a.payload) emotions.push_back(*a.payload);
                break;
        }
    }
    std::string body = seg.text;
    std::size_t search_from = 0;
    for (const auto payload : emotions) {
        const std::size_t at = body.find(payload, search_from);
        if (at == std::string::npos) continue;  // outside canonical domain; skip markup
        body.insert(at + payload.size(), "</emotion>");
        body.insert(at, "<emotion>");
        search_from = at + payload.size() + 19;
    }
    if (wrap_ins) body = "<ins>" + body + "</ins>";
    return pre + body;
}

}  // namespace detail

inline std::string emit(const Transcript& t, TranscriptFormat format) {
    std::string out;
    if (format == TranscriptFormat::Short) {
        for (const auto& seg : t.segments)
            out += seg.speaker.short_tag() + detail::render_content(seg);
        return out;
    }
    bool first = true;
    for (const auto& seg : t.segments) {
        if (!seg.start || !seg.end)
            throw Error(ErrorKind::MissingTimestamps,
                        "long emission requires start and end on every segment");
        if (!first) out += '\n';
        first = false;
        out += render_timestamp(*seg.start) + " " + seg.speaker.long_tag();
        const std::string content = detail::render_content(seg);
        if (!content.empty()) out += " " + content;
        out += " " + render_timestamp(*seg.end);
    }
    return out;
}

inline std::string emit(const Transcript& t) { return emit(t, t.format); }

}  // namespace sats
