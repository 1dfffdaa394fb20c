#pragma once

#include <map>
#include <string>
#include <string_view>

#include "sats/transcript.hpp"
#include "sats/unicode.hpp"

namespace sats {

// ─── Markup normalization ────────────────────────────────────────────────────
//
// Three fixed regex-replace passes, applied in order, each non-greedy,
// non-overlapping, left-to-right:
//
//   1. \s*\(.*?\)          parenthetical content plus preceding whitespace
//   2. <.*?>               angle-bracket tags (paired-tag contents survive)
//   3. \[(?!S\d+\]).*?\]   square brackets that are not speaker tags
//
// Pinned semantics: `.` matches any code point except U+000A, `\s` is the
// Unicode White_Space set, unmatched closers stay in place. The passes are
// hand-rolled so the behavior is identical across platforms and regex
// engines.

namespace detail {

// Scans from `from` for the closing code point `close`, failing at newline.
// Returns the index of `close` or npos.
inline std::size_t find_close(std::u32string_view cps, std::size_t from, char32_t close) {
    for (std::size_t j = from; j < cps.size(); ++j) {
        if (cps[j] == close) return j;
        if (cps[j] == U'\n') return std::u32string_view::npos;
    }
    return std::u32string_view::npos;
}

inline std::u32string strip_parentheticals(std::u32string_view cps) {
    std::u32string out;
    out.reserve(cps.size());
    std::size_t i = 0;
    while (i < cps.size()) {
        if (cps[i] == U'(') {
            const std::size_t j = find_close(cps, i + 1, U')');
            if (j != std::u32string_view::npos) {
                while (!out.empty() && uni::is_space(out.back())) out.pop_back();
                i = j + 1;
                continue;
            }
        }
        out.push_back(cps[i++]);
    }
    return out;
}

inline std::u32string strip_angle_tags(std::u32string_view cps) {
    std::u32string out;
    out.reserve(cps.size());
    std::size_t i = 0;
    while (i < cps.size()) {
        if (cps[i] == U'<') {
            const std::size_t j = find_close(cps, i + 1, U'>');
            if (j != std::u32string_view::npos) {
                i = j + 1;
                continue;
            }
        }
        out.push_back(cps[i++]);
    }
    return out;
}

inline std::u32string strip_non_speaker_brackets(std::u32string_view cps) {
    std::u32string out;
    out.reserve(cps.size());
    std::size_t i = 0;
    while (i < cps.size()) {
        if (cps[i] == U'[' && !match_speaker_tag(cps, i, nullptr)) {
            const std::size_t j = find_close(cps, i + 1, U']');
            if (j != std::u32string_view::npos) {
                i = j + 1;
                continue;
            }
        }
        out.push_back(cps[i++]);
    }
    return out;
}

}  // namespace detail

inline std::string normalize(std::string_view raw) {
    std::u32string cps = uni::decode_utf8(raw);
    cps = detail::strip_parentheticals(cps);
    cps = detail::strip_angle_tags(cps);
    cps = detail::strip_non_speaker_brackets(cps);
    return uni::encode_utf8(cps);
}

// ─── Scoring tokenization ────────────────────────────────────────────────────

// Markup removal above is fixed; these options only shape the character
// stream handed to edit distance.
struct NormalizationOptions {
    bool lowercase = true;
    bool strip_punctuation = true;
    bool strip_whitespace = true;  // always on for scoring
};

// NFC, optional lowercase, whitespace removal, optional punctuation removal.
// The result is the per-character sequence scored by edit distance. Input is
// expected to be markup-normalized and free of speaker tags.
inline std::u32string tokenize_for_scoring(std::string_view normalized,
                                           const NormalizationOptions& opts = {}) {
    const std::u32string composed = uni::nfc(uni::decode_utf8(normalized));
    std::u32string out;
    out.reserve(composed.size());
    for (char32_t cp : composed) {
        if (opts.strip_whitespace && uni::is_space(cp)) continue;
        if (opts.strip_punctuation && uni::is_punct(cp)) continue;
        out.push_back(opts.lowercase ? uni::to_lower(cp) : cp);
    }
    return out;
}

// Tokenized concatenation of every segment text in transcript order,
// ignoring speaker labels. This is the CER character stream.
inline std::u32string full_token_stream(const Transcript& t,
                                        const NormalizationOptions& opts = {}) {
    std::string all;
    for (const auto& seg : t.segments) all += seg.text;
    return tokenize_for_scoring(all, opts);
}

// Per-speaker streams: segment texts concatenated in transcript order, then
// tokenized. Speakers with no segments are absent.
inline std::map<SpeakerId, std::u32string> split_by_speaker(
    const Transcript& t, const NormalizationOptions& opts = {}) {
    std::map<SpeakerId, std::string> raw;
    for (const auto& seg : t.segments) raw[seg.speaker] += seg.text;
    std::map<SpeakerId, std::u32string> out;
    for (const auto& [speaker, text] : raw) out.emplace(speaker, tokenize_for_scoring(text, opts));
    return out;
}

}  // namespace sats
