#pragma once

// Random-input builders shared by the property tests and the acceptance
// suite. Generated transcripts stay inside the canonical domain of the
// grammar: segment texts carry no structural tokens, emotion payloads are
// substrings of their segment text, annotations appear in canonical order.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sats/rng.hpp"
#include "sats/transcript.hpp"
#include "sats/unicode.hpp"

namespace gen {

inline const std::u32string kTextAlphabet =
    U"你好吗我叫小明今天天气真不错一起去公园散步的了是在有和就都说abcdefgh ";
inline const std::u32string kPlainAlphabet = U"你好吗我叫小明今天天气真不错";

inline std::u32string random_text32(sats::Rng& rng, std::size_t max_len,
                                    const std::u32string& alphabet, bool allow_edge_space) {
    const std::size_t len = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(max_len)));
    std::u32string out;
    for (std::size_t i = 0; i < len; ++i) {
        char32_t cp = alphabet[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(alphabet.size()) - 1))];
        if (!allow_edge_space && (i == 0 || i + 1 == len) && cp == U' ')
            cp = alphabet[0];
        out.push_back(cp);
    }
    return out;
}

inline std::string random_text(sats::Rng& rng, std::size_t max_len,
                               const std::u32string& alphabet = kTextAlphabet,
                               bool allow_edge_space = true) {
    return sats::uni::encode_utf8(random_text32(rng, max_len, alphabet, allow_edge_space));
}

inline std::vector<sats::Annotation> random_annotations(sats::Rng& rng,
                                                        const std::u32string& text) {
    std::vector<sats::Annotation> out;
    if (rng.next_unit() < 0.25) out.push_back({sats::AnnotationKind::Overlap, std::nullopt});
    const int events = static_cast<int>(rng.uniform_int(0, 4)) - 2;  // mostly none
    for (int e = 0; e < events; ++e)
        out.push_back({sats::AnnotationKind::Event,
                       sats::uni::encode_utf8(random_text32(rng, 4, gen::kPlainAlphabet, true))});
    if (rng.next_unit() < 0.15) out.push_back({sats::AnnotationKind::Insertion, std::nullopt});
    if (!text.empty() && rng.next_unit() < 0.25) {
        const std::size_t a = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(text.size()) - 1));
        const std::size_t b = a + 1 + static_cast<std::size_t>(rng.uniform_int(
                                          0, static_cast<std::int64_t>(text.size() - a) - 1));
        out.push_back(
            {sats::AnnotationKind::Emotion, sats::uni::encode_utf8(text.substr(a, b - a))});
    }
    return out;
}

inline sats::Transcript random_transcript(sats::Rng& rng, sats::TranscriptFormat fmt,
                                          int max_segments = 8, bool with_annotations = true) {
    sats::Transcript t;
    t.format = fmt;
    const int n = static_cast<int>(rng.uniform_int(1, max_segments));
    std::int64_t t_ms = rng.uniform_int(0, 2000);
    for (int i = 0; i < n; ++i) {
        sats::Segment seg;
        seg.speaker = sats::SpeakerId{static_cast<int>(rng.uniform_int(1, 6))};
        const bool long_form = fmt == sats::TranscriptFormat::Long;
        const std::u32string text32 =
            random_text32(rng, 12, kTextAlphabet, /*allow_edge_space=*/!long_form);
        seg.text = sats::uni::encode_utf8(text32);
        if (with_annotations) seg.annotations = random_annotations(rng, text32);
        if (long_form) {
            const std::int64_t dur_ms = rng.uniform_int(200, 6000);
            seg.start = static_cast<double>(t_ms) / 1000.0;
            seg.end = static_cast<double>(t_ms + dur_ms) / 1000.0;
            t_ms += rng.uniform_int(0, 4000);
        }
        t.segments.push_back(std::move(seg));
    }
    return t;
}

// Random per-speaker character streams for assignment-level tests.
inline std::map<sats::SpeakerId, std::u32string> random_streams(sats::Rng& rng, int speakers,
                                                                std::size_t max_len,
                                                                int alphabet_size) {
    std::map<sats::SpeakerId, std::u32string> out;
    for (int s = 1; s <= speakers; ++s) {
        std::u32string stream;
        const std::size_t len = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(max_len)));
        for (std::size_t i = 0; i < len; ++i)
            stream.push_back(static_cast<char32_t>(
                U'a' + rng.uniform_int(0, alphabet_size - 1)));
        out.emplace(sats::SpeakerId{s}, std::move(stream));
    }
    return out;
}

}  // namespace gen
