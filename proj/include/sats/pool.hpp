#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sats/audio.hpp"
#include "sats/error.hpp"
#include "sats/unicode.hpp"

namespace sats {

struct WordSpan {
    std::string text;
    double start = 0.0;  // seconds into the utterance audio
    double end = 0.0;
};

// Single-speaker source utterance with word-level alignment. `sep` is the
// joining convention between word texts ("" for unspaced scripts, " "
// otherwise); join(words, sep) is the canonical utterance text that segment
// texts must conserve.
struct AlignedUtterance {
    AudioBuffer audio;
    std::vector<WordSpan> words;
    std::string speaker_key;
    std::string text;
    std::string sep;

    std::string join_words(std::size_t begin, std::size_t end) const {
        std::string out;
        for (std::size_t i = begin; i < end; ++i) {
            if (i > begin) out += sep;
            out += words[i].text;
        }
        return out;
    }
    std::string canonical_text() const { return join_words(0, words.size()); }
};

struct UtterancePool {
    std::vector<AlignedUtterance> utterances;
    std::vector<std::string> speaker_keys;  // first-appearance order
    std::map<std::string, std::vector<std::size_t>> by_speaker;

    void add(AlignedUtterance u) {
        auto [it, inserted] = by_speaker.try_emplace(u.speaker_key);
        if (inserted) speaker_keys.push_back(u.speaker_key);
        it->second.push_back(utterances.size());
        utterances.push_back(std::move(u));
    }
    std::size_t speaker_count() const { return speaker_keys.size(); }
};

namespace detail {

inline bool contains_space(std::string_view text) {
    for (char32_t cp : uni::decode_utf8(text))
        if (uni::is_space(cp)) return true;
    return false;
}

// Approximate alignment for manifests without word timings: whitespace-
// delimited tokens where the text has whitespace, per-code-point otherwise,
// with durations proportional to code-point count.
inline std::vector<WordSpan> approximate_words(const std::string& text, double duration) {
    std::vector<std::string> tokens;
    const std::u32string cps = uni::decode_utf8(text);
    if (contains_space(text)) {
        std::u32string cur;
        for (char32_t cp : cps) {
            if (uni::is_space(cp)) {
                if (!cur.empty()) tokens.push_back(uni::encode_utf8(cur));
                cur.clear();
            } else {
                cur.push_back(cp);
            }
        }
        if (!cur.empty()) tokens.push_back(uni::encode_utf8(cur));
    } else {
        for (char32_t cp : cps) tokens.push_back(uni::encode_utf8(std::u32string(1, cp)));
    }
    std::vector<WordSpan> out;
    if (tokens.empty()) return out;
    std::size_t total_cps = 0;
    std::vector<std::size_t> weights;
    for (const auto& tok : tokens) {
        weights.push_back(uni::decode_utf8(tok).size());
        total_cps += weights.back();
    }
    double t = 0.0;
    std::size_t seen = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        seen += weights[i];
        const double t_end =
            duration * static_cast<double>(seen) / static_cast<double>(total_cps);
        out.push_back({tokens[i], t, t_end});
        t = t_end;
    }
    return out;
}

inline void validate_words(const AlignedUtterance& u, const std::string& origin) {
    double prev_end = 0.0;
    for (const auto& w : u.words) {
        if (w.start < prev_end - 1e-9 || w.end < w.start - 1e-9)
            throw Error(ErrorKind::BadManifest,
                        origin + ": word intervals must be non-overlapping and non-decreasing");
        if (w.end > u.audio.duration() + 0.05)
            throw Error(ErrorKind::BadManifest,
                        origin + ": word interval extends past audio duration");
        prev_end = w.end;
    }
}

}  // namespace detail

// Loads a JSONL manifest of aligned utterances:
//   {"audio":"path.wav","speaker":"key","text":"…","words":[{"w":"…","s":0.12,"e":0.30},…]}
// Relative audio paths resolve against the manifest's directory; all audio is
// resampled to `target_rate`. Entries without "words" get the approximate
// splitter and a diagnostic.
inline UtterancePool load_pool(const std::filesystem::path& manifest_path, int target_rate,
                               Diagnostics* diags = nullptr) {
    std::ifstream in(manifest_path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + manifest_path.string());
    const std::filesystem::path base = manifest_path.parent_path();

    UtterancePool pool;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string origin = manifest_path.string() + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::BadManifest, origin + ": " + e.what());
        }
        if (!j.contains("audio") || !j.contains("speaker") || !j.contains("text"))
            throw Error(ErrorKind::BadManifest, origin + ": need audio, speaker, text fields");

        AlignedUtterance u;
        u.speaker_key = j["speaker"].get<std::string>();
        u.text = j["text"].get<std::string>();
        std::filesystem::path audio_path = j["audio"].get<std::string>();
        if (audio_path.is_relative()) audio_path = base / audio_path;
        u.audio = resample(read_wav(audio_path), target_rate);
        u.sep = detail::contains_space(u.text) ? " " : "";

        if (j.contains("words") && j["words"].is_array() && !j["words"].empty()) {
            for (const auto& wj : j["words"]) {
                WordSpan w;
                w.text = wj.at("w").get<std::string>();
                w.start = wj.at("s").get<double>();
                w.end = wj.at("e").get<double>();
                u.words.push_back(std::move(w));
            }
        } else {
            u.words = detail::approximate_words(u.text, u.audio.duration());
            diag(diags, "approx-alignment",
                 origin + ": no word alignment, splitting by character count");
        }
        if (u.words.empty())
            throw Error(ErrorKind::EmptyUtterance, origin + ": utterance has no words");
        detail::validate_words(u, origin);
        if (u.canonical_text() != u.text)
            diag(diags, "text-word-mismatch",
                 origin + ": joined word texts differ from text field; using word texts");
        pool.add(std::move(u));
    }
    if (pool.utterances.empty())
        throw Error(ErrorKind::BadManifest, manifest_path.string() + ": empty manifest");
    return pool;
}

}  // namespace sats
