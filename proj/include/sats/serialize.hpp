#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "sats/metrics.hpp"
#include "sats/sim_types.hpp"
#include "sats/transcript.hpp"

namespace sats {

using Json = nlohmann::ordered_json;

// ─── Transcript ──────────────────────────────────────────────────────────────

inline Json to_json(const Transcript& t) {
    Json segs = Json::array();
    for (const auto& seg : t.segments) {
        Json js;
        js["speaker"] = seg.speaker.index;
        js["text"] = seg.text;
        if (seg.start) js["start"] = *seg.start;
        if (seg.end) js["end"] = *seg.end;
        if (!seg.annotations.empty()) {
            Json anns = Json::array();
            for (const auto& a : seg.annotations) {
                Json ja;
                ja["kind"] = to_string(a.kind);
                if (a.payload) ja["payload"] = *a.payload;
                anns.push_back(std::move(ja));
            }
            js["annotations"] = std::move(anns);
        }
        segs.push_back(std::move(js));
    }
    Json out;
    out["segments"] = std::move(segs);
    out["format"] = to_string(t.format);
    return out;
}

inline AnnotationKind annotation_kind_from_string(const std::string& s) {
    if (s == "overlap") return AnnotationKind::Overlap;
    if (s == "insertion") return AnnotationKind::Insertion;
    if (s == "emotion") return AnnotationKind::Emotion;
    if (s == "event") return AnnotationKind::Event;
    throw Error(ErrorKind::BadManifest, "unknown annotation kind: " + s);
}

inline Transcript transcript_from_json(const Json& j) {
    Transcript t;
    t.format = j.value("format", "short") == "long" ? TranscriptFormat::Long
                                                    : TranscriptFormat::Short;
    for (const auto& js : j.at("segments")) {
        Segment seg;
        seg.speaker = SpeakerId{js.at("speaker").get<int>()};
        seg.text = js.at("text").get<std::string>();
        if (js.contains("start")) seg.start = js["start"].get<double>();
        if (js.contains("end")) seg.end = js["end"].get<double>();
        if (js.contains("annotations")) {
            for (const auto& ja : js["annotations"]) {
                Annotation a;
                a.kind = annotation_kind_from_string(ja.at("kind").get<std::string>());
                if (ja.contains("payload")) a.payload = ja["payload"].get<std::string>();
                seg.annotations.push_back(std::move(a));
            }
        }
        t.segments.push_back(std::move(seg));
    }
    return t;
}

// ─── Scores ──────────────────────────────────────────────────────────────────

inline Json to_json(const EditCounts& c) {
    Json j;
    j["substitutions"] = c.substitutions;
    j["deletions"] = c.deletions;
    j["insertions"] = c.insertions;
    j["ref_len"] = c.ref_len;
    return j;
}

inline Json to_json(const Assignment& a) {
    Json pairs = Json::array();
    for (const auto& [r, h] : a.pairs) pairs.push_back(Json::array({r.index, h.index}));
    Json ur = Json::array(), uh = Json::array();
    for (const auto& s : a.unmatched_ref) ur.push_back(s.index);
    for (const auto& s : a.unmatched_hyp) uh.push_back(s.index);
    Json j;
    j["pairs"] = std::move(pairs);
    j["unmatched_ref"] = std::move(ur);
    j["unmatched_hyp"] = std::move(uh);
    j["total_cost"] = a.total_cost;
    return j;
}

inline Json to_json(const ScoreReport& r) {
    Json j;
    j["cer"] = r.cer;
    j["cpcer"] = r.cpcer;
    j["delta_cp"] = r.delta_cp;
    j["assignment"] = to_json(r.assignment);
    j["counts"] = Json{{"cer", to_json(r.cer_counts)}, {"cpcer", to_json(r.cpcer_counts)}};
    return j;
}

inline Json to_json(const PooledScores& p) {
    Json j;
    j["cer"] = p.cer;
    j["cpcer"] = p.cpcer;
    j["delta_cp"] = p.delta_cp;
    j["counts"] = Json{{"cer", to_json(p.cer_counts)}, {"cpcer", to_json(p.cpcer_counts)}};
    return j;
}

// ─── Simulator config ────────────────────────────────────────────────────────

// Flat key-value config document mirroring SimConfig; absent keys keep their
// defaults.
inline SimConfig sim_config_from_json(const Json& j) {
    SimConfig cfg;
    cfg.speakers_min = j.value("speakers_min", cfg.speakers_min);
    cfg.speakers_max = j.value("speakers_max", cfg.speakers_max);
    cfg.seg_count_min = j.value("seg_count_min", cfg.seg_count_min);
    cfg.seg_count_max = j.value("seg_count_max", cfg.seg_count_max);
    cfg.weight_lognorm_mu = j.value("weight_lognorm_mu", cfg.weight_lognorm_mu);
    cfg.weight_lognorm_sigma = j.value("weight_lognorm_sigma", cfg.weight_lognorm_sigma);
    cfg.gap_mean = j.value("gap_mean", cfg.gap_mean);
    cfg.gap_std = j.value("gap_std", cfg.gap_std);
    cfg.overlap_cap = j.value("overlap_cap", cfg.overlap_cap);
    cfg.fade = j.value("fade", cfg.fade);
    cfg.snap_window = j.value("snap_window", cfg.snap_window);
    cfg.snr_min = j.value("snr_min", cfg.snr_min);
    cfg.snr_max = j.value("snr_max", cfg.snr_max);
    cfg.sample_rate = j.value("sample_rate", cfg.sample_rate);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.validate();
    return cfg;
}

inline Json to_json(const SimConfig& cfg) {
    Json j;
    j["speakers_min"] = cfg.speakers_min;
    j["speakers_max"] = cfg.speakers_max;
    j["seg_count_min"] = cfg.seg_count_min;
    j["seg_count_max"] = cfg.seg_count_max;
    j["weight_lognorm_mu"] = cfg.weight_lognorm_mu;
    j["weight_lognorm_sigma"] = cfg.weight_lognorm_sigma;
    j["gap_mean"] = cfg.gap_mean;
    j["gap_std"] = cfg.gap_std;
    j["overlap_cap"] = cfg.overlap_cap;
    j["fade"] = cfg.fade;
    j["snap_window"] = cfg.snap_window;
    j["snr_min"] = cfg.snr_min;
    j["snr_max"] = cfg.snr_max;
    j["sample_rate"] = cfg.sample_rate;
    j["seed"] = cfg.seed;
    return j;
}

// ─── Timeline sidecar ────────────────────────────────────────────────────────

inline Json to_json(const Timeline& tl) {
    Json speakers = Json::array();
    for (const auto& s : tl.speakers) {
        Json js;
        js["id"] = s.id.index;
        js["key"] = s.speaker_key;
        js["utterance"] = s.pool_index;
        speakers.push_back(std::move(js));
    }
    Json placed = Json::array();
    for (const auto& p : tl.placed) {
        Json jp;
        jp["speaker"] = p.speaker.index;
        jp["start"] = p.start_seconds(tl.sample_rate);
        jp["end"] = p.end_seconds(tl.sample_rate);
        jp["start_sample"] = p.start_sample;
        jp["slice_begin"] = p.slice_begin;
        jp["slice_end"] = p.slice_end;
        jp["word_begin"] = p.word_begin;
        jp["word_end"] = p.word_end;
        jp["fade_in"] = p.fade_in;
        jp["fade_out"] = p.fade_out;
        jp["text"] = p.text;
        placed.push_back(std::move(jp));
    }
    Json j;
    j["sample_rate"] = tl.sample_rate;
    j["rng_seed"] = tl.rng_seed;
    j["num_speakers"] = tl.num_speakers();
    j["total_duration"] = tl.total_duration();
    j["speakers"] = std::move(speakers);
    j["placed"] = std::move(placed);
    return j;
}

inline Timeline timeline_from_json(const Json& j) {
    Timeline tl;
    tl.sample_rate = j.at("sample_rate").get<int>();
    tl.rng_seed = j.value("rng_seed", std::uint64_t{0});
    for (const auto& js : j.value("speakers", Json::array())) {
        DrawnSpeaker s;
        s.id = SpeakerId{js.at("id").get<int>()};
        s.speaker_key = js.value("key", "");
        s.pool_index = js.value("utterance", std::size_t{0});
        tl.speakers.push_back(std::move(s));
    }
    for (const auto& jp : j.value("placed", Json::array())) {
        PlacedSegment p;
        p.speaker = SpeakerId{jp.at("speaker").get<int>()};
        p.start_sample = jp.at("start_sample").get<std::int64_t>();
        p.slice_begin = jp.at("slice_begin").get<std::int64_t>();
        p.slice_end = jp.at("slice_end").get<std::int64_t>();
        p.word_begin = jp.value("word_begin", std::size_t{0});
        p.word_end = jp.value("word_end", std::size_t{0});
        p.fade_in = jp.value("fade_in", 0.0);
        p.fade_out = jp.value("fade_out", 0.0);
        p.text = jp.value("text", "");
        tl.placed.push_back(std::move(p));
    }
    return tl;
}

}  // namespace sats
