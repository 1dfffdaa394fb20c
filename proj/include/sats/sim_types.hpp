#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sats/error.hpp"
#include "sats/transcript.hpp"

namespace sats {

// Distribution parameters of the conversation simulator. Every knob the
// sampling recipe exposes lives here so a run is fully described by one
// config plus a pool.
struct SimConfig {
    int speakers_min = 2;
    int speakers_max = 12;
    int seg_count_min = 1;
    int seg_count_max = 8;
    double weight_lognorm_mu = 0.0;
    double weight_lognorm_sigma = 1.0;
    double gap_mean = 0.5;   // seconds; negative draws become overlap
    double gap_std = 1.0;
    double overlap_cap = 0.8;  // fraction of the shorter segment
    double fade = 0.050;       // seconds of equal-power cross-fade
    double snap_window = 0.150;  // seconds searched around each cut; 0 disables
    double snr_min = 0.0;  // dB
    double snr_max = 15.0;
    int sample_rate = 16000;
    std::uint64_t seed = 0;

    void validate() const {
        if (speakers_min < 1 || speakers_max < speakers_min)
            throw Error(ErrorKind::BadManifest, "speaker range invalid");
        if (seg_count_min < 1 || seg_count_max < seg_count_min)
            throw Error(ErrorKind::BadManifest, "segment count range invalid");
        if (!(overlap_cap >= 0.0 && overlap_cap < 1.0))
            throw Error(ErrorKind::BadManifest, "overlap_cap must be in [0, 1)");
        if (snr_min > snr_max) throw Error(ErrorKind::BadManifest, "snr_min > snr_max");
        if (fade < 0.0 || snap_window < 0.0)
            throw Error(ErrorKind::BadManifest, "fade and snap_window must be >= 0");
        if (sample_rate <= 0) throw Error(ErrorKind::BadManifest, "sample_rate must be > 0");
    }
};

// One word run placed on the dialogue timeline. Sample counts are the
// authoritative representation; seconds are derived views. The source slice
// [slice_begin, slice_end) indexes the utterance audio, and
// end - start == slice length (fades act inside the interval).
struct PlacedSegment {
    SpeakerId speaker;
    std::size_t utterance = 0;   // index into the drawn-utterance table
    std::size_t word_begin = 0;  // word-index range within the utterance
    std::size_t word_end = 0;
    std::int64_t slice_begin = 0;  // source audio samples
    std::int64_t slice_end = 0;
    std::int64_t start_sample = 0;  // timeline samples
    std::string text;
    double fade_in = 0.0;  // seconds
    double fade_out = 0.0;

    std::int64_t length_samples() const { return slice_end - slice_begin; }
    std::int64_t end_sample() const { return start_sample + length_samples(); }
    double start_seconds(int rate) const {
        return static_cast<double>(start_sample) / rate;
    }
    double end_seconds(int rate) const {
        return static_cast<double>(end_sample()) / rate;
    }
};

// Which pool utterance each dialogue speaker reads from.
struct DrawnSpeaker {
    SpeakerId id;
    std::string speaker_key;
    std::size_t pool_index = 0;  // index into UtterancePool::utterances
};

struct Timeline {
    std::vector<PlacedSegment> placed;  // sorted by start
    std::vector<DrawnSpeaker> speakers;
    int sample_rate = 16000;
    std::uint64_t rng_seed = 0;

    std::int64_t total_samples() const {
        std::int64_t end = 0;
        for (const auto& p : placed) end = std::max(end, p.end_sample());
        return end;
    }
    double total_duration() const {
        return static_cast<double>(total_samples()) / sample_rate;
    }
    int num_speakers() const { return static_cast<int>(speakers.size()); }
};

// `SPEAKER <file> 1 <start> <dur> <NA> <NA> S<k> <NA> <NA>` per placed segment.
inline std::string render_rttm(const Timeline& tl, const std::string& file_id) {
    std::string out;
    char buf[256];
    for (const auto& p : tl.placed) {
        std::snprintf(buf, sizeof(buf), "SPEAKER %s 1 %.3f %.3f <NA> <NA> S%d <NA> <NA>\n",
                      file_id.c_str(), p.start_seconds(tl.sample_rate),
                      static_cast<double>(p.length_samples()) / tl.sample_rate,
                      p.speaker.index);
        out += buf;
    }
    return out;
}

}  // namespace sats
