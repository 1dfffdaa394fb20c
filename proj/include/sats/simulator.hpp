#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sats/audio.hpp"
#include "sats/error.hpp"
#include "sats/pool.hpp"
#include "sats/rng.hpp"
#include "sats/sim_types.hpp"
#include "sats/transcript.hpp"

namespace sats {

// ─── Utterance partitioning ──────────────────────────────────────────────────

// Splits an utterance into contiguous word runs: segment count uniform over
// [seg_count_min, min(seg_count_max, word_count)], run sizes from normalized
// log-normal weights via largest-remainder rounding with a one-word floor.
inline std::vector<std::pair<std::size_t, std::size_t>> partition_utterance(
    const AlignedUtterance& u, const SimConfig& cfg, Rng& rng) {
    const std::size_t words = u.words.size();
    if (words == 0) throw Error(ErrorKind::EmptyUtterance, "utterance has no words");

    const std::size_t n_max = std::min<std::size_t>(cfg.seg_count_max, words);
    const std::size_t n_min = std::min<std::size_t>(cfg.seg_count_min, n_max);
    const std::size_t n = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(n_min), static_cast<std::int64_t>(n_max)));

    std::vector<double> weights(n);
    double sum = 0.0;
    for (auto& w : weights) {
        w = rng.lognormal(cfg.weight_lognorm_mu, cfg.weight_lognorm_sigma);
        sum += w;
    }

    // Largest-remainder rounding of w_k * words.
    std::vector<std::size_t> counts(n);
    std::vector<std::pair<double, std::size_t>> remainders(n);
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double quota = weights[k] / sum * static_cast<double>(words);
        counts[k] = static_cast<std::size_t>(quota);
        remainders[k] = {quota - static_cast<double>(counts[k]), k};
        assigned += counts[k];
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t r = 0; assigned < words; ++r, ++assigned) counts[remainders[r % n].second]++;

    // One-word floor: move words from the largest run (lowest index on ties).
    for (std::size_t k = 0; k < n; ++k) {
        while (counts[k] == 0) {
            std::size_t donor = 0;
            for (std::size_t d = 1; d < n; ++d)
                if (counts[d] > counts[donor]) donor = d;
            counts[donor]--;
            counts[k]++;
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    ranges.reserve(n);
    std::size_t at = 0;
    for (std::size_t k = 0; k < n; ++k) {
        ranges.emplace_back(at, at + counts[k]);
        at += counts[k];
    }
    return ranges;
}

// ─── Dialogue planning ───────────────────────────────────────────────────────

namespace detail {

inline std::int64_t sample_of(double seconds, int rate) {
    return std::llround(seconds * static_cast<double>(rate));
}

// Allowed overlap between adjacent segments, in samples.
inline std::int64_t overlap_limit(std::int64_t len_a, std::int64_t len_b, double cap) {
    return static_cast<std::int64_t>(
        std::floor(cap * static_cast<double>(std::min(len_a, len_b))));
}

// Initial slice boundaries for an utterance partition: runs meet at the
// midpoint of the inter-word gap; the first run starts at its first word,
// the last ends at its last word.
inline std::vector<std::int64_t> slice_bounds(
    const AlignedUtterance& u, const std::vector<std::pair<std::size_t, std::size_t>>& ranges,
    int rate) {
    std::vector<std::int64_t> bounds;
    bounds.reserve(ranges.size() + 1);
    bounds.push_back(sample_of(u.words[ranges.front().first].start, rate));
    for (std::size_t k = 0; k + 1 < ranges.size(); ++k) {
        const double gap_mid = 0.5 * (u.words[ranges[k].second - 1].end +
                                      u.words[ranges[k + 1].first].start);
        bounds.push_back(sample_of(gap_mid, rate));
    }
    bounds.push_back(sample_of(u.words[ranges.back().second - 1].end, rate));
    const std::int64_t audio_len = static_cast<std::int64_t>(u.audio.samples.size());
    for (auto& b : bounds) b = std::clamp<std::int64_t>(b, 0, audio_len);
    for (std::size_t k = 1; k < bounds.size(); ++k) bounds[k] = std::max(bounds[k], bounds[k - 1]);
    return bounds;
}

// Sequential placement: the first segment starts the timeline at zero; each
// later one sits a Gaussian gap after the previous end, with negative gaps
// realized as overlap up to the cap.
inline void place_segments(std::vector<PlacedSegment>& segs, const std::vector<double>& gaps,
                           double cap) {
    std::int64_t prev_end = 0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (i == 0) {
            segs[i].start_sample = 0;
        } else {
            const double g = gaps[i - 1];
            const std::int64_t len_prev = segs[i - 1].length_samples();
            const std::int64_t len_cur = segs[i].length_samples();
            if (g >= 0.0) {
                segs[i].start_sample = prev_end + static_cast<std::int64_t>(std::llround(g));
            } else {
                const std::int64_t want = static_cast<std::int64_t>(std::llround(-g));
                const std::int64_t ovl = std::min(want, overlap_limit(len_prev, len_cur, cap));
                segs[i].start_sample = prev_end - ovl;
            }
        }
        prev_end = segs[i].end_sample();
    }
}

}  // namespace detail

// Draws the speaker set, partitions one utterance per speaker, and interleaves
// the runs onto a single timeline with speaker alternation and capped overlap.
// Gap draws are recorded in samples so a later boundary snap can re-place the
// same plan.
struct DialoguePlan {
    Timeline timeline;
    std::vector<double> gap_samples;  // realized Gaussian draws, in samples
};

inline DialoguePlan plan_dialogue(const UtterancePool& pool, const SimConfig& cfg, Rng& rng) {
    cfg.validate();
    if (pool.speaker_count() < static_cast<std::size_t>(cfg.speakers_min))
        throw Error(ErrorKind::InsufficientSpeakers,
                    "pool has " + std::to_string(pool.speaker_count()) + " speakers, need >= " +
                        std::to_string(cfg.speakers_min));

    const int k_max = static_cast<int>(
        std::min<std::size_t>(cfg.speakers_max, pool.speaker_count()));
    const int k = static_cast<int>(rng.uniform_int(cfg.speakers_min, k_max));

    DialoguePlan plan;
    Timeline& tl = plan.timeline;
    tl.sample_rate = cfg.sample_rate;

    // One utterance per drawn speaker, partitioned into word runs.
    struct SpeakerState {
        std::size_t pool_index;
        std::vector<std::pair<std::size_t, std::size_t>> ranges;
        std::vector<std::int64_t> bounds;
        std::size_t next_run = 0;
    };
    std::vector<SpeakerState> states;
    const std::vector<std::size_t> speaker_picks =
        rng.sample_indices(pool.speaker_count(), static_cast<std::size_t>(k));
    for (const std::size_t s : speaker_picks) {
        const auto& utt_ids = pool.by_speaker.at(pool.speaker_keys[s]);
        const std::size_t pick = utt_ids[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(utt_ids.size()) - 1))];
        const AlignedUtterance& u = pool.utterances[pick];
        if (u.audio.sample_rate != cfg.sample_rate)
            throw Error(ErrorKind::SampleRateMismatch,
                        "utterance rate " + std::to_string(u.audio.sample_rate) +
                            " != config rate " + std::to_string(cfg.sample_rate));
        SpeakerState st;
        st.pool_index = pick;
        st.ranges = partition_utterance(u, cfg, rng);
        st.bounds = detail::slice_bounds(u, st.ranges, cfg.sample_rate);
        states.push_back(std::move(st));
    }

    // Interleave: uniform draw among speakers with runs left, excluding the
    // previous speaker whenever an alternative exists.
    std::vector<PlacedSegment> segs;
    int prev = -1;
    for (;;) {
        std::vector<int> candidates;
        for (int s = 0; s < k; ++s)
            if (states[s].next_run < states[s].ranges.size()) candidates.push_back(s);
        if (candidates.empty()) break;
        if (candidates.size() > 1)
            candidates.erase(std::remove(candidates.begin(), candidates.end(), prev),
                             candidates.end());
        const int s = candidates[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1))];
        SpeakerState& st = states[s];
        const auto [wa, wb] = st.ranges[st.next_run];
        const AlignedUtterance& u = pool.utterances[st.pool_index];

        PlacedSegment seg;
        seg.speaker = SpeakerId{s + 1};  // provisional; remapped below
        seg.utterance = static_cast<std::size_t>(s);
        seg.word_begin = wa;
        seg.word_end = wb;
        seg.slice_begin = st.bounds[st.next_run];
        seg.slice_end = st.bounds[st.next_run + 1];
        seg.text = u.join_words(wa, wb);
        seg.fade_in = cfg.fade;
        seg.fade_out = cfg.fade;
        segs.push_back(std::move(seg));
        st.next_run++;
        prev = s;
    }

    plan.gap_samples.reserve(segs.size() > 0 ? segs.size() - 1 : 0);
    for (std::size_t i = 1; i < segs.size(); ++i)
        plan.gap_samples.push_back(rng.normal(cfg.gap_mean, cfg.gap_std) *
                                   static_cast<double>(cfg.sample_rate));
    detail::place_segments(segs, plan.gap_samples, cfg.overlap_cap);

    // Speaker ids by first appearance on the timeline.
    std::vector<int> id_of(k, 0);
    int next_id = 1;
    for (auto& seg : segs) {
        const int s = seg.speaker.index - 1;
        if (id_of[s] == 0) id_of[s] = next_id++;
        seg.speaker = SpeakerId{id_of[s]};
    }
    for (int s = 0; s < k; ++s) {
        if (id_of[s] == 0) id_of[s] = next_id++;  // speaker drew zero runs; keep it listed
        tl.speakers.push_back(DrawnSpeaker{SpeakerId{id_of[s]},
                                           pool.speaker_keys[speaker_picks[s]],
                                           states[s].pool_index});
    }
    std::sort(tl.speakers.begin(), tl.speakers.end(),
              [](const DrawnSpeaker& a, const DrawnSpeaker& b) { return a.id < b.id; });
    for (auto& seg : segs) seg.utterance = static_cast<std::size_t>(seg.speaker.index - 1);
    tl.placed = std::move(segs);
    return plan;
}

// ─── Boundary snapping ───────────────────────────────────────────────────────

// Lowest-RMS point near `cut`: candidates are the cut itself plus every
// 25 ms / 10 ms-hop frame center inside [cut - window, cut + window],
// clamped to the signal. Ties prefer the smallest move, then the earliest
// center.
inline std::int64_t snap_cut_point(const AudioBuffer& audio, std::int64_t cut,
                                   std::int64_t window) {
    const std::int64_t n = static_cast<std::int64_t>(audio.samples.size());
    const std::int64_t frame = detail::sample_of(0.025, audio.sample_rate);
    const std::int64_t hop = detail::sample_of(0.010, audio.sample_rate);
    const std::int64_t half = frame / 2;
    const std::int64_t lo = std::max<std::int64_t>(0, cut - window);
    const std::int64_t hi = std::min(n, cut + window);

    std::int64_t best = std::clamp<std::int64_t>(cut, 0, n);
    double best_rms = rms_around(audio.samples, best, half);
    std::int64_t k = std::max<std::int64_t>(0, (lo - half) / hop);
    for (;; ++k) {
        const std::int64_t center = k * hop + half;
        if (center > hi) break;
        if (center < lo) continue;
        const double r = rms_around(audio.samples, center, half);
        const bool better =
            r < best_rms ||
            (r == best_rms && (std::llabs(center - cut) < std::llabs(best - cut) ||
                               (std::llabs(center - cut) == std::llabs(best - cut) &&
                                center < best)));
        if (better) {
            best = center;
            best_rms = r;
        }
    }
    return best;
}

// Moves every interior run boundary to a nearby low-energy point, then
// re-places the timeline with the originally drawn gaps (overlaps re-capped
// against the adjusted durations). Word-to-segment text assignment is
// untouched.
inline Timeline snap_boundaries(const DialoguePlan& plan, const UtterancePool& pool,
                                const SimConfig& cfg) {
    Timeline tl = plan.timeline;
    const std::int64_t window = detail::sample_of(cfg.snap_window, cfg.sample_rate);
    if (window <= 0 || tl.placed.empty()) return tl;

    // Collect each drawn speaker's run boundaries in run order.
    const std::size_t k = tl.speakers.size();
    std::vector<std::vector<PlacedSegment*>> runs(k);
    for (auto& seg : tl.placed)
        runs[static_cast<std::size_t>(seg.speaker.index - 1)].push_back(&seg);

    for (std::size_t s = 0; s < k; ++s) {
        const AudioBuffer& audio = pool.utterances[tl.speakers[s].pool_index].audio;
        auto& segs = runs[s];
        for (std::size_t r = 0; r + 1 < segs.size(); ++r) {
            const std::int64_t cut = segs[r]->slice_end;
            std::int64_t snapped = snap_cut_point(audio, cut, window);
            // Keep the per-utterance slice partition ordered.
            snapped = std::clamp(snapped, segs[r]->slice_begin, segs[r + 1]->slice_end);
            segs[r]->slice_end = snapped;
            segs[r + 1]->slice_begin = snapped;
        }
    }
    detail::place_segments(tl.placed, plan.gap_samples, cfg.overlap_cap);
    return tl;
}

// ─── Rendering ───────────────────────────────────────────────────────────────

namespace detail {

// Equal-power cross-fade gains: sin ramp in, matching cos-shaped ramp out;
// squared gains sum to one across a fade seam.
inline double fade_gain(std::int64_t pos_from_edge, std::int64_t fade_len) {
    if (fade_len <= 0 || pos_from_edge >= fade_len - 1) return 1.0;
    return std::sin(1.5707963267948966 * static_cast<double>(pos_from_edge + 1) /
                    static_cast<double>(fade_len));
}

}  // namespace detail

// Mixes every placed segment into one waveform and emits the long-format
// reference transcript. The mix runs to the last segment end plus one fade
// length of silence.
struct RenderedDialogue {
    AudioBuffer audio;
    Transcript reference;
};

inline RenderedDialogue render_mixture(const Timeline& tl, const UtterancePool& pool,
                                       const SimConfig& cfg) {
    RenderedDialogue out;
    out.audio.sample_rate = cfg.sample_rate;
    const std::int64_t fade_len = detail::sample_of(cfg.fade, cfg.sample_rate);
    out.audio.samples.assign(static_cast<std::size_t>(tl.total_samples() + fade_len), 0.0f);
    out.reference.format = TranscriptFormat::Long;

    for (const auto& seg : tl.placed) {
        const std::size_t sp = static_cast<std::size_t>(seg.speaker.index - 1);
        const AudioBuffer& src = pool.utterances[tl.speakers[sp].pool_index].audio;
        if (src.sample_rate != cfg.sample_rate)
            throw Error(ErrorKind::SampleRateMismatch, "source utterance rate mismatch");
        const std::int64_t len = seg.length_samples();
        const std::int64_t fin = std::llround(seg.fade_in * cfg.sample_rate);
        const std::int64_t fout = std::llround(seg.fade_out * cfg.sample_rate);
        for (std::int64_t i = 0; i < len; ++i) {
            const double g =
                detail::fade_gain(i, fin) * detail::fade_gain(len - 1 - i, fout);
            const float x = src.samples[static_cast<std::size_t>(seg.slice_begin + i)];
            out.audio.samples[static_cast<std::size_t>(seg.start_sample + i)] +=
                static_cast<float>(g * x);
        }
        Segment ref_seg;
        ref_seg.speaker = seg.speaker;
        ref_seg.text = seg.text;
        ref_seg.start = seg.start_seconds(cfg.sample_rate);
        ref_seg.end = seg.end_seconds(cfg.sample_rate);
        out.reference.segments.push_back(std::move(ref_seg));
    }
    return out;
}

// ─── Augmentation ────────────────────────────────────────────────────────────

struct AugmentResult {
    AudioBuffer audio;     // speech (reverberated if rir given) + scaled noise
    AudioBuffer clean;     // the speech signal the SNR was measured against
    double target_snr_db = 0.0;
    double realized_snr_db = 0.0;
};

namespace detail {

inline double mean_power_masked(const std::vector<float>& x, const std::vector<char>& mask) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < x.size() && i < mask.size(); ++i) {
        if (!mask[i]) continue;
        acc += static_cast<double>(x[i]) * x[i];
        ++count;
    }
    return count == 0 ? 0.0 : acc / static_cast<double>(count);
}

}  // namespace detail

// Speech-active sample mask: any placed-segment support.
inline std::vector<char> speech_mask(const Timeline& tl, std::size_t length) {
    std::vector<char> mask(length, 0);
    for (const auto& seg : tl.placed) {
        const std::int64_t a = std::max<std::int64_t>(0, seg.start_sample);
        const std::int64_t b =
            std::min<std::int64_t>(static_cast<std::int64_t>(length), seg.end_sample());
        for (std::int64_t i = a; i < b; ++i) mask[static_cast<std::size_t>(i)] = 1;
    }
    return mask;
}

// Optional reverb, then additive noise scaled to a uniformly drawn target
// SNR. Powers are measured over speech-active samples only, so silence-heavy
// timelines do not bias the ratio. Noise is tiled from a random offset to
// cover the mixture.
inline AugmentResult augment(const AudioBuffer& mix, const AudioBuffer& noise,
                             const std::optional<AudioBuffer>& rir, const Timeline& tl,
                             const SimConfig& cfg, Rng& rng) {
    if (noise.sample_rate != mix.sample_rate)
        throw Error(ErrorKind::SampleRateMismatch, "noise sample rate differs from mixture");
    if (noise.samples.empty()) throw Error(ErrorKind::SilentNoise, "noise buffer is empty");

    AugmentResult out;
    out.clean.sample_rate = mix.sample_rate;
    if (rir && !rir->samples.empty()) {
        if (rir->sample_rate != mix.sample_rate)
            throw Error(ErrorKind::SampleRateMismatch, "rir sample rate differs from mixture");
        const std::vector<float> h = prepare_rir(rir->samples);
        if (h.empty()) throw Error(ErrorKind::SilentNoise, "impulse response is all zeros");
        std::vector<float> wet = convolve(mix.samples, h);
        wet.resize(mix.samples.size());  // keep timeline-aligned length
        out.clean.samples = std::move(wet);
    } else {
        out.clean.samples = mix.samples;
    }

    const std::vector<char> mask = speech_mask(tl, out.clean.samples.size());
    const double p_speech = detail::mean_power_masked(out.clean.samples, mask);
    if (p_speech <= 0.0)
        throw Error(ErrorKind::SilentSpeech, "no speech energy under the active mask");

    // Tile noise from a random offset.
    std::vector<float> tiled(out.clean.samples.size());
    const std::size_t offset = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(noise.samples.size()) - 1));
    for (std::size_t i = 0; i < tiled.size(); ++i)
        tiled[i] = noise.samples[(offset + i) % noise.samples.size()];
    const double p_noise = detail::mean_power_masked(tiled, mask);
    if (p_noise <= 0.0)
        throw Error(ErrorKind::SilentNoise, "noise has no energy under the active mask");

    out.target_snr_db = rng.uniform_real(cfg.snr_min, cfg.snr_max);
    const double gain = std::sqrt(p_speech / (p_noise * std::pow(10.0, out.target_snr_db / 10.0)));

    out.audio.sample_rate = mix.sample_rate;
    out.audio.samples.resize(out.clean.samples.size());
    for (std::size_t i = 0; i < out.audio.samples.size(); ++i)
        out.audio.samples[i] =
            out.clean.samples[i] + static_cast<float>(gain * tiled[i]);

    const double p_scaled = gain * gain * p_noise;
    out.realized_snr_db = 10.0 * std::log10(p_speech / p_scaled);
    return out;
}

// Synthetic room impulse response: unit direct path plus exponentially
// decaying Gaussian tail with T60 drawn from [0.2, 0.8] s.
inline AudioBuffer synthetic_rir(int sample_rate, Rng& rng) {
    AudioBuffer out;
    out.sample_rate = sample_rate;
    const double t60 = rng.uniform_real(0.2, 0.8);
    const std::size_t len = static_cast<std::size_t>(detail::sample_of(t60, sample_rate));
    out.samples.resize(std::max<std::size_t>(len, 1));
    out.samples[0] = 1.0f;
    const double decay = std::log(1000.0) / (t60 * sample_rate);  // -60 dB at T60
    for (std::size_t i = 1; i < out.samples.size(); ++i) {
        const double env = std::exp(-decay * static_cast<double>(i));
        out.samples[i] = static_cast<float>(0.3 * rng.normal(0.0, 1.0) * env);
    }
    return out;
}

}  // namespace sats
