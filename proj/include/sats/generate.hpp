#pragma once

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sats/rng.hpp"
#include "sats/serialize.hpp"
#include "sats/simulator.hpp"

namespace sats {

enum class ReverbMode { None, Synthetic, Files };

struct GenerateOptions {
    std::vector<AudioBuffer> noise;  // empty = no augmentation stage
    std::vector<AudioBuffer> rirs;   // used when reverb == Files
    ReverbMode reverb = ReverbMode::Synthetic;
    int threads = 1;
    bool write_clean = false;  // also keep the pre-noise mixture on disk
};

// One fully synthesized dialogue, before any file is written.
struct Dialogue {
    Timeline timeline;
    Transcript reference;
    AudioBuffer audio;                  // what gets written
    std::optional<AudioBuffer> clean;   // pre-noise mixture when augmented
    std::optional<double> snr_db;
    std::uint64_t seed = 0;
};

// Deterministic per-index synthesis: the dialogue at `index` depends only on
// (pool, cfg, opts, index).
inline Dialogue synthesize_dialogue(const UtterancePool& pool, const SimConfig& cfg,
                                    const GenerateOptions& opts, std::uint64_t index) {
    Dialogue d;
    d.seed = derive_seed(cfg.seed, index);
    Rng rng(d.seed);

    DialoguePlan plan = plan_dialogue(pool, cfg, rng);
    plan.timeline.rng_seed = d.seed;
    d.timeline = cfg.snap_window > 0.0 ? snap_boundaries(plan, pool, cfg)
                                       : std::move(plan.timeline);

    RenderedDialogue rendered = render_mixture(d.timeline, pool, cfg);
    d.reference = std::move(rendered.reference);

    if (!opts.noise.empty()) {
        const auto& noise = opts.noise[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(opts.noise.size()) - 1))];
        std::optional<AudioBuffer> rir;
        if (opts.reverb == ReverbMode::Synthetic) {
            rir = synthetic_rir(cfg.sample_rate, rng);
        } else if (opts.reverb == ReverbMode::Files && !opts.rirs.empty()) {
            rir = opts.rirs[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(opts.rirs.size()) - 1))];
        }
        AugmentResult aug = augment(rendered.audio, noise, rir, d.timeline, cfg, rng);
        d.audio = std::move(aug.audio);
        d.clean = std::move(aug.clean);
        d.snr_db = aug.realized_snr_db;
    } else {
        d.audio = std::move(rendered.audio);
    }
    return d;
}

struct ManifestEntry {
    std::string audio;
    std::string ref;
    std::string timeline;
    std::optional<double> snr_db;
    int num_speakers = 0;
};

inline Json to_json(const ManifestEntry& e) {
    Json j;
    j["audio"] = e.audio;
    j["ref"] = e.ref;
    j["timeline"] = e.timeline;
    if (e.snr_db)
        j["snr_db"] = *e.snr_db;
    else
        j["snr_db"] = nullptr;
    j["num_speakers"] = e.num_speakers;
    return j;
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace detail

// Synthesizes `n` dialogues into `out_dir`: per dialogue a WAV, a long-format
// reference text, a timeline JSON sidecar and an RTTM file, plus one
// manifest.jsonl. Dialogues are independent across indices, so generation is
// parallel over a shared index counter; the manifest is assembled in index
// order afterwards.
inline std::vector<ManifestEntry> generate(const UtterancePool& pool, const SimConfig& cfg,
                                           std::uint64_t n,
                                           const std::filesystem::path& out_dir,
                                           const GenerateOptions& opts = {}) {
    std::filesystem::create_directories(out_dir);
    std::vector<ManifestEntry> entries(n);

    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    const auto worker = [&] {
        for (;;) {
            const std::uint64_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                char name[32];
                std::snprintf(name, sizeof(name), "mix_%05llu",
                              static_cast<unsigned long long>(i));
                const Dialogue d = synthesize_dialogue(pool, cfg, opts, i);
                const std::string base = name;
                write_wav(out_dir / (base + ".wav"), d.audio);
                if (opts.write_clean && d.clean)
                    write_wav(out_dir / (base + ".clean.wav"), *d.clean);
                detail::write_text_file(out_dir / (base + ".txt"),
                                        emit(d.reference, TranscriptFormat::Long) + "\n");
                detail::write_text_file(out_dir / (base + ".json"),
                                        to_json(d.timeline).dump(2) + "\n");
                detail::write_text_file(out_dir / (base + ".rttm"), render_rttm(d.timeline, base));
                entries[i] = ManifestEntry{base + ".wav", base + ".txt", base + ".json",
                                           d.snr_db, d.timeline.num_speakers()};
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };

    const int threads = std::max(1, opts.threads);
    if (threads == 1 || n <= 1) {
        worker();
    } else {
        std::vector<std::thread> workers;
        for (int t = 0; t < threads; ++t) workers.emplace_back(worker);
        for (auto& w : workers) w.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::string manifest;
    for (const auto& e : entries) manifest += to_json(e).dump() + "\n";
    detail::write_text_file(out_dir / "manifest.jsonl", manifest);
    return entries;
}

}  // namespace sats
