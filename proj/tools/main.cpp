// sats-kit: scoring, normalization, simulation, dataset statistics, and
// comparison-table rendering for speaker-attributed transcripts.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sats/generate.hpp"
#include "sats/metrics.hpp"
#include "sats/normalizer.hpp"
#include "sats/pool.hpp"
#include "sats/serialize.hpp"
#include "sats/simulator.hpp"
#include "sats/transcript.hpp"

namespace fs = std::filesystem;
using sats::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;  // scoring/validation failure
constexpr int kExitUsage = 2;

int resolve_threads() {
    if (const char* env = std::getenv("SATS_KIT_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sats::Error(sats::ErrorKind::IoError, "cannot open " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sats::Error(sats::ErrorKind::IoError, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
    return buf;
}

// Column padding by code points, not bytes (labels carry non-ASCII).
std::size_t display_width(const std::string& s) { return sats::uni::decode_utf8(s).size(); }

std::string pad(const std::string& s, std::size_t w) {
    const std::size_t len = display_width(s);
    return s + std::string(w > len ? w - len : 0, ' ');
}

std::string rpad(const std::string& s, std::size_t w) {
    const std::size_t len = display_width(s);
    return std::string(w > len ? w - len : 0, ' ') + s;
}

void print_diagnostics(const sats::Diagnostics& diags, const std::string& prefix) {
    for (const auto& d : diags)
        std::cerr << prefix << ": " << d.code << ": " << d.message << "\n";
}

// ─── score ───────────────────────────────────────────────────────────────────

struct EvalRecord {
    std::string id;
    fs::path ref_path;
    fs::path hyp_path;
    std::string format = "auto";  // auto | short | long
};

std::vector<EvalRecord> load_eval_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw sats::Error(sats::ErrorKind::IoError, "cannot open " + path.string());
    const fs::path base = path.parent_path();
    std::vector<EvalRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw sats::Error(sats::ErrorKind::BadManifest,
                              path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        EvalRecord r;
        r.id = j.value("id", "record-" + std::to_string(line_no));
        const std::string ref = j.contains("ref_path") ? j["ref_path"].get<std::string>()
                                                       : j.value("ref", "");
        const std::string hyp = j.contains("hyp_path") ? j["hyp_path"].get<std::string>()
                                                       : j.value("hyp", "");
        if (ref.empty() || hyp.empty())
            throw sats::Error(sats::ErrorKind::BadManifest,
                              path.string() + ":" + std::to_string(line_no) +
                                  ": need ref_path and hyp_path");
        r.ref_path = fs::path(ref).is_relative() ? base / ref : fs::path(ref);
        r.hyp_path = fs::path(hyp).is_relative() ? base / hyp : fs::path(hyp);
        r.format = j.value("format", "auto");
        records.push_back(std::move(r));
    }
    if (records.empty())
        throw sats::Error(sats::ErrorKind::EmptyCorpus, path.string() + ": no records");
    return records;
}

// The scoring pipeline: markup normalization on the raw string, then the
// short-form parse (long-form timestamps are swept out by normalization).
// When the input is long-form and --strict is set, the long parser runs
// first as a structural validation pass.
sats::Transcript load_scorable(const fs::path& path, const std::string& format, bool strict,
                               sats::Diagnostics* diags) {
    const std::string raw = read_file(path);
    if (!sats::uni::is_valid_utf8(raw))
        throw sats::Error(sats::ErrorKind::IoError, path.string() + ": not valid UTF-8");
    const sats::TranscriptFormat detected =
        format == "short"  ? sats::TranscriptFormat::Short
        : format == "long" ? sats::TranscriptFormat::Long
                           : sats::detect_format(raw);
    if (strict && detected == sats::TranscriptFormat::Long)
        sats::parse_long(raw, diags);  // structural validation only
    return sats::parse_short(sats::normalize(raw), diags);
}

int cmd_score(const fs::path& manifest, bool strict, bool macro, const std::string& json_out,
              const std::string& dataset, bool per_record, sats::NormalizationOptions opts) {
    const std::vector<EvalRecord> records = load_eval_manifest(manifest);

    struct Row {
        bool ok = false;
        std::string id;
        std::string error;
        sats::Diagnostics diags;
        sats::ScoreReport report;
    };
    std::vector<Row> rows(records.size());

    const int threads =
        std::min<int>(resolve_threads(), static_cast<int>(records.size()));
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= records.size()) return;
            Row& row = rows[i];
            row.id = records[i].id;
            try {
                const sats::Transcript ref =
                    load_scorable(records[i].ref_path, records[i].format, strict, &row.diags);
                const sats::Transcript hyp =
                    load_scorable(records[i].hyp_path, records[i].format, strict, &row.diags);
                row.report = sats::score_record(ref, hyp, opts);
                row.ok = true;
            } catch (const sats::Error& e) {
                row.error = e.what();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // diagnostics and errors surface in record order regardless of thread count
    std::vector<sats::ScoreReport> ok_reports;
    std::size_t failures = 0;
    for (const auto& row : rows) {
        print_diagnostics(row.diags, row.id);
        if (row.ok) {
            ok_reports.push_back(row.report);
        } else {
            ++failures;
            std::cerr << "error: record " << row.id << ": " << row.error << "\n";
        }
    }
    if (strict && failures > 0) return kExitFailure;
    if (ok_reports.empty()) {
        std::cerr << "error: no scorable records\n";
        return kExitFailure;
    }

    const sats::PooledScores pooled = sats::pool_reports(ok_reports);
    const sats::MacroScores macros = sats::macro_average(ok_reports);

    if (per_record) {
        std::printf("%s %s %s %s\n", pad("Record", 24).c_str(), rpad("CER", 10).c_str(),
                    rpad("cpCER", 10).c_str(), rpad("Δcp", 10).c_str());
        for (const auto& row : rows) {
            if (!row.ok) continue;
            std::printf("%s %s %s %s\n", pad(row.id, 24).c_str(),
                        rpad(format_percent(row.report.cer), 10).c_str(),
                        rpad(format_percent(row.report.cpcer), 10).c_str(),
                        rpad(format_percent(row.report.delta_cp), 10).c_str());
        }
        std::printf("\n");
    }
    std::printf("records scored: %zu", ok_reports.size());
    if (failures > 0) std::printf(" (skipped: %zu)", failures);
    std::printf("\n");
    const auto metric_row = [&](const char* name, double pooled_v) {
        std::printf("%s %s\n", pad(name, 16).c_str(), rpad(format_percent(pooled_v), 10).c_str());
    };
    std::printf("%s %s\n", pad("Metric", 16).c_str(), rpad("Pooled", 10).c_str());
    metric_row("CER (%)", pooled.cer);
    metric_row("cpCER (%)", pooled.cpcer);
    metric_row("Δcp (%)", pooled.delta_cp);
    if (macro) {
        metric_row("CER macro (%)", macros.cer);
        metric_row("cpCER macro (%)", macros.cpcer);
        metric_row("Δcp macro (%)", macros.delta_cp);
    }

    if (!json_out.empty()) {
        Json j;
        if (!dataset.empty()) j["dataset"] = dataset;
        j["pooled"] = sats::to_json(pooled);
        if (macro)
            j["macro"] = Json{{"cer", macros.cer},
                              {"cpcer", macros.cpcer},
                              {"delta_cp", macros.delta_cp}};
        Json jrecords = Json::array();
        for (const auto& row : rows) {
            Json jr;
            jr["id"] = row.id;
            if (row.ok) {
                jr.update(sats::to_json(row.report));
            } else {
                jr["error"] = row.error;
            }
            jrecords.push_back(std::move(jr));
        }
        j["records"] = std::move(jrecords);
        write_file(json_out, j.dump(2) + "\n");
    }
    return kExitOk;
}

// ─── simulate ────────────────────────────────────────────────────────────────

std::vector<sats::AudioBuffer> load_audio_set(const fs::path& path, int rate) {
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& e : fs::directory_iterator(path))
            if (e.path().extension() == ".wav") files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    std::vector<sats::AudioBuffer> out;
    for (const auto& f : files) out.push_back(sats::resample(sats::read_wav(f), rate));
    if (out.empty())
        throw sats::Error(sats::ErrorKind::BadManifest, path.string() + ": no .wav files");
    return out;
}

int cmd_simulate(const fs::path& pool_path, const std::string& config_path, std::uint64_t n,
                 const fs::path& out_dir, std::optional<std::uint64_t> seed,
                 const std::string& noise_path, const std::string& rir_path,
                 const std::string& reverb_mode, bool write_clean) {
    sats::SimConfig cfg;
    if (!config_path.empty()) {
        Json j;
        try {
            j = Json::parse(read_file(config_path));
        } catch (const nlohmann::json::exception& e) {
            throw sats::Error(sats::ErrorKind::BadManifest,
                              config_path + ": " + std::string(e.what()));
        }
        cfg = sats::sim_config_from_json(j);
    }
    if (seed) cfg.seed = *seed;

    sats::Diagnostics diags;
    const sats::UtterancePool pool = sats::load_pool(pool_path, cfg.sample_rate, &diags);
    print_diagnostics(diags, pool_path.string());

    sats::GenerateOptions opts;
    opts.threads = resolve_threads();
    opts.write_clean = write_clean;
    if (!noise_path.empty()) opts.noise = load_audio_set(noise_path, cfg.sample_rate);
    if (!rir_path.empty()) {
        opts.rirs = load_audio_set(rir_path, cfg.sample_rate);
        opts.reverb = sats::ReverbMode::Files;
    }
    if (reverb_mode == "none")
        opts.reverb = sats::ReverbMode::None;
    else if (reverb_mode == "synthetic")
        opts.reverb = sats::ReverbMode::Synthetic;
    else if (reverb_mode == "files" && opts.rirs.empty())
        throw sats::Error(sats::ErrorKind::BadManifest, "--reverb files requires --rir");

    const auto entries = sats::generate(pool, cfg, n, out_dir, opts);
    std::printf("wrote %zu dialogues to %s\n", entries.size(), out_dir.string().c_str());
    return kExitOk;
}

// ─── stats ───────────────────────────────────────────────────────────────────

int cmd_stats(const fs::path& input) {
    fs::path manifest = input;
    std::string dataset_name = input.filename().string();
    if (fs::is_directory(input)) {
        manifest = input / "manifest.jsonl";
    } else {
        dataset_name = input.parent_path().filename().string();
    }
    if (!fs::exists(manifest))
        throw sats::Error(sats::ErrorKind::EmptyCorpus,
                          "no manifest at " + manifest.string());
    const fs::path base = manifest.parent_path();

    std::ifstream in(manifest);
    std::string line;
    std::size_t count = 0;
    double dur_min = 0.0, dur_max = 0.0, dur_sum = 0.0;
    int spk_min = 0, spk_max = 0;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw sats::Error(sats::ErrorKind::BadManifest,
                              manifest.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        std::optional<double> duration;
        std::optional<int> speakers;
        if (j.contains("num_speakers")) speakers = j["num_speakers"].get<int>();
        if (j.contains("timeline")) {
            const fs::path tl_path = base / j["timeline"].get<std::string>();
            if (fs::exists(tl_path)) {
                const sats::Timeline tl =
                    sats::timeline_from_json(Json::parse(read_file(tl_path)));
                duration = tl.total_duration();
                if (!speakers) speakers = tl.num_speakers();
            }
        }
        if (!duration && j.contains("audio")) {
            const fs::path wav_path = base / j["audio"].get<std::string>();
            if (fs::exists(wav_path)) duration = sats::read_wav(wav_path).duration();
        }
        if ((!duration || !speakers) && j.contains("ref")) {
            const fs::path ref_path = base / j["ref"].get<std::string>();
            if (fs::exists(ref_path)) {
                const sats::Transcript t = sats::parse_long(read_file(ref_path));
                if (!duration && !t.segments.empty()) duration = t.segments.back().end;
                if (!speakers) {
                    std::vector<int> ids;
                    for (const auto& seg : t.segments) ids.push_back(seg.speaker.index);
                    std::sort(ids.begin(), ids.end());
                    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
                    speakers = static_cast<int>(ids.size());
                }
            }
        }
        if (!duration || !speakers)
            throw sats::Error(sats::ErrorKind::MissingMetadata,
                              manifest.string() + ":" + std::to_string(line_no) +
                                  ": cannot determine duration and speaker count");
        ++count;
        dur_sum += *duration;
        if (count == 1) {
            dur_min = dur_max = *duration;
            spk_min = spk_max = *speakers;
        } else {
            dur_min = std::min(dur_min, *duration);
            dur_max = std::max(dur_max, *duration);
            spk_min = std::min(spk_min, *speakers);
            spk_max = std::max(spk_max, *speakers);
        }
    }
    if (count == 0)
        throw sats::Error(sats::ErrorKind::EmptyCorpus, manifest.string() + ": no records");

    std::printf("%-16s %-22s %-20s %-20s\n", "Dataset", "Duration Range (s)",
                "Avg. Duration (s)", "Number of Speakers");
    char range[64], avg[32], spk[32];
    std::snprintf(range, sizeof(range), "%.3f -- %.3f", dur_min, dur_max);
    std::snprintf(avg, sizeof(avg), "%.3f", dur_sum / static_cast<double>(count));
    std::snprintf(spk, sizeof(spk), "%d -- %d", spk_min, spk_max);
    std::printf("%-16s %-22s %-20s %-20s\n", dataset_name.c_str(), range, avg, spk);
    std::printf("records: %zu\n", count);
    return kExitOk;
}

// ─── normalize ───────────────────────────────────────────────────────────────

int cmd_normalize(const std::string& file) {
    std::string input;
    if (file.empty()) {
        input.assign((std::istreambuf_iterator<char>(std::cin)),
                     std::istreambuf_iterator<char>());
    } else {
        input = read_file(file);
    }
    const std::string out = sats::normalize(input);
    std::fwrite(out.data(), 1, out.size(), stdout);
    return kExitOk;
}

// ─── report ──────────────────────────────────────────────────────────────────

struct SystemScores {
    std::string label;
    double cer = 0.0, cpcer = 0.0, delta_cp = 0.0;
    std::string dataset;
};

SystemScores load_scores(const fs::path& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw sats::Error(sats::ErrorKind::BadManifest, path.string() + ": " + e.what());
    }
    const Json& src = j.contains("pooled") ? j["pooled"] : j;
    SystemScores s;
    s.label = path.stem().string();
    s.dataset = j.value("dataset", "");
    s.cer = src.at("cer").get<double>();
    s.cpcer = src.at("cpcer").get<double>();
    s.delta_cp = src.at("delta_cp").get<double>();
    return s;
}

int cmd_report(const std::vector<std::string>& score_files, const std::string& labels_csv,
               std::string dataset) {
    std::vector<SystemScores> systems;
    for (const auto& f : score_files) systems.push_back(load_scores(f));
    if (!labels_csv.empty()) {
        std::vector<std::string> labels;
        std::stringstream ss(labels_csv);
        std::string item;
        while (std::getline(ss, item, ',')) labels.push_back(item);
        for (std::size_t i = 0; i < labels.size() && i < systems.size(); ++i)
            systems[i].label = labels[i];
    }
    if (dataset.empty())
        for (const auto& s : systems)
            if (!s.dataset.empty()) {
                dataset = s.dataset;
                break;
            }
    if (dataset.empty()) dataset = "-";

    const std::size_t dataset_w =
        std::max<std::size_t>(std::string("Dataset").size(), display_width(dataset));
    std::vector<std::size_t> col_w(systems.size());
    for (std::size_t i = 0; i < systems.size(); ++i)
        col_w[i] = std::max<std::size_t>(8, display_width(systems[i].label));

    std::ostringstream out;
    out << pad("Dataset", dataset_w) << "  " << pad("Metric", 10);
    for (std::size_t i = 0; i < systems.size(); ++i) out << "  " << rpad(systems[i].label, col_w[i]);
    out << "\n";
    const char* metric_names[3] = {"CER (%)", "cpCER (%)", "Δcp (%)"};
    for (int m = 0; m < 3; ++m) {
        out << pad(m == 0 ? dataset : "", dataset_w) << "  " << pad(metric_names[m], 10);
        for (std::size_t i = 0; i < systems.size(); ++i) {
            const double v = m == 0 ? systems[i].cer : m == 1 ? systems[i].cpcer
                                                              : systems[i].delta_cp;
            out << "  " << rpad(format_percent(v), col_w[i]);
        }
        out << "\n";
    }
    std::fputs(out.str().c_str(), stdout);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speaker-attributed transcript scoring and conversation simulation"};
    app.require_subcommand(1);

    // score
    auto* score = app.add_subcommand("score", "Score hypothesis transcripts against references");
    std::string score_manifest;
    bool strict = false, macro = false, per_record = false;
    bool keep_case = false, keep_punct = false;
    std::string json_out, score_dataset;
    score->add_option("--manifest", score_manifest, "JSONL of {id, ref_path, hyp_path, format}")
        ->required();
    score->add_flag("--strict", strict, "fail on any malformed record");
    score->add_flag("--macro-average", macro, "also report per-record macro averages");
    score->add_flag("--per-record", per_record, "print one row per record");
    score->add_flag("--keep-case", keep_case, "skip lowercasing before scoring");
    score->add_flag("--keep-punctuation", keep_punct, "keep punctuation characters");
    score->add_option("--json", json_out, "write the full report as JSON");
    score->add_option("--dataset", score_dataset, "dataset name embedded in the JSON report");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Synthesize multi-speaker dialogues");
    std::string pool_path, config_path, noise_path, rir_path, reverb_mode;
    std::string out_dir;
    std::uint64_t sim_n = 10;
    std::optional<std::uint64_t> sim_seed;
    bool write_clean = false;
    simulate->add_option("--pool", pool_path, "JSONL utterance manifest")->required();
    simulate->add_option("--config", config_path, "JSON config mirroring the simulator knobs");
    simulate->add_option("-n,--count", sim_n, "number of dialogues");
    simulate->add_option("--out", out_dir, "output directory")->required();
    simulate->add_option("--seed", sim_seed, "override the config seed");
    simulate->add_option("--noise", noise_path, "noise WAV file or directory (enables augmentation)");
    simulate->add_option("--rir", rir_path, "impulse-response WAV directory");
    simulate->add_option("--reverb", reverb_mode, "none | synthetic | files")
        ->check(CLI::IsMember({"none", "synthetic", "files", ""}));
    simulate->add_flag("--keep-clean", write_clean, "also write the pre-noise mixture");

    // stats
    auto* stats = app.add_subcommand("stats", "Dataset duration and speaker statistics");
    std::string stats_path;
    stats->add_option("path", stats_path, "dataset directory or manifest.jsonl")->required();

    // normalize
    auto* normalize = app.add_subcommand("normalize", "Markup normalization, stdin to stdout");
    std::string normalize_file;
    normalize->add_option("file", normalize_file, "input file (default stdin)");

    // report
    auto* report = app.add_subcommand("report", "Side-by-side comparison table from score files");
    std::vector<std::string> score_files;
    std::string labels_csv, report_dataset;
    report->add_option("--scores", score_files, "score JSON files, one per system")
        ->required()
        ->expected(-1);
    report->add_option("--labels", labels_csv, "comma-separated system names");
    report->add_option("--dataset", report_dataset, "dataset name for the table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        sats::NormalizationOptions opts;
        opts.lowercase = !keep_case;
        opts.strip_punctuation = !keep_punct;
        if (score->parsed())
            return cmd_score(score_manifest, strict, macro, json_out, score_dataset, per_record,
                             opts);
        if (simulate->parsed())
            return cmd_simulate(pool_path, config_path, sim_n, out_dir, sim_seed, noise_path,
                                rir_path, reverb_mode, write_clean);
        if (stats->parsed()) return cmd_stats(stats_path);
        if (normalize->parsed()) return cmd_normalize(normalize_file);
        if (report->parsed()) return cmd_report(score_files, labels_csv, report_dataset);
    } catch (const sats::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
