#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "support/run_cmd.hpp"
#include "support/synth.hpp"

namespace fs = std::filesystem;
using testutil::run_cmd;

namespace {

const std::string kBin = SATS_KIT_BIN;

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("sats_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("cli normalize is byte-exact and idempotent") {
    const fs::path dir = fresh_dir("normalize");
    write(dir / "in.txt", "[S1]你好 (笑声)[S2]好的");
    auto res = run_cmd(kBin + " normalize " + (dir / "in.txt").string());
    CHECK(res.exit_code == 0);
    CHECK(res.output == "[S1]你好[S2]好的");

    write(dir / "pass1.txt", res.output);
    auto res2 = run_cmd(kBin + " normalize " + (dir / "pass1.txt").string());
    CHECK(res2.output == res.output);

    write(dir / "empty.txt", "");
    auto res3 = run_cmd(kBin + " normalize " + (dir / "empty.txt").string());
    CHECK(res3.exit_code == 0);
    CHECK(res3.output.empty());

    // stdin path
    auto res4 = run_cmd("printf '%s' '[S1]<ovl>好的' | " + kBin + " normalize");
    CHECK(res4.output == "[S1]好的");

    // paired angle tags keep their content, trailing whitespace survives byte-exact
    write(dir / "in2.txt", "[S1]<emotion>开心</emotion>说<ovl>");
    CHECK(run_cmd(kBin + " normalize " + (dir / "in2.txt").string()).output == "[S1]开心说");
    write(dir / "in3.txt", "[00:00:01.000] [S01] 大家好 [event] [00:00:03.500]");
    CHECK(run_cmd(kBin + " normalize " + (dir / "in3.txt").string()).output ==
          " [S01] 大家好  ");
}

TEST_CASE("cli score on identical files reports zeros") {
    const fs::path dir = fresh_dir("score_zero");
    write(dir / "ref1.txt", "[S1]你好[S2]好的");
    write(dir / "hyp1.txt", "[S1]你好[S2]好的");
    write(dir / "ref2.txt",
          "[00:00:01.000] [S01] 大家好 [00:00:02.000]\n"
          "[00:00:02.500] [S02] 再见 [00:00:03.500]");
    write(dir / "hyp2.txt", slurp(dir / "ref2.txt"));
    write(dir / "manifest.jsonl",
          R"({"id":"a","ref_path":"ref1.txt","hyp_path":"hyp1.txt"})"
          "\n"
          R"({"id":"b","ref_path":"ref2.txt","hyp_path":"hyp2.txt"})"
          "\n");
    auto res = run_cmd(kBin + " score --manifest " + (dir / "manifest.jsonl").string() +
                       " --json " + (dir / "out.json").string());
    INFO(res.output);
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("CER (%)") != std::string::npos);
    CHECK(res.output.find("0.00") != std::string::npos);

    const auto j = nlohmann::json::parse(slurp(dir / "out.json"));
    CHECK(j["pooled"]["cer"].get<double>() == 0.0);
    CHECK(j["pooled"]["cpcer"].get<double>() == 0.0);
    CHECK(j["records"].size() == 2);
}

TEST_CASE("cli score pooled values match hand computation") {
    const fs::path dir = fresh_dir("score_pooled");
    // record 1: ref 你好吗 vs hyp 你好 -> distance 1, ref len 3
    write(dir / "ref1.txt", "[S1]你好吗");
    write(dir / "hyp1.txt", "[S2]你好");
    // record 2: the two-speaker stream split onto one label -> cer 0, cpcer 8/8
    write(dir / "ref2.txt", "[S1]aaaa[S2]bbbb");
    write(dir / "hyp2.txt", "[S1]aaaabbbb");
    write(dir / "manifest.jsonl",
          R"({"id":"r1","ref_path":"ref1.txt","hyp_path":"hyp1.txt"})"
          "\n"
          R"({"id":"r2","ref_path":"ref2.txt","hyp_path":"hyp2.txt"})"
          "\n");
    auto res = run_cmd(kBin + " score --manifest " + (dir / "manifest.jsonl").string() +
                       " --json " + (dir / "out.json").string() + " --macro-average");
    INFO(res.output);
    CHECK(res.exit_code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "out.json"));
    // pooled CER = (1+0)/(3+8), pooled cpCER = (1+8)/(3+8)
    CHECK(j["pooled"]["cer"].get<double>() == Catch::Approx(1.0 / 11.0).epsilon(1e-12));
    CHECK(j["pooled"]["cpcer"].get<double>() == Catch::Approx(9.0 / 11.0).epsilon(1e-12));
    // macro CER = mean(1/3, 0), macro cpCER = mean(1/3, 1)
    CHECK(j["macro"]["cer"].get<double>() == Catch::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(j["macro"]["cpcer"].get<double>() == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(res.output.find("9.09") != std::string::npos);
    CHECK(res.output.find("81.82") != std::string::npos);
}

TEST_CASE("cli score strict vs lenient failure handling") {
    const fs::path dir = fresh_dir("score_strict");
    write(dir / "ref.txt", "[S1]你好");
    write(dir / "hyp.txt", "[S1]你好");
    write(dir / "bad.txt", "no speaker tags here");
    write(dir / "not_utf8.txt", "[S1]\xFF\xFE");
    write(dir / "manifest.jsonl",
          R"({"id":"good","ref_path":"ref.txt","hyp_path":"hyp.txt"})"
          "\n"
          R"({"id":"broken","ref_path":"ref.txt","hyp_path":"bad.txt"})"
          "\n"
          R"({"id":"mojibake","ref_path":"ref.txt","hyp_path":"not_utf8.txt"})"
          "\n");

    auto lenient = run_cmd(kBin + " score --manifest " + (dir / "manifest.jsonl").string());
    INFO(lenient.output);
    CHECK(lenient.exit_code == 0);
    CHECK(lenient.output.find("broken") != std::string::npos);  // diagnostic names the record
    CHECK(lenient.output.find("mojibake") != std::string::npos);
    CHECK(lenient.output.find("skipped: 2") != std::string::npos);

    auto strict = run_cmd(kBin + " score --strict --manifest " +
                          (dir / "manifest.jsonl").string());
    CHECK(strict.exit_code == 1);
    CHECK(strict.output.find("broken") != std::string::npos);
}

TEST_CASE("cli strict mode validates long-form structure") {
    const fs::path dir = fresh_dir("score_longform");
    write(dir / "ref.txt", "[00:00:01.000] [S01] 你好 [00:00:02.000]");
    // start after end: structurally invalid, but normalization strips the
    // timestamps so lenient scoring still works
    write(dir / "hyp.txt", "[00:00:05.000] [S01] 你好 [00:00:02.000]");
    write(dir / "manifest.jsonl",
          R"({"id":"rev","ref_path":"ref.txt","hyp_path":"hyp.txt"})"
          "\n");

    auto lenient = run_cmd(kBin + " score --manifest " + (dir / "manifest.jsonl").string());
    INFO(lenient.output);
    CHECK(lenient.exit_code == 0);
    CHECK(lenient.output.find("0.00") != std::string::npos);

    auto strict = run_cmd(kBin + " score --strict --manifest " +
                          (dir / "manifest.jsonl").string());
    INFO(strict.output);
    CHECK(strict.exit_code == 1);
    CHECK(strict.output.find("InvalidInterval") != std::string::npos);
}

TEST_CASE("cli exit codes") {
    CHECK(run_cmd(kBin + " frobnicate").exit_code == 2);          // unknown subcommand
    CHECK(run_cmd(kBin + " score").exit_code == 2);               // missing required option
    CHECK(run_cmd(kBin + " --help").exit_code == 0);
    CHECK(run_cmd(kBin + " score --manifest /nonexistent.jsonl").exit_code == 1);
}

TEST_CASE("cli simulate is deterministic and writes the full tree") {
    const fs::path dir = fresh_dir("simulate");
    const fs::path pool_manifest = synth::write_pool(synth::tone_pool(31, 6, 1, 3, 8),
                                                     dir / "pool");
    write(dir / "config.json", R"({"speakers_min":2,"speakers_max":2,"seed":7})");

    const std::string base_cmd = kBin + " simulate --pool " + pool_manifest.string() +
                                 " --config " + (dir / "config.json").string() +
                                 " -n 3 --seed 7 --out ";
    auto a = run_cmd(base_cmd + (dir / "outA").string());
    INFO(a.output);
    CHECK(a.exit_code == 0);
    auto b = run_cmd(base_cmd + (dir / "outB").string());
    CHECK(b.exit_code == 0);

    // file-count contract: 3 WAV + 3 TXT + 3 JSON + manifest
    for (int i = 0; i < 3; ++i) {
        const std::string stem = "mix_0000" + std::to_string(i);
        CHECK(fs::exists(dir / "outA" / (stem + ".wav")));
        CHECK(fs::exists(dir / "outA" / (stem + ".txt")));
        CHECK(fs::exists(dir / "outA" / (stem + ".json")));
    }
    CHECK(fs::exists(dir / "outA" / "manifest.jsonl"));

    // byte-identical trees
    for (const auto& entry : fs::directory_iterator(dir / "outA")) {
        const fs::path other = dir / "outB" / entry.path().filename();
        REQUIRE(fs::exists(other));
        CHECK(slurp(entry.path()) == slurp(other));
    }
}

TEST_CASE("cli simulate with noise augmentation") {
    const fs::path dir = fresh_dir("simulate_noise");
    const fs::path pool_manifest = synth::write_pool(synth::tone_pool(33, 5, 1, 3, 7),
                                                     dir / "pool");
    sats::write_wav(dir / "noise.wav", synth::noise_buffer(34, 2.0));

    const std::string cmd = kBin + " simulate --pool " + pool_manifest.string() +
                            " -n 2 --seed 9 --noise " + (dir / "noise.wav").string() +
                            " --keep-clean --out ";
    auto a = run_cmd(cmd + (dir / "outA").string());
    INFO(a.output);
    REQUIRE(a.exit_code == 0);
    auto b = run_cmd(cmd + (dir / "outB").string());
    REQUIRE(b.exit_code == 0);

    // snr_db recorded in the manifest, clean mixtures kept, trees identical
    std::size_t entries = 0;
    std::istringstream manifest(slurp(dir / "outA" / "manifest.jsonl"));
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        CHECK(j["snr_db"].is_number());
        CHECK(j["snr_db"].get<double>() >= 0.0);
        CHECK(j["snr_db"].get<double>() <= 15.0);
        ++entries;
    }
    CHECK(entries == 2);
    CHECK(fs::exists(dir / "outA" / "mix_00000.clean.wav"));
    for (const auto& entry : fs::directory_iterator(dir / "outA")) {
        const fs::path other = dir / "outB" / entry.path().filename();
        REQUIRE(fs::exists(other));
        CHECK(slurp(entry.path()) == slurp(other));
    }

    // --reverb files without --rir is a usage-level failure
    auto bad = run_cmd(kBin + " simulate --pool " + pool_manifest.string() +
                       " -n 1 --reverb files --out " + (dir / "outC").string());
    CHECK(bad.exit_code == 1);
}

TEST_CASE("cli stats reads a generated dataset") {
    const fs::path dir = fresh_dir("stats");
    const fs::path pool_manifest = synth::write_pool(synth::tone_pool(37, 5, 1, 3, 7),
                                                     dir / "pool");
    write(dir / "config.json", R"({"speakers_min":2,"speakers_max":2,"seed":3})");
    auto sim = run_cmd(kBin + " simulate --pool " + pool_manifest.string() + " --config " +
                       (dir / "config.json").string() + " -n 3 --out " +
                       (dir / "data").string());
    REQUIRE(sim.exit_code == 0);

    auto res = run_cmd(kBin + " stats " + (dir / "data").string());
    INFO(res.output);
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("Duration Range (s)") != std::string::npos);
    CHECK(res.output.find("Number of Speakers") != std::string::npos);
    CHECK(res.output.find("2 -- 2") != std::string::npos);  // K forced to 2
    CHECK(res.output.find("records: 3") != std::string::npos);

    auto missing = run_cmd(kBin + " stats " + (dir / "nowhere").string());
    CHECK(missing.exit_code == 1);
}

TEST_CASE("cli stats exact values from a handcrafted manifest") {
    const fs::path dir = fresh_dir("stats_exact");
    // one 10 s, 2-speaker dialogue
    write(dir / "t.json", R"({
        "sample_rate": 16000, "rng_seed": 0,
        "speakers": [{"id":1,"key":"a","utterance":0},{"id":2,"key":"b","utterance":1}],
        "placed": [
            {"speaker":1,"start_sample":0,"slice_begin":0,"slice_end":80000,
             "word_begin":0,"word_end":1,"fade_in":0.05,"fade_out":0.05,"text":"x"},
            {"speaker":2,"start_sample":80000,"slice_begin":0,"slice_end":80000,
             "word_begin":0,"word_end":1,"fade_in":0.05,"fade_out":0.05,"text":"y"}
        ]})");
    write(dir / "manifest.jsonl",
          R"({"audio":"m.wav","ref":"m.txt","timeline":"t.json","snr_db":null,"num_speakers":2})"
          "\n");
    auto res = run_cmd(kBin + " stats " + (dir / "manifest.jsonl").string());
    INFO(res.output);
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("10.000 -- 10.000") != std::string::npos);
    CHECK(res.output.find("2 -- 2") != std::string::npos);
    CHECK(res.output.find("records: 1") != std::string::npos);
}

TEST_CASE("cli end-to-end loop closure") {
    const fs::path dir = fresh_dir("loop");
    const fs::path pool_manifest = synth::write_pool(synth::tone_pool(41, 8, 1, 4, 9),
                                                     dir / "pool");
    auto sim = run_cmd(kBin + " simulate --pool " + pool_manifest.string() + " -n 3 --seed 5 --out " +
                       (dir / "data").string());
    REQUIRE(sim.exit_code == 0);

    // score the references against themselves
    std::string manifest;
    for (int i = 0; i < 3; ++i) {
        const std::string ref = (dir / "data" / ("mix_0000" + std::to_string(i) + ".txt")).string();
        manifest += R"({"id":"d)" + std::to_string(i) + R"(","ref_path":")" + ref +
                    R"(","hyp_path":")" + ref + R"("})" + "\n";
    }
    write(dir / "eval.jsonl", manifest);
    auto res = run_cmd(kBin + " score --manifest " + (dir / "eval.jsonl").string());
    INFO(res.output);
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("CER (%)") != std::string::npos);
    // all three metric rows are exactly 0.00
    std::size_t zero_rows = 0;
    for (std::size_t at = res.output.find("0.00"); at != std::string::npos;
         at = res.output.find("0.00", at + 1))
        ++zero_rows;
    CHECK(zero_rows >= 3);
}

TEST_CASE("cli report renders the comparison layout") {
    const fs::path dir = fresh_dir("report");
    write(dir / "mine.json",
          R"({"dataset":"demo","pooled":{"cer":0.1543,"cpcer":0.2004,"delta_cp":0.0461}})");
    write(dir / "other.json", R"({"cer":0.1818,"cpcer":0.2786,"delta_cp":0.0968})");
    auto res = run_cmd(kBin + " report --scores " + (dir / "mine.json").string() + " " +
                       (dir / "other.json").string() + " --labels Mine,Other");
    INFO(res.output);
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("Dataset") != std::string::npos);
    CHECK(res.output.find("demo") != std::string::npos);
    CHECK(res.output.find("Mine") != std::string::npos);
    CHECK(res.output.find("15.43") != std::string::npos);
    CHECK(res.output.find("27.86") != std::string::npos);
    CHECK(res.output.find("Δcp (%)") != std::string::npos);
}

TEST_CASE("cli honors the thread cap variable") {
    const fs::path dir = fresh_dir("threads");
    write(dir / "ref.txt", "[S1]你好");
    write(dir / "manifest.jsonl", R"({"id":"a","ref_path":"ref.txt","hyp_path":"ref.txt"})"
                                  "\n");
    auto res = run_cmd("SATS_KIT_THREADS=2 " + kBin + " score --manifest " +
                       (dir / "manifest.jsonl").string());
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("0.00") != std::string::npos);
}
