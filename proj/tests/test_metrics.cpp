#include <catch2/catch_amalgamated.hpp>

#include "sats/metrics.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace sats;

namespace {

Transcript make_transcript(std::initializer_list<std::pair<int, const char*>> segs) {
    Transcript t;
    for (const auto& [speaker, text] : segs)
        t.segments.push_back({SpeakerId{speaker}, text, std::nullopt, std::nullopt, {}});
    return t;
}

}  // namespace

TEST_CASE("edit distance basics") {
    CHECK(edit_distance(U"", U"abc").distance() == 3);
    CHECK(edit_distance(U"", U"abc").insertions == 3);
    CHECK(edit_distance(U"abc", U"abc").distance() == 0);
    CHECK(edit_distance(U"kitten", U"sitting").distance() == 3);
    CHECK(edit_distance(U"abc", U"").deletions == 3);
    const EditCounts c = edit_distance(U"你好吗", U"你好");
    CHECK(c.distance() == 1);
    CHECK(c.ref_len == 3);
}

TEST_CASE("edit distance matches the naive recursion oracle") {
    Rng rng(101);
    for (int i = 0; i < 200; ++i) {
        std::u32string a, b;
        const int la = static_cast<int>(rng.uniform_int(0, 8));
        const int lb = static_cast<int>(rng.uniform_int(0, 8));
        for (int k = 0; k < la; ++k)
            a.push_back(static_cast<char32_t>(U'a' + rng.uniform_int(0, 3)));
        for (int k = 0; k < lb; ++k)
            b.push_back(static_cast<char32_t>(U'a' + rng.uniform_int(0, 3)));
        const EditCounts got = edit_distance(a, b);
        CHECK(got.distance() == oracle::naive_edit_distance(a, b));
        CHECK(got.substitutions + got.deletions + got.insertions == got.distance());
    }
}

TEST_CASE("edit distance symmetry and triangle inequality") {
    Rng rng(303);
    for (int i = 0; i < 200; ++i) {
        std::u32string s[3];
        for (auto& str : s) {
            const int len = static_cast<int>(rng.uniform_int(0, 12));
            for (int k = 0; k < len; ++k)
                str.push_back(static_cast<char32_t>(U'a' + rng.uniform_int(0, 2)));
        }
        CHECK(edit_distance(s[0], s[1]).distance() == edit_distance(s[1], s[0]).distance());
        CHECK(edit_distance(s[0], s[2]).distance() <=
              edit_distance(s[0], s[1]).distance() + edit_distance(s[1], s[2]).distance());
    }
}

TEST_CASE("cer") {
    const Transcript ref = make_transcript({{1, "你好吗"}});
    const Transcript hyp = make_transcript({{2, "你好"}});
    const EditCounts c = cer(ref, hyp);
    CHECK(c.distance() == 1);
    CHECK(c.rate() == Catch::Approx(1.0 / 3.0));

    // labels are ignored
    const Transcript a = make_transcript({{1, "abc"}, {2, "def"}});
    const Transcript b = make_transcript({{2, "abc"}, {1, "def"}});
    CHECK(cer(a, b).distance() == 0);

    // full deletion
    const Transcript empty_hyp = make_transcript({{1, ""}});
    CHECK(cer(make_transcript({{1, "你好"}}), empty_hyp).rate() == 1.0);

    CHECK_THROWS_MATCHES(cer(empty_hyp, a), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::EmptyReference;
                         }));
}

TEST_CASE("speaker cost matrix") {
    {
        const auto m = speaker_cost_matrix({{SpeakerId{1}, U"aa"}}, {{SpeakerId{1}, U"aa"}});
        REQUIRE(m.padded_size() == 1);
        CHECK(m.cost_at(0, 0) == 0);
    }
    {
        const auto m = speaker_cost_matrix({{SpeakerId{1}, U"ab"}, {SpeakerId{2}, U"cd"}},
                                           {{SpeakerId{1}, U"cd"}, {SpeakerId{2}, U"ab"}});
        const CostMatrix c = m.padded();
        CHECK(c == CostMatrix{{2, 0}, {0, 2}});
    }
    {
        // K_ref = 1, K_hyp = 2: pads to 2x2, virtual-ref row carries |hyp| costs
        const auto m = speaker_cost_matrix({{SpeakerId{1}, U"abcd"}},
                                           {{SpeakerId{1}, U"ab"}, {SpeakerId{2}, U"cd"}});
        REQUIRE(m.padded_size() == 2);
        CHECK(m.cost_at(1, 0) == 2);
        CHECK(m.cost_at(1, 1) == 2);
        CHECK(m.cost_at(0, 0) == 2);  // dist("abcd","ab")
    }
}

TEST_CASE("assignment basics") {
    {
        const auto sol = solve_assignment({{0}});
        CHECK(sol.total_cost == 0);
        CHECK(sol.col_of_row == std::vector<int>{0});
    }
    {
        const auto sol = solve_assignment({{2, 0}, {0, 2}});
        CHECK(sol.total_cost == 0);
        CHECK(sol.col_of_row == std::vector<int>{1, 0});
    }
}

TEST_CASE("assignment equals brute force on random matrices, including ties") {
    Rng rng(777);
    for (int i = 0; i < 200; ++i) {
        const int n = static_cast<int>(rng.uniform_int(1, 7));
        CostMatrix m(n, std::vector<std::int64_t>(n));
        for (auto& row : m)
            for (auto& v : row) v = rng.uniform_int(0, 9);  // small values force ties
        const auto got = solve_assignment(m);
        const auto want = oracle::brute_force_assignment(m);
        CHECK(got.total_cost == want.cost);
        CHECK(got.col_of_row == want.col_of_row);  // lexicographically smallest optimum
    }
}

TEST_CASE("cpcer worked example") {
    // ref {S1:"aaaa", S2:"bbbb"} vs hyp {S1:"aaaabbbb"}
    const Transcript ref = make_transcript({{1, "aaaa"}, {2, "bbbb"}});
    const Transcript hyp = make_transcript({{1, "aaaabbbb"}});
    const ScoreReport r = score_record(ref, hyp);
    CHECK(r.cer == 0.0);
    CHECK(r.cpcer == 1.0);
    CHECK(r.delta_cp == 1.0);
    CHECK(r.cpcer_counts.distance() == 8);
    CHECK(r.cpcer_counts.ref_len == 8);
    REQUIRE(r.assignment.pairs.size() == 1);
    CHECK(r.assignment.pairs[0] == std::pair{SpeakerId{1}, SpeakerId{1}});
    REQUIRE(r.assignment.unmatched_ref.size() == 1);
    CHECK(r.assignment.unmatched_ref[0] == SpeakerId{2});
    CHECK(r.assignment.unmatched_hyp.empty());
    CHECK(r.assignment.total_cost == 8);
}

TEST_CASE("cpcer label swap scores zero") {
    const Transcript ref = make_transcript({{1, "abc"}, {2, "def"}});
    const Transcript hyp = make_transcript({{2, "abc"}, {1, "def"}});
    const CpResult cp = cpcer(ref, hyp);
    CHECK(cp.counts.distance() == 0);
    CHECK(cp.assignment.total_cost == 0);

    const CpResult self = cpcer(ref, ref);
    CHECK(self.counts.distance() == 0);
}

TEST_CASE("cpcer total cost decomposition") {
    Rng rng(404);
    for (int i = 0; i < 100; ++i) {
        const auto ref = gen::random_streams(rng, static_cast<int>(rng.uniform_int(1, 5)), 12, 3);
        const auto hyp = gen::random_streams(rng, static_cast<int>(rng.uniform_int(0, 5)), 12, 3);
        std::int64_t ref_total = 0;
        for (const auto& [id, s] : ref) ref_total += static_cast<std::int64_t>(s.size());
        if (ref_total == 0) continue;
        const CpResult cp = cpcer_from_streams(ref, hyp);
        // total_cost equals matched distances plus unmatched stream lengths
        std::int64_t recomputed = 0;
        for (const auto& [r, h] : cp.assignment.pairs)
            recomputed += static_cast<std::int64_t>(edit_distance(ref.at(r), hyp.at(h)).distance());
        for (const auto& r : cp.assignment.unmatched_ref)
            recomputed += static_cast<std::int64_t>(ref.at(r).size());
        for (const auto& h : cp.assignment.unmatched_hyp)
            recomputed += static_cast<std::int64_t>(hyp.at(h).size());
        CHECK(recomputed == cp.assignment.total_cost);
        CHECK(cp.counts.distance() == static_cast<std::uint64_t>(cp.assignment.total_cost));
        // every speaker appears exactly once across pairs and unmatched sets
        CHECK(cp.assignment.pairs.size() + cp.assignment.unmatched_ref.size() == ref.size());
        CHECK(cp.assignment.pairs.size() + cp.assignment.unmatched_hyp.size() == hyp.size());
    }
}

TEST_CASE("cpcer assignment cost equals permutation brute force") {
    Rng rng(555);
    for (int i = 0; i < 100; ++i) {
        const auto ref = gen::random_streams(rng, static_cast<int>(rng.uniform_int(2, 6)), 10, 4);
        const auto hyp = gen::random_streams(rng, static_cast<int>(rng.uniform_int(2, 6)), 10, 4);
        std::int64_t ref_total = 0;
        for (const auto& [id, s] : ref) ref_total += static_cast<std::int64_t>(s.size());
        if (ref_total == 0) continue;
        const auto matrix = speaker_cost_matrix(ref, hyp).padded();
        const CpResult cp = cpcer_from_streams(ref, hyp);
        CHECK(cp.assignment.total_cost == oracle::brute_force_assignment(matrix).cost);
    }
}

TEST_CASE("cpcer invariant under hypothesis label permutation") {
    Rng rng(606);
    for (int i = 0; i < 200; ++i) {
        const Transcript ref =
            gen::random_transcript(rng, TranscriptFormat::Short, 6, false);
        const Transcript hyp =
            gen::random_transcript(rng, TranscriptFormat::Short, 6, false);
        if (full_token_stream(ref).empty()) continue;

        // random bijection over 1..12 applied to hyp labels
        std::vector<int> perm(12);
        std::iota(perm.begin(), perm.end(), 1);
        for (std::size_t k = perm.size(); k > 1; --k)
            std::swap(perm[k - 1],
                      perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k) - 1))]);
        Transcript relabeled = hyp;
        for (auto& seg : relabeled.segments)
            seg.speaker = SpeakerId{perm[static_cast<std::size_t>(seg.speaker.index - 1)]};

        const CpResult a = cpcer(ref, hyp);
        const CpResult b = cpcer(ref, relabeled);
        CHECK(a.counts.distance() == b.counts.distance());
        CHECK(a.counts.ref_len == b.counts.ref_len);
    }
}

TEST_CASE("empty hypothesis speaker never changes cpcer") {
    Rng rng(808);
    for (int i = 0; i < 50; ++i) {
        const auto ref = gen::random_streams(rng, 3, 10, 3);
        auto hyp = gen::random_streams(rng, 2, 10, 3);
        std::int64_t ref_total = 0;
        for (const auto& [id, s] : ref) ref_total += static_cast<std::int64_t>(s.size());
        if (ref_total == 0) continue;
        const CpResult before = cpcer_from_streams(ref, hyp);
        hyp.emplace(SpeakerId{99}, U"");
        const CpResult after = cpcer_from_streams(ref, hyp);
        CHECK(before.counts.distance() == after.counts.distance());
    }
}

TEST_CASE("score_record identities") {
    Rng rng(909);
    int checked = 0;
    for (int i = 0; i < 500; ++i) {
        const Transcript ref = gen::random_transcript(rng, TranscriptFormat::Short, 5, false);
        const Transcript hyp = gen::random_transcript(rng, TranscriptFormat::Short, 5, false);
        if (full_token_stream(ref).empty()) continue;
        const ScoreReport r = score_record(ref, hyp);
        CHECK(std::abs(r.delta_cp - (r.cpcer - r.cer)) <= 1e-12);
        CHECK(r.cer_counts.ref_len == r.cpcer_counts.ref_len);
        ++checked;
    }
    CHECK(checked > 300);
}

TEST_CASE("self score is zero") {
    Rng rng(111);
    for (int i = 0; i < 100; ++i) {
        const Transcript t = gen::random_transcript(rng, TranscriptFormat::Short, 6, false);
        if (full_token_stream(t).empty()) continue;
        const ScoreReport r = score_record(t, t);
        CHECK(r.cer == 0.0);
        CHECK(r.cpcer == 0.0);
        CHECK(r.delta_cp == 0.0);
    }
}

TEST_CASE("one-label hypothesis moves all error into delta") {
    const Transcript ref = make_transcript({{1, "aaaa"}, {2, "bbbb"}, {3, "cccc"}});
    const Transcript hyp = make_transcript({{1, "aaaabbbbcccc"}});
    const ScoreReport r = score_record(ref, hyp);
    CHECK(r.cer == 0.0);
    CHECK(r.delta_cp == r.cpcer);
    CHECK(r.cpcer > 0.0);
}

TEST_CASE("corpus pooling") {
    // one record pools to itself
    const Transcript ref = make_transcript({{1, "你好吗"}});
    const Transcript hyp = make_transcript({{1, "你好"}});
    std::vector<std::pair<Transcript, Transcript>> one = {{ref, hyp}};
    const CorpusReport single = score_corpus(one);
    CHECK(single.pooled.cer == single.records[0].cer);
    CHECK(single.pooled.cpcer == single.records[0].cpcer);

    // ref lengths 10 and 90, distances 1 and 9 -> pooled CER 0.10
    const Transcript ref_a = make_transcript({{1, "aaaaaaaaaa"}});  // 10
    const Transcript hyp_a = make_transcript({{1, "aaaaaaaaab"}});  // 1 sub
    std::string long_ref(90, 'c'), long_hyp = std::string(81, 'c') + std::string(9, 'd');
    const Transcript ref_b = make_transcript({{1, long_ref.c_str()}});
    const Transcript hyp_b = make_transcript({{1, long_hyp.c_str()}});
    std::vector<std::pair<Transcript, Transcript>> two = {{ref_a, hyp_a}, {ref_b, hyp_b}};
    const CorpusReport pooled = score_corpus(two);
    CHECK(pooled.records[0].cer_counts.distance() == 1);
    CHECK(pooled.records[1].cer_counts.distance() == 9);
    CHECK(pooled.pooled.cer == Catch::Approx(0.10).epsilon(1e-12));

    CHECK_THROWS_MATCHES(
        score_corpus(std::span<const std::pair<Transcript, Transcript>>{}), Error,
        Catch::Matchers::Predicate<Error>(
            [](const Error& e) { return e.kind() == ErrorKind::EmptyCorpus; }));
}

TEST_CASE("pooled rate bounded by per-record extremes") {
    Rng rng(222);
    for (int i = 0; i < 50; ++i) {
        std::vector<std::pair<Transcript, Transcript>> records;
        const int n = static_cast<int>(rng.uniform_int(1, 6));
        for (int k = 0; k < n; ++k) {
            Transcript ref = gen::random_transcript(rng, TranscriptFormat::Short, 4, false);
            Transcript hyp = gen::random_transcript(rng, TranscriptFormat::Short, 4, false);
            if (full_token_stream(ref).empty()) continue;
            records.emplace_back(std::move(ref), std::move(hyp));
        }
        if (records.empty()) continue;
        const CorpusReport r = score_corpus(records);
        double lo = r.records[0].cer, hi = r.records[0].cer;
        for (const auto& rec : r.records) {
            lo = std::min(lo, rec.cer);
            hi = std::max(hi, rec.cer);
        }
        CHECK(r.pooled.cer >= lo - 1e-12);
        CHECK(r.pooled.cer <= hi + 1e-12);
    }
}
