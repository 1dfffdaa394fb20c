#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sats/error.hpp"
#include "sats/normalizer.hpp"
#include "sats/transcript.hpp"

namespace sats {

// ─── Edit distance ───────────────────────────────────────────────────────────

struct EditCounts {
    std::uint64_t substitutions = 0;
    std::uint64_t deletions = 0;
    std::uint64_t insertions = 0;
    std::uint64_t ref_len = 0;

    std::uint64_t distance() const { return substitutions + deletions + insertions; }
    double rate() const {
        if (ref_len == 0)
            throw Error(ErrorKind::EmptyReference, "rate undefined for empty reference");
        return static_cast<double>(distance()) / static_cast<double>(ref_len);
    }

    bool operator==(const EditCounts&) const = default;

    EditCounts& operator+=(const EditCounts& o) {
        substitutions += o.substitutions;
        deletions += o.deletions;
        insertions += o.insertions;
        ref_len += o.ref_len;
        return *this;
    }
};

// Minimal S+D+I transforming `a` into `b` (unit costs, Levenshtein).
// Deletions remove characters of `a`, insertions add characters of `b`.
// Cost ties resolve match/substitution first, then deletion, then insertion,
// so the S/D/I decomposition is deterministic.
inline EditCounts edit_distance(std::u32string_view a, std::u32string_view b) {
    struct Cell {
        std::uint64_t cost, s, d, i;
    };
    const std::size_t n = a.size(), m = b.size();
    std::vector<Cell> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = {j, 0, 0, j};
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = {i, 0, i, 0};
        for (std::size_t j = 1; j <= m; ++j) {
            const bool hit = a[i - 1] == b[j - 1];
            Cell diag = prev[j - 1];
            diag.cost += hit ? 0 : 1;
            diag.s += hit ? 0 : 1;
            Cell del = prev[j];
            del.cost += 1;
            del.d += 1;
            Cell ins = cur[j - 1];
            ins.cost += 1;
            ins.i += 1;
            if (diag.cost <= del.cost && diag.cost <= ins.cost)
                cur[j] = diag;
            else if (del.cost <= ins.cost)
                cur[j] = del;
            else
                cur[j] = ins;
        }
        std::swap(prev, cur);
    }
    return {prev[m].s, prev[m].d, prev[m].i, n};
}

// ─── Linear assignment ───────────────────────────────────────────────────────

using CostMatrix = std::vector<std::vector<std::int64_t>>;

namespace detail {

// Shortest-augmenting-path assignment on a square non-negative matrix.
// Returns the minimum total cost and writes the column chosen for each row.
inline std::int64_t assignment_cost(const CostMatrix& cost, std::vector<int>* col_of_row) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) {
        if (col_of_row) col_of_row->clear();
        return 0;
    }
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<std::int64_t> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            std::int64_t delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const std::int64_t cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::int64_t total = 0;
    if (col_of_row) col_of_row->assign(n, -1);
    for (int j = 1; j <= n; ++j) {
        if (p[j] == 0) continue;
        if (col_of_row) (*col_of_row)[p[j] - 1] = j - 1;
        total += cost[p[j] - 1][j - 1];
    }
    return total;
}

}  // namespace detail

struct AssignmentSolution {
    std::vector<int> col_of_row;  // column matched to each row
    std::int64_t total_cost = 0;
};

// Minimum-cost perfect matching; among all optima, the lexicographically
// smallest column sequence (row 0 first). The refinement re-solves the
// subproblem per candidate column, which is cheap at speaker-count sizes.
inline AssignmentSolution solve_assignment(const CostMatrix& cost) {
    const int n = static_cast<int>(cost.size());
    AssignmentSolution out;
    out.total_cost = detail::assignment_cost(cost, &out.col_of_row);
    if (n <= 1) return out;

    std::vector<int> fixed(n, -1);
    std::vector<char> col_used(n, 0);
    std::int64_t fixed_cost = 0;
    std::vector<int> free_cols;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (col_used[j]) continue;
            free_cols.clear();
            for (int c = 0; c < n; ++c)
                if (!col_used[c] && c != j) free_cols.push_back(c);
            CostMatrix sub(n - i - 1, std::vector<std::int64_t>(n - i - 1));
            for (int r = i + 1; r < n; ++r)
                for (std::size_t c = 0; c < free_cols.size(); ++c)
                    sub[r - i - 1][c] = cost[r][free_cols[c]];
            const std::int64_t rest = detail::assignment_cost(sub, nullptr);
            if (fixed_cost + cost[i][j] + rest == out.total_cost) {
                fixed[i] = j;
                col_used[j] = 1;
                fixed_cost += cost[i][j];
                break;
            }
        }
    }
    out.col_of_row = std::move(fixed);
    return out;
}

// ─── Speaker cost matrix ─────────────────────────────────────────────────────

// Pairwise stream distances plus the virtual-speaker border costs that make
// the assignment square when K_ref != K_hyp: an unmatched reference stream
// costs its full length (all deleted), an unmatched hypothesis stream costs
// its full length (all inserted).
struct SpeakerCostMatrix {
    std::vector<SpeakerId> ref_ids;
    std::vector<SpeakerId> hyp_ids;
    std::vector<std::vector<EditCounts>> pair_counts;  // [ref][hyp]
    std::vector<std::int64_t> ref_lens;
    std::vector<std::int64_t> hyp_lens;

    std::size_t padded_size() const { return std::max(ref_ids.size(), hyp_ids.size()); }

    // Cost of matching padded row i with padded column j.
    std::int64_t cost_at(std::size_t i, std::size_t j) const {
        const bool real_ref = i < ref_ids.size();
        const bool real_hyp = j < hyp_ids.size();
        if (real_ref && real_hyp) return static_cast<std::int64_t>(pair_counts[i][j].distance());
        if (real_ref) return ref_lens[i];
        if (real_hyp) return hyp_lens[j];
        return 0;
    }

    CostMatrix padded() const {
        const std::size_t m = padded_size();
        CostMatrix out(m, std::vector<std::int64_t>(m));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) out[i][j] = cost_at(i, j);
        return out;
    }
};

inline SpeakerCostMatrix speaker_cost_matrix(const std::map<SpeakerId, std::u32string>& ref,
                                             const std::map<SpeakerId, std::u32string>& hyp) {
    SpeakerCostMatrix m;
    for (const auto& [id, stream] : ref) {
        m.ref_ids.push_back(id);
        m.ref_lens.push_back(static_cast<std::int64_t>(stream.size()));
    }
    for (const auto& [id, stream] : hyp) {
        m.hyp_ids.push_back(id);
        m.hyp_lens.push_back(static_cast<std::int64_t>(stream.size()));
    }
    m.pair_counts.resize(ref.size(), std::vector<EditCounts>(hyp.size()));
    std::size_t i = 0;
    for (const auto& [rid, rstream] : ref) {
        std::size_t j = 0;
        for (const auto& [hid, hstream] : hyp) m.pair_counts[i][j++] = edit_distance(rstream, hstream);
        ++i;
    }
    return m;
}

// ─── cpCER ───────────────────────────────────────────────────────────────────

// Partial bijection between reference and hypothesis speakers. total_cost is
// the sum of matched-pair distances plus unmatched stream lengths.
struct Assignment {
    std::vector<std::pair<SpeakerId, SpeakerId>> pairs;  // (ref, hyp)
    std::vector<SpeakerId> unmatched_ref;
    std::vector<SpeakerId> unmatched_hyp;
    std::int64_t total_cost = 0;

    bool operator==(const Assignment&) const = default;
};

struct CpResult {
    EditCounts counts;
    Assignment assignment;
};

inline CpResult cpcer_from_streams(const std::map<SpeakerId, std::u32string>& ref,
                                   const std::map<SpeakerId, std::u32string>& hyp) {
    std::int64_t total_ref = 0;
    for (const auto& [id, stream] : ref) total_ref += static_cast<std::int64_t>(stream.size());
    if (total_ref == 0)
        throw Error(ErrorKind::EmptyReference, "reference tokenizes to zero characters");

    const SpeakerCostMatrix m = speaker_cost_matrix(ref, hyp);
    const AssignmentSolution sol = solve_assignment(m.padded());

    CpResult out;
    out.assignment.total_cost = sol.total_cost;
    out.counts.ref_len = static_cast<std::uint64_t>(total_ref);
    for (std::size_t i = 0; i < m.padded_size(); ++i) {
        const std::size_t j = static_cast<std::size_t>(sol.col_of_row[i]);
        const bool real_ref = i < m.ref_ids.size();
        const bool real_hyp = j < m.hyp_ids.size();
        if (real_ref && real_hyp) {
            out.assignment.pairs.emplace_back(m.ref_ids[i], m.hyp_ids[j]);
            const EditCounts& c = m.pair_counts[i][j];
            out.counts.substitutions += c.substitutions;
            out.counts.deletions += c.deletions;
            out.counts.insertions += c.insertions;
        } else if (real_ref) {
            out.assignment.unmatched_ref.push_back(m.ref_ids[i]);
            out.counts.deletions += static_cast<std::uint64_t>(m.ref_lens[i]);
        } else if (real_hyp) {
            out.assignment.unmatched_hyp.push_back(m.hyp_ids[j]);
            out.counts.insertions += static_cast<std::uint64_t>(m.hyp_lens[j]);
        }
    }
    std::sort(out.assignment.unmatched_hyp.begin(), out.assignment.unmatched_hyp.end());
    return out;
}

// ─── Transcript-level metrics ────────────────────────────────────────────────

// CER: speaker labels ignored, full concatenations compared.
inline EditCounts cer(const Transcript& ref, const Transcript& hyp,
                      const NormalizationOptions& opts = {}) {
    const std::u32string a = full_token_stream(ref, opts);
    if (a.empty())
        throw Error(ErrorKind::EmptyReference, "reference tokenizes to zero characters");
    return edit_distance(a, full_token_stream(hyp, opts));
}

// cpCER: per-speaker streams under the optimal label assignment, scored
// against the same total-reference-character denominator as CER.
inline CpResult cpcer(const Transcript& ref, const Transcript& hyp,
                      const NormalizationOptions& opts = {}) {
    return cpcer_from_streams(split_by_speaker(ref, opts), split_by_speaker(hyp, opts));
}

struct ScoreReport {
    double cer = 0.0;
    double cpcer = 0.0;
    double delta_cp = 0.0;  // cpcer - cer, same denominator
    EditCounts cer_counts;
    EditCounts cpcer_counts;
    Assignment assignment;

    double cer_percent() const { return cer * 100.0; }
    double cpcer_percent() const { return cpcer * 100.0; }
    double delta_cp_percent() const { return delta_cp * 100.0; }
};

inline ScoreReport score_record(const Transcript& ref, const Transcript& hyp,
                                const NormalizationOptions& opts = {}) {
    ScoreReport r;
    r.cer_counts = cer(ref, hyp, opts);
    CpResult cp = cpcer(ref, hyp, opts);
    r.cpcer_counts = cp.counts;
    r.assignment = std::move(cp.assignment);
    r.cer = r.cer_counts.rate();
    r.cpcer = r.cpcer_counts.rate();
    r.delta_cp = r.cpcer - r.cer;
    return r;
}

// ─── Corpus aggregation ──────────────────────────────────────────────────────

struct PooledScores {
    double cer = 0.0;
    double cpcer = 0.0;
    double delta_cp = 0.0;
    EditCounts cer_counts;
    EditCounts cpcer_counts;
};

// Pooled rates: total edit operations over total reference characters.
inline PooledScores pool_reports(std::span<const ScoreReport> reports) {
    if (reports.empty()) throw Error(ErrorKind::EmptyCorpus, "no records to pool");
    PooledScores p;
    for (const auto& r : reports) {
        p.cer_counts += r.cer_counts;
        p.cpcer_counts += r.cpcer_counts;
    }
    p.cer = p.cer_counts.rate();
    p.cpcer = p.cpcer_counts.rate();
    p.delta_cp = p.cpcer - p.cer;
    return p;
}

struct MacroScores {
    double cer = 0.0;
    double cpcer = 0.0;
    double delta_cp = 0.0;
};

// Unweighted mean of per-record rates.
inline MacroScores macro_average(std::span<const ScoreReport> reports) {
    if (reports.empty()) throw Error(ErrorKind::EmptyCorpus, "no records to average");
    MacroScores m;
    for (const auto& r : reports) {
        m.cer += r.cer;
        m.cpcer += r.cpcer;
        m.delta_cp += r.delta_cp;
    }
    const double n = static_cast<double>(reports.size());
    m.cer /= n;
    m.cpcer /= n;
    m.delta_cp /= n;
    return m;
}

struct CorpusReport {
    std::vector<ScoreReport> records;
    PooledScores pooled;
    MacroScores macro;
};

inline CorpusReport score_corpus(std::span<const std::pair<Transcript, Transcript>> records,
                                 const NormalizationOptions& opts = {}) {
    if (records.empty()) throw Error(ErrorKind::EmptyCorpus, "no records to score");
    CorpusReport out;
    out.records.reserve(records.size());
    for (const auto& [ref, hyp] : records) out.records.push_back(score_record(ref, hyp, opts));
    out.pooled = pool_reports(out.records);
    out.macro = macro_average(out.records);
    return out;
}

}  // namespace sats
