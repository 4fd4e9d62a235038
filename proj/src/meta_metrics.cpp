#include "mtqe/meta_metrics.hpp"

#include "mtqe/error.hpp"
#include "mtqe/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <unordered_map>

namespace mtqe {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Per-pair seed from the global seed and the two system ids. Hashing the
// names (not the indices) keeps results invariant under consistent system
// permutations of both matrices.
std::uint64_t pair_seed(std::uint64_t seed, const std::string& a,
                        const std::string& b) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= 0x1f;
        h *= 0x100000001b3ULL;
    };
    mix(a);
    mix(b);
    return splitmix64(h);
}

void require_same_shape(const ScoreMatrix& a, const ScoreMatrix& b) {
    if (a.systems != b.systems || a.items != b.items) {
        throw Error("score matrices do not share the same systems and items");
    }
}

void require_complete(const ScoreMatrix& m, const char* what) {
    auto gaps = m.missing_cells();
    if (gaps.empty()) return;
    std::string msg = std::string(what) + " matrix has missing values:";
    std::size_t shown = 0;
    for (const auto& g : gaps) {
        msg += " " + g;
        if (++shown == 10 && gaps.size() > 10) {
            msg += " (+" + std::to_string(gaps.size() - 10) + " more)";
            break;
        }
    }
    throw Error(msg);
}

}  // namespace

ScoreMatrix ScoreMatrix::empty(std::vector<std::string> systems,
                               std::vector<std::string> items) {
    ScoreMatrix m;
    m.systems = std::move(systems);
    m.items = std::move(items);
    m.values.assign(m.systems.size() * m.items.size(), kMissing);
    return m;
}

std::vector<std::string> ScoreMatrix::missing_cells() const {
    std::vector<std::string> gaps;
    for (std::size_t s = 0; s < systems.size(); ++s) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (std::isnan(at(s, i))) gaps.push_back(systems[s] + "/" + items[i]);
        }
    }
    return gaps;
}

ScoreMatrix build_score_matrix(
    const std::map<std::pair<std::string, std::string>, double>& by_item_system) {
    std::set<std::string> systems, items;
    for (const auto& [key, _] : by_item_system) {
        items.insert(key.first);
        systems.insert(key.second);
    }
    ScoreMatrix m = ScoreMatrix::empty(
        std::vector<std::string>(systems.begin(), systems.end()),
        std::vector<std::string>(items.begin(), items.end()));
    std::unordered_map<std::string, std::size_t> item_index, system_index;
    for (std::size_t i = 0; i < m.items.size(); ++i) item_index[m.items[i]] = i;
    for (std::size_t s = 0; s < m.systems.size(); ++s) system_index[m.systems[s]] = s;
    for (const auto& [key, score] : by_item_system) {
        m.set(system_index[key.second], item_index[key.first], score);
    }
    return m;
}

std::map<std::string, double> system_scores(const ScoreMatrix& matrix) {
    require_complete(matrix, "score");
    if (matrix.items.empty()) throw Error("system_scores: no items");
    std::map<std::string, double> means;
    for (std::size_t s = 0; s < matrix.systems.size(); ++s) {
        double sum = 0.0;
        for (std::size_t i = 0; i < matrix.items.size(); ++i) sum += matrix.at(s, i);
        means[matrix.systems[s]] = sum / static_cast<double>(matrix.items.size());
    }
    return means;
}

double permutation_pvalue_exact(const std::vector<double>& diffs) {
    const std::size_t n = diffs.size();
    if (n == 0) throw Error("permutation test needs at least one observation");
    if (n > 20) throw Error("exact enumeration limited to n <= 20");
    double observed = 0.0;
    for (double d : diffs) observed += d;
    const std::uint64_t total = 1ULL << n;
    std::uint64_t count = 0;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += (mask >> i) & 1 ? -diffs[i] : diffs[i];
        }
        if (sum >= observed) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(total);
}

double permutation_pvalue_sampled(const std::vector<double>& diffs,
                                  int resamples, std::uint64_t seed) {
    const std::size_t n = diffs.size();
    if (n == 0) throw Error("permutation test needs at least one observation");
    if (resamples < 1) throw Error("resamples must be positive");
    double observed = 0.0;
    for (double d : diffs) observed += d;

    std::mt19937_64 rng(seed);
    std::uint64_t bits = 0;
    int bits_left = 0;
    std::uint64_t count = 0;
    for (int r = 0; r < resamples; ++r) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (bits_left == 0) {
                bits = rng();
                bits_left = 64;
            }
            sum += (bits & 1) ? -diffs[i] : diffs[i];
            bits >>= 1;
            --bits_left;
        }
        if (sum >= observed) ++count;
    }
    return static_cast<double>(1 + count) / static_cast<double>(resamples + 1);
}

double paired_permutation_pvalue(const std::vector<double>& a,
                                 const std::vector<double>& b, int resamples,
                                 std::uint64_t seed) {
    if (a.size() != b.size()) {
        throw Error("paired permutation test: length mismatch");
    }
    std::vector<double> diffs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];
    if (diffs.size() <= kExactEnumerationLimit) {
        return permutation_pvalue_exact(diffs);
    }
    return permutation_pvalue_sampled(diffs, resamples, seed);
}

double soft_pairwise_accuracy(const ScoreMatrix& metric,
                              const ScoreMatrix& human,
                              int resamples, std::uint64_t seed) {
    require_same_shape(metric, human);
    require_complete(metric, "metric");
    require_complete(human, "human");
    const std::size_t n_systems = metric.systems.size();
    if (n_systems < 2) throw Error("soft pairwise accuracy needs >= 2 systems");
    const std::size_t n_items = metric.items.size();
    if (n_items == 0) throw Error("soft pairwise accuracy needs >= 1 item");

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n_systems * (n_systems - 1) / 2);
    for (std::size_t i = 0; i < n_systems; ++i) {
        for (std::size_t j = i + 1; j < n_systems; ++j) pairs.emplace_back(i, j);
    }

    std::vector<double> agreement(pairs.size());
    parallel_for(pairs.size(), 0, [&](std::size_t p) {
        auto [i, j] = pairs[p];
        // Canonical orientation by system id so the p-value (one-sided)
        // does not depend on matrix row order.
        std::size_t hi = i, lo = j;
        if (metric.systems[lo] < metric.systems[hi]) std::swap(hi, lo);
        std::vector<double> dm(n_items), dh(n_items);
        for (std::size_t k = 0; k < n_items; ++k) {
            dm[k] = metric.at(hi, k) - metric.at(lo, k);
            dh[k] = human.at(hi, k) - human.at(lo, k);
        }
        std::uint64_t s = pair_seed(seed, metric.systems[hi], metric.systems[lo]);
        double pm = n_items <= kExactEnumerationLimit
                        ? permutation_pvalue_exact(dm)
                        : permutation_pvalue_sampled(dm, resamples, s);
        double ph = n_items <= kExactEnumerationLimit
                        ? permutation_pvalue_exact(dh)
                        : permutation_pvalue_sampled(dh, resamples, s);
        agreement[p] = 1.0 - std::abs(pm - ph);
    });

    double sum = 0.0;
    for (double a : agreement) sum += a;
    return sum / static_cast<double>(pairs.size());
}

TieCalibration tie_calibrated_accuracy(const ScoreMatrix& metric,
                                       const ScoreMatrix& human) {
    require_same_shape(metric, human);
    require_complete(metric, "metric");
    require_complete(human, "human");
    const std::size_t n_systems = metric.systems.size();
    if (n_systems < 2) throw Error("tie calibration needs >= 2 systems");
    const std::size_t n_items = metric.items.size();
    if (n_items == 0) throw Error("tie calibration needs >= 1 item");

    struct Pair {
        double abs_dm;
        bool order_correct;  // at epsilon < |dm|
        bool human_tie;      // correct whenever the metric calls a tie
    };
    std::vector<Pair> pairs;
    pairs.reserve(n_items * n_systems * (n_systems - 1) / 2);
    for (std::size_t k = 0; k < n_items; ++k) {
        for (std::size_t i = 0; i < n_systems; ++i) {
            for (std::size_t j = i + 1; j < n_systems; ++j) {
                double dm = metric.at(i, k) - metric.at(j, k);
                double dh = human.at(i, k) - human.at(j, k);
                Pair p;
                p.abs_dm = std::abs(dm);
                p.order_correct = (dm > 0 && dh > 0) || (dm < 0 && dh < 0);
                p.human_tie = dh == 0.0;
                pairs.push_back(p);
            }
        }
    }
    const double total = static_cast<double>(pairs.size());

    std::sort(pairs.begin(), pairs.end(),
              [](const Pair& a, const Pair& b) { return a.abs_dm < b.abs_dm; });
    std::vector<double> candidates;
    candidates.push_back(0.0);
    for (const Pair& p : pairs) {
        if (p.abs_dm != candidates.back()) candidates.push_back(p.abs_dm);
    }

    // Sweep epsilon upward: pairs enter the tie zone exactly when
    // epsilon >= |dm|. Counts update incrementally.
    std::size_t correct_order = 0;
    for (const Pair& p : pairs) correct_order += p.order_correct;
    std::size_t correct_tie = 0;
    std::size_t cursor = 0;

    TieCalibration best;
    best.accuracy = -1.0;
    best.pairs = pairs.size();
    for (double eps : candidates) {
        while (cursor < pairs.size() && pairs[cursor].abs_dm <= eps) {
            correct_order -= pairs[cursor].order_correct;
            correct_tie += pairs[cursor].human_tie;
            ++cursor;
        }
        double accuracy =
            static_cast<double>(correct_order + correct_tie) / total;
        if (accuracy > best.accuracy) {
            best.accuracy = accuracy;
            best.epsilon = eps;
        }
    }
    return best;
}

SpanCounts span_overlap(const std::vector<CharSpan>& predicted,
                        const std::vector<CharSpan>& gold,
                        const SeverityMap& severity_map,
                        std::optional<std::size_t> target_length) {
    auto reduce = [&](const std::vector<CharSpan>& spans) {
        std::unordered_map<std::size_t, int> by_char;
        for (const CharSpan& span : spans) {
            if (span.start >= span.end) {
                throw Error("span has start >= end");
            }
            if (target_length && span.end > *target_length) {
                throw Error("span [" + std::to_string(span.start) + "," +
                            std::to_string(span.end) + ") exceeds target length " +
                            std::to_string(*target_length));
            }
            for (std::size_t c = span.start; c < span.end; ++c) {
                auto [it, inserted] = by_char.try_emplace(c, severity_rank(span.severity));
                if (!inserted && severity_rank(span.severity) > it->second) {
                    it->second = severity_rank(span.severity);
                }
            }
        }
        return by_char;
    };

    auto pred_chars = reduce(predicted);
    auto gold_chars = reduce(gold);

    SpanCounts counts;
    counts.predicted_chars = static_cast<double>(pred_chars.size());
    counts.gold_chars = static_cast<double>(gold_chars.size());
    for (const auto& [c, pred_rank] : pred_chars) {
        auto it = gold_chars.find(c);
        if (it == gold_chars.end()) continue;
        Severity pred_mapped = severity_map.map(static_cast<Severity>(pred_rank));
        Severity gold_sev = static_cast<Severity>(it->second);
        counts.matched_weight += (pred_mapped == gold_sev) ? 1.0 : 0.5;
    }
    return counts;
}

SpanMetrics span_metrics_from_counts(const SpanCounts& counts) {
    SpanMetrics m;
    m.counts = counts;
    m.precision = counts.predicted_chars > 0
                      ? counts.matched_weight / counts.predicted_chars
                      : 0.0;
    m.recall = counts.gold_chars > 0 ? counts.matched_weight / counts.gold_chars
                                     : 0.0;
    m.f1 = (m.precision + m.recall) > 0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

SpanMetrics span_f1(const std::vector<CharSpan>& predicted,
                    const std::vector<CharSpan>& gold,
                    const SeverityMap& severity_map,
                    std::optional<std::size_t> target_length) {
    return span_metrics_from_counts(
        span_overlap(predicted, gold, severity_map, target_length));
}

IaaResult inter_annotator_agreement(const std::vector<GoldAnnotation>& gold,
                                    int resamples, std::uint64_t seed) {
    std::map<std::pair<std::string, std::string>, std::vector<const GoldAnnotation*>>
        by_segment;
    for (const auto& g : gold) {
        by_segment[{g.item_id, g.system_id}].push_back(&g);
    }
    std::map<std::pair<std::string, std::string>, double> first_scores, second_scores;
    for (auto& [key, anns] : by_segment) {
        if (anns.size() != 2) {
            throw Error("inter-annotator agreement needs exactly two annotators for (" +
                        key.first + ", " + key.second + "), got " +
                        std::to_string(anns.size()));
        }
        if (anns[1]->annotator_id < anns[0]->annotator_id) {
            std::swap(anns[0], anns[1]);
        }
        first_scores[key] = anns[0]->score;
        second_scores[key] = anns[1]->score;
    }
    ScoreMatrix human = build_score_matrix(first_scores);
    ScoreMatrix metric = build_score_matrix(second_scores);
    require_complete(human, "annotator-1");
    require_complete(metric, "annotator-2");

    IaaResult result;
    result.systems = human.systems.size();
    result.items = human.items.size();
    result.spa = soft_pairwise_accuracy(metric, human, resamples, seed);
    result.segment_accuracy = tie_calibrated_accuracy(metric, human);
    return result;
}

}  // namespace mtqe
