#include "emsynth/detector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

#include "emsynth/errors.hpp"
#include "emsynth/rng.hpp"

namespace emsynth {

namespace {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

// Sum of the kappa smallest distances, accumulated in ascending order so
// the result does not depend on how the candidates were produced.
double knn_sum(std::vector<double>& distances, int kappa) {
    std::partial_sort(distances.begin(), distances.begin() + kappa, distances.end());
    double sum = 0.0;
    for (int i = 0; i < kappa; ++i) sum += distances[i];
    return sum;
}

void check_same_length(const std::vector<PeakVector>& vectors, std::size_t want) {
    for (const PeakVector& v : vectors) {
        if (v.peaks.size() != want) {
            throw DimensionError("peak vectors of length " + std::to_string(want) +
                                 " and " + std::to_string(v.peaks.size()) +
                                 " cannot be compared");
        }
    }
}

} // namespace

PeakVector preprocess(const Trace& trace, int path_cycles, int samples_per_cycle) {
    if (path_cycles < 1) throw ParameterError("path_cycles must be >= 1");
    if (samples_per_cycle < 1) throw ParameterError("samples_per_cycle must be >= 1");

    PeakVector out;
    out.path_cycles = path_cycles;
    out.peaks.resize(static_cast<std::size_t>(path_cycles));
    for (int c = 0; c < path_cycles; ++c) {
        const std::size_t begin = static_cast<std::size_t>(c) *
                                  static_cast<std::size_t>(samples_per_cycle);
        double peak = 0.0; // zero-padding for short traces
        bool have = false;
        for (int t = 0; t < samples_per_cycle; ++t) {
            const std::size_t idx = begin + static_cast<std::size_t>(t);
            if (idx >= trace.samples.size()) break;
            const double v = trace.samples[idx];
            if (!have || v > peak) {
                peak = v;
                have = true;
            }
        }
        out.peaks[static_cast<std::size_t>(c)] = peak;
    }
    return out;
}

std::vector<double> strangeness(const std::vector<PeakVector>& benign,
                                const std::vector<PeakVector>& queries, int kappa) {
    if (benign.empty()) throw ParameterError("benign set is empty");
    if (kappa < 1 || static_cast<std::size_t>(kappa) > benign.size()) {
        throw ParameterError("kappa must be in [1, |benign|]");
    }
    const std::size_t dim = benign.front().peaks.size();
    check_same_length(benign, dim);
    check_same_length(queries, dim);

    std::vector<double> scores;
    scores.reserve(queries.size());
    std::vector<double> distances(benign.size());
    for (const PeakVector& q : queries) {
        for (std::size_t i = 0; i < benign.size(); ++i) {
            distances[i] = euclidean(benign[i].peaks, q.peaks);
        }
        scores.push_back(knn_sum(distances, kappa));
    }
    return scores;
}

std::string peak_set_digest(const std::vector<PeakVector>& vectors) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const PeakVector& v : vectors) {
        for (double x : v.peaks) {
            h = fnv1a64_u64(std::bit_cast<std::uint64_t>(x), h);
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<Baseline> fingerprint(const std::vector<BenignSet>& benign_sets,
                                  int kappa) {
    if (kappa < 1) throw ParameterError("kappa must be >= 1");
    std::vector<Baseline> baselines;
    baselines.reserve(benign_sets.size());
    for (const BenignSet& set : benign_sets) {
        const std::vector<PeakVector>& X = set.vectors;
        if (X.size() <= static_cast<std::size_t>(kappa)) {
            throw ParameterError("benign set for path " + std::to_string(set.path_id) +
                                 " needs more than kappa=" + std::to_string(kappa) +
                                 " members");
        }
        const std::size_t dim = X.front().peaks.size();
        check_same_length(X, dim);

        Baseline baseline;
        baseline.path_id = set.path_id;
        baseline.kappa = kappa;
        baseline.source_size = X.size();
        baseline.source_digest = peak_set_digest(X);
        baseline.scores.reserve(X.size());
        std::vector<double> distances;
        distances.reserve(X.size() - 1);
        for (std::size_t j = 0; j < X.size(); ++j) {
            distances.clear();
            for (std::size_t i = 0; i < X.size(); ++i) {
                if (i == j) continue; // drop the guaranteed zero self-distance
                distances.push_back(euclidean(X[i].peaks, X[j].peaks));
            }
            baseline.scores.push_back(knn_sum(distances, kappa));
        }
        std::sort(baseline.scores.begin(), baseline.scores.end());
        baselines.push_back(std::move(baseline));
    }
    return baselines;
}

double transduction_p(const std::vector<double>& sorted_scores, double score,
                      PValueRule rule) {
    const std::size_t size = sorted_scores.size();
    if (rule == PValueRule::rank_above) {
        const std::size_t at_least = static_cast<std::size_t>(
            sorted_scores.end() -
            std::lower_bound(sorted_scores.begin(), sorted_scores.end(), score));
        return static_cast<double>(1 + at_least) / static_cast<double>(1 + size);
    }
    const std::size_t strictly_above = static_cast<std::size_t>(
        sorted_scores.end() -
        std::upper_bound(sorted_scores.begin(), sorted_scores.end(), score));
    return static_cast<double>(1 + size - strictly_above) /
           static_cast<double>(1 + size);
}

Verdict detect(const PeakVector& q, const std::vector<Baseline>& baselines,
               const std::vector<BenignSet>& benign_sets, int kappa, double tau,
               PValueRule rule) {
    if (tau < 0.0 || tau > 1.0) throw ParameterError("tau must be in [0,1]");
    if (baselines.empty()) throw ParameterError("no baselines given");

    Verdict verdict;
    verdict.tau = tau;
    verdict.normal = false;
    for (const Baseline& baseline : baselines) {
        if (baseline.kappa != kappa) {
            throw ParameterError("kappa=" + std::to_string(kappa) +
                                 " does not match baseline kappa=" +
                                 std::to_string(baseline.kappa));
        }
        auto it = std::find_if(benign_sets.begin(), benign_sets.end(),
                               [&](const BenignSet& s) { return s.path_id == baseline.path_id; });
        if (it == benign_sets.end()) {
            throw ParameterError("no benign set for path " +
                                 std::to_string(baseline.path_id));
        }
        if (!baseline.source_digest.empty() &&
            peak_set_digest(it->vectors) != baseline.source_digest) {
            throw ParameterError("benign set for path " + std::to_string(baseline.path_id) +
                                 " is not the set the baseline was built from");
        }

        const double score = strangeness(it->vectors, {q}, kappa).front();
        const double p = transduction_p(baseline.scores, score, rule);
        const bool normal = p > tau;
        verdict.votes.push_back(PathVote{baseline.path_id, p, normal});
        if (normal) verdict.normal = true;
    }
    return verdict;
}

} // namespace emsynth
