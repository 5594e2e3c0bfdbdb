#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "emsynth/device_sim.hpp"

namespace emsynth {

// Per-cycle peak representation of a trace against a known benign length.
struct PeakVector {
    std::vector<double> peaks;
    int path_cycles = 0;

    bool operator==(const PeakVector&) const = default;
};

// Cuts (or zero-pads) the trace to path_cycles * samples_per_cycle samples
// and keeps the maximum amplitude of each consecutive cycle window.
PeakVector preprocess(const Trace& trace, int path_cycles, int samples_per_cycle);

// Sum of Euclidean distances to the kappa nearest members of X, one score
// per query, in query order. No self-exclusion: queries are treated as
// foreign observations even if they happen to equal members of X.
std::vector<double> strangeness(const std::vector<PeakVector>& benign,
                                const std::vector<PeakVector>& queries, int kappa);

// A benign peak-vector set for one execution path.
struct BenignSet {
    int path_id = 0;
    std::vector<PeakVector> vectors;
};

// Sorted self-strangeness scores of one benign set; the empirical
// distribution of normalcy for that path.
struct Baseline {
    int path_id = 0;
    std::vector<double> scores; // ascending
    int kappa = 0;
    std::size_t source_size = 0;
    std::string source_digest;
};

std::string peak_set_digest(const std::vector<PeakVector>& vectors);

// Self-strangeness of every member of each benign set (own zero distance
// excluded from the neighbor pool), sorted ascending. Needs |X| > kappa.
std::vector<Baseline> fingerprint(const std::vector<BenignSet>& benign_sets,
                                  int kappa);

// Orientation of the transductive p-value. rank_above is the standard
// reading: p is the fraction of baseline scores at least as strange as the
// query, so high strangeness gives a small p. rank_below mirrors it (rank
// from the typical side) and is kept selectable for comparison only; under
// it the most alien queries come out looking maximally normal.
enum class PValueRule { rank_above, rank_below };

// p-value of score against an ascending-sorted baseline. Ties count toward
// normalcy under rank_above.
double transduction_p(const std::vector<double>& sorted_scores, double score,
                      PValueRule rule = PValueRule::rank_above);

struct PathVote {
    int path_id = 0;
    double p_value = 0.0;
    bool normal = false;
};

struct Verdict {
    bool normal = false;
    std::vector<PathVote> votes;
    double tau = 0.0;
};

// Scores q against every path's benign set, votes per path (normal iff
// p > tau) and flags q normal if any path accepts it.
Verdict detect(const PeakVector& q, const std::vector<Baseline>& baselines,
               const std::vector<BenignSet>& benign_sets, int kappa, double tau,
               PValueRule rule = PValueRule::rank_above);

} // namespace emsynth
