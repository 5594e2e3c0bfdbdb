#include "emsynth/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "emsynth/errors.hpp"
#include "emsynth/rng.hpp"

namespace emsynth {

namespace {

double population_variance(const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) /
                        static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(v.size());
}

std::vector<int> shuffled_ids(int n, std::mt19937_64& rng) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(i) + 1));
        std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
    }
    return ids;
}

double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

} // namespace

double ned(const PeakVector& a, const PeakVector& b) {
    if (a.peaks.size() != b.peaks.size()) {
        throw DimensionError("peak vectors of different lengths");
    }
    if (a.peaks.empty()) throw ParameterError("empty peak vectors");
    const double denom = population_variance(a.peaks) + population_variance(b.peaks);
    if (denom == 0.0) {
        throw Error("normalized distance undefined for two constant vectors");
    }
    std::vector<double> diff(a.peaks.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.peaks[i] - b.peaks[i];
    return std::sqrt(0.5 * population_variance(diff) / denom);
}

SummaryStats summarize(std::vector<double> values) {
    SummaryStats s;
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile(values, 0.25);
    s.median = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
    return s;
}

std::vector<SimilarityScores> similarity_study(
    const std::vector<PeakVector>& synthetic,
    const std::vector<std::pair<std::string, std::vector<PeakVector>>>& real_sets,
    int neighbors) {
    if (neighbors < 1) throw ParameterError("neighbors must be >= 1");
    if (synthetic.empty()) throw ParameterError("synthetic set is empty");
    for (const auto& [name, set] : real_sets) {
        if (set.size() < static_cast<std::size_t>(neighbors)) {
            throw ParameterError("set '" + name + "' has fewer than " +
                                 std::to_string(neighbors) + " traces");
        }
    }

    std::vector<SimilarityScores> out;
    out.reserve(real_sets.size());
    for (const auto& [name, set] : real_sets) {
        SimilarityScores scores;
        scores.set_name = name;
        scores.scores.reserve(synthetic.size());
        std::vector<double> distances(set.size());
        for (const PeakVector& s : synthetic) {
            for (std::size_t i = 0; i < set.size(); ++i) distances[i] = ned(s, set[i]);
            std::partial_sort(distances.begin(), distances.begin() + neighbors,
                              distances.end());
            const double mean =
                std::accumulate(distances.begin(), distances.begin() + neighbors, 0.0) /
                static_cast<double>(neighbors);
            scores.scores.push_back(mean);
        }
        scores.summary = summarize(scores.scores);
        out.push_back(std::move(scores));
    }
    return out;
}

std::string_view to_string(Experiment e) {
    return e == Experiment::real_trained ? "real_trained" : "synthetic_trained";
}

std::string_view to_string(AnomalyCase c) {
    return c == AnomalyCase::easy ? "easy" : "hard";
}

std::vector<FoldPlan> make_fold_plans(int n_benign, int n_anomalous,
                                      int train_per_class, int test_per_class,
                                      int anomalous_per_fold, int folds,
                                      std::uint64_t seed) {
    if (folds < 1 || train_per_class < 1 || test_per_class < 1 || anomalous_per_fold < 1) {
        throw PlanError("fold plan sizes must be positive");
    }
    if (test_per_class * folds > n_benign) {
        throw PlanError("need " + std::to_string(test_per_class * folds) +
                        " benign traces per class for disjoint test slices, have " +
                        std::to_string(n_benign));
    }
    if (test_per_class + train_per_class > n_benign) {
        throw PlanError("need " + std::to_string(test_per_class + train_per_class) +
                        " benign traces per class per fold, have " +
                        std::to_string(n_benign));
    }
    if (anomalous_per_fold * folds > n_anomalous) {
        throw PlanError("need " + std::to_string(anomalous_per_fold * folds) +
                        " anomalous traces, have " + std::to_string(n_anomalous));
    }

    std::mt19937_64 rng_a(combine_seed(seed, fnv1a64("fold-a")));
    std::mt19937_64 rng_b(combine_seed(seed, fnv1a64("fold-b")));
    std::mt19937_64 rng_m(combine_seed(seed, fnv1a64("fold-anomalous")));
    const std::vector<int> perm_a = shuffled_ids(n_benign, rng_a);
    const std::vector<int> perm_b = shuffled_ids(n_benign, rng_b);
    const std::vector<int> perm_m = shuffled_ids(n_anomalous, rng_m);

    std::vector<FoldPlan> plans;
    plans.reserve(static_cast<std::size_t>(folds));
    for (int f = 0; f < folds; ++f) {
        FoldPlan plan;
        plan.fold_index = f;
        const int test_start = f * test_per_class;
        for (int i = 0; i < test_per_class; ++i) {
            plan.test_a.push_back(perm_a[static_cast<std::size_t>(test_start + i)]);
            plan.test_b.push_back(perm_b[static_cast<std::size_t>(test_start + i)]);
        }
        for (int i = 0; i < train_per_class; ++i) {
            const int idx = (test_start + test_per_class + i) % n_benign;
            plan.train_a.push_back(perm_a[static_cast<std::size_t>(idx)]);
            plan.train_b.push_back(perm_b[static_cast<std::size_t>(idx)]);
        }
        for (int i = 0; i < anomalous_per_fold; ++i) {
            plan.test_anomalous.push_back(
                perm_m[static_cast<std::size_t>(f * anomalous_per_fold + i)]);
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

double trapezoid_auc(std::vector<RocPoint> points) {
    points.push_back(RocPoint{0.0, 0.0});
    points.push_back(RocPoint{1.0, 1.0});
    std::sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& b) {
        return a.fpr != b.fpr ? a.fpr < b.fpr : a.tpr < b.tpr;
    });
    double auc = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        auc += (points[i].fpr - points[i - 1].fpr) *
               (points[i].tpr + points[i - 1].tpr) * 0.5;
    }
    return auc;
}

namespace {

struct ScoredTrace {
    double max_p = 0.0; // largest per-path p; normal iff max_p > tau
    bool anomalous = false;
};

FoldMetrics evaluate_fold(const std::vector<ScoredTrace>& scored, double tau_step) {
    FoldMetrics metrics;
    const double positives = static_cast<double>(
        std::count_if(scored.begin(), scored.end(),
                      [](const ScoredTrace& t) { return t.anomalous; }));
    const double negatives = static_cast<double>(scored.size()) - positives;

    const int steps = static_cast<int>(std::llround(1.0 / tau_step));
    metrics.roc.reserve(static_cast<std::size_t>(steps) + 1);
    bool have_best = false;
    for (int s = 0; s <= steps; ++s) {
        const double tau = std::min(1.0, static_cast<double>(s) * tau_step);
        double tp = 0, fp = 0;
        for (const ScoredTrace& t : scored) {
            const bool flagged = t.max_p <= tau;
            if (flagged && t.anomalous) tp += 1;
            if (flagged && !t.anomalous) fp += 1;
        }
        const double fn = positives - tp;
        const double tn = negatives - fp;
        metrics.roc.push_back(RocPoint{fp / negatives, tp / positives});

        const double acc = (tp + tn) / (positives + negatives);
        const double f1 = (2 * tp + fp + fn) > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
        if (!have_best || acc > metrics.best_acc) {
            metrics.best_acc = acc;
            metrics.best_tau = tau;
            have_best = true;
        }
        metrics.best_f1 = std::max(metrics.best_f1, f1);
    }
    metrics.auc = trapezoid_auc(metrics.roc);
    std::sort(metrics.roc.begin(), metrics.roc.end(),
              [](const RocPoint& a, const RocPoint& b) {
                  return a.fpr != b.fpr ? a.fpr < b.fpr : a.tpr < b.tpr;
              });
    return metrics;
}

} // namespace

EvalReport run_experiment(const Corpus& corpus, Experiment experiment,
                          AnomalyCase anomaly_case, const EvalOptions& options) {
    constexpr int kFolds = 10;
    constexpr int kTrainPerClass = 450;
    constexpr int kTestPerClass = 50;
    constexpr int kAnomalousPerFold = 100;

    if (corpus.samples_per_cycle < 1 || corpus.cycles_a < 1 || corpus.cycles_b < 1) {
        throw PlanError("corpus is missing sampling metadata");
    }
    const std::vector<Trace>& anomalous = anomaly_case == AnomalyCase::easy
                                              ? corpus.malicious_easy
                                              : corpus.malicious_hard;
    const std::vector<Trace>& train_b_source = experiment == Experiment::real_trained
                                                   ? corpus.real_b
                                                   : corpus.synthetic_b;
    const int n_benign = static_cast<int>(
        std::min({corpus.real_a.size(), corpus.real_b.size(), train_b_source.size()}));
    const std::vector<FoldPlan> plans =
        make_fold_plans(n_benign, static_cast<int>(anomalous.size()), kTrainPerClass,
                        kTestPerClass, kAnomalousPerFold, kFolds, options.fold_seed);

    // Reduce every population to both benign path lengths once.
    auto peaks_for = [&](const std::vector<Trace>& traces, int cycles) {
        std::vector<PeakVector> out;
        out.reserve(traces.size());
        for (const Trace& t : traces) {
            out.push_back(preprocess(t, cycles, corpus.samples_per_cycle));
        }
        return out;
    };
    const bool same_cycles = corpus.cycles_a == corpus.cycles_b;
    const std::vector<PeakVector> test_a_a = peaks_for(corpus.real_a, corpus.cycles_a);
    const std::vector<PeakVector> test_a_b =
        same_cycles ? test_a_a : peaks_for(corpus.real_a, corpus.cycles_b);
    const std::vector<PeakVector> test_b_b = peaks_for(corpus.real_b, corpus.cycles_b);
    const std::vector<PeakVector> test_b_a =
        same_cycles ? test_b_b : peaks_for(corpus.real_b, corpus.cycles_a);
    const std::vector<PeakVector>& train_a_peaks = test_a_a;
    const std::vector<PeakVector> train_b_peaks =
        experiment == Experiment::real_trained ? test_b_b
                                               : peaks_for(train_b_source, corpus.cycles_b);
    const std::vector<PeakVector> anom_a = peaks_for(anomalous, corpus.cycles_a);
    const std::vector<PeakVector> anom_b =
        same_cycles ? anom_a : peaks_for(anomalous, corpus.cycles_b);

    EvalReport report;
    report.experiment = experiment;
    report.anomaly_case = anomaly_case;
    report.kappa = options.kappa;
    report.tau_step = options.tau_step;
    report.fold_seed = options.fold_seed;

    for (const FoldPlan& plan : plans) {
        std::vector<PeakVector> xa, xb;
        xa.reserve(plan.train_a.size());
        xb.reserve(plan.train_b.size());
        for (int id : plan.train_a) xa.push_back(train_a_peaks[static_cast<std::size_t>(id)]);
        for (int id : plan.train_b) xb.push_back(train_b_peaks[static_cast<std::size_t>(id)]);

        // Baseline scores per path (self-excluded), already sorted.
        const std::vector<Baseline> baselines =
            fingerprint({BenignSet{0, xa}, BenignSet{1, xb}}, options.kappa);

        auto score_against = [&](const std::vector<PeakVector>& qa,
                                 const std::vector<PeakVector>& qb) {
            const std::vector<double> sa = strangeness(xa, qa, options.kappa);
            const std::vector<double> sb = strangeness(xb, qb, options.kappa);
            std::vector<double> max_p(sa.size());
            for (std::size_t i = 0; i < sa.size(); ++i) {
                max_p[i] = std::max(transduction_p(baselines[0].scores, sa[i]),
                                    transduction_p(baselines[1].scores, sb[i]));
            }
            return max_p;
        };

        auto pick = [](const std::vector<PeakVector>& all, const std::vector<int>& ids) {
            std::vector<PeakVector> out;
            out.reserve(ids.size());
            for (int id : ids) out.push_back(all[static_cast<std::size_t>(id)]);
            return out;
        };

        std::vector<ScoredTrace> scored;
        scored.reserve(static_cast<std::size_t>(2 * kTestPerClass + kAnomalousPerFold));
        for (double p : score_against(pick(test_a_a, plan.test_a), pick(test_a_b, plan.test_a))) {
            scored.push_back(ScoredTrace{p, false});
        }
        for (double p : score_against(pick(test_b_a, plan.test_b), pick(test_b_b, plan.test_b))) {
            scored.push_back(ScoredTrace{p, false});
        }
        for (double p : score_against(pick(anom_a, plan.test_anomalous),
                                      pick(anom_b, plan.test_anomalous))) {
            scored.push_back(ScoredTrace{p, true});
        }
        report.folds.push_back(evaluate_fold(scored, options.tau_step));
    }

    for (const FoldMetrics& fold : report.folds) {
        report.avg_auc += fold.auc;
        report.avg_acc += fold.best_acc;
        report.avg_f1 += fold.best_f1;
    }
    const double n = static_cast<double>(report.folds.size());
    report.avg_auc /= n;
    report.avg_acc /= n;
    report.avg_f1 /= n;
    return report;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["experiment"] = std::string(to_string(experiment));
    j["anomaly_case"] = std::string(to_string(anomaly_case));
    j["kappa"] = kappa;
    j["tau_step"] = tau_step;
    j["fold_seed"] = fold_seed;
    j["averages"] = {{"auc", avg_auc}, {"acc", avg_acc}, {"f1", avg_f1}};
    nlohmann::json folds_json = nlohmann::json::array();
    for (const FoldMetrics& fold : folds) {
        folds_json.push_back({{"auc", fold.auc},
                              {"best_acc", fold.best_acc},
                              {"best_f1", fold.best_f1},
                              {"best_tau", fold.best_tau}});
    }
    j["folds"] = std::move(folds_json);
    return j;
}

std::string EvalReport::roc_csv() const {
    std::string out = "fold,fpr,tpr\n";
    char buf[64];
    for (std::size_t f = 0; f < folds.size(); ++f) {
        for (const RocPoint& p : folds[f].roc) {
            std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f\n", f, p.fpr, p.tpr);
            out += buf;
        }
    }
    return out;
}

} // namespace emsynth
