#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emsynth/detector.hpp"
#include "json.hpp"

namespace emsynth {

// Normalized Euclidean distance over peak vectors, bounded in [0,1].
// Population variances; throws when both inputs are constant.
double ned(const PeakVector& a, const PeakVector& b);

struct SummaryStats {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};

SummaryStats summarize(std::vector<double> values);

struct SimilarityScores {
    std::string set_name;
    std::vector<double> scores; // one per synthetic trace
    SummaryStats summary;
};

// For every synthetic peak vector and every real set: mean NED of the
// `neighbors` nearest members. Box-plot material for judging how close
// the synthetic signals sit to each real population.
std::vector<SimilarityScores> similarity_study(
    const std::vector<PeakVector>& synthetic,
    const std::vector<std::pair<std::string, std::vector<PeakVector>>>& real_sets,
    int neighbors = 25);

enum class Experiment { real_trained, synthetic_trained };
enum class AnomalyCase { easy, hard };

std::string_view to_string(Experiment e);
std::string_view to_string(AnomalyCase c);

// One cross-validation fold: disjoint train/test id lists per class.
struct FoldPlan {
    int fold_index = 0;
    std::vector<int> train_a;
    std::vector<int> train_b;
    std::vector<int> test_a;
    std::vector<int> test_b;
    std::vector<int> test_anomalous;
};

// Seeded shuffle then contiguous slicing. Test slices are disjoint across
// folds; the train window follows each test slice circularly.
std::vector<FoldPlan> make_fold_plans(int n_benign, int n_anomalous,
                                      int train_per_class, int test_per_class,
                                      int anomalous_per_fold, int folds,
                                      std::uint64_t seed);

struct RocPoint {
    double fpr = 0, tpr = 0;
};

struct FoldMetrics {
    double auc = 0, best_acc = 0, best_f1 = 0, best_tau = 0;
    std::vector<RocPoint> roc; // one point per tau, sorted by fpr
};

struct EvalReport {
    Experiment experiment = Experiment::real_trained;
    AnomalyCase anomaly_case = AnomalyCase::easy;
    int kappa = 10;
    double tau_step = 0.001;
    std::uint64_t fold_seed = 0;
    std::vector<FoldMetrics> folds;
    double avg_auc = 0, avg_acc = 0, avg_f1 = 0;

    nlohmann::json to_json() const;
    std::string roc_csv() const; // fold,tau index implied; fpr,tpr rows
};

// The five trace populations of the study. Path cycle counts come from the
// benign programs; every signal is reduced to those lengths before scoring.
struct Corpus {
    std::vector<Trace> real_a;
    std::vector<Trace> real_b;
    std::vector<Trace> synthetic_b;
    std::vector<Trace> malicious_easy;
    std::vector<Trace> malicious_hard;
    int cycles_a = 0;
    int cycles_b = 0;
    int samples_per_cycle = 0;
};

struct EvalOptions {
    int kappa = 10;
    double tau_step = 0.001;
    std::uint64_t fold_seed = 7;
};

// 10-fold cross-validated detection experiment: 450 train + 50 test per
// benign class and 100 anomalous test traces per fold. Under
// synthetic_trained the benign-B training traces come from the synthetic
// set while all test traces stay simulated-real.
EvalReport run_experiment(const Corpus& corpus, Experiment experiment,
                          AnomalyCase anomaly_case,
                          const EvalOptions& options = {});

// Trapezoidal area under (fpr, tpr) points; (0,0) and (1,1) are implied.
double trapezoid_auc(std::vector<RocPoint> points);

} // namespace emsynth
