#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "emoforge/boosting.hpp"
#include "emoforge/corpus.hpp"
#include "emoforge/features.hpp"
#include "emoforge/learners.hpp"
#include "emoforge/neural.hpp"

namespace emoforge::evalkit {

using features::DenseVector;

// counts[true][pred]; any class count K >= 1.
struct ConfusionMatrix {
    int classes = 0;
    std::vector<std::vector<long long>> counts;

    long long total() const;
    long long trace() const;
    nlohmann::ordered_json to_json() const;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true,
                                 const std::vector<int>& y_pred, int classes);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long long support = 0;    // row sum: samples truly in the class
    long long predicted = 0;  // column sum
    bool flagged = false;     // some ratio was 0/0 and got reported as 0
};

// Macro averages run over classes with support > 0 only; 0/0 ratios are
// reported as 0 with the class flagged.
struct MetricsReport {
    std::string averaging = "macro";
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::vector<ClassMetrics> per_class;
    double seconds = 0.0;        // training wall clock, filled by the runner
    std::string manifest_hash;   // empty outside grid runs

    nlohmann::ordered_json to_json() const;
};

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm);

enum class FeatureKind { count = 0, tfidf, skipgram, subword, contextual };
enum class ModelKind { dt = 0, rf, svm, nb, rnn, lstm, hybrid, ensemble };

inline constexpr int kNumFeatures = 5;
inline constexpr int kNumModels = 8;

const std::array<FeatureKind, kNumFeatures>& all_features();
const std::array<ModelKind, kNumModels>& all_models();
std::string_view feature_name(FeatureKind f);
std::string_view model_name(ModelKind m);
FeatureKind parse_feature(std::string_view name);  // throws usage error
ModelKind parse_model(std::string_view name);      // throws usage error

struct GridSpec {
    std::vector<FeatureKind> features;  // non-empty; duplicates ignored
    std::vector<ModelKind> models;      // non-empty; duplicates ignored
    uint64_t seed = 0;
    bool balance = false;
};

// Hyperparameters shared by every grid cell. Class counts and seeds inside
// the nested configs are overridden by the runner: the corpus label set
// fixes the classes and each cell derives its own seed from (spec seed,
// feature, model). wall_clock=false pins every seconds field to 0 so rerun
// outputs are byte-identical.
struct GridParams {
    features::SkipgramConfig skipgram;
    features::SubwordConfig subword;
    neural::EncoderConfig encoder;
    neural::TrainConfig encoder_train;
    neural::HybridConfig hybrid;
    neural::TrainConfig net_train;  // rnn and lstm cells
    int rnn_hidden = 64;
    learners::LearnerConfig learner;
    boosting::BoostConfig boost;
    features::SmoteConfig smote;
    size_t vocab_min_freq = 1;
    int repeat_positions = 4;  // sequence length for non-sequential features
    bool wall_clock = true;
};

// Round-trippable hyperparameter serialization. params_from_json starts
// from the defaults, overlays the keys present and rejects unknown ones.
nlohmann::ordered_json params_to_json(const GridParams& p);
GridParams params_from_json(const nlohmann::ordered_json& j);

struct GridRow {
    FeatureKind feature = FeatureKind::count;
    ModelKind model = ModelKind::dt;
    bool balanced = false;
    bool ok = true;
    std::string error;          // set when !ok
    bool interpretation = false;  // sequence model fed a non-sequential feature
    MetricsReport metrics;      // test split
    double featurize_seconds = 0.0;
    double train_seconds = 0.0;
    double predict_seconds = 0.0;

    nlohmann::ordered_json to_json() const;
};

struct GridResult {
    std::string averaging = "macro";
    nlohmann::ordered_json manifest;
    std::string manifest_hash;
    std::vector<GridRow> rows;

    nlohmann::ordered_json to_json() const;
    // Columns: feature, model, balanced, precision, recall, f1, accuracy,
    // seconds (training wall clock). Failed cells leave the numbers empty.
    std::string to_csv() const;
};

// One row per (feature, model) pair in canonical enum order. Cell failures
// are recorded in the row, never aborting the grid.
GridResult run_grid(const corpus::Corpus& corpus, const GridSpec& spec,
                    const GridParams& params = {});

struct BalanceDelta {
    FeatureKind feature = FeatureKind::count;
    ModelKind model = ModelKind::dt;
    bool ok = false;  // both runs of the cell succeeded
    double d_precision = 0.0;  // balanced minus unbalanced
    double d_recall = 0.0;
    double d_f1 = 0.0;
    double d_accuracy = 0.0;
};

struct BalanceResult {
    std::string averaging = "macro";
    nlohmann::ordered_json manifest;
    std::string manifest_hash;
    std::vector<GridRow> rows;  // unbalanced then balanced, per cell
    std::vector<BalanceDelta> deltas;

    nlohmann::ordered_json to_json() const;
    std::string to_csv() const;
};

// Runs every cell twice, SMOTE off then on (training split only).
BalanceResult balancing_report(const corpus::Corpus& corpus, const GridSpec& spec,
                               const GridParams& params = {});

}  // namespace emoforge::evalkit
