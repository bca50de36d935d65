#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emoforge/boosting.hpp"
#include "emoforge/evalkit.hpp"

namespace emoforge::pipeline {

using evalkit::FeatureKind;
using evalkit::ModelKind;
using features::DenseVector;
using neural::Tensor;
using textprep::TokenSeq;

// Fitted feature transform bundled into a saved pipeline. Exactly one of
// the trailing members is populated, matching `kind`.
struct Featurizer {
    FeatureKind kind = FeatureKind::count;
    int dim = 0;
    int repeat_positions = 4;  // sequence length for non-sequential features
    features::Vocabulary vocab;                      // count, tfidf
    features::TfidfModel tfidf;                      // tfidf
    features::EmbeddingTable table;                  // skipgram, subword
    std::optional<neural::ContextualModel> encoder;  // contextual

    bool sequential() const {
        return kind == FeatureKind::skipgram || kind == FeatureKind::subword;
    }
    DenseVector vector(const TokenSeq& tokens);
    Tensor sequence(const TokenSeq& tokens);
    nlohmann::ordered_json to_json();
    static Featurizer from_json(const nlohmann::ordered_json& j);
};

struct TrainData {
    std::vector<TokenSeq> train_docs, val_docs;
    std::vector<int> train_y, val_y;
};

Featurizer fit_featurizer(FeatureKind kind, const TrainData& d,
                          const evalkit::GridParams& p, uint64_t seed);

// One trained feature-model cell saved as a single JSON artifact. The
// contextual ensemble keeps its encoder inside the classifier and leaves
// the featurizer unused.
struct Pipeline {
    FeatureKind feature = FeatureKind::count;
    ModelKind model = ModelKind::nb;
    bool balanced = false;
    int classes = corpus::kNumLabels;
    Featurizer featurizer;
    std::unique_ptr<learners::WeakLearner> learner;      // dt, rf, svm, nb
    std::optional<boosting::BoostedEnsemble> committee;  // ensemble over plain features
    std::optional<neural::ModelGraph> graph;             // rnn, lstm
    int hidden = 0;                                      // recurrent state size
    std::optional<neural::HybridModel> hybrid;
    std::optional<boosting::EmobangModel> emobang;       // ensemble over contextual
    nlohmann::ordered_json manifest = nlohmann::ordered_json::object();

    int predict(const TokenSeq& tokens);
    nlohmann::ordered_json to_json();
    static Pipeline from_json(const nlohmann::ordered_json& j);
};

Pipeline fit_pipeline(FeatureKind feature, ModelKind model, bool balance,
                      const TrainData& d, const evalkit::GridParams& p, uint64_t seed);

}  // namespace emoforge::pipeline
