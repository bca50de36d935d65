#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "emoforge/learners.hpp"
#include "emoforge/neural.hpp"

namespace emoforge::boosting {

using features::DenseVector;
using learners::WeakLearner;
using textprep::TokenSeq;

struct BoostConfig {
    int rounds = 10;
    int classes = 8;
    int max_rejects = 3;  // consecutive rejected rounds before giving up
    double alpha_cap = std::log(1e10);
    uint64_t seed = 0;
};

struct BoostMember {
    double alpha = 0.0;
    std::unique_ptr<WeakLearner> learner;
};

struct BoostedEnsemble {
    BoostConfig config;
    std::vector<BoostMember> members;

    // Per-class vote mass Sum_t alpha_t * I(h_t(x) = j).
    DenseVector vote_scores(const DenseVector& x) const;
    // Argmax of the vote; ties resolve to the lower class index.
    int predict(const DenseVector& x) const;

    nlohmann::ordered_json to_json() const;
    static BoostedEnsemble from_json(const nlohmann::ordered_json& j);
};

// Sum of the weights of misclassified samples (hard argmax predictions).
double weighted_error(const WeakLearner& h, const std::vector<DenseVector>& X,
                      const std::vector<int>& y, const std::vector<double>& w);

// ln((1-E)/E) + ln(K-1), capped; nullopt signals a rejected round
// (E at or beyond the chance line 1 - 1/K).
std::optional<double> alpha_from_error(double error, int classes, double cap);

// Correctly classified samples shrink by e^{-alpha}; the rest keep their
// weight; the result is renormalized to sum 1.
void update_weights(std::vector<double>& w, const WeakLearner& h,
                    const std::vector<DenseVector>& X, const std::vector<int>& y,
                    double alpha);

using WeakFactory = std::function<std::unique_ptr<WeakLearner>(
    const std::vector<DenseVector>& X, const std::vector<int>& y,
    const std::vector<double>& w, uint64_t round_seed)>;

BoostedEnsemble boost_fit(const WeakFactory& factory,
                          const std::vector<DenseVector>& X,
                          const std::vector<int>& y, const BoostConfig& config);

struct EmobangConfig {
    neural::EncoderConfig encoder;
    neural::TrainConfig encoder_train;
    learners::LearnerConfig head;
    BoostConfig boost;
    bool balance = false;
    features::SmoteConfig smote;
    size_t vocab_min_freq = 1;
};

// Frozen contextual encoder plus a boosted committee of softmax heads over
// its pooled sentence embeddings.
struct EmobangModel {
    neural::ContextualModel encoder;
    BoostedEnsemble ensemble;
    nlohmann::ordered_json manifest;

    DenseVector embed(const TokenSeq& tokens);
    int predict(const TokenSeq& tokens);

    nlohmann::ordered_json to_json();
    static EmobangModel from_json(const nlohmann::ordered_json& j);
};

EmobangModel fit_emobang_ensemble(const std::vector<TokenSeq>& train_docs,
                                  const std::vector<int>& train_labels,
                                  const std::vector<TokenSeq>& val_docs,
                                  const std::vector<int>& val_labels,
                                  const EmobangConfig& config);

}  // namespace emoforge::boosting
