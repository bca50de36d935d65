#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "emoforge/common.hpp"
#include "emoforge/features.hpp"
#include "json.hpp"

namespace emoforge::learners {

using features::DenseVector;

enum class WeakLearnerKind {
    naive_bayes,
    decision_tree,
    random_forest,
    linear_svm,
    softmax_head,
};

std::string_view learner_kind_name(WeakLearnerKind kind);
WeakLearnerKind parse_learner_kind(std::string_view name);

struct LearnerConfig {
    int classes = 8;

    double nb_alpha = 1.0;

    int tree_max_depth = 20;
    double tree_min_leaf_weight = 1e-6;

    int forest_trees = 100;
    bool forest_bootstrap = true;

    int svm_epochs = 10;
    double svm_lambda = 1e-4;
    double svm_lr = 0.1;

    int head_epochs = 60;
    double head_lr = 1e-3;
    int head_batch = 32;
    double head_dropout = 0.1;
};

// Index of the largest entry; ties resolve to the lower index.
int argmax_index(const DenseVector& values);

class WeakLearner {
public:
    virtual ~WeakLearner() = default;
    virtual WeakLearnerKind kind() const = 0;
    virtual int input_dim() const = 0;
    virtual int classes() const = 0;
    // True when training saw a single class and the learner is a constant.
    virtual bool degenerate() const { return false; }
    virtual DenseVector predict_distribution(const DenseVector& x) const = 0;
    virtual nlohmann::ordered_json to_json() const = 0;

    int predict(const DenseVector& x) const { return argmax_index(predict_distribution(x)); }
};

// Sample weights are treated as a distribution over rows: fits normalize
// them to sum 1, so scaling all weights by a positive constant changes
// nothing and duplicating a row equals doubling its weight.
std::unique_ptr<WeakLearner> fit_weak_learner(WeakLearnerKind kind,
                                              const std::vector<DenseVector>& X,
                                              const std::vector<int>& y,
                                              const std::vector<double>& w,
                                              const LearnerConfig& config,
                                              uint64_t seed);

std::unique_ptr<WeakLearner> learner_from_json(const nlohmann::ordered_json& j);

}  // namespace emoforge::learners
