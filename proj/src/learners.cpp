#include "emoforge/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "emoforge/neural.hpp"

namespace emoforge::learners {

namespace {

constexpr const char* kLearnerType = "weak_learner";

void check_dim(const DenseVector& x, int want) {
    if (static_cast<int>(x.size()) != want)
        throw usage_error("feature dimension mismatch: expected " +
                          std::to_string(want) + ", got " + std::to_string(x.size()));
}

nlohmann::ordered_json learner_header(WeakLearnerKind kind) {
    nlohmann::ordered_json j;
    j["version"] = neural::kModelVersion;
    j["type"] = kLearnerType;
    j["kind"] = std::string(learner_kind_name(kind));
    return j;
}

class DegenerateLearner : public WeakLearner {
public:
    DegenerateLearner(WeakLearnerKind kind, int dim, int classes, int label)
        : kind_(kind), dim_(dim), classes_(classes), label_(label) {}

    WeakLearnerKind kind() const override { return kind_; }
    int input_dim() const override { return dim_; }
    int classes() const override { return classes_; }
    bool degenerate() const override { return true; }

    DenseVector predict_distribution(const DenseVector& x) const override {
        check_dim(x, dim_);
        DenseVector p(classes_, 0.0);
        p[label_] = 1.0;
        return p;
    }

    nlohmann::ordered_json to_json() const override {
        auto j = learner_header(kind_);
        j["degenerate"] = true;
        j["dim"] = dim_;
        j["classes"] = classes_;
        j["label"] = label_;
        return j;
    }

private:
    WeakLearnerKind kind_;
    int dim_, classes_, label_;
};

// Multinomial Bayes over nonnegative features. Inputs with negative entries
// (pooled embeddings) are shifted by the per-dimension training minimum so
// count semantics still hold.
class NaiveBayesLearner : public WeakLearner {
public:
    NaiveBayesLearner() = default;

    NaiveBayesLearner(const std::vector<DenseVector>& X, const std::vector<int>& y,
                      const std::vector<double>& w, const LearnerConfig& cfg) {
        dim_ = static_cast<int>(X[0].size());
        classes_ = cfg.classes;
        shift_.assign(dim_, 0.0);
        for (int j = 0; j < dim_; ++j) {
            double mn = 0.0;
            for (const auto& row : X) mn = std::min(mn, row[j]);
            shift_[j] = -mn;
        }

        std::vector<double> mass(classes_, 0.0);
        std::vector<DenseVector> counts(classes_, DenseVector(dim_, 0.0));
        for (size_t i = 0; i < X.size(); ++i) {
            mass[y[i]] += w[i];
            for (int j = 0; j < dim_; ++j)
                counts[y[i]][j] += w[i] * (X[i][j] + shift_[j]);
        }

        log_prior_.assign(classes_, -std::numeric_limits<double>::infinity());
        log_cond_.assign(classes_, DenseVector(dim_, 0.0));
        for (int k = 0; k < classes_; ++k) {
            if (mass[k] <= 0.0) continue;
            log_prior_[k] = std::log(mass[k]);
            double total = 0.0;
            for (double c : counts[k]) total += c;
            const double denom = total + cfg.nb_alpha * dim_;
            for (int j = 0; j < dim_; ++j)
                log_cond_[k][j] = std::log((counts[k][j] + cfg.nb_alpha) / denom);
        }
    }

    WeakLearnerKind kind() const override { return WeakLearnerKind::naive_bayes; }
    int input_dim() const override { return dim_; }
    int classes() const override { return classes_; }

    DenseVector predict_distribution(const DenseVector& x) const override {
        check_dim(x, dim_);
        DenseVector score(classes_);
        for (int k = 0; k < classes_; ++k) {
            double s = log_prior_[k];
            if (std::isfinite(s))
                for (int j = 0; j < dim_; ++j)
                    s += (x[j] + shift_[j]) * log_cond_[k][j];
            score[k] = s;
        }
        const double mx = *std::max_element(score.begin(), score.end());
        DenseVector p(classes_);
        double z = 0.0;
        for (int k = 0; k < classes_; ++k) {
            p[k] = std::isfinite(score[k]) ? std::exp(score[k] - mx) : 0.0;
            z += p[k];
        }
        for (double& v : p) v /= z;
        return p;
    }

    nlohmann::ordered_json to_json() const override {
        auto j = learner_header(kind());
        j["dim"] = dim_;
        j["classes"] = classes_;
        j["shift"] = shift_;
        j["log_prior"] = nlohmann::ordered_json::array();
        for (double v : log_prior_)
            j["log_prior"].push_back(std::isfinite(v) ? nlohmann::ordered_json(v)
                                                      : nlohmann::ordered_json());
        j["log_cond"] = log_cond_;
        return j;
    }

    static std::unique_ptr<NaiveBayesLearner> from_json(const nlohmann::ordered_json& j) {
        auto m = std::make_unique<NaiveBayesLearner>();
        m->dim_ = j.at("dim");
        m->classes_ = j.at("classes");
        m->shift_ = j.at("shift").get<DenseVector>();
        for (const auto& v : j.at("log_prior"))
            m->log_prior_.push_back(v.is_null()
                                        ? -std::numeric_limits<double>::infinity()
                                        : v.get<double>());
        m->log_cond_ = j.at("log_cond").get<std::vector<DenseVector>>();
        return m;
    }

private:
    int dim_ = 0, classes_ = 0;
    DenseVector shift_, log_prior_;
    std::vector<DenseVector> log_cond_;
};

struct TreeNode {
    bool leaf = true;
    DenseVector dist;
    int feature = -1;
    double threshold = 0.0;
    std::unique_ptr<TreeNode> left, right;
};

DenseVector node_distribution(const std::vector<double>& mass) {
    double total = 0.0;
    for (double m : mass) total += m;
    DenseVector d(mass.size());
    for (size_t k = 0; k < mass.size(); ++k) d[k] = mass[k] / total;
    return d;
}

double gini_from_mass(const std::vector<double>& mass, double total) {
    double s = 0.0;
    for (double m : mass) {
        const double f = m / total;
        s += f * f;
    }
    return 1.0 - s;
}

// CART with weighted Gini. mtry < dim samples that many features per split
// (forest mode); mtry == dim scans all features in index order.
class TreeBuilder {
public:
    TreeBuilder(const std::vector<DenseVector>& X, const std::vector<int>& y,
                const std::vector<double>& w, const LearnerConfig& cfg, int mtry,
                Rng* rng)
        : X_(X), y_(y), w_(w), cfg_(cfg), mtry_(mtry), rng_(rng) {
        feats_.resize(X[0].size());
        for (size_t j = 0; j < feats_.size(); ++j) feats_[j] = static_cast<int>(j);
    }

    std::unique_ptr<TreeNode> build(std::vector<size_t> idx, int depth) {
        auto node = std::make_unique<TreeNode>();
        std::vector<double> mass(cfg_.classes, 0.0);
        double total = 0.0;
        for (size_t i : idx) {
            mass[y_[i]] += w_[i];
            total += w_[i];
        }
        node->dist = node_distribution(mass);

        const double node_gini = gini_from_mass(mass, total);
        if (depth >= cfg_.tree_max_depth || node_gini == 0.0 || idx.size() < 2)
            return node;

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_gini = node_gini - 1e-12;

        std::vector<int> candidates = feats_;
        if (mtry_ < static_cast<int>(candidates.size())) {
            shuffle(candidates, *rng_);
            candidates.resize(mtry_);
            std::sort(candidates.begin(), candidates.end());
        }

        std::vector<std::pair<double, size_t>> order(idx.size());
        std::vector<double> left_mass(cfg_.classes);
        for (int j : candidates) {
            for (size_t i = 0; i < idx.size(); ++i)
                order[i] = {X_[idx[i]][j], idx[i]};
            std::sort(order.begin(), order.end());
            std::fill(left_mass.begin(), left_mass.end(), 0.0);
            double left_total = 0.0;
            for (size_t i = 0; i + 1 < order.size(); ++i) {
                left_mass[y_[order[i].second]] += w_[order[i].second];
                left_total += w_[order[i].second];
                if (order[i].first == order[i + 1].first) continue;
                const double right_total = total - left_total;
                if (left_total < cfg_.tree_min_leaf_weight ||
                    right_total < cfg_.tree_min_leaf_weight)
                    continue;
                double right_sq = 0.0, left_sq = 0.0;
                for (int k = 0; k < cfg_.classes; ++k) {
                    const double lf = left_mass[k] / left_total;
                    const double rf = (mass[k] - left_mass[k]) / right_total;
                    left_sq += lf * lf;
                    right_sq += rf * rf;
                }
                const double split_gini =
                    (left_total * (1.0 - left_sq) + right_total * (1.0 - right_sq)) /
                    total;
                if (split_gini < best_gini) {
                    best_gini = split_gini;
                    best_feature = j;
                    best_threshold = (order[i].first + order[i + 1].first) / 2.0;
                }
            }
        }
        if (best_feature < 0) return node;

        std::vector<size_t> left_idx, right_idx;
        for (size_t i : idx)
            (X_[i][best_feature] <= best_threshold ? left_idx : right_idx).push_back(i);
        node->leaf = false;
        node->feature = best_feature;
        node->threshold = best_threshold;
        node->left = build(std::move(left_idx), depth + 1);
        node->right = build(std::move(right_idx), depth + 1);
        return node;
    }

private:
    const std::vector<DenseVector>& X_;
    const std::vector<int>& y_;
    const std::vector<double>& w_;
    const LearnerConfig& cfg_;
    int mtry_;
    Rng* rng_;
    std::vector<int> feats_;
};

nlohmann::ordered_json node_to_json(const TreeNode& n) {
    if (n.leaf) return {{"dist", n.dist}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"left", node_to_json(*n.left)},
            {"right", node_to_json(*n.right)}};
}

std::unique_ptr<TreeNode> node_from_json(const nlohmann::ordered_json& j) {
    auto n = std::make_unique<TreeNode>();
    if (j.contains("dist")) {
        n->dist = j.at("dist").get<DenseVector>();
        return n;
    }
    n->leaf = false;
    n->feature = j.at("feature");
    n->threshold = j.at("threshold");
    n->left = node_from_json(j.at("left"));
    n->right = node_from_json(j.at("right"));
    return n;
}

const DenseVector& walk(const TreeNode& root, const DenseVector& x) {
    const TreeNode* n = &root;
    while (!n->leaf) n = x[n->feature] <= n->threshold ? n->left.get() : n->right.get();
    return n->dist;
}

class DecisionTreeLearner : public WeakLearner {
public:
    DecisionTreeLearner() = default;

    DecisionTreeLearner(const std::vector<DenseVector>& X, const std::vector<int>& y,
                        const std::vector<double>& w, const LearnerConfig& cfg)
        : dim_(static_cast<int>(X[0].size())), classes_(cfg.classes) {
        TreeBuilder builder(X, y, w, cfg, dim_, nullptr);
        std::vector<size_t> idx(X.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        root_ = builder.build(std::move(idx), 0);
    }

    WeakLearnerKind kind() const override { return WeakLearnerKind::decision_tree; }
    int input_dim() const override { return dim_; }
    int classes() const override { return classes_; }

    DenseVector predict_distribution(const DenseVector& x) const override {
        check_dim(x, dim_);
        return walk(*root_, x);
    }

    nlohmann::ordered_json to_json() const override {
        auto j = learner_header(kind());
        j["dim"] = dim_;
        j["classes"] = classes_;
        j["root"] = node_to_json(*root_);
        return j;
    }

    static std::unique_ptr<DecisionTreeLearner> from_json(
        const nlohmann::ordered_json& j) {
        auto m = std::make_unique<DecisionTreeLearner>();
        m->dim_ = j.at("dim");
        m->classes_ = j.at("classes");
        m->root_ = node_from_json(j.at("root"));
        return m;
    }

private:
    friend class RandomForestLearner;
    int dim_ = 0, classes_ = 0;
    std::unique_ptr<TreeNode> root_;
};

// Bootstrap on means weighted resampling plus sqrt-dim feature sampling per
// split; bootstrap off means every tree is the exact CART fit, so a
// single-tree forest matches the plain decision tree.
class RandomForestLearner : public WeakLearner {
public:
    RandomForestLearner() = default;

    RandomForestLearner(const std::vector<DenseVector>& X, const std::vector<int>& y,
                        const std::vector<double>& w, const LearnerConfig& cfg,
                        uint64_t seed)
        : dim_(static_cast<int>(X[0].size())), classes_(cfg.classes) {
        const size_t n = X.size();
        std::vector<double> cum(n);
        double run = 0.0;
        for (size_t i = 0; i < n; ++i) {
            run += w[i];
            cum[i] = run;
        }
        const int mtry = cfg.forest_bootstrap
                             ? std::max(1, static_cast<int>(std::sqrt(
                                               static_cast<double>(dim_))))
                             : dim_;
        for (int t = 0; t < cfg.forest_trees; ++t) {
            Rng rng(derive_seed(derive_seed(seed, 0xF0BE57), t));
            std::vector<size_t> idx(n);
            std::vector<double> tw;
            const std::vector<double>* weights = &w;
            if (cfg.forest_bootstrap) {
                for (size_t i = 0; i < n; ++i) {
                    const double u = rng.uniform() * run;
                    idx[i] = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
                    if (idx[i] >= n) idx[i] = n - 1;
                }
                tw.assign(n, 1.0);
                weights = &tw;
            } else {
                for (size_t i = 0; i < n; ++i) idx[i] = i;
            }
            std::vector<DenseVector> bx(n);
            std::vector<int> by(n);
            for (size_t i = 0; i < n; ++i) {
                bx[i] = X[idx[i]];
                by[i] = y[idx[i]];
            }
            TreeBuilder builder(bx, by, *weights, cfg, mtry, &rng);
            std::vector<size_t> all(n);
            for (size_t i = 0; i < n; ++i) all[i] = i;
            roots_.push_back(builder.build(std::move(all), 0));
        }
    }

    WeakLearnerKind kind() const override { return WeakLearnerKind::random_forest; }
    int input_dim() const override { return dim_; }
    int classes() const override { return classes_; }

    DenseVector predict_distribution(const DenseVector& x) const override {
        check_dim(x, dim_);
        DenseVector p(classes_, 0.0);
        for (const auto& root : roots_) {
            const DenseVector& d = walk(*root, x);
            for (int k = 0; k < classes_; ++k) p[k] += d[k];
        }
        for (double& v : p) v /= static_cast<double>(roots_.size());
        return p;
    }

    nlohmann::ordered_json to_json() const override {
        auto j = learner_header(kind());
        j["dim"] = dim_;
        j["classes"] = classes_;
        j["trees"] = nlohmann::ordered_json::array();
        for (const auto& root : roots_) j["trees"].push_back(node_to_json(*root));
        return j;
    }

    static std::unique_ptr<RandomForestLearner> from_json(
        const nlohmann::ordered_json& j) {
        auto m = std::make_unique<RandomForestLearner>();
        m->dim_ = j.at("dim");
        m->classes_ = j.at("classes");
        for (const auto& t : j.at("trees")) m->roots_.push_back(node_from_json(t));
        return m;
    }

private:
    int dim_ = 0, classes_ = 0;
    std::vector<std::unique_ptr<TreeNode>> roots_;
};

// One-vs-rest hinge loss with L2, plain SGD, distribution via softmax over
// margins (a calibration convenience, not a probability claim).
class LinearSvmLearner : public WeakLearner {
public:
    LinearSvmLearner() = default;

    LinearSvmLearner(const std::vector<DenseVector>& X, const std::vector<int>& y,
                     const std::vector<double>& u, const LearnerConfig& cfg,
                     uint64_t seed)
        : dim_(static_cast<int>(X[0].size())), classes_(cfg.classes) {
        w_.assign(classes_, DenseVector(dim_, 0.0));
        b_.assign(classes_, 0.0);
        Rng rng(derive_seed(seed, 0x5f3a));
        std::vector<size_t> order(X.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (int epoch = 0; epoch < cfg.svm_epochs; ++epoch) {
            const double lr = cfg.svm_lr / (1.0 + epoch);
            shuffle(order, rng);
            for (size_t i : order) {
                for (int k = 0; k < classes_; ++k) {
                    const double target = y[i] == k ? 1.0 : -1.0;
                    double margin = b_[k];
                    for (int j = 0; j < dim_; ++j) margin += w_[k][j] * X[i][j];
                    const bool violates = target * margin < 1.0;
                    const double decay = 1.0 - lr * cfg.svm_lambda;
                    for (int j = 0; j < dim_; ++j) {
                        w_[k][j] *= decay;
                        if (violates) w_[k][j] += lr * u[i] * target * X[i][j];
                    }
                    if (violates) b_[k] += lr * u[i] * target;
                }
            }
        }
    }

    WeakLearnerKind kind() const override { return WeakLearnerKind::linear_svm; }
    int input_dim() const override { return dim_; }
    int classes() const override { return classes_; }

    DenseVector predict_distribution(const DenseVector& x) const override {
        check_dim(x, dim_);
        DenseVector margins(classes_);
        for (int k = 0; k < classes_; ++k) {
            double s = b_[k];
            for (int j = 0; j < dim_; ++j) s += w_[k][j] * x[j];
            margins[k] = s;
        }
        return neural::softmax(margins);
    }

    nlohmann::ordered_json to_json() const override {
        auto j = learner_header(kind());
        j["dim"] = dim_;
        j["classes"] = classes_;
        j["w"] = w_;
        j["b"] = b_;
        return j;
    }

    static std::unique_ptr<LinearSvmLearner> from_json(const nlohmann::ordered_json& j) {
        auto m = std::make_unique<LinearSvmLearner>();
        m->dim_ = j.at("dim");
        m->classes_ = j.at("classes");
        m->w_ = j.at("w").get<std::vector<DenseVector>>();
        m->b_ = j.at("b").get<DenseVector>();
        return m;
    }

private:
    int dim_ = 0, classes_ = 0;
    std::vector<DenseVector> w_;
    DenseVector b_;
};

class SoftmaxHeadLearner : public WeakLearner {
public:
    SoftmaxHeadLearner() = default;

    SoftmaxHeadLearner(const std::vector<DenseVector>& X, const std::vector<int>& y,
                       const std::vector<double>& u, const LearnerConfig& cfg,
                       uint64_t seed)
        : dim_(static_cast<int>(X[0].size())), classes_(cfg.classes) {
        graph_.add(neural::make_dropout(cfg.head_dropout));
        graph_.add(neural::make_dense(dim_, classes_, neural::Activation::identity));
        graph_.init_params(derive_seed(seed, 0x5ead));

        std::vector<neural::Example> data(X.size());
        for (size_t i = 0; i < X.size(); ++i) {
            neural::Tensor t(1, dim_);
            t.data.assign(X[i].begin(), X[i].end());
            data[i] = {std::move(t), y[i], u[i]};
        }
        neural::TrainConfig tc;
        tc.lr = cfg.head_lr;
        tc.batch = cfg.head_batch;
        tc.max_epochs = cfg.head_epochs;
        tc.patience = cfg.head_epochs;
        tc.seed = derive_seed(seed, 0x5ead);
        tc.wall_clock = false;
        neural::train_supervised(graph_, data, data, tc);
    }

    WeakLearnerKind kind() const override { return WeakLearnerKind::softmax_head; }
    int input_dim() const override { return dim_; }
    int classes() const override { return classes_; }

    DenseVector predict_distribution(const DenseVector& x) const override {
        check_dim(x, dim_);
        neural::Tensor t(1, dim_);
        t.data.assign(x.begin(), x.end());
        neural::Tensor logits = const_cast<neural::ModelGraph&>(graph_).forward(t);
        return neural::softmax(DenseVector(logits.data.begin(), logits.data.end()));
    }

    nlohmann::ordered_json to_json() const override {
        auto j = learner_header(kind());
        j["dim"] = dim_;
        j["classes"] = classes_;
        j["graph"] = const_cast<neural::ModelGraph&>(graph_).to_json();
        return j;
    }

    static std::unique_ptr<SoftmaxHeadLearner> from_json(
        const nlohmann::ordered_json& j) {
        auto m = std::make_unique<SoftmaxHeadLearner>();
        m->dim_ = j.at("dim");
        m->classes_ = j.at("classes");
        m->graph_ = neural::ModelGraph::from_json(j.at("graph"));
        return m;
    }

private:
    int dim_ = 0, classes_ = 0;
    neural::ModelGraph graph_;
};

}  // namespace

std::string_view learner_kind_name(WeakLearnerKind kind) {
    switch (kind) {
        case WeakLearnerKind::naive_bayes: return "naive_bayes";
        case WeakLearnerKind::decision_tree: return "decision_tree";
        case WeakLearnerKind::random_forest: return "random_forest";
        case WeakLearnerKind::linear_svm: return "linear_svm";
        default: return "softmax_head";
    }
}

WeakLearnerKind parse_learner_kind(std::string_view name) {
    if (name == "naive_bayes") return WeakLearnerKind::naive_bayes;
    if (name == "decision_tree") return WeakLearnerKind::decision_tree;
    if (name == "random_forest") return WeakLearnerKind::random_forest;
    if (name == "linear_svm") return WeakLearnerKind::linear_svm;
    if (name == "softmax_head") return WeakLearnerKind::softmax_head;
    throw data_error("unknown learner kind \"" + std::string(name) + "\"");
}

int argmax_index(const DenseVector& values) {
    if (values.empty()) throw usage_error("argmax of an empty vector");
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

std::unique_ptr<WeakLearner> fit_weak_learner(WeakLearnerKind kind,
                                              const std::vector<DenseVector>& X,
                                              const std::vector<int>& y,
                                              const std::vector<double>& w,
                                              const LearnerConfig& config,
                                              uint64_t seed) {
    if (X.empty() || X.size() != y.size() || X.size() != w.size())
        throw usage_error("fit_weak_learner: X, y, w must be non-empty and aligned");
    const int dim = static_cast<int>(X[0].size());
    double total = 0.0;
    for (double v : w) {
        if (v < 0.0) throw usage_error("sample weights must be nonnegative");
        total += v;
    }
    if (total <= 0.0) throw usage_error("sample weights sum to zero");
    for (const auto& row : X)
        if (static_cast<int>(row.size()) != dim)
            throw usage_error("feature rows have inconsistent dimensions");
    std::set<int> seen;
    for (int label : y) {
        if (label < 0 || label >= config.classes)
            throw data_error("label out of range: " + std::to_string(label));
        seen.insert(label);
    }
    if (seen.size() == 1)
        return std::make_unique<DegenerateLearner>(kind, dim, config.classes, *seen.begin());

    std::vector<double> dist(w.size());
    for (size_t i = 0; i < w.size(); ++i) dist[i] = w[i] / total;
    // SGD kinds see mean-one weights so uniform fits match plain mean loss
    std::vector<double> mean_one(w.size());
    const double n_over = static_cast<double>(w.size()) / total;
    for (size_t i = 0; i < w.size(); ++i) mean_one[i] = w[i] * n_over;

    switch (kind) {
        case WeakLearnerKind::naive_bayes:
            return std::make_unique<NaiveBayesLearner>(X, y, dist, config);
        case WeakLearnerKind::decision_tree:
            return std::make_unique<DecisionTreeLearner>(X, y, dist, config);
        case WeakLearnerKind::random_forest:
            return std::make_unique<RandomForestLearner>(X, y, dist, config, seed);
        case WeakLearnerKind::linear_svm:
            return std::make_unique<LinearSvmLearner>(X, y, mean_one, config, seed);
        default:
            return std::make_unique<SoftmaxHeadLearner>(X, y, mean_one, config, seed);
    }
}

std::unique_ptr<WeakLearner> learner_from_json(const nlohmann::ordered_json& j) {
    if (!j.contains("version") || j.at("version") != neural::kModelVersion)
        throw data_error("unsupported model version");
    if (!j.contains("type") || j.at("type") != kLearnerType)
        throw data_error("model file is not a weak learner");
    const WeakLearnerKind kind = parse_learner_kind(j.at("kind").get<std::string>());
    if (j.value("degenerate", false))
        return std::make_unique<DegenerateLearner>(kind, j.at("dim").get<int>(),
                                                   j.at("classes").get<int>(),
                                                   j.at("label").get<int>());
    switch (kind) {
        case WeakLearnerKind::naive_bayes: return NaiveBayesLearner::from_json(j);
        case WeakLearnerKind::decision_tree: return DecisionTreeLearner::from_json(j);
        case WeakLearnerKind::random_forest: return RandomForestLearner::from_json(j);
        case WeakLearnerKind::linear_svm: return LinearSvmLearner::from_json(j);
        default: return SoftmaxHeadLearner::from_json(j);
    }
}

}  // namespace emoforge::learners
