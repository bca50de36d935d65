#include "emoforge/boosting.hpp"

#include <algorithm>
#include <string>

namespace emoforge::boosting {

namespace {

constexpr const char* kEnsembleType = "boosted_ensemble";
constexpr const char* kEmobangType = "emobang_ensemble";

nlohmann::ordered_json boost_config_json(const BoostConfig& c) {
    return {{"rounds", c.rounds},
            {"classes", c.classes},
            {"max_rejects", c.max_rejects},
            {"alpha_cap", c.alpha_cap},
            {"seed", c.seed}};
}

BoostConfig boost_config_from(const nlohmann::ordered_json& j) {
    BoostConfig c;
    c.rounds = j.at("rounds");
    c.classes = j.at("classes");
    c.max_rejects = j.at("max_rejects");
    c.alpha_cap = j.at("alpha_cap");
    c.seed = j.at("seed");
    return c;
}

}  // namespace

DenseVector BoostedEnsemble::vote_scores(const DenseVector& x) const {
    if (members.empty()) throw usage_error("empty ensemble");
    DenseVector scores(config.classes, 0.0);
    for (const auto& m : members) scores[m.learner->predict(x)] += m.alpha;
    return scores;
}

int BoostedEnsemble::predict(const DenseVector& x) const {
    return learners::argmax_index(vote_scores(x));
}

nlohmann::ordered_json BoostedEnsemble::to_json() const {
    nlohmann::ordered_json j;
    j["version"] = neural::kModelVersion;
    j["type"] = kEnsembleType;
    j["config"] = boost_config_json(config);
    j["members"] = nlohmann::ordered_json::array();
    for (const auto& m : members)
        j["members"].push_back(
            {{"alpha", m.alpha}, {"learner", m.learner->to_json()}});
    return j;
}

BoostedEnsemble BoostedEnsemble::from_json(const nlohmann::ordered_json& j) {
    if (!j.contains("version") || j.at("version") != neural::kModelVersion)
        throw data_error("unsupported model version");
    if (!j.contains("type") || j.at("type") != kEnsembleType)
        throw data_error("model file is not a boosted ensemble");
    BoostedEnsemble e;
    e.config = boost_config_from(j.at("config"));
    for (const auto& m : j.at("members")) {
        BoostMember member;
        member.alpha = m.at("alpha");
        member.learner = learners::learner_from_json(m.at("learner"));
        e.members.push_back(std::move(member));
    }
    return e;
}

double weighted_error(const WeakLearner& h, const std::vector<DenseVector>& X,
                      const std::vector<int>& y, const std::vector<double>& w) {
    double err = 0.0;
    for (size_t i = 0; i < X.size(); ++i)
        if (h.predict(X[i]) != y[i]) err += w[i];
    return err;
}

std::optional<double> alpha_from_error(double error, int classes, double cap) {
    if (error < 0.0) throw usage_error("weighted error cannot be negative");
    const double chance = 1.0 - 1.0 / classes;
    if (error >= chance) return std::nullopt;
    if (error == 0.0) return cap;
    const double alpha =
        std::log((1.0 - error) / error) + std::log(static_cast<double>(classes - 1));
    return std::min(alpha, cap);
}

void update_weights(std::vector<double>& w, const WeakLearner& h,
                    const std::vector<DenseVector>& X, const std::vector<int>& y,
                    double alpha) {
    if (alpha <= 0.0) throw usage_error("update_weights needs alpha > 0");
    const double shrink = std::exp(-alpha);
    double total = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        if (h.predict(X[i]) == y[i]) w[i] *= shrink;
        total += w[i];
    }
    for (double& v : w) v /= total;
}

BoostedEnsemble boost_fit(const WeakFactory& factory,
                          const std::vector<DenseVector>& X,
                          const std::vector<int>& y, const BoostConfig& config) {
    if (X.size() != y.size() || X.size() < 2)
        throw usage_error("boost_fit needs at least two aligned samples");
    if (config.rounds < 1 || config.classes < 2)
        throw usage_error("invalid boosting configuration");
    {
        bool multi = false;
        for (size_t i = 1; i < y.size(); ++i)
            if (y[i] != y[0]) {
                multi = true;
                break;
            }
        if (!multi) throw data_error("boosting needs at least two classes present");
    }

    BoostedEnsemble ensemble;
    ensemble.config = config;
    std::vector<double> w(X.size(), 1.0 / static_cast<double>(X.size()));

    int consecutive_rejects = 0;
    uint64_t attempt = 0;
    std::string diagnostics;
    for (int t = 0; t < config.rounds; ++t) {
        auto h = factory(X, y, w, derive_seed(config.seed, attempt++));
        const double err = weighted_error(*h, X, y, w);
        const auto alpha = alpha_from_error(err, config.classes, config.alpha_cap);
        if (!alpha) {
            ++consecutive_rejects;
            diagnostics += " round " + std::to_string(t + 1) + ": error " +
                           std::to_string(err) + ";";
            if (consecutive_rejects >= config.max_rejects)
                throw training_error(
                    "boosting aborted after " + std::to_string(consecutive_rejects) +
                    " consecutive rejected rounds:" + diagnostics);
            --t;
            continue;
        }
        consecutive_rejects = 0;
        update_weights(w, *h, X, y, *alpha);
        ensemble.members.push_back({*alpha, std::move(h)});
    }
    return ensemble;
}

DenseVector EmobangModel::embed(const TokenSeq& tokens) {
    return neural::encode_contextual(tokens, encoder);
}

int EmobangModel::predict(const TokenSeq& tokens) {
    return ensemble.predict(embed(tokens));
}

nlohmann::ordered_json EmobangModel::to_json() {
    nlohmann::ordered_json j;
    j["version"] = neural::kModelVersion;
    j["type"] = kEmobangType;
    j["manifest"] = manifest;
    j["encoder"] = encoder.to_json();
    j["ensemble"] = ensemble.to_json();
    return j;
}

EmobangModel EmobangModel::from_json(const nlohmann::ordered_json& j) {
    if (!j.contains("version") || j.at("version") != neural::kModelVersion)
        throw data_error("unsupported model version");
    if (!j.contains("type") || j.at("type") != kEmobangType)
        throw data_error("model file is not an emobang ensemble");
    EmobangModel m;
    m.manifest = j.at("manifest");
    m.encoder = neural::ContextualModel::from_json(j.at("encoder"));
    m.ensemble = BoostedEnsemble::from_json(j.at("ensemble"));
    return m;
}

EmobangModel fit_emobang_ensemble(const std::vector<TokenSeq>& train_docs,
                                  const std::vector<int>& train_labels,
                                  const std::vector<TokenSeq>& val_docs,
                                  const std::vector<int>& val_labels,
                                  const EmobangConfig& config) {
    if (train_docs.size() != train_labels.size() || train_docs.empty())
        throw usage_error("training docs and labels must be non-empty and aligned");
    if (val_docs.size() != val_labels.size() || val_docs.empty())
        throw usage_error("validation docs and labels must be non-empty and aligned");

    features::Vocabulary vocab = features::build_vocab(train_docs, config.vocab_min_freq);

    EmobangModel model;
    model.encoder = neural::build_encoder(vocab.tokens, config.encoder,
                                          derive_seed(config.boost.seed, 0xE0C));

    auto to_examples = [&](const std::vector<TokenSeq>& docs,
                           const std::vector<int>& labels) {
        std::vector<neural::Example> out(docs.size());
        for (size_t i = 0; i < docs.size(); ++i)
            out[i] = {neural::encoder_input(docs[i], model.encoder), labels[i], 1.0};
        return out;
    };
    const auto train_ex = to_examples(train_docs, train_labels);
    const auto val_ex = to_examples(val_docs, val_labels);
    neural::TrainResult enc_result = neural::train_supervised(
        model.encoder.graph, train_ex, val_ex, config.encoder_train);

    std::vector<DenseVector> emb(train_docs.size());
    for (size_t i = 0; i < train_docs.size(); ++i)
        emb[i] = model.embed(train_docs[i]);

    std::vector<int> labels = train_labels;
    features::SmoteReport smote_report;
    if (config.balance) {
        std::vector<corpus::EmotionLabel> as_labels(labels.size());
        for (size_t i = 0; i < labels.size(); ++i)
            as_labels[i] = static_cast<corpus::EmotionLabel>(labels[i]);
        auto [bx, by] = features::smote_balance(emb, as_labels, config.smote,
                                                &smote_report);
        emb = std::move(bx);
        labels.resize(by.size());
        for (size_t i = 0; i < by.size(); ++i) labels[i] = static_cast<int>(by[i]);
    }

    learners::LearnerConfig head_cfg = config.head;
    head_cfg.classes = config.boost.classes;
    WeakFactory factory = [&head_cfg](const std::vector<DenseVector>& X,
                                      const std::vector<int>& y,
                                      const std::vector<double>& w,
                                      uint64_t round_seed) {
        return learners::fit_weak_learner(learners::WeakLearnerKind::softmax_head, X,
                                          y, w, head_cfg, round_seed);
    };
    model.ensemble = boost_fit(factory, emb, labels, config.boost);

    nlohmann::ordered_json manifest;
    manifest["feature_space"] = "contextual";
    manifest["seed"] = config.boost.seed;
    manifest["vocab_size"] = vocab.tokens.size();
    manifest["encoder_epochs"] = enc_result.history.size();
    manifest["encoder_best_epoch"] = enc_result.best_epoch;
    manifest["balanced"] = config.balance;
    if (config.balance) manifest["smote"] = smote_report.to_json();
    manifest["boost"] = boost_config_json(config.boost);
    manifest["head"] = {{"epochs", head_cfg.head_epochs},
                        {"lr", head_cfg.head_lr},
                        {"batch", head_cfg.head_batch},
                        {"dropout", head_cfg.head_dropout}};
    model.manifest = std::move(manifest);
    return model;
}

}  // namespace emoforge::boosting
