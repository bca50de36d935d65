#include "emoforge/pipeline.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <utility>

namespace emoforge::pipeline {

using evalkit::GridParams;
using nlohmann::ordered_json;

namespace {

std::string hash_hex(const ordered_json& j) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(j.dump()));
    return buf;
}

ordered_json vocab_to_json(const features::Vocabulary& v) {
    ordered_json j;
    j["tokens"] = v.tokens;
    j["freq"] = v.freq;
    j["df"] = v.df;
    j["num_docs"] = v.num_docs;
    return j;
}

features::Vocabulary vocab_from_json(const ordered_json& j) {
    features::Vocabulary v;
    v.tokens = j.at("tokens").get<std::vector<std::string>>();
    v.freq = j.at("freq").get<std::vector<size_t>>();
    v.df = j.at("df").get<std::vector<size_t>>();
    v.num_docs = j.at("num_docs").get<size_t>();
    if (v.freq.size() != v.tokens.size() || v.df.size() != v.tokens.size())
        throw data_error("vocabulary arrays disagree in length");
    for (size_t i = 0; i < v.tokens.size(); ++i)
        v.index[v.tokens[i]] = static_cast<int>(i);
    return v;
}

ordered_json table_to_json(const features::EmbeddingTable& t) {
    ordered_json j;
    j["dim"] = t.dim;
    j["tokens"] = t.tokens;
    j["rows"] = t.rows;
    j["subword"] = t.subword;
    if (t.subword) {
        j["n_min"] = t.n_min;
        j["n_max"] = t.n_max;
        j["buckets"] = t.buckets;
        j["init_seed"] = t.init_seed;
        std::vector<std::pair<uint32_t, const DenseVector*>> ids;
        ids.reserve(t.bucket_rows.size());
        for (const auto& [id, row] : t.bucket_rows) ids.emplace_back(id, &row);
        std::sort(ids.begin(), ids.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        auto rows = ordered_json::array();
        for (const auto& [id, row] : ids) rows.push_back({id, *row});
        j["bucket_rows"] = std::move(rows);
    }
    return j;
}

features::EmbeddingTable table_from_json(const ordered_json& j) {
    features::EmbeddingTable t;
    t.dim = j.at("dim").get<int>();
    t.tokens = j.at("tokens").get<std::vector<std::string>>();
    t.rows = j.at("rows").get<std::vector<DenseVector>>();
    if (t.rows.size() != t.tokens.size())
        throw data_error("embedding rows disagree with token count");
    for (size_t i = 0; i < t.tokens.size(); ++i)
        t.index[t.tokens[i]] = static_cast<int>(i);
    t.subword = j.at("subword").get<bool>();
    if (t.subword) {
        t.n_min = j.at("n_min").get<int>();
        t.n_max = j.at("n_max").get<int>();
        t.buckets = j.at("buckets").get<uint32_t>();
        t.init_seed = j.at("init_seed").get<uint64_t>();
        for (const auto& entry : j.at("bucket_rows"))
            t.bucket_rows[entry.at(0).get<uint32_t>()] = entry.at(1).get<DenseVector>();
    }
    return t;
}

Tensor repeat_rows(const DenseVector& v, int times) {
    Tensor t(times, static_cast<int>(v.size()));
    for (int r = 0; r < times; ++r)
        for (int c = 0; c < t.cols; ++c) t.at(r, c) = v[c];
    return t;
}

// Variable-length sequences cannot be interpolated, so minority classes are
// topped up by cycling over their own members in input order.
void balance_examples(std::vector<neural::Example>& ex, int classes) {
    std::vector<std::vector<size_t>> members(classes);
    for (size_t i = 0; i < ex.size(); ++i) members[ex[i].label].push_back(i);
    size_t target = 0;
    for (const auto& m : members) target = std::max(target, m.size());
    for (int c = 0; c < classes; ++c) {
        const std::vector<size_t> m = members[c];
        if (m.empty()) continue;
        for (size_t j = 0; m.size() + j < target; ++j) {
            neural::Example copy = ex[m[j % m.size()]];
            ex.push_back(std::move(copy));
        }
    }
}

void balance_vectors(std::vector<DenseVector>& X, std::vector<int>& y,
                     features::SmoteConfig cfg, uint64_t seed) {
    cfg.seed = seed;
    std::vector<corpus::EmotionLabel> labels;
    labels.reserve(y.size());
    for (int v : y) labels.push_back(static_cast<corpus::EmotionLabel>(v));
    auto balanced = features::smote_balance(X, labels, cfg, nullptr);
    X = std::move(balanced.first);
    y.clear();
    y.reserve(balanced.second.size());
    for (auto l : balanced.second) y.push_back(static_cast<int>(l));
}

learners::WeakLearnerKind classic_kind(ModelKind m) {
    switch (m) {
        case ModelKind::dt: return learners::WeakLearnerKind::decision_tree;
        case ModelKind::rf: return learners::WeakLearnerKind::random_forest;
        case ModelKind::svm: return learners::WeakLearnerKind::linear_svm;
        default: return learners::WeakLearnerKind::naive_bayes;
    }
}

uint64_t cell_seed(uint64_t master, FeatureKind f, ModelKind m) {
    return derive_seed(master, 0xce11ull * (static_cast<uint64_t>(f) + 1) +
                                   static_cast<uint64_t>(m));
}

void check_data(const TrainData& d) {
    if (d.train_docs.empty()) throw data_error("pipeline: empty training data");
    if (d.train_docs.size() != d.train_y.size() || d.val_docs.size() != d.val_y.size())
        throw data_error("pipeline: documents and labels disagree in length");
}

}  // namespace

DenseVector Featurizer::vector(const TokenSeq& tokens) {
    switch (kind) {
        case FeatureKind::count: return features::count_vectorize(tokens, vocab).dense();
        case FeatureKind::tfidf:
            return features::tfidf_transform(tokens, vocab, tfidf).dense();
        case FeatureKind::skipgram:
        case FeatureKind::subword: return features::embed_sentence(tokens, table);
        case FeatureKind::contextual:
            if (!encoder) throw data_error("featurizer has no encoder");
            return neural::encode_contextual(tokens, *encoder);
    }
    throw usage_error("unknown feature kind");
}

Tensor Featurizer::sequence(const TokenSeq& tokens) {
    if (sequential()) {
        std::vector<DenseVector> rows;
        for (const auto& tok : tokens)
            if (auto v = table.token_vector(tok)) rows.push_back(std::move(*v));
        if (rows.empty()) return Tensor(1, dim, 0.0);
        Tensor t(static_cast<int>(rows.size()), dim);
        for (int r = 0; r < t.rows; ++r)
            for (int c = 0; c < dim; ++c) t.at(r, c) = rows[r][c];
        return t;
    }
    return repeat_rows(vector(tokens), repeat_positions);
}

ordered_json Featurizer::to_json() {
    ordered_json j;
    j["kind"] = evalkit::feature_name(kind);
    j["dim"] = dim;
    j["repeat_positions"] = repeat_positions;
    switch (kind) {
        case FeatureKind::count: j["vocab"] = vocab_to_json(vocab); break;
        case FeatureKind::tfidf:
            j["vocab"] = vocab_to_json(vocab);
            j["idf"] = tfidf.idf;
            break;
        case FeatureKind::skipgram:
        case FeatureKind::subword: j["table"] = table_to_json(table); break;
        case FeatureKind::contextual:
            if (!encoder) throw data_error("featurizer has no encoder");
            j["encoder"] = encoder->to_json();
            break;
    }
    return j;
}

Featurizer Featurizer::from_json(const ordered_json& j) {
    try {
        Featurizer f;
        f.kind = evalkit::parse_feature(j.at("kind").get<std::string>());
        f.dim = j.at("dim").get<int>();
        f.repeat_positions = j.at("repeat_positions").get<int>();
        switch (f.kind) {
            case FeatureKind::count: f.vocab = vocab_from_json(j.at("vocab")); break;
            case FeatureKind::tfidf:
                f.vocab = vocab_from_json(j.at("vocab"));
                f.tfidf.idf = j.at("idf").get<std::vector<double>>();
                if (f.tfidf.idf.size() != f.vocab.tokens.size())
                    throw data_error("idf length disagrees with vocabulary");
                break;
            case FeatureKind::skipgram:
            case FeatureKind::subword: f.table = table_from_json(j.at("table")); break;
            case FeatureKind::contextual:
                f.encoder = neural::ContextualModel::from_json(j.at("encoder"));
                break;
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("featurizer: ") + e.what());
    }
}

Featurizer fit_featurizer(FeatureKind kind, const TrainData& d, const GridParams& p,
                          uint64_t seed) {
    check_data(d);
    if (p.repeat_positions < 1) throw usage_error("repeat_positions must be at least 1");
    Featurizer f;
    f.kind = kind;
    f.repeat_positions = p.repeat_positions;
    const auto vocab = features::build_vocab(d.train_docs, p.vocab_min_freq);
    switch (kind) {
        case FeatureKind::count:
            if (vocab.size() == 0) throw data_error("count features: empty vocabulary");
            f.vocab = vocab;
            f.dim = vocab.size();
            break;
        case FeatureKind::tfidf:
            if (vocab.size() == 0) throw data_error("tfidf features: empty vocabulary");
            f.vocab = vocab;
            f.tfidf = features::fit_tfidf(vocab);
            f.dim = vocab.size();
            break;
        case FeatureKind::skipgram: {
            auto cfg = p.skipgram;
            cfg.seed = derive_seed(seed, 0x5c1);
            f.table = features::train_skipgram(d.train_docs, vocab, cfg);
            f.dim = cfg.dim;
            break;
        }
        case FeatureKind::subword: {
            auto cfg = p.subword;
            cfg.seed = derive_seed(seed, 0x5c2);
            f.table = features::train_subword(d.train_docs, vocab, cfg);
            f.dim = cfg.dim;
            break;
        }
        case FeatureKind::contextual: {
            auto cfg = p.encoder;
            cfg.classes = corpus::kNumLabels;
            auto enc = neural::build_encoder(vocab.tokens, cfg, derive_seed(seed, 0xe0c));
            std::vector<neural::Example> tr, va;
            tr.reserve(d.train_docs.size());
            for (size_t i = 0; i < d.train_docs.size(); ++i)
                tr.push_back({neural::encoder_input(d.train_docs[i], enc), d.train_y[i], 1.0});
            va.reserve(d.val_docs.size());
            for (size_t i = 0; i < d.val_docs.size(); ++i)
                va.push_back({neural::encoder_input(d.val_docs[i], enc), d.val_y[i], 1.0});
            if (va.empty()) va = tr;
            auto tcfg = p.encoder_train;
            tcfg.seed = derive_seed(seed, 0x7a1);
            tcfg.wall_clock = p.wall_clock;
            neural::train_supervised(enc.graph, tr, va, tcfg);
            f.encoder = std::move(enc);
            f.dim = cfg.dim;
            break;
        }
    }
    return f;
}

int Pipeline::predict(const TokenSeq& tokens) {
    switch (model) {
        case ModelKind::dt:
        case ModelKind::rf:
        case ModelKind::svm:
        case ModelKind::nb:
            if (!learner) throw data_error("pipeline has no fitted learner");
            return learner->predict(featurizer.vector(tokens));
        case ModelKind::ensemble:
            if (emobang) return emobang->predict(tokens);
            if (!committee) throw data_error("pipeline has no fitted ensemble");
            return committee->predict(featurizer.vector(tokens));
        case ModelKind::rnn:
        case ModelKind::lstm: {
            if (!graph) throw data_error("pipeline has no fitted network");
            const Tensor out = graph->forward(featurizer.sequence(tokens));
            return learners::argmax_index(out.data);
        }
        case ModelKind::hybrid: {
            if (!hybrid) throw data_error("pipeline has no fitted network");
            const Tensor out = hybrid->graph.forward(featurizer.sequence(tokens));
            return learners::argmax_index(out.data);
        }
    }
    throw usage_error("unknown model kind");
}

ordered_json Pipeline::to_json() {
    ordered_json j;
    j["version"] = neural::kModelVersion;
    j["type"] = "pipeline";
    j["feature"] = evalkit::feature_name(feature);
    j["model"] = evalkit::model_name(model);
    j["balanced"] = balanced;
    j["classes"] = classes;
    j["featurizer"] = emobang ? ordered_json() : featurizer.to_json();
    ordered_json cls;
    switch (model) {
        case ModelKind::dt:
        case ModelKind::rf:
        case ModelKind::svm:
        case ModelKind::nb:
            if (!learner) throw data_error("pipeline has no fitted learner");
            cls = learner->to_json();
            break;
        case ModelKind::ensemble:
            if (emobang)
                cls = emobang->to_json();
            else if (committee)
                cls = committee->to_json();
            else
                throw data_error("pipeline has no fitted ensemble");
            break;
        case ModelKind::rnn:
        case ModelKind::lstm:
            if (!graph) throw data_error("pipeline has no fitted network");
            cls["version"] = neural::kModelVersion;
            cls["type"] = "sequence_classifier";
            cls["recurrent"] = evalkit::model_name(model);
            cls["hidden"] = hidden;
            cls["classes"] = classes;
            cls["graph"] = graph->to_json();
            break;
        case ModelKind::hybrid:
            if (!hybrid) throw data_error("pipeline has no fitted network");
            cls = hybrid->to_json();
            break;
    }
    j["classifier"] = std::move(cls);
    j["manifest"] = manifest;
    j["manifest_hash"] = hash_hex(manifest);
    return j;
}

Pipeline Pipeline::from_json(const ordered_json& j) {
    try {
        if (j.at("version").get<std::string>() != neural::kModelVersion)
            throw data_error("unsupported model version");
        if (j.at("type").get<std::string>() != "pipeline")
            throw data_error("not a pipeline artifact");
        Pipeline p;
        p.feature = evalkit::parse_feature(j.at("feature").get<std::string>());
        p.model = evalkit::parse_model(j.at("model").get<std::string>());
        p.balanced = j.at("balanced").get<bool>();
        p.classes = j.at("classes").get<int>();
        const ordered_json& cls = j.at("classifier");
        switch (p.model) {
            case ModelKind::dt:
            case ModelKind::rf:
            case ModelKind::svm:
            case ModelKind::nb: p.learner = learners::learner_from_json(cls); break;
            case ModelKind::ensemble:
                if (cls.at("type").get<std::string>() == "emobang_ensemble")
                    p.emobang = boosting::EmobangModel::from_json(cls);
                else
                    p.committee = boosting::BoostedEnsemble::from_json(cls);
                break;
            case ModelKind::rnn:
            case ModelKind::lstm: {
                if (cls.at("type").get<std::string>() != "sequence_classifier")
                    throw data_error("classifier is not a sequence classifier");
                if (cls.at("recurrent").get<std::string>() !=
                    evalkit::model_name(p.model))
                    throw data_error("recurrent kind disagrees with the model field");
                p.hidden = cls.at("hidden").get<int>();
                p.graph = neural::ModelGraph::from_json(cls.at("graph"));
                break;
            }
            case ModelKind::hybrid:
                p.hybrid = neural::HybridModel::from_json(cls);
                break;
        }
        if (!p.emobang) p.featurizer = Featurizer::from_json(j.at("featurizer"));
        p.manifest = j.value("manifest", ordered_json::object());
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("pipeline: ") + e.what());
    }
}

Pipeline fit_pipeline(FeatureKind feature, ModelKind model, bool balance,
                      const TrainData& d, const GridParams& p, uint64_t seed) {
    check_data(d);
    Pipeline pl;
    pl.feature = feature;
    pl.model = model;
    pl.balanced = balance;
    pl.classes = corpus::kNumLabels;
    const uint64_t fseed = derive_seed(seed, 0xfea70000ull + static_cast<uint64_t>(feature));
    const uint64_t cs = cell_seed(seed, feature, model);

    if (model == ModelKind::ensemble && feature == FeatureKind::contextual) {
        boosting::EmobangConfig cfg;
        cfg.encoder = p.encoder;
        cfg.encoder.classes = pl.classes;
        cfg.encoder_train = p.encoder_train;
        cfg.encoder_train.seed = derive_seed(cs, 0x7a1);
        cfg.encoder_train.wall_clock = p.wall_clock;
        cfg.head = p.learner;
        cfg.head.classes = pl.classes;
        cfg.boost = p.boost;
        cfg.boost.classes = pl.classes;
        cfg.boost.seed = derive_seed(cs, 0xb005);
        cfg.balance = balance;
        cfg.smote = p.smote;
        cfg.smote.seed = derive_seed(cs, 0xba1);
        cfg.vocab_min_freq = p.vocab_min_freq;
        const bool has_val = !d.val_docs.empty();
        pl.emobang = boosting::fit_emobang_ensemble(
            d.train_docs, d.train_y, has_val ? d.val_docs : d.train_docs,
            has_val ? d.val_y : d.train_y, cfg);
    } else {
        pl.featurizer = fit_featurizer(feature, d, p, fseed);
        if (model == ModelKind::rnn || model == ModelKind::lstm ||
            model == ModelKind::hybrid) {
            std::vector<neural::Example> tr;
            tr.reserve(d.train_docs.size());
            for (size_t i = 0; i < d.train_docs.size(); ++i)
                tr.push_back({pl.featurizer.sequence(d.train_docs[i]), d.train_y[i], 1.0});
            std::vector<neural::Example> va;
            va.reserve(d.val_docs.size());
            for (size_t i = 0; i < d.val_docs.size(); ++i)
                va.push_back({pl.featurizer.sequence(d.val_docs[i]), d.val_y[i], 1.0});
            if (va.empty()) va = tr;
            if (balance) balance_examples(tr, pl.classes);
            auto tc = p.net_train;
            tc.seed = derive_seed(cs, 0x7e0);
            tc.wall_clock = p.wall_clock;
            if (model == ModelKind::hybrid) {
                auto hc = p.hybrid;
                hc.classes = pl.classes;
                pl.hybrid = neural::build_hybrid_vectors(pl.featurizer.dim, hc,
                                                         derive_seed(cs, 0x111));
                neural::train_supervised(pl.hybrid->graph, tr, va, tc);
            } else {
                neural::ModelGraph net;
                net.add(model == ModelKind::rnn
                            ? neural::make_rnn(pl.featurizer.dim, p.rnn_hidden, false)
                            : neural::make_lstm(pl.featurizer.dim, p.rnn_hidden, false));
                net.add(neural::make_dense(p.rnn_hidden, pl.classes,
                                           neural::Activation::identity));
                net.init_params(derive_seed(cs, 0x111));
                neural::train_supervised(net, tr, va, tc);
                pl.hidden = p.rnn_hidden;
                pl.graph = std::move(net);
            }
        } else {
            std::vector<DenseVector> X;
            X.reserve(d.train_docs.size());
            for (const auto& doc : d.train_docs) X.push_back(pl.featurizer.vector(doc));
            auto y = d.train_y;
            if (balance) balance_vectors(X, y, p.smote, derive_seed(cs, 0xba1));
            if (model == ModelKind::ensemble) {
                auto head = p.learner;
                head.classes = pl.classes;
                auto bc = p.boost;
                bc.classes = pl.classes;
                bc.seed = derive_seed(cs, 0xb005);
                auto factory = [&head](const std::vector<DenseVector>& bx,
                                       const std::vector<int>& by,
                                       const std::vector<double>& bw, uint64_t round_seed) {
                    return learners::fit_weak_learner(learners::WeakLearnerKind::softmax_head,
                                                      bx, by, bw, head, round_seed);
                };
                pl.committee = boosting::boost_fit(factory, X, y, bc);
            } else {
                auto lc = p.learner;
                lc.classes = pl.classes;
                const std::vector<double> w(X.size(), 1.0);
                pl.learner = learners::fit_weak_learner(classic_kind(model), X, y, w, lc, cs);
            }
        }
    }

    ordered_json m;
    m["feature"] = evalkit::feature_name(feature);
    m["model"] = evalkit::model_name(model);
    m["balanced"] = balance;
    m["classes"] = pl.classes;
    m["seed"] = seed;
    m["train_samples"] = d.train_docs.size();
    m["val_samples"] = d.val_docs.size();
    m["dim"] = pl.emobang ? p.encoder.dim : pl.featurizer.dim;
    m["params"] = evalkit::params_to_json(p);
    pl.manifest = std::move(m);
    return pl;
}

}  // namespace emoforge::pipeline
