#include "emoforge/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <utility>

#include "emoforge/textprep.hpp"

namespace emoforge::evalkit {

namespace {

using corpus::Corpus;
using neural::Tensor;
using textprep::TokenSeq;
using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0, bool wall_clock) {
    if (!wall_clock) return 0.0;
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return buf;
}

std::string hash_hex(const nlohmann::ordered_json& j) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

}  // namespace

long long ConfusionMatrix::total() const {
    long long s = 0;
    for (const auto& row : counts)
        for (long long c : row) s += c;
    return s;
}

long long ConfusionMatrix::trace() const {
    long long s = 0;
    for (int i = 0; i < classes; ++i) s += counts[i][i];
    return s;
}

nlohmann::ordered_json ConfusionMatrix::to_json() const {
    nlohmann::ordered_json j;
    j["classes"] = classes;
    j["counts"] = counts;
    return j;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true,
                                 const std::vector<int>& y_pred, int classes) {
    if (y_true.size() != y_pred.size())
        throw usage_error("confusion_matrix: label lists differ in length");
    if (y_true.empty()) throw usage_error("confusion_matrix: empty label lists");
    if (classes < 1) throw usage_error("confusion_matrix: classes must be positive");

    ConfusionMatrix cm;
    cm.classes = classes;
    cm.counts.assign(classes, std::vector<long long>(classes, 0));
    for (size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if (t < 0 || t >= classes || p < 0 || p >= classes)
            throw usage_error("confusion_matrix: label outside [0, classes)");
        ++cm.counts[t][p];
    }
    return cm;
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm) {
    if (cm.classes < 1 || cm.counts.size() != static_cast<size_t>(cm.classes))
        throw usage_error("metrics_from_confusion: malformed matrix");
    for (const auto& row : cm.counts) {
        if (row.size() != static_cast<size_t>(cm.classes))
            throw usage_error("metrics_from_confusion: malformed matrix");
        for (long long c : row)
            if (c < 0) throw usage_error("metrics_from_confusion: negative count");
    }
    const long long total = cm.total();
    if (total <= 0) throw usage_error("metrics_from_confusion: empty matrix");

    MetricsReport rep;
    rep.per_class.resize(cm.classes);
    double sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
    int present = 0;
    for (int c = 0; c < cm.classes; ++c) {
        long long tp = cm.counts[c][c], row = 0, col = 0;
        for (int j = 0; j < cm.classes; ++j) {
            row += cm.counts[c][j];
            col += cm.counts[j][c];
        }
        ClassMetrics& m = rep.per_class[c];
        m.support = row;
        m.predicted = col;
        if (col == 0)
            m.flagged = true;
        else
            m.precision = static_cast<double>(tp) / static_cast<double>(col);
        if (row == 0)
            m.flagged = true;
        else
            m.recall = static_cast<double>(tp) / static_cast<double>(row);
        // tp == 0 makes the harmonic mean 0/0; otherwise the single-division
        // form 2tp/(2tp+fp+fn) equals it without compounding roundoff.
        if (tp == 0)
            m.flagged = true;
        else
            m.f1 = static_cast<double>(2 * tp) / static_cast<double>(row + col);
        if (row > 0) {
            ++present;
            sum_p += m.precision;
            sum_r += m.recall;
            sum_f += m.f1;
        }
    }
    rep.macro_precision = sum_p / present;
    rep.macro_recall = sum_r / present;
    rep.macro_f1 = sum_f / present;
    rep.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
    return rep;
}

nlohmann::ordered_json MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    j["averaging"] = averaging;
    j["accuracy"] = accuracy;
    j["macro_precision"] = macro_precision;
    j["macro_recall"] = macro_recall;
    j["macro_f1"] = macro_f1;
    auto classes = nlohmann::ordered_json::array();
    for (size_t c = 0; c < per_class.size(); ++c) {
        const ClassMetrics& m = per_class[c];
        nlohmann::ordered_json e;
        e["class"] = c;
        e["precision"] = m.precision;
        e["recall"] = m.recall;
        e["f1"] = m.f1;
        e["support"] = m.support;
        e["predicted"] = m.predicted;
        e["flagged"] = m.flagged;
        classes.push_back(std::move(e));
    }
    j["per_class"] = std::move(classes);
    j["seconds"] = seconds;
    j["manifest_hash"] = manifest_hash;
    return j;
}

const std::array<FeatureKind, kNumFeatures>& all_features() {
    static const std::array<FeatureKind, kNumFeatures> order{
        FeatureKind::count, FeatureKind::tfidf, FeatureKind::skipgram,
        FeatureKind::subword, FeatureKind::contextual};
    return order;
}

const std::array<ModelKind, kNumModels>& all_models() {
    static const std::array<ModelKind, kNumModels> order{
        ModelKind::dt,  ModelKind::rf,   ModelKind::svm,    ModelKind::nb,
        ModelKind::rnn, ModelKind::lstm, ModelKind::hybrid, ModelKind::ensemble};
    return order;
}

std::string_view feature_name(FeatureKind f) {
    switch (f) {
        case FeatureKind::count: return "count";
        case FeatureKind::tfidf: return "tfidf";
        case FeatureKind::skipgram: return "skipgram";
        case FeatureKind::subword: return "subword";
        case FeatureKind::contextual: return "contextual";
    }
    throw usage_error("unknown feature kind");
}

std::string_view model_name(ModelKind m) {
    switch (m) {
        case ModelKind::dt: return "dt";
        case ModelKind::rf: return "rf";
        case ModelKind::svm: return "svm";
        case ModelKind::nb: return "nb";
        case ModelKind::rnn: return "rnn";
        case ModelKind::lstm: return "lstm";
        case ModelKind::hybrid: return "hybrid";
        case ModelKind::ensemble: return "ensemble";
    }
    throw usage_error("unknown model kind");
}

FeatureKind parse_feature(std::string_view name) {
    for (FeatureKind f : all_features())
        if (feature_name(f) == name) return f;
    throw usage_error("unknown feature \"" + std::string(name) +
                      "\" (expected count, tfidf, skipgram, subword or contextual)");
}

ModelKind parse_model(std::string_view name) {
    for (ModelKind m : all_models())
        if (model_name(m) == name) return m;
    throw usage_error("unknown model \"" + std::string(name) +
                      "\" (expected dt, rf, svm, nb, rnn, lstm, hybrid or ensemble)");
}

namespace {

bool sequence_model(ModelKind m) {
    return m == ModelKind::rnn || m == ModelKind::lstm || m == ModelKind::hybrid;
}

std::vector<FeatureKind> canon_features(const GridSpec& spec) {
    std::array<bool, kNumFeatures> have{};
    for (FeatureKind f : spec.features) {
        const int i = static_cast<int>(f);
        if (i < 0 || i >= kNumFeatures) throw usage_error("unknown feature kind");
        have[i] = true;
    }
    std::vector<FeatureKind> out;
    for (FeatureKind f : all_features())
        if (have[static_cast<int>(f)]) out.push_back(f);
    if (out.empty()) throw usage_error("grid spec needs at least one feature");
    return out;
}

std::vector<ModelKind> canon_models(const GridSpec& spec) {
    std::array<bool, kNumModels> have{};
    for (ModelKind m : spec.models) {
        const int i = static_cast<int>(m);
        if (i < 0 || i >= kNumModels) throw usage_error("unknown model kind");
        have[i] = true;
    }
    std::vector<ModelKind> out;
    for (ModelKind m : all_models())
        if (have[static_cast<int>(m)]) out.push_back(m);
    if (out.empty()) throw usage_error("grid spec needs at least one model");
    return out;
}

struct SplitData {
    std::vector<TokenSeq> train_docs, val_docs, test_docs;
    std::vector<int> train_y, val_y, test_y;
};

SplitData split_corpus(const Corpus& corpus) {
    SplitData d;
    for (const auto& s : corpus.samples) {
        if (!s.label || !s.split)
            throw data_error("grid corpus sample \"" + s.id + "\" lacks a label or split");
        TokenSeq toks = textprep::tokenize(s.text);
        const int y = static_cast<int>(*s.label);
        switch (*s.split) {
            case corpus::Split::train:
                d.train_docs.push_back(std::move(toks));
                d.train_y.push_back(y);
                break;
            case corpus::Split::val:
                d.val_docs.push_back(std::move(toks));
                d.val_y.push_back(y);
                break;
            case corpus::Split::test:
                d.test_docs.push_back(std::move(toks));
                d.test_y.push_back(y);
                break;
        }
    }
    if (d.train_docs.empty()) throw data_error("grid corpus has an empty training split");
    if (d.test_docs.empty()) throw data_error("grid corpus has an empty test split");
    return d;
}

struct FeatureSpace {
    FeatureKind kind = FeatureKind::count;
    bool sequential = false;
    int dim = 0;
    std::vector<DenseVector> train_X, val_X, test_X;
    std::vector<Tensor> train_seq, val_seq, test_seq;
    double seconds = 0.0;
    std::string error;  // non-empty: featurization failed
};

Tensor repeat_rows(const DenseVector& v, int times) {
    Tensor t(times, static_cast<int>(v.size()));
    for (int r = 0; r < times; ++r)
        for (int c = 0; c < t.cols; ++c) t.at(r, c) = v[c];
    return t;
}

Tensor embed_seq(const TokenSeq& doc, const features::EmbeddingTable& table, int dim) {
    std::vector<DenseVector> rows;
    for (const auto& tok : doc)
        if (auto v = table.token_vector(tok)) rows.push_back(std::move(*v));
    if (rows.empty()) return Tensor(1, dim, 0.0);
    Tensor t(static_cast<int>(rows.size()), dim);
    for (int r = 0; r < t.rows; ++r)
        for (int c = 0; c < dim; ++c) t.at(r, c) = rows[r][c];
    return t;
}

using DocVec = std::function<DenseVector(const TokenSeq&)>;

std::vector<DenseVector> vectorize_all(const std::vector<TokenSeq>& docs, const DocVec& f) {
    std::vector<DenseVector> out;
    out.reserve(docs.size());
    for (const auto& doc : docs) out.push_back(f(doc));
    return out;
}

void fill_doc_vectors(FeatureSpace& fs, const SplitData& d, const DocVec& f) {
    fs.train_X = vectorize_all(d.train_docs, f);
    fs.val_X = vectorize_all(d.val_docs, f);
    fs.test_X = vectorize_all(d.test_docs, f);
}

void fill_embed_seqs(FeatureSpace& fs, const SplitData& d,
                     const features::EmbeddingTable& table) {
    auto all = [&](const std::vector<TokenSeq>& docs) {
        std::vector<Tensor> out;
        out.reserve(docs.size());
        for (const auto& doc : docs) out.push_back(embed_seq(doc, table, fs.dim));
        return out;
    };
    fs.train_seq = all(d.train_docs);
    fs.val_seq = all(d.val_docs);
    fs.test_seq = all(d.test_docs);
}

FeatureSpace build_space(FeatureKind kind, const SplitData& d, const GridParams& p,
                         int classes, bool need_doc, bool need_seq, uint64_t seed) {
    FeatureSpace fs;
    fs.kind = kind;
    fs.sequential = kind == FeatureKind::skipgram || kind == FeatureKind::subword;
    if (!fs.sequential) need_doc = need_doc || need_seq;
    const auto t0 = Clock::now();
    try {
        const auto vocab = features::build_vocab(d.train_docs, p.vocab_min_freq);
        switch (kind) {
            case FeatureKind::count: {
                if (vocab.size() == 0) throw data_error("count features: empty vocabulary");
                fs.dim = vocab.size();
                fill_doc_vectors(fs, d, [&](const TokenSeq& doc) {
                    return features::count_vectorize(doc, vocab).dense();
                });
                break;
            }
            case FeatureKind::tfidf: {
                if (vocab.size() == 0) throw data_error("tfidf features: empty vocabulary");
                fs.dim = vocab.size();
                const auto model = features::fit_tfidf(vocab);
                fill_doc_vectors(fs, d, [&](const TokenSeq& doc) {
                    return features::tfidf_transform(doc, vocab, model).dense();
                });
                break;
            }
            case FeatureKind::skipgram: {
                auto cfg = p.skipgram;
                cfg.seed = derive_seed(seed, 0x5c1);
                const auto table = features::train_skipgram(d.train_docs, vocab, cfg);
                fs.dim = cfg.dim;
                if (need_doc)
                    fill_doc_vectors(fs, d, [&](const TokenSeq& doc) {
                        return features::embed_sentence(doc, table);
                    });
                if (need_seq) fill_embed_seqs(fs, d, table);
                break;
            }
            case FeatureKind::subword: {
                auto cfg = p.subword;
                cfg.seed = derive_seed(seed, 0x5c2);
                const auto table = features::train_subword(d.train_docs, vocab, cfg);
                fs.dim = cfg.dim;
                if (need_doc)
                    fill_doc_vectors(fs, d, [&](const TokenSeq& doc) {
                        return features::embed_sentence(doc, table);
                    });
                if (need_seq) fill_embed_seqs(fs, d, table);
                break;
            }
            case FeatureKind::contextual: {
                auto cfg = p.encoder;
                cfg.classes = classes;
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
                fs.dim = cfg.dim;
                fill_doc_vectors(fs, d, [&](const TokenSeq& doc) {
                    return neural::encode_contextual(doc, enc);
                });
                break;
            }
        }
        if (!fs.sequential && need_seq) {
            auto all = [&](const std::vector<DenseVector>& X) {
                std::vector<Tensor> out;
                out.reserve(X.size());
                for (const auto& x : X) out.push_back(repeat_rows(x, p.repeat_positions));
                return out;
            };
            fs.train_seq = all(fs.train_X);
            fs.val_seq = all(fs.val_X);
            fs.test_seq = all(fs.test_X);
        }
    } catch (const std::exception& e) {
        fs.error = e.what();
    }
    fs.seconds = since(t0, p.wall_clock);
    return fs;
}

learners::WeakLearnerKind classic_kind(ModelKind m) {
    switch (m) {
        case ModelKind::dt: return learners::WeakLearnerKind::decision_tree;
        case ModelKind::rf: return learners::WeakLearnerKind::random_forest;
        case ModelKind::svm: return learners::WeakLearnerKind::linear_svm;
        default: return learners::WeakLearnerKind::naive_bayes;
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

GridRow run_cell(const FeatureSpace& fs, ModelKind model, bool balance, const SplitData& d,
                 const GridParams& p, int classes, uint64_t seed) {
    GridRow row;
    row.feature = fs.kind;
    row.model = model;
    row.balanced = balance;
    row.featurize_seconds = fs.seconds;
    row.interpretation = sequence_model(model) && !fs.sequential;
    if (!fs.error.empty()) {
        row.ok = false;
        row.error = "featurize: " + fs.error;
        return row;
    }
    try {
        std::unique_ptr<learners::WeakLearner> single;
        boosting::BoostedEnsemble committee;
        neural::ModelGraph net;
        neural::HybridModel hyb;
        std::function<int(size_t)> predict;

        const auto t0 = Clock::now();
        if (!sequence_model(model)) {
            auto X = fs.train_X;
            auto y = d.train_y;
            if (balance) balance_vectors(X, y, p.smote, derive_seed(seed, 0xba1));
            if (model == ModelKind::ensemble) {
                auto head = p.learner;
                head.classes = classes;
                auto bc = p.boost;
                bc.classes = classes;
                bc.seed = derive_seed(seed, 0xb005);
                auto factory = [&head](const std::vector<DenseVector>& bx,
                                       const std::vector<int>& by,
                                       const std::vector<double>& bw, uint64_t round_seed) {
                    return learners::fit_weak_learner(learners::WeakLearnerKind::softmax_head,
                                                      bx, by, bw, head, round_seed);
                };
                committee = boosting::boost_fit(factory, X, y, bc);
                predict = [&](size_t i) { return committee.predict(fs.test_X[i]); };
            } else {
                auto lc = p.learner;
                lc.classes = classes;
                const std::vector<double> w(X.size(), 1.0);
                single = learners::fit_weak_learner(classic_kind(model), X, y, w, lc, seed);
                predict = [&](size_t i) { return single->predict(fs.test_X[i]); };
            }
        } else {
            std::vector<neural::Example> tr;
            tr.reserve(fs.train_seq.size());
            for (size_t i = 0; i < fs.train_seq.size(); ++i)
                tr.push_back({fs.train_seq[i], d.train_y[i], 1.0});
            std::vector<neural::Example> va;
            va.reserve(fs.val_seq.size());
            for (size_t i = 0; i < fs.val_seq.size(); ++i)
                va.push_back({fs.val_seq[i], d.val_y[i], 1.0});
            if (va.empty()) va = tr;
            if (balance) balance_examples(tr, classes);
            auto tc = p.net_train;
            tc.seed = derive_seed(seed, 0x7e0);
            tc.wall_clock = p.wall_clock;
            neural::ModelGraph* graph = nullptr;
            if (model == ModelKind::hybrid) {
                auto hc = p.hybrid;
                hc.classes = classes;
                hyb = neural::build_hybrid_vectors(fs.dim, hc, derive_seed(seed, 0x111));
                graph = &hyb.graph;
            } else {
                net.add(model == ModelKind::rnn
                            ? neural::make_rnn(fs.dim, p.rnn_hidden, false)
                            : neural::make_lstm(fs.dim, p.rnn_hidden, false));
                net.add(neural::make_dense(p.rnn_hidden, classes, neural::Activation::identity));
                net.init_params(derive_seed(seed, 0x111));
                graph = &net;
            }
            neural::train_supervised(*graph, tr, va, tc);
            predict = [&fs, graph](size_t i) {
                const Tensor out = graph->forward(fs.test_seq[i]);
                return learners::argmax_index(out.data);
            };
        }
        row.train_seconds = since(t0, p.wall_clock);

        const auto t1 = Clock::now();
        std::vector<int> preds;
        preds.reserve(d.test_y.size());
        for (size_t i = 0; i < d.test_y.size(); ++i) preds.push_back(predict(i));
        row.predict_seconds = since(t1, p.wall_clock);

        row.metrics = metrics_from_confusion(confusion_matrix(d.test_y, preds, classes));
        row.metrics.seconds = row.train_seconds;
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    return row;
}

uint64_t cell_seed(uint64_t master, FeatureKind f, ModelKind m) {
    return derive_seed(master, 0xce11ull * (static_cast<uint64_t>(f) + 1) +
                                   static_cast<uint64_t>(m));
}

std::vector<GridRow> run_matrix(const SplitData& d, const std::vector<FeatureKind>& feats,
                                const std::vector<ModelKind>& models,
                                const std::vector<bool>& modes, const GridParams& p,
                                uint64_t master, int classes) {
    if (p.repeat_positions < 1)
        throw usage_error("repeat_positions must be at least 1");
    bool need_doc = false, need_seq = false;
    for (ModelKind m : models) {
        need_seq = need_seq || sequence_model(m);
        need_doc = need_doc || !sequence_model(m);
    }
    std::vector<GridRow> rows;
    rows.reserve(feats.size() * models.size() * modes.size());
    for (FeatureKind f : feats) {
        const FeatureSpace fs =
            build_space(f, d, p, classes, need_doc, need_seq,
                        derive_seed(master, 0xfea70000ull + static_cast<uint64_t>(f)));
        for (ModelKind m : models)
            for (bool mode : modes)
                rows.push_back(run_cell(fs, m, mode, d, p, classes, cell_seed(master, f, m)));
    }
    return rows;
}

nlohmann::ordered_json train_cfg_json(const neural::TrainConfig& c) {
    nlohmann::ordered_json j;
    j["lr"] = c.lr;
    j["batch"] = c.batch;
    j["max_epochs"] = c.max_epochs;
    j["patience"] = c.patience;
    return j;
}

void check_keys(const nlohmann::ordered_json& j,
                std::initializer_list<std::string_view> allowed, const char* where) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (std::string_view a : allowed)
            if (item.key() == a) {
                known = true;
                break;
            }
        if (!known)
            throw data_error("unknown key \"" + item.key() + "\" in " + where);
    }
}

void read_train_cfg(const nlohmann::ordered_json& j, neural::TrainConfig& c,
                    const char* where) {
    check_keys(j, {"lr", "batch", "max_epochs", "patience"}, where);
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("batch")) c.batch = j["batch"].get<int>();
    if (j.contains("max_epochs")) c.max_epochs = j["max_epochs"].get<int>();
    if (j.contains("patience")) c.patience = j["patience"].get<int>();
}

}  // namespace

nlohmann::ordered_json params_to_json(const GridParams& p) {
    nlohmann::ordered_json j;
    j["vocab_min_freq"] = p.vocab_min_freq;
    j["repeat_positions"] = p.repeat_positions;
    j["wall_clock"] = p.wall_clock;
    j["skipgram"] = {{"dim", p.skipgram.dim},
                     {"window", p.skipgram.window},
                     {"negatives", p.skipgram.negatives},
                     {"epochs", p.skipgram.epochs},
                     {"lr0", p.skipgram.lr0}};
    j["subword"] = {{"dim", p.subword.dim},
                    {"n_min", p.subword.n_min},
                    {"n_max", p.subword.n_max},
                    {"buckets", p.subword.buckets},
                    {"window", p.subword.window},
                    {"negatives", p.subword.negatives},
                    {"epochs", p.subword.epochs},
                    {"lr0", p.subword.lr0}};
    j["encoder"] = {{"max_len", p.encoder.max_len},
                    {"dim", p.encoder.dim},
                    {"heads", p.encoder.heads},
                    {"blocks", p.encoder.blocks},
                    {"ff", p.encoder.ff}};
    j["encoder_train"] = train_cfg_json(p.encoder_train);
    j["hybrid"] = {{"embed_dim", p.hybrid.embed_dim},
                   {"kernel", p.hybrid.kernel},
                   {"filters", p.hybrid.filters},
                   {"pool", p.hybrid.pool},
                   {"lstm", p.hybrid.lstm},
                   {"dropout", p.hybrid.dropout}};
    j["net_train"] = train_cfg_json(p.net_train);
    j["rnn_hidden"] = p.rnn_hidden;
    j["learner"] = {{"nb_alpha", p.learner.nb_alpha},
                    {"tree_max_depth", p.learner.tree_max_depth},
                    {"tree_min_leaf_weight", p.learner.tree_min_leaf_weight},
                    {"forest_trees", p.learner.forest_trees},
                    {"forest_bootstrap", p.learner.forest_bootstrap},
                    {"svm_epochs", p.learner.svm_epochs},
                    {"svm_lambda", p.learner.svm_lambda},
                    {"svm_lr", p.learner.svm_lr},
                    {"head_epochs", p.learner.head_epochs},
                    {"head_lr", p.learner.head_lr},
                    {"head_batch", p.learner.head_batch},
                    {"head_dropout", p.learner.head_dropout}};
    j["boost"] = {{"rounds", p.boost.rounds},
                  {"max_rejects", p.boost.max_rejects},
                  {"alpha_cap", p.boost.alpha_cap}};
    j["smote"] = {{"k", p.smote.k}, {"target", p.smote.target}};
    return j;
}

GridParams params_from_json(const nlohmann::ordered_json& j) {
    GridParams p;
    try {
        if (!j.is_object()) throw data_error("grid params must be a JSON object");
        check_keys(j,
                   {"vocab_min_freq", "repeat_positions", "wall_clock", "skipgram",
                    "subword", "encoder", "encoder_train", "hybrid", "net_train",
                    "rnn_hidden", "learner", "boost", "smote"},
                   "grid params");
        if (j.contains("vocab_min_freq"))
            p.vocab_min_freq = j["vocab_min_freq"].get<size_t>();
        if (j.contains("repeat_positions"))
            p.repeat_positions = j["repeat_positions"].get<int>();
        if (j.contains("wall_clock")) p.wall_clock = j["wall_clock"].get<bool>();
        if (j.contains("skipgram")) {
            const auto& s = j["skipgram"];
            check_keys(s, {"dim", "window", "negatives", "epochs", "lr0"}, "skipgram params");
            if (s.contains("dim")) p.skipgram.dim = s["dim"].get<int>();
            if (s.contains("window")) p.skipgram.window = s["window"].get<int>();
            if (s.contains("negatives")) p.skipgram.negatives = s["negatives"].get<int>();
            if (s.contains("epochs")) p.skipgram.epochs = s["epochs"].get<int>();
            if (s.contains("lr0")) p.skipgram.lr0 = s["lr0"].get<double>();
        }
        if (j.contains("subword")) {
            const auto& s = j["subword"];
            check_keys(s, {"dim", "n_min", "n_max", "buckets", "window", "negatives",
                           "epochs", "lr0"},
                       "subword params");
            if (s.contains("dim")) p.subword.dim = s["dim"].get<int>();
            if (s.contains("n_min")) p.subword.n_min = s["n_min"].get<int>();
            if (s.contains("n_max")) p.subword.n_max = s["n_max"].get<int>();
            if (s.contains("buckets")) p.subword.buckets = s["buckets"].get<uint32_t>();
            if (s.contains("window")) p.subword.window = s["window"].get<int>();
            if (s.contains("negatives")) p.subword.negatives = s["negatives"].get<int>();
            if (s.contains("epochs")) p.subword.epochs = s["epochs"].get<int>();
            if (s.contains("lr0")) p.subword.lr0 = s["lr0"].get<double>();
        }
        if (j.contains("encoder")) {
            const auto& s = j["encoder"];
            check_keys(s, {"max_len", "dim", "heads", "blocks", "ff"}, "encoder params");
            if (s.contains("max_len")) p.encoder.max_len = s["max_len"].get<int>();
            if (s.contains("dim")) p.encoder.dim = s["dim"].get<int>();
            if (s.contains("heads")) p.encoder.heads = s["heads"].get<int>();
            if (s.contains("blocks")) p.encoder.blocks = s["blocks"].get<int>();
            if (s.contains("ff")) p.encoder.ff = s["ff"].get<int>();
        }
        if (j.contains("encoder_train"))
            read_train_cfg(j["encoder_train"], p.encoder_train, "encoder_train params");
        if (j.contains("hybrid")) {
            const auto& s = j["hybrid"];
            check_keys(s, {"embed_dim", "kernel", "filters", "pool", "lstm", "dropout"},
                       "hybrid params");
            if (s.contains("embed_dim")) p.hybrid.embed_dim = s["embed_dim"].get<int>();
            if (s.contains("kernel")) p.hybrid.kernel = s["kernel"].get<int>();
            if (s.contains("filters")) p.hybrid.filters = s["filters"].get<int>();
            if (s.contains("pool")) p.hybrid.pool = s["pool"].get<int>();
            if (s.contains("lstm")) p.hybrid.lstm = s["lstm"].get<int>();
            if (s.contains("dropout")) p.hybrid.dropout = s["dropout"].get<double>();
        }
        if (j.contains("net_train"))
            read_train_cfg(j["net_train"], p.net_train, "net_train params");
        if (j.contains("rnn_hidden")) p.rnn_hidden = j["rnn_hidden"].get<int>();
        if (j.contains("learner")) {
            const auto& s = j["learner"];
            check_keys(s, {"nb_alpha", "tree_max_depth", "tree_min_leaf_weight",
                           "forest_trees", "forest_bootstrap", "svm_epochs", "svm_lambda",
                           "svm_lr", "head_epochs", "head_lr", "head_batch", "head_dropout"},
                       "learner params");
            if (s.contains("nb_alpha")) p.learner.nb_alpha = s["nb_alpha"].get<double>();
            if (s.contains("tree_max_depth"))
                p.learner.tree_max_depth = s["tree_max_depth"].get<int>();
            if (s.contains("tree_min_leaf_weight"))
                p.learner.tree_min_leaf_weight = s["tree_min_leaf_weight"].get<double>();
            if (s.contains("forest_trees"))
                p.learner.forest_trees = s["forest_trees"].get<int>();
            if (s.contains("forest_bootstrap"))
                p.learner.forest_bootstrap = s["forest_bootstrap"].get<bool>();
            if (s.contains("svm_epochs")) p.learner.svm_epochs = s["svm_epochs"].get<int>();
            if (s.contains("svm_lambda"))
                p.learner.svm_lambda = s["svm_lambda"].get<double>();
            if (s.contains("svm_lr")) p.learner.svm_lr = s["svm_lr"].get<double>();
            if (s.contains("head_epochs"))
                p.learner.head_epochs = s["head_epochs"].get<int>();
            if (s.contains("head_lr")) p.learner.head_lr = s["head_lr"].get<double>();
            if (s.contains("head_batch")) p.learner.head_batch = s["head_batch"].get<int>();
            if (s.contains("head_dropout"))
                p.learner.head_dropout = s["head_dropout"].get<double>();
        }
        if (j.contains("boost")) {
            const auto& s = j["boost"];
            check_keys(s, {"rounds", "max_rejects", "alpha_cap"}, "boost params");
            if (s.contains("rounds")) p.boost.rounds = s["rounds"].get<int>();
            if (s.contains("max_rejects")) p.boost.max_rejects = s["max_rejects"].get<int>();
            if (s.contains("alpha_cap")) p.boost.alpha_cap = s["alpha_cap"].get<double>();
        }
        if (j.contains("smote")) {
            const auto& s = j["smote"];
            check_keys(s, {"k", "target"}, "smote params");
            if (s.contains("k")) p.smote.k = s["k"].get<int>();
            if (s.contains("target")) p.smote.target = s["target"].get<size_t>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("grid params: ") + e.what());
    }
    return p;
}

namespace {

nlohmann::ordered_json make_manifest(const char* report, const Corpus& corpus,
                                     const SplitData& d,
                                     const std::vector<FeatureKind>& feats,
                                     const std::vector<ModelKind>& models,
                                     const GridSpec& spec, const GridParams& p,
                                     bool study) {
    nlohmann::ordered_json j;
    j["tool"] = "emoforge";
    j["report"] = report;
    j["averaging"] = "macro";
    j["seed"] = spec.seed;
    if (study)
        j["balance"] = "off+on";
    else
        j["balance"] = spec.balance;
    auto fnames = nlohmann::ordered_json::array();
    for (FeatureKind f : feats) fnames.push_back(std::string(feature_name(f)));
    j["features"] = std::move(fnames);
    auto mnames = nlohmann::ordered_json::array();
    for (ModelKind m : models) mnames.push_back(std::string(model_name(m)));
    j["models"] = std::move(mnames);
    const auto stats = corpus::corpus_stats(corpus);
    nlohmann::ordered_json per_class;
    for (auto label : corpus::all_labels())
        per_class[std::string(corpus::label_name(label))] =
            stats.per_class[static_cast<int>(label)];
    j["corpus"] = {{"samples", corpus.samples.size()},
                   {"train", d.train_docs.size()},
                   {"val", d.val_docs.size()},
                   {"test", d.test_docs.size()},
                   {"per_class", std::move(per_class)}};
    j["params"] = params_to_json(p);
    return j;
}

std::string csv_report(const std::string& hash, const std::vector<GridRow>& rows) {
    std::string out;
    out += "# manifest " + hash + "\n";
    out += "# averaging macro\n";
    out += "feature,model,balanced,precision,recall,f1,accuracy,seconds\n";
    for (const GridRow& r : rows) {
        out += std::string(feature_name(r.feature)) + ",";
        out += std::string(model_name(r.model)) + ",";
        out += r.balanced ? "true," : "false,";
        if (r.ok) {
            out += fmt6(r.metrics.macro_precision) + "," + fmt6(r.metrics.macro_recall) +
                   "," + fmt6(r.metrics.macro_f1) + "," + fmt6(r.metrics.accuracy) + "," +
                   fmt6(r.train_seconds);
        } else {
            out += ",,,,";
        }
        out += "\n";
    }
    return out;
}

}  // namespace

nlohmann::ordered_json GridRow::to_json() const {
    nlohmann::ordered_json j;
    j["feature"] = std::string(feature_name(feature));
    j["model"] = std::string(model_name(model));
    j["balanced"] = balanced;
    j["ok"] = ok;
    j["interpretation"] = interpretation;
    if (ok)
        j["metrics"] = metrics.to_json();
    else
        j["error"] = error;
    j["featurize_seconds"] = featurize_seconds;
    j["train_seconds"] = train_seconds;
    j["predict_seconds"] = predict_seconds;
    return j;
}

nlohmann::ordered_json GridResult::to_json() const {
    nlohmann::ordered_json j;
    j["type"] = "grid_report";
    j["averaging"] = averaging;
    j["manifest_hash"] = manifest_hash;
    j["manifest"] = manifest;
    auto arr = nlohmann::ordered_json::array();
    for (const GridRow& r : rows) arr.push_back(r.to_json());
    j["rows"] = std::move(arr);
    return j;
}

std::string GridResult::to_csv() const { return csv_report(manifest_hash, rows); }

GridResult run_grid(const corpus::Corpus& corpus, const GridSpec& spec,
                    const GridParams& params) {
    const auto feats = canon_features(spec);
    const auto models = canon_models(spec);
    const SplitData d = split_corpus(corpus);
    GridResult result;
    result.manifest = make_manifest("grid", corpus, d, feats, models, spec, params, false);
    result.manifest_hash = hash_hex(result.manifest);
    result.rows =
        run_matrix(d, feats, models, {spec.balance}, params, spec.seed, corpus::kNumLabels);
    for (GridRow& r : result.rows) r.metrics.manifest_hash = result.manifest_hash;
    return result;
}

nlohmann::ordered_json BalanceResult::to_json() const {
    nlohmann::ordered_json j;
    j["type"] = "balance_report";
    j["averaging"] = averaging;
    j["manifest_hash"] = manifest_hash;
    j["manifest"] = manifest;
    auto arr = nlohmann::ordered_json::array();
    for (const GridRow& r : rows) arr.push_back(r.to_json());
    j["rows"] = std::move(arr);
    auto ds = nlohmann::ordered_json::array();
    for (const BalanceDelta& delta : deltas) {
        nlohmann::ordered_json e;
        e["feature"] = std::string(feature_name(delta.feature));
        e["model"] = std::string(model_name(delta.model));
        e["ok"] = delta.ok;
        e["d_precision"] = delta.d_precision;
        e["d_recall"] = delta.d_recall;
        e["d_f1"] = delta.d_f1;
        e["d_accuracy"] = delta.d_accuracy;
        ds.push_back(std::move(e));
    }
    j["deltas"] = std::move(ds);
    return j;
}

std::string BalanceResult::to_csv() const { return csv_report(manifest_hash, rows); }

BalanceResult balancing_report(const corpus::Corpus& corpus, const GridSpec& spec,
                               const GridParams& params) {
    const auto feats = canon_features(spec);
    const auto models = canon_models(spec);
    const SplitData d = split_corpus(corpus);
    BalanceResult result;
    result.manifest =
        make_manifest("balance", corpus, d, feats, models, spec, params, true);
    result.manifest_hash = hash_hex(result.manifest);
    result.rows =
        run_matrix(d, feats, models, {false, true}, params, spec.seed, corpus::kNumLabels);
    for (GridRow& r : result.rows) r.metrics.manifest_hash = result.manifest_hash;
    for (size_t i = 0; i + 1 < result.rows.size(); i += 2) {
        const GridRow& before = result.rows[i];
        const GridRow& after = result.rows[i + 1];
        BalanceDelta delta;
        delta.feature = before.feature;
        delta.model = before.model;
        delta.ok = before.ok && after.ok;
        if (delta.ok) {
            delta.d_precision = after.metrics.macro_precision - before.metrics.macro_precision;
            delta.d_recall = after.metrics.macro_recall - before.metrics.macro_recall;
            delta.d_f1 = after.metrics.macro_f1 - before.metrics.macro_f1;
            delta.d_accuracy = after.metrics.accuracy - before.metrics.accuracy;
        }
        result.deltas.push_back(delta);
    }
    return result;
}

}  // namespace emoforge::evalkit
