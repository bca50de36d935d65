// Acceptance checks for the full toolkit. Each criterion prints one
// PASS/FAIL line; the process exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "emoforge/pipeline.hpp"

using namespace emoforge;
using features::DenseVector;
using neural::Tensor;
using textprep::TokenSeq;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, value);
    return buf;
}

// ---------------------------------------------------------------- criterion 1

bool gradient_correctness(std::string& detail) {
    const auto t0 = Clock::now();
    Rng rng(17);
    auto make_batch = [&](int rows, int cols, int classes) {
        std::vector<neural::Example> batch;
        for (int b = 0; b < 2; ++b) {
            Tensor x(rows, cols);
            for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
            batch.push_back({x, b % classes, 1.0});
        }
        return batch;
    };

    neural::ModelGraph dense;
    dense.add(neural::make_dense(4, 6, neural::Activation::tanh_fn));
    dense.add(neural::make_dense(6, 3, neural::Activation::identity));
    dense.init_params(11);
    const double dense_err = neural::grad_check(dense, make_batch(1, 4, 3));

    double other_err = 0.0;

    neural::ModelGraph conv;
    conv.add(neural::make_conv1d(3, 4, 3, neural::Activation::relu));
    conv.add(neural::make_max_pool1d(2));
    conv.add(neural::make_mean_pool());
    conv.add(neural::make_dense(4, 3, neural::Activation::identity));
    conv.init_params(23);
    other_err = std::max(other_err, neural::grad_check(conv, make_batch(5, 3, 3)));

    neural::ModelGraph lstm;
    lstm.add(neural::make_lstm(3, 4, false));
    lstm.add(neural::make_dense(4, 3, neural::Activation::identity));
    lstm.init_params(37);
    other_err = std::max(other_err, neural::grad_check(lstm, make_batch(4, 3, 3)));

    neural::ModelGraph attn;
    attn.add(neural::make_attention_block(6, 2, 8));
    attn.add(neural::make_mean_pool());
    attn.add(neural::make_dense(6, 3, neural::Activation::identity));
    attn.init_params(41);
    other_err =
        std::max(other_err, neural::grad_check(attn, make_batch(4, 6, 3), 1e-5, 400));

    neural::HybridConfig hc;
    hc.embed_dim = 6;
    hc.filters = 5;
    hc.lstm = 4;
    hc.dropout = 0.1;
    neural::HybridModel hybrid = neural::build_hybrid_tokens({"x", "y", "z"}, hc, 31);
    std::vector<neural::Example> hybrid_batch{
        {neural::hybrid_input({"x", "z"}, hybrid), 3, 1.0}};
    other_err =
        std::max(other_err, neural::grad_check(hybrid.graph, hybrid_batch, 1e-5, 400));

    neural::EncoderConfig ec;
    ec.dim = 8;
    ec.heads = 2;
    ec.blocks = 1;
    ec.ff = 12;
    ec.max_len = 8;
    ec.classes = 4;
    neural::ContextualModel enc = neural::build_encoder({"p", "q", "r"}, ec, 61);
    std::vector<neural::Example> enc_batch{
        {neural::encoder_input({"p", "r", "q"}, enc), 1, 1.0}};
    other_err =
        std::max(other_err, neural::grad_check(enc.graph, enc_batch, 1e-5, 400));

    const double elapsed = seconds_since(t0);
    detail = "dense " + fmt("%.2e", dense_err) + ", others " + fmt("%.2e", other_err) +
             ", " + fmt("%.1f", elapsed) + "s";
    return dense_err < 1e-6 && other_err < 1e-3 && elapsed < 120.0;
}

// ---------------------------------------------------------------- criterion 2

bool softmax_equation(std::string& detail) {
    Rng rng(42);
    double max_diff = 0.0, max_shift = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int dim = 2 + static_cast<int>(rng.uniform_int(15));
        DenseVector x(dim);
        for (auto& v : x) v = rng.uniform(-30.0, 30.0);

        const DenseVector got = neural::softmax(x);

        long double m = x[0];
        for (double v : x) m = std::max<long double>(m, v);
        std::vector<long double> e(x.size());
        long double z = 0.0L;
        for (size_t i = 0; i < x.size(); ++i) {
            e[i] = expl(static_cast<long double>(x[i]) - m);
            z += e[i];
        }
        for (size_t i = 0; i < x.size(); ++i)
            max_diff = std::max(max_diff,
                                std::abs(got[i] - static_cast<double>(e[i] / z)));

        const double shift = rng.uniform(-50.0, 50.0);
        DenseVector shifted = x;
        for (auto& v : shifted) v += shift;
        const DenseVector got2 = neural::softmax(shifted);
        for (size_t i = 0; i < x.size(); ++i)
            max_shift = std::max(max_shift, std::abs(got[i] - got2[i]));
    }
    detail = "max err " + fmt("%.2e", max_diff) + ", max shift err " + fmt("%.2e", max_shift);
    return max_diff < 1e-12 && max_shift < 1e-12;
}

// ---------------------------------------------------------------- criterion 3

std::unique_ptr<learners::WeakLearner> memorize(const std::vector<DenseVector>& X,
                                                const std::vector<int>& preds,
                                                int classes) {
    learners::LearnerConfig cfg;
    cfg.classes = classes;
    cfg.tree_max_depth = 20;
    const std::vector<double> w(X.size(), 1.0);
    auto h = learners::fit_weak_learner(learners::WeakLearnerKind::decision_tree, X,
                                        preds, w, cfg, 0);
    for (size_t i = 0; i < X.size(); ++i)
        if (h->predict(X[i]) != preds[i]) throw training_error("memorization failed");
    return h;
}

bool boosting_oracle(std::string& detail) {
    std::vector<DenseVector> X;
    for (int i = 0; i < 9; ++i) X.push_back({static_cast<double>(i)});
    const std::vector<std::vector<int>> member_preds{{0, 0, 0, 1, 1, 1, 2, 2, 2},
                                                     {0, 1, 2, 0, 1, 2, 0, 1, 2},
                                                     {2, 2, 1, 1, 0, 0, 2, 1, 0},
                                                     {0, 0, 1, 1, 2, 2, 0, 0, 1},
                                                     {1, 0, 2, 1, 0, 2, 1, 0, 2}};
    const std::vector<double> alphas{0.9, 0.3, 0.55, 0.2, 0.75};

    boosting::BoostedEnsemble ensemble;
    ensemble.config.classes = 3;
    for (size_t t = 0; t < alphas.size(); ++t) {
        boosting::BoostMember m;
        m.alpha = alphas[t];
        m.learner = memorize(X, member_preds[t], 3);
        ensemble.members.push_back(std::move(m));
    }

    int matches = 0;
    for (size_t i = 0; i < X.size(); ++i) {
        DenseVector votes(3, 0.0);
        for (size_t t = 0; t < alphas.size(); ++t)
            votes[member_preds[t][i]] += alphas[t];
        int brute = 0;
        for (int j = 1; j < 3; ++j)
            if (votes[j] > votes[brute]) brute = j;
        matches += ensemble.predict(X[i]) == brute;
    }

    const std::vector<DenseVector> X4{{0.0}, {1.0}, {2.0}, {3.0}};
    const std::vector<int> y4{0, 1, 0, 0};
    auto h = memorize(X4, {0, 1, 0, 1}, 2);
    const double err4 = boosting::weighted_error(*h, X4, y4, {0.25, 0.25, 0.25, 0.25});
    const auto alpha = boosting::alpha_from_error(err4, 2, std::log(1e10));
    double hand_err = 1.0;
    std::vector<double> w4(4, 0.25);
    if (alpha) {
        boosting::update_weights(w4, *h, X4, y4, *alpha);
        const DenseVector expect{1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 2};
        hand_err = 0.0;
        for (int i = 0; i < 4; ++i) hand_err = std::max(hand_err, std::abs(w4[i] - expect[i]));
    }

    Rng rng(314);
    std::vector<DenseVector> sx;
    std::vector<int> sy;
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 10; ++i) {
            sx.push_back({5.0 * k + rng.uniform(-0.5, 0.5)});
            sy.push_back(k);
        }
    learners::LearnerConfig stump_cfg;
    stump_cfg.classes = 3;
    stump_cfg.tree_max_depth = 1;
    std::vector<double> ws(sx.size(), 1.0 / static_cast<double>(sx.size()));
    double worst_sum = 0.0;
    for (int round = 0; round < 5; ++round) {
        auto stump = learners::fit_weak_learner(learners::WeakLearnerKind::decision_tree,
                                                sx, sy, ws, stump_cfg,
                                                static_cast<uint64_t>(round));
        const double e = boosting::weighted_error(*stump, sx, sy, ws);
        const auto a = boosting::alpha_from_error(e, 3, std::log(1e10));
        if (!a) break;
        boosting::update_weights(ws, *stump, sx, sy, *a);
        double sum = 0.0;
        for (double v : ws) sum += v;
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }

    detail = "oracle " + std::to_string(matches) + "/9, hand-case err " +
             fmt("%.2e", hand_err) + ", weight-sum err " + fmt("%.2e", worst_sum);
    return matches == 9 && alpha && std::abs(*alpha - std::log(3.0)) < 1e-12 &&
           hand_err <= 1e-12 && worst_sum <= 1e-12;
}

// ---------------------------------------------------------------- criterion 4

bool boosting_effectiveness(std::string& detail) {
    Rng rng(314);
    std::vector<DenseVector> X;
    std::vector<int> y;
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 10; ++i) {
            X.push_back({5.0 * k + rng.uniform(-0.5, 0.5)});
            y.push_back(k);
        }
    boosting::WeakFactory factory = [](const std::vector<DenseVector>& bx,
                                       const std::vector<int>& by,
                                       const std::vector<double>& bw, uint64_t seed) {
        learners::LearnerConfig cfg;
        cfg.classes = 3;
        cfg.tree_max_depth = 1;
        return learners::fit_weak_learner(learners::WeakLearnerKind::decision_tree, bx,
                                          by, bw, cfg, seed);
    };
    boosting::BoostConfig cfg;
    cfg.rounds = 20;
    cfg.classes = 3;
    cfg.seed = 5;
    auto e1 = boosting::boost_fit(factory, X, y, cfg);
    auto e2 = boosting::boost_fit(factory, X, y, cfg);

    int ensemble_correct = 0;
    for (size_t i = 0; i < X.size(); ++i) ensemble_correct += e1.predict(X[i]) == y[i];
    int best_single = 0;
    for (const auto& m : e1.members) {
        int c = 0;
        for (size_t i = 0; i < X.size(); ++i) c += m.learner->predict(X[i]) == y[i];
        best_single = std::max(best_single, c);
    }
    const bool deterministic = e1.to_json().dump() == e2.to_json().dump();
    detail = "train acc " + std::to_string(ensemble_correct) + "/30 in " +
             std::to_string(e1.members.size()) + " rounds, best member " +
             std::to_string(best_single) + "/30" +
             (deterministic ? ", reruns identical" : ", reruns differ");
    return ensemble_correct == 30 && e1.members.size() <= 20 &&
           ensemble_correct >= best_single && deterministic;
}

// ---------------------------------------------------------------- criterion 5

double segment_distance(const DenseVector& p, const DenseVector& a, const DenseVector& b) {
    double ab = 0.0, ap_ab = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        ab += (b[i] - a[i]) * (b[i] - a[i]);
        ap_ab += (p[i] - a[i]) * (b[i] - a[i]);
    }
    const double t = ab > 0.0 ? std::clamp(ap_ab / ab, 0.0, 1.0) : 0.0;
    double d = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        const double q = a[i] + t * (b[i] - a[i]);
        d += (p[i] - q) * (p[i] - q);
    }
    return std::sqrt(d);
}

bool smote_geometry(std::string& detail) {
    Rng rng(7);
    std::vector<DenseVector> X;
    std::vector<corpus::EmotionLabel> y;
    const double cx[3] = {0.0, 5.0, 10.0};
    const double cy[3] = {0.0, 5.0, 0.0};
    const int sizes[3] = {10, 6, 4};
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < sizes[k]; ++i) {
            X.push_back({cx[k] + rng.uniform(-1.0, 1.0), cy[k] + rng.uniform(-1.0, 1.0)});
            y.push_back(static_cast<corpus::EmotionLabel>(k));
        }

    features::SmoteConfig cfg;
    cfg.k = 3;
    cfg.seed = 99;
    auto [bx, by] = features::smote_balance(X, y, cfg);

    int counts[3] = {0, 0, 0};
    for (auto l : by) ++counts[static_cast<int>(l)];
    const bool balanced = counts[0] == 10 && counts[1] == 10 && counts[2] == 10;

    // Exhaustive check: every synthetic point sits on a segment between a
    // minority point and one of its k same-class nearest neighbours.
    double worst = 0.0;
    for (size_t s = X.size(); s < bx.size(); ++s) {
        const int c = static_cast<int>(by[s]);
        std::vector<size_t> members;
        for (size_t i = 0; i < X.size(); ++i)
            if (static_cast<int>(y[i]) == c) members.push_back(i);
        double best = 1e9;
        const int k_eff = std::min<int>(cfg.k, static_cast<int>(members.size()) - 1);
        for (size_t a : members) {
            std::vector<std::pair<double, size_t>> near;
            for (size_t b : members) {
                if (b == a) continue;
                double d2 = 0.0;
                for (size_t j = 0; j < 2; ++j)
                    d2 += (X[a][j] - X[b][j]) * (X[a][j] - X[b][j]);
                near.push_back({d2, b});
            }
            std::sort(near.begin(), near.end());
            for (int n = 0; n < k_eff; ++n)
                best = std::min(best, segment_distance(bx[s], X[a], X[near[n].second]));
        }
        worst = std::max(worst, best);
    }
    detail = "counts " + std::to_string(counts[0]) + "/" + std::to_string(counts[1]) +
             "/" + std::to_string(counts[2]) + ", max segment distance " +
             fmt("%.2e", worst);
    return balanced && bx.size() == 30 && worst <= 1e-9;
}

// ---------------------------------------------------------------- criterion 6

bool metrics_hand_example(std::string& detail) {
    const auto cm = evalkit::confusion_matrix({0, 0, 0, 1, 1}, {0, 0, 1, 1, 1}, 2);
    const bool shape = cm.counts[0][0] == 2 && cm.counts[0][1] == 1 &&
                       cm.counts[1][0] == 0 && cm.counts[1][1] == 2;
    const auto mr = evalkit::metrics_from_confusion(cm);
    const bool exact = mr.macro_f1 == 0.8 && mr.accuracy == 0.8;

    std::vector<int> yt{0, 0, 0, 1, 1}, yp{0, 0, 1, 1, 1};
    const std::string base =
        evalkit::metrics_from_confusion(evalkit::confusion_matrix(yt, yp, 2))
            .to_json()
            .dump();
    Rng rng(123);
    bool invariant = true;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<size_t> order{0, 1, 2, 3, 4};
        shuffle(order, rng);
        std::vector<int> st, sp;
        for (size_t i : order) {
            st.push_back(yt[i]);
            sp.push_back(yp[i]);
        }
        const std::string got =
            evalkit::metrics_from_confusion(evalkit::confusion_matrix(st, sp, 2))
                .to_json()
                .dump();
        invariant = invariant && got == base;
    }
    detail = std::string("macro f1 ") + (exact ? "0.8 exact" : "mismatch") +
             ", accuracy " + (exact ? "0.8 exact" : "mismatch") + ", " +
             (invariant ? "100/100 shuffles invariant" : "shuffle variance");
    return shape && exact && invariant;
}

// ------------------------------------------------------- synthetic corpora

// Eight classes in four pair groups. Both classes of a group use the same
// two marker tokens with identical marginal frequencies: the even class
// repeats one marker twice, the odd class uses both once. Unigram counts
// alone cannot separate a pair, token combinations can.
corpus::Corpus synth_corpus(const std::vector<size_t>& class_sizes, uint64_t seed) {
    Rng rng(seed);
    std::vector<std::string> noise;
    for (int i = 0; i < 30; ++i)
        noise.push_back(std::string("fill") + static_cast<char>('a' + i / 5) +
                        static_cast<char>('a' + i % 5));
    corpus::Corpus c;
    int id = 0;
    for (int cls = 0; cls < 8; ++cls) {
        const int group = cls / 2;
        const std::string ma = std::string("mark") + static_cast<char>('a' + group) + "x";
        const std::string mb = std::string("mark") + static_cast<char>('a' + group) + "y";
        for (size_t i = 0; i < class_sizes[cls]; ++i) {
            TokenSeq toks;
            if (cls % 2 == 0) {
                const std::string& m = rng.uniform() < 0.5 ? ma : mb;
                toks.push_back(m);
                toks.push_back(m);
            } else {
                toks.push_back(ma);
                toks.push_back(mb);
            }
            const int extra = 3 + static_cast<int>(rng.uniform_int(3));
            for (int n = 0; n < extra; ++n)
                toks.push_back(noise[rng.uniform_int(noise.size())]);
            shuffle(toks, rng);

            corpus::Sample s;
            s.id = "s" + std::to_string(id++);
            std::string text;
            for (size_t t = 0; t < toks.size(); ++t) {
                if (t) text += ' ';
                text += toks[t];
            }
            s.text = std::move(text);
            s.source = corpus::Source::other;
            s.label = static_cast<corpus::EmotionLabel>(cls);
            c.samples.push_back(std::move(s));
        }
    }
    return c;
}

struct SplitDocs {
    std::vector<TokenSeq> train, val, test;
    std::vector<int> train_y, val_y, test_y;
};

SplitDocs split_docs(const corpus::Corpus& c) {
    SplitDocs d;
    for (const auto& s : c.samples) {
        const TokenSeq toks = textprep::tokenize(s.text);
        const int y = static_cast<int>(*s.label);
        switch (*s.split) {
            case corpus::Split::train: d.train.push_back(toks); d.train_y.push_back(y); break;
            case corpus::Split::val: d.val.push_back(toks); d.val_y.push_back(y); break;
            case corpus::Split::test: d.test.push_back(toks); d.test_y.push_back(y); break;
        }
    }
    return d;
}

double nb_count_macro(const SplitDocs& d, bool balance, double* recall_out) {
    const auto vocab = features::build_vocab(d.train, 1);
    auto vectorize = [&](const std::vector<TokenSeq>& docs) {
        std::vector<DenseVector> out;
        for (const auto& doc : docs)
            out.push_back(features::count_vectorize(doc, vocab).dense());
        return out;
    };
    auto X = vectorize(d.train);
    auto y = d.train_y;
    if (balance) {
        std::vector<corpus::EmotionLabel> labels;
        for (int v : y) labels.push_back(static_cast<corpus::EmotionLabel>(v));
        features::SmoteConfig sc;
        sc.k = 5;
        sc.seed = 404;
        auto [bx, by] = features::smote_balance(X, labels, sc);
        X = std::move(bx);
        y.clear();
        for (auto l : by) y.push_back(static_cast<int>(l));
    }
    learners::LearnerConfig cfg;
    cfg.classes = 8;
    const std::vector<double> w(X.size(), 1.0);
    auto nb = learners::fit_weak_learner(learners::WeakLearnerKind::naive_bayes, X, y, w,
                                         cfg, 1);
    const auto test_X = vectorize(d.test);
    std::vector<int> preds;
    for (const auto& x : test_X) preds.push_back(nb->predict(x));
    const auto mr =
        evalkit::metrics_from_confusion(evalkit::confusion_matrix(d.test_y, preds, 8));
    if (recall_out) *recall_out = mr.macro_recall;
    return mr.macro_f1;
}

// ---------------------------------------------------------------- criterion 7

bool end_to_end_benchmark(std::string& detail) {
    const auto t0 = Clock::now();
    auto c = synth_corpus(std::vector<size_t>(8, 100), 808);
    corpus::SplitSpec spec;
    spec.seed = 909;
    c = corpus::stratified_split(std::move(c), spec);
    const SplitDocs d = split_docs(c);

    boosting::EmobangConfig cfg;
    cfg.encoder.max_len = 12;
    cfg.encoder.dim = 32;
    cfg.encoder.heads = 2;
    cfg.encoder.blocks = 1;
    cfg.encoder.ff = 64;
    cfg.encoder.classes = 8;
    cfg.encoder_train.lr = 2e-3;
    cfg.encoder_train.batch = 32;
    cfg.encoder_train.max_epochs = 30;
    cfg.encoder_train.patience = 6;
    cfg.encoder_train.seed = 111;
    cfg.encoder_train.wall_clock = false;
    cfg.head.classes = 8;
    cfg.head.head_epochs = 40;
    cfg.head.head_lr = 0.01;
    cfg.head.head_batch = 32;
    cfg.head.head_dropout = 0.1;
    cfg.boost.rounds = 8;
    cfg.boost.classes = 8;
    cfg.boost.seed = 222;
    auto model = boosting::fit_emobang_ensemble(d.train, d.train_y, d.val, d.val_y, cfg);

    std::vector<int> preds;
    for (const auto& doc : d.test) preds.push_back(model.predict(doc));
    const double ens_f1 =
        evalkit::metrics_from_confusion(evalkit::confusion_matrix(d.test_y, preds, 8))
            .macro_f1;
    const double nb_f1 = nb_count_macro(d, false, nullptr);
    const double elapsed = seconds_since(t0);
    detail = "ensemble macro f1 " + fmt("%.4f", ens_f1) + ", nb+count " +
             fmt("%.4f", nb_f1) + ", " + fmt("%.1f", elapsed) + "s";
    return ens_f1 >= 0.90 && ens_f1 > nb_f1 && elapsed < 300.0;
}

// ---------------------------------------------------------------- criterion 8

bool smote_recall_direction(std::string& detail) {
    auto c = synth_corpus({200, 175, 150, 125, 100, 75, 50, 25}, 818);
    corpus::SplitSpec spec;
    spec.seed = 919;
    c = corpus::stratified_split(std::move(c), spec);
    const SplitDocs d = split_docs(c);
    double recall_plain = 0.0, recall_smote = 0.0;
    nb_count_macro(d, false, &recall_plain);
    nb_count_macro(d, true, &recall_smote);
    const double delta = recall_smote - recall_plain;
    detail = "nb macro recall " + fmt("%.4f", recall_plain) + " -> " +
             fmt("%.4f", recall_smote) + ", delta " + fmt("%+.4f", delta);
    return delta >= 0.0;
}

// ---------------------------------------------------------------- criterion 9

evalkit::GridParams tiny_grid_params() {
    evalkit::GridParams p;
    p.wall_clock = false;
    p.repeat_positions = 3;
    p.skipgram.dim = 8;
    p.skipgram.window = 2;
    p.skipgram.epochs = 2;
    p.subword.dim = 8;
    p.subword.window = 2;
    p.subword.epochs = 2;
    p.subword.buckets = 1u << 12;
    p.encoder.max_len = 8;
    p.encoder.dim = 16;
    p.encoder.heads = 2;
    p.encoder.blocks = 1;
    p.encoder.ff = 32;
    p.encoder_train.lr = 2e-3;
    p.encoder_train.batch = 8;
    p.encoder_train.max_epochs = 4;
    p.encoder_train.patience = 4;
    p.hybrid.embed_dim = 8;
    p.hybrid.filters = 8;
    p.hybrid.pool = 2;
    p.hybrid.lstm = 8;
    p.net_train.lr = 5e-3;
    p.net_train.batch = 8;
    p.net_train.max_epochs = 4;
    p.net_train.patience = 4;
    p.rnn_hidden = 8;
    p.learner.forest_trees = 5;
    p.learner.head_epochs = 20;
    p.learner.head_lr = 0.02;
    p.learner.head_batch = 16;
    p.boost.rounds = 2;
    p.smote.k = 2;
    return p;
}

bool grid_shape(std::string& detail) {
    auto c = synth_corpus(std::vector<size_t>(8, 10), 828);
    corpus::SplitSpec spec;
    spec.seed = 929;
    c = corpus::stratified_split(std::move(c), spec);

    evalkit::GridSpec gs;
    gs.features.assign(evalkit::all_features().begin(), evalkit::all_features().end());
    gs.models.assign(evalkit::all_models().begin(), evalkit::all_models().end());
    gs.seed = 31337;
    const auto params = tiny_grid_params();
    const auto r1 = evalkit::run_grid(c, gs, params);
    const auto r2 = evalkit::run_grid(c, gs, params);

    bool order_ok = r1.rows.size() == 40;
    for (size_t i = 0; order_ok && i < r1.rows.size(); ++i) {
        order_ok = r1.rows[i].feature == evalkit::all_features()[i / 8] &&
                   r1.rows[i].model == evalkit::all_models()[i % 8];
    }
    const bool stable = r1.to_csv() == r2.to_csv() &&
                        r1.to_json().dump() == r2.to_json().dump();
    size_t ok_rows = 0;
    for (const auto& row : r1.rows) ok_rows += row.ok;
    detail = std::to_string(r1.rows.size()) + " rows (" + std::to_string(ok_rows) +
             " ok), order " + (order_ok ? "canonical" : "wrong") + ", reruns " +
             (stable ? "byte-identical" : "differ");
    return order_ok && stable;
}

// --------------------------------------------------------------- criterion 10

std::string random_token(Rng& rng, bool bengali) {
    std::string out;
    const int len = 2 + static_cast<int>(rng.uniform_int(4));
    for (int i = 0; i < len; ++i) {
        if (bengali)
            textprep::utf8_append(out,
                                  0x0985 + static_cast<uint32_t>(rng.uniform_int(0x30)));
        else
            out += static_cast<char>('a' + rng.uniform_int(26));
    }
    return out;
}

corpus::Corpus random_corpus(Rng& rng) {
    corpus::Corpus c;
    const size_t n = 1 + rng.uniform_int(8);
    for (size_t i = 0; i < n; ++i) {
        corpus::Sample s;
        s.id = "r" + std::to_string(i) + random_token(rng, false);
        std::string text;
        const size_t words = 1 + rng.uniform_int(6);
        for (size_t w = 0; w < words; ++w) {
            if (w) text += ' ';
            text += random_token(rng, rng.uniform() < 0.5);
        }
        s.text = std::move(text);
        s.source = static_cast<corpus::Source>(rng.uniform_int(5));
        const size_t votes = rng.uniform_int(4);
        for (size_t v = 0; v < votes; ++v)
            s.votes["ann" + std::to_string(v)] =
                static_cast<corpus::EmotionLabel>(rng.uniform_int(8));
        s.adjudicated = rng.uniform() < 0.2;
        if (s.adjudicated) {
            s.label = static_cast<corpus::EmotionLabel>(rng.uniform_int(8));
        } else if (s.votes.size() >= corpus::kVoteQuorum) {
            s.label = corpus::majority_vote(s.votes);
        } else if (rng.uniform() < 0.7) {
            s.label = static_cast<corpus::EmotionLabel>(rng.uniform_int(8));
        }
        if (rng.uniform() < 0.6)
            s.split = static_cast<corpus::Split>(rng.uniform_int(3));
        if (rng.uniform() < 0.3) s.extras["note"] = random_token(rng, false);
        c.samples.push_back(std::move(s));
    }
    return c;
}

bool round_trips(std::string& detail) {
    Rng rng(2718);
    const std::string path = "/tmp/emoforge_acceptance_roundtrip.jsonl";
    int corpus_ok = 0;
    for (int i = 0; i < 50; ++i) {
        const corpus::Corpus c = random_corpus(rng);
        corpus::save_corpus(c, path);
        const corpus::Corpus back = corpus::load_corpus(path);
        std::remove(path.c_str());
        corpus_ok += back == c;
    }

    int model_ok = 0;
    pipeline::TrainData toy;
    {
        Rng trng(5050);
        for (int cls = 0; cls < 3; ++cls)
            for (int i = 0; i < 6; ++i) {
                TokenSeq doc{"w" + std::to_string(cls) + "a",
                             "w" + std::to_string(cls) + (i % 2 ? "b" : "a"),
                             random_token(trng, false)};
                if (i % 5 == 4) {
                    toy.val_docs.push_back(doc);
                    toy.val_y.push_back(cls);
                } else {
                    toy.train_docs.push_back(doc);
                    toy.train_y.push_back(cls);
                }
            }
    }
    const auto pipe_params = tiny_grid_params();
    for (int i = 0; i < 50; ++i) {
        const uint64_t seed = derive_seed(1000, static_cast<uint64_t>(i));
        std::vector<DenseVector> X;
        std::vector<int> y;
        Rng drng(seed);
        for (int r = 0; r < 12; ++r) {
            X.push_back({drng.uniform(-2.0, 2.0), drng.uniform(-2.0, 2.0),
                         drng.uniform(-2.0, 2.0), drng.uniform(-2.0, 2.0)});
            y.push_back(static_cast<int>(drng.uniform_int(3)));
        }
        const std::vector<double> w(X.size(), 1.0);
        learners::LearnerConfig cfg;
        cfg.classes = 3;
        cfg.forest_trees = 3;
        cfg.head_epochs = 3;

        nlohmann::ordered_json j, j2;
        switch (i % 8) {
            case 0:
            case 1:
            case 2:
            case 3:
            case 4: {
                const auto kinds = std::array{learners::WeakLearnerKind::naive_bayes,
                                              learners::WeakLearnerKind::decision_tree,
                                              learners::WeakLearnerKind::random_forest,
                                              learners::WeakLearnerKind::linear_svm,
                                              learners::WeakLearnerKind::softmax_head};
                auto h = learners::fit_weak_learner(kinds[i % 8], X, y, w, cfg, seed);
                j = h->to_json();
                j2 = learners::learner_from_json(j)->to_json();
                break;
            }
            case 5: {
                boosting::WeakFactory factory =
                    [&cfg](const std::vector<DenseVector>& bx, const std::vector<int>& by,
                           const std::vector<double>& bw, uint64_t s) {
                        auto c2 = cfg;
                        c2.tree_max_depth = 1;
                        return learners::fit_weak_learner(
                            learners::WeakLearnerKind::decision_tree, bx, by, bw, c2, s);
                    };
                boosting::BoostConfig bc;
                bc.rounds = 2;
                bc.classes = 3;
                bc.seed = seed;
                auto e = boosting::boost_fit(factory, X, y, bc);
                j = e.to_json();
                j2 = boosting::BoostedEnsemble::from_json(j).to_json();
                break;
            }
            case 6: {
                neural::ModelGraph g;
                g.add(neural::make_lstm(4, 3, false));
                g.add(neural::make_dense(3, 3, neural::Activation::identity));
                g.init_params(seed);
                j = g.to_json();
                j2 = neural::ModelGraph::from_json(j).to_json();
                break;
            }
            case 7: {
                const auto feats = std::array{evalkit::FeatureKind::count,
                                              evalkit::FeatureKind::skipgram,
                                              evalkit::FeatureKind::tfidf};
                const auto models = std::array{evalkit::ModelKind::nb,
                                               evalkit::ModelKind::lstm,
                                               evalkit::ModelKind::svm};
                auto pl = pipeline::fit_pipeline(feats[(i / 8) % 3], models[(i / 8) % 3],
                                                 false, toy, pipe_params, seed);
                j = pl.to_json();
                j2 = pipeline::Pipeline::from_json(j).to_json();
                break;
            }
        }
        model_ok += j.dump() == j2.dump();
    }
    detail = "corpus " + std::to_string(corpus_ok) + "/50, model " +
             std::to_string(model_ok) + "/50";
    return corpus_ok == 50 && model_ok == 50;
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* title;
        bool (*fn)(std::string&);
    };
    const Entry checks[] = {
        {1, "gradient correctness", gradient_correctness},
        {2, "softmax equation", softmax_equation},
        {3, "boosting oracle equivalence", boosting_oracle},
        {4, "boosting effectiveness", boosting_effectiveness},
        {5, "smote geometry", smote_geometry},
        {6, "metrics hand example", metrics_hand_example},
        {7, "end-to-end synthetic benchmark", end_to_end_benchmark},
        {8, "smote recall direction", smote_recall_direction},
        {9, "grid shape", grid_shape},
        {10, "round-trips", round_trips},
    };
    int failures = 0;
    for (const auto& check : checks) {
        std::string detail;
        bool ok = false;
        try {
            ok = check.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        failures += !ok;
        std::printf("criterion %2d %s: %s (%s)\n", check.id, ok ? "PASS" : "FAIL",
                    check.title, detail.c_str());
        std::fflush(stdout);
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
