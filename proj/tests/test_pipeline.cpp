#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "emoforge/pipeline.hpp"

using namespace emoforge;
using evalkit::FeatureKind;
using evalkit::GridParams;
using evalkit::ModelKind;
using pipeline::Featurizer;
using pipeline::Pipeline;
using pipeline::TrainData;
using textprep::TokenSeq;

namespace {

TokenSeq doc_for(int c, int i) {
    return {"kw" + std::to_string(c) + "a",
            "kw" + std::to_string(c) + (i % 2 ? "b" : "a"),
            "noise" + std::to_string(i % 3)};
}

TrainData toy_data(int classes_used = 3, int per_class = 8) {
    TrainData d;
    for (int c = 0; c < classes_used; ++c)
        for (int i = 0; i < per_class; ++i) {
            if (i % 4 == 3) {
                d.val_docs.push_back(doc_for(c, i));
                d.val_y.push_back(c);
            } else {
                d.train_docs.push_back(doc_for(c, i));
                d.train_y.push_back(c);
            }
        }
    return d;
}

GridParams tiny_params() {
    GridParams p;
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
    p.learner.head_epochs = 30;
    p.learner.head_lr = 0.02;
    p.learner.head_batch = 16;
    p.boost.rounds = 2;
    p.smote.k = 2;
    return p;
}

double train_accuracy(Pipeline& pl, const TrainData& d) {
    int hits = 0;
    for (size_t i = 0; i < d.train_docs.size(); ++i)
        hits += pl.predict(d.train_docs[i]) == d.train_y[i];
    return static_cast<double>(hits) / static_cast<double>(d.train_docs.size());
}

void check_roundtrip(Pipeline& pl, const TrainData& d) {
    auto j = pl.to_json();
    Pipeline back = Pipeline::from_json(j);
    CHECK(back.to_json().dump() == j.dump());
    for (const auto& doc : d.train_docs) CHECK(back.predict(doc) == pl.predict(doc));
    for (const auto& doc : d.val_docs) CHECK(back.predict(doc) == pl.predict(doc));
    TokenSeq oov{"zzz", "unseen"};
    CHECK(back.predict(oov) == pl.predict(oov));
}

}  // namespace

TEST_CASE("count featurizer vectors count in-vocabulary tokens") {
    const auto d = toy_data();
    auto f = pipeline::fit_featurizer(FeatureKind::count, d, tiny_params(), 7);
    CHECK(f.kind == FeatureKind::count);
    CHECK(f.dim == f.vocab.size());
    CHECK_FALSE(f.sequential());
    const TokenSeq doc = d.train_docs[0];
    auto v = f.vector(doc);
    REQUIRE(static_cast<int>(v.size()) == f.dim);
    double sum = 0.0;
    for (double x : v) sum += x;
    CHECK(sum == doctest::Approx(3.0));
    auto seq = f.sequence(doc);
    CHECK(seq.rows == 3);
    CHECK(seq.cols == f.dim);
    for (int c = 0; c < seq.cols; ++c) CHECK(seq.at(0, c) == seq.at(2, c));
}

TEST_CASE("tfidf featurizer produces unit-norm vectors") {
    const auto d = toy_data();
    auto f = pipeline::fit_featurizer(FeatureKind::tfidf, d, tiny_params(), 7);
    auto v = f.vector(d.train_docs[1]);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0));
    auto zero = f.vector({"zzz"});
    for (double x : zero) CHECK(x == 0.0);
}

TEST_CASE("embedding featurizers emit per-token sequences") {
    const auto d = toy_data();
    for (FeatureKind k : {FeatureKind::skipgram, FeatureKind::subword}) {
        CAPTURE(evalkit::feature_name(k));
        auto f = pipeline::fit_featurizer(k, d, tiny_params(), 7);
        CHECK(f.sequential());
        CHECK(f.dim == 8);
        auto seq = f.sequence(d.train_docs[0]);
        CHECK(seq.rows == 3);
        CHECK(seq.cols == 8);
        auto v = f.vector(d.train_docs[0]);
        CHECK(static_cast<int>(v.size()) == 8);
    }
    auto word = pipeline::fit_featurizer(FeatureKind::skipgram, d, tiny_params(), 7);
    auto empty = word.sequence({"zzz"});
    CHECK(empty.rows == 1);
    for (double x : empty.data) CHECK(x == 0.0);
}

TEST_CASE("contextual featurizer encodes pooled sentence vectors") {
    const auto d = toy_data();
    auto f = pipeline::fit_featurizer(FeatureKind::contextual, d, tiny_params(), 7);
    REQUIRE(f.encoder);
    auto v = f.vector(d.train_docs[0]);
    CHECK(static_cast<int>(v.size()) == 16);
    auto seq = f.sequence(d.train_docs[0]);
    CHECK(seq.rows == 3);
    CHECK(seq.cols == 16);
}

TEST_CASE("featurizer json round-trips reproduce vectors exactly") {
    const auto d = toy_data();
    const auto p = tiny_params();
    for (FeatureKind k : evalkit::all_features()) {
        CAPTURE(evalkit::feature_name(k));
        auto f = pipeline::fit_featurizer(k, d, p, 11);
        auto j = f.to_json();
        auto back = Featurizer::from_json(j);
        CHECK(back.to_json().dump() == j.dump());
        for (const auto& doc : {d.train_docs[0], d.val_docs[0], TokenSeq{"zzz"}}) {
            CHECK(back.vector(doc) == f.vector(doc));
            CHECK(back.sequence(doc) == f.sequence(doc));
        }
    }
}

TEST_CASE("subword featurizer serializes bucket rows sorted by id") {
    const auto d = toy_data();
    auto f = pipeline::fit_featurizer(FeatureKind::subword, d, tiny_params(), 11);
    const auto j = f.to_json();
    const auto& rows = j.at("table").at("bucket_rows");
    REQUIRE(rows.size() > 1);
    for (size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i - 1].at(0).get<uint32_t>() < rows[i].at(0).get<uint32_t>());
}

TEST_CASE("classical pipelines learn the planted keywords") {
    const auto d = toy_data();
    const auto p = tiny_params();
    for (ModelKind m : {ModelKind::nb, ModelKind::dt, ModelKind::rf, ModelKind::svm}) {
        CAPTURE(evalkit::model_name(m));
        auto pl = pipeline::fit_pipeline(FeatureKind::count, m, false, d, p, 3);
        CHECK(pl.model == m);
        CHECK(train_accuracy(pl, d) >= 0.9);
        check_roundtrip(pl, d);
    }
}

TEST_CASE("boosted pipeline over document vectors fits and round-trips") {
    const auto d = toy_data();
    auto pl = pipeline::fit_pipeline(FeatureKind::count, ModelKind::ensemble, false, d,
                                     tiny_params(), 3);
    REQUIRE(pl.committee);
    CHECK_FALSE(pl.emobang);
    CHECK(train_accuracy(pl, d) >= 0.9);
    check_roundtrip(pl, d);
}

TEST_CASE("contextual ensemble pipeline routes through the encoder committee") {
    const auto d = toy_data(3, 6);
    auto pl = pipeline::fit_pipeline(FeatureKind::contextual, ModelKind::ensemble, false,
                                     d, tiny_params(), 3);
    REQUIRE(pl.emobang);
    auto j = pl.to_json();
    CHECK(j.at("featurizer").is_null());
    CHECK(j.at("classifier").at("type") == "emobang_ensemble");
    check_roundtrip(pl, d);
}

TEST_CASE("recurrent pipelines train over token sequences") {
    const auto d = toy_data();
    const auto p = tiny_params();
    auto rnn = pipeline::fit_pipeline(FeatureKind::skipgram, ModelKind::rnn, false, d, p, 5);
    REQUIRE(rnn.graph);
    CHECK(rnn.hidden == p.rnn_hidden);
    check_roundtrip(rnn, d);

    auto lstm = pipeline::fit_pipeline(FeatureKind::count, ModelKind::lstm, false, d, p, 5);
    REQUIRE(lstm.graph);
    auto j = lstm.to_json();
    CHECK(j.at("classifier").at("recurrent") == "lstm");
    check_roundtrip(lstm, d);
}

TEST_CASE("hybrid pipeline trains over precomputed vectors") {
    const auto d = toy_data();
    auto pl = pipeline::fit_pipeline(FeatureKind::subword, ModelKind::hybrid, false, d,
                                     tiny_params(), 5);
    REQUIRE(pl.hybrid);
    CHECK_FALSE(pl.hybrid->learned_embedding);
    check_roundtrip(pl, d);
}

TEST_CASE("balanced fits handle skewed data for both data layouts") {
    TrainData d = toy_data(3, 8);
    for (int i = 0; i < 4; ++i) {
        d.train_docs.push_back(doc_for(0, i));
        d.train_y.push_back(0);
    }
    auto nb = pipeline::fit_pipeline(FeatureKind::count, ModelKind::nb, true, d,
                                     tiny_params(), 9);
    CHECK(nb.balanced);
    CHECK(nb.to_json().at("balanced") == true);
    auto rnn = pipeline::fit_pipeline(FeatureKind::skipgram, ModelKind::rnn, true, d,
                                      tiny_params(), 9);
    CHECK(rnn.balanced);
    for (const auto& doc : d.train_docs) {
        const int a = nb.predict(doc);
        CHECK(a >= 0);
        CHECK(a < 8);
    }
}

TEST_CASE("pipeline artifacts carry a manifest and its hash") {
    const auto d = toy_data();
    auto pl = pipeline::fit_pipeline(FeatureKind::count, ModelKind::nb, false, d,
                                     tiny_params(), 42);
    auto j = pl.to_json();
    CHECK(j.at("version") == neural::kModelVersion);
    CHECK(j.at("type") == "pipeline");
    CHECK(j.at("manifest").at("feature") == "count");
    CHECK(j.at("manifest").at("model") == "nb");
    CHECK(j.at("manifest").at("seed") == 42);
    CHECK(j.at("manifest").contains("params"));
    const std::string hash = j.at("manifest_hash").get<std::string>();
    CHECK(hash.size() == 16);
    char expected[17];
    std::snprintf(expected, sizeof expected, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(j.at("manifest").dump())));
    CHECK(hash == expected);
}

TEST_CASE("same-seed pipeline fits are byte-identical") {
    const auto d = toy_data();
    const auto p = tiny_params();
    for (auto [f, m] : {std::pair{FeatureKind::count, ModelKind::nb},
                        std::pair{FeatureKind::skipgram, ModelKind::rnn},
                        std::pair{FeatureKind::count, ModelKind::ensemble}}) {
        CAPTURE(evalkit::feature_name(f));
        CAPTURE(evalkit::model_name(m));
        auto a = pipeline::fit_pipeline(f, m, false, d, p, 17);
        auto b = pipeline::fit_pipeline(f, m, false, d, p, 17);
        CHECK(a.to_json().dump() == b.to_json().dump());
    }
}

TEST_CASE("pipeline deserialization rejects malformed artifacts") {
    const auto d = toy_data();
    auto pl = pipeline::fit_pipeline(FeatureKind::count, ModelKind::nb, false, d,
                                     tiny_params(), 1);
    auto good = pl.to_json();

    auto bad = good;
    bad["type"] = "grid_report";
    CHECK_THROWS_AS(Pipeline::from_json(bad), Error);

    bad = good;
    bad["version"] = "emoforge-model/99";
    CHECK_THROWS_AS(Pipeline::from_json(bad), Error);

    bad = good;
    bad.erase("classifier");
    CHECK_THROWS_AS(Pipeline::from_json(bad), Error);

    auto lstm = pipeline::fit_pipeline(FeatureKind::count, ModelKind::lstm, false, d,
                                       tiny_params(), 1);
    bad = lstm.to_json();
    bad["model"] = "rnn";
    CHECK_THROWS_AS(Pipeline::from_json(bad), Error);
}

TEST_CASE("fit preconditions are validated") {
    const auto p = tiny_params();
    TrainData empty;
    CHECK_THROWS_AS(pipeline::fit_pipeline(FeatureKind::count, ModelKind::nb, false,
                                           empty, p, 1),
                    Error);
    TrainData skewed = toy_data();
    skewed.train_y.pop_back();
    CHECK_THROWS_AS(pipeline::fit_featurizer(FeatureKind::count, skewed, p, 1), Error);
}
