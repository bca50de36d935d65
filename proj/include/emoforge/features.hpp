#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "emoforge/corpus.hpp"
#include "emoforge/textprep.hpp"

namespace emoforge::features {

using textprep::TokenSeq;
using DenseVector = std::vector<double>;

struct Vocabulary {
    std::vector<std::string> tokens;       // index -> token, 0..V-1
    std::map<std::string, int> index;      // token -> index
    std::vector<size_t> freq;              // corpus frequency per token
    std::vector<size_t> df;                // document frequency per token
    size_t num_docs = 0;

    int size() const { return static_cast<int>(tokens.size()); }
    int lookup(std::string_view token) const;
};

// Tokens with corpus frequency >= min_freq, indexed by descending frequency,
// ties broken by code-point order.
Vocabulary build_vocab(const std::vector<TokenSeq>& docs, size_t min_freq = 1);

struct SparseVector {
    int dim = 0;
    std::vector<std::pair<int, double>> entries;  // index ascending, no zeros

    double sum() const;
    double norm() const;
    DenseVector dense() const;
};

SparseVector count_vectorize(const TokenSeq& tokens, const Vocabulary& vocab);

struct TfidfModel {
    std::vector<double> idf;  // aligned with vocabulary indices
};

// idf[t] = ln((1+N)/(1+df[t])) + 1
TfidfModel fit_tfidf(const Vocabulary& vocab);

// Raw term count x idf, then L2-normalized; the zero vector stays zero.
SparseVector tfidf_transform(const TokenSeq& tokens, const Vocabulary& vocab,
                             const TfidfModel& model);

struct SkipgramConfig {
    int dim = 100;
    int window = 5;       // max offset; per-center window drawn from 1..window
    int negatives = 5;
    int epochs = 5;
    double lr0 = 0.025;   // linearly decayed over all tokens
    uint64_t seed = 0;
};

struct SubwordConfig {
    int dim = 100;
    int n_min = 3;
    int n_max = 6;
    uint32_t buckets = 1u << 21;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double lr0 = 0.025;
    uint64_t seed = 0;
};

struct TrainStats {
    std::vector<double> epoch_loss;  // mean negative-sampling logistic loss
};

struct EmbeddingTable {
    int dim = 0;
    std::vector<std::string> tokens;
    std::map<std::string, int> index;
    std::vector<DenseVector> rows;  // whole-word vectors, V x d

    // Subword mode: token vector = whole-word row (if any) plus the bucket
    // rows of its character n-grams. Bucket rows are stored sparsely; rows
    // never touched during training are reproduced from the seed on demand.
    bool subword = false;
    int n_min = 0;
    int n_max = 0;
    uint32_t buckets = 0;
    uint64_t init_seed = 0;
    std::unordered_map<uint32_t, DenseVector> bucket_rows;

    // Composed vector, or nullopt when the token has neither a word row nor
    // any n-gram (always nullopt for OOV tokens in word mode).
    std::optional<DenseVector> token_vector(std::string_view token) const;
};

// n-grams of the raw token, lengths n_min..n_max in code points.
std::vector<std::string> char_ngrams(std::string_view token, int n_min, int n_max);
uint32_t ngram_bucket(std::string_view ngram, uint32_t buckets);

EmbeddingTable train_skipgram(const std::vector<TokenSeq>& docs,
                              const Vocabulary& vocab, const SkipgramConfig& config,
                              TrainStats* stats = nullptr);

EmbeddingTable train_subword(const std::vector<TokenSeq>& docs,
                             const Vocabulary& vocab, const SubwordConfig& config,
                             TrainStats* stats = nullptr);

// Arithmetic mean of the available token vectors; zero vector if none.
DenseVector embed_sentence(const TokenSeq& tokens, const EmbeddingTable& table);

// Text format: first line "V d", then token SPACE d floats per line.
void save_embeddings(const EmbeddingTable& table, const std::string& path);
EmbeddingTable load_embeddings(const std::string& path);

struct SmoteConfig {
    int k = 5;
    uint64_t seed = 0;
    size_t target = 0;  // 0 = match the largest class
};

struct SmoteReport {
    std::array<size_t, corpus::kNumLabels> before{};
    std::array<size_t, corpus::kNumLabels> after{};
    size_t synthetic = 0;
    nlohmann::ordered_json to_json() const;
};

// Oversamples every class up to the target by interpolating between minority
// points and their k nearest same-class neighbours (effective k = min(k,
// class size - 1)). Originals come first, unchanged and in input order.
std::pair<std::vector<DenseVector>, std::vector<corpus::EmotionLabel>> smote_balance(
    const std::vector<DenseVector>& X, const std::vector<corpus::EmotionLabel>& y,
    const SmoteConfig& config, SmoteReport* report = nullptr);

}  // namespace emoforge::features
