#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "emoforge/common.hpp"
#include "emoforge/features.hpp"
#include "emoforge/textprep.hpp"
#include "json.hpp"

namespace emoforge::neural {

using features::DenseVector;
using textprep::TokenSeq;

// Row-major matrix. Sequences are rows = time steps, cols = channels;
// plain vectors are 1 x d; token id sequences are T x 1.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    bool operator==(const Tensor&) const = default;
};

enum class Activation { identity, relu, tanh_fn };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

struct Param {
    std::string name;
    std::vector<double>* value;
    std::vector<double>* grad;
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string kind() const = 0;
    // Parameter initialization; called once, in graph order.
    virtual void init(Rng& rng) = 0;
    // Forward pass; caches whatever backward needs when train is true.
    virtual Tensor forward(const Tensor& x, bool train, Rng* rng) = 0;
    // Upstream gradient -> input gradient; accumulates parameter gradients.
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual void collect_params(std::vector<Param>& out, const std::string& prefix) = 0;
    virtual nlohmann::ordered_json spec() const = 0;
};

std::unique_ptr<Layer> make_embedding(int vocab, int dim, int max_positions);
std::unique_ptr<Layer> make_dense(int in, int out, Activation act);
std::unique_ptr<Layer> make_dropout(double rate);
std::unique_ptr<Layer> make_conv1d(int in_channels, int filters, int width,
                                   Activation act);
std::unique_ptr<Layer> make_max_pool1d(int width);
std::unique_ptr<Layer> make_rnn(int in, int hidden, bool sequences);
std::unique_ptr<Layer> make_lstm(int in, int hidden, bool sequences);
std::unique_ptr<Layer> make_attention_block(int dim, int heads, int ff);
std::unique_ptr<Layer> make_mean_pool();
std::unique_ptr<Layer> layer_from_spec(const nlohmann::ordered_json& spec);

class ModelGraph {
public:
    std::vector<std::unique_ptr<Layer>> layers;
    uint64_t seed = 0;

    ModelGraph() = default;
    ModelGraph(ModelGraph&&) = default;
    ModelGraph& operator=(ModelGraph&&) = default;

    void add(std::unique_ptr<Layer> layer) { layers.push_back(std::move(layer)); }
    void init_params(uint64_t seed_value);

    Tensor forward(const Tensor& x, bool train = false, Rng* rng = nullptr);
    // Runs only the first n layers (used to read pooled encoder states).
    Tensor forward_prefix(const Tensor& x, size_t n, bool train = false,
                          Rng* rng = nullptr);
    Tensor backward(const Tensor& grad_out);

    std::vector<Param> params();
    size_t param_count();
    void zero_grads();
    std::vector<std::vector<double>> snapshot_params();
    void restore_params(const std::vector<std::vector<double>>& snap);

    nlohmann::ordered_json to_json();
    static ModelGraph from_json(const nlohmann::ordered_json& j);
};

inline constexpr const char* kModelVersion = "emoforge-model/1";

// Numerically stable softmax (max subtraction). Throws on non-finite input.
DenseVector softmax(const DenseVector& logits);

// -weight * ln(probs[label] + 1e-12)
double weighted_cross_entropy(const DenseVector& probs, int label, double weight);

struct TrainConfig {
    double lr = 1e-3;           // 2e-5 for ensemble heads, 1e-3 from scratch
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch = 32;
    int max_epochs = 100;
    int patience = 5;
    uint64_t seed = 0;
    bool wall_clock = true;     // false: history seconds pinned to 0
};

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    long t = 0;
};

// One bias-corrected Adam update over the collected parameters.
void adam_step(std::vector<Param>& params, AdamState& state, const TrainConfig& cfg);

// Validation-loss early stopping. feed() returns true when training should
// stop after the epoch just reported.
class EarlyStopper {
public:
    explicit EarlyStopper(int patience) : patience_(patience) {}
    bool feed(double val_loss);
    bool improved_last() const { return improved_; }
    int best_epoch() const { return best_epoch_; }  // 1-based
    double best() const { return best_; }

private:
    int patience_;
    double best_ = std::numeric_limits<double>::infinity();
    int best_epoch_ = 0;
    int bad_ = 0;
    int epoch_ = 0;
    bool improved_ = false;
};

struct Example {
    Tensor input;
    int label = 0;
    double weight = 1.0;
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_val_loss = 0.0;
};

nlohmann::ordered_json history_to_json(const std::vector<EpochStats>& history);

// Mini-batch Adam training of a logits-producing graph under fused
// softmax + weighted cross-entropy. Restores the best-validation parameters
// before returning. Bit-reproducible for a fixed (seed, config, data order).
TrainResult train_supervised(ModelGraph& model, const std::vector<Example>& train,
                             const std::vector<Example>& val, const TrainConfig& cfg);

// Central-difference verification of all analytic gradients; returns the
// maximum relative error over a deterministic sample of the parameters.
double grad_check(ModelGraph& model, const std::vector<Example>& batch,
                  double eps = 1e-5, size_t max_params = 200, uint64_t seed = 123);

// Literal used when sequences arrive padded; input builders drop it.
inline constexpr const char* kPadToken = "<pad>";

// Token ids with reserved slots: 0 = pad, 1 = unk, optionally 2 = sequence
// start marker used by the contextual encoder.
struct TokenIndexer {
    std::map<std::string, int> map;
    std::vector<std::string> tokens;  // vocabulary order
    int pad = 0;
    int unk = 1;
    int cls = -1;  // -1 when absent
    int reserved = 2;

    int vocab_size() const { return reserved + static_cast<int>(tokens.size()); }
    int id(std::string_view token) const;
    static TokenIndexer build(const std::vector<std::string>& vocab_tokens,
                              bool with_cls);
};

struct EncoderConfig {
    int max_len = 64;
    int dim = 64;
    int heads = 2;
    int blocks = 2;
    int ff = 128;
    int classes = 8;
};

// Contextual sentence encoder with a classification head on top:
// embedding(+positions) -> attention blocks -> mean pool -> dense(classes).
struct ContextualModel {
    EncoderConfig config;
    TokenIndexer indexer;
    ModelGraph graph;

    nlohmann::ordered_json to_json();
    static ContextualModel from_json(const nlohmann::ordered_json& j);
};

ContextualModel build_encoder(const std::vector<std::string>& vocab_tokens,
                              const EncoderConfig& config, uint64_t seed);

// Sequence-start marker plus token ids, pads stripped, truncated to max_len.
Tensor encoder_input(const TokenSeq& tokens, const ContextualModel& model);

// Pooled sentence vector (the layer below the classification head).
DenseVector encode_contextual(const TokenSeq& tokens, ContextualModel& model);

struct HybridConfig {
    int embed_dim = 100;
    int kernel = 3;
    int filters = 64;
    int pool = 2;
    int lstm = 64;
    double dropout = 0.1;
    int classes = 8;
};

// embedding -> conv1d(relu) -> max pool -> lstm (last state) -> dropout ->
// dense(classes); softmax applied on top of the returned logits. Built
// either with a learned token embedding or over precomputed per-position
// vectors (input_dim channels).
struct HybridModel {
    HybridConfig config;
    bool learned_embedding = true;
    TokenIndexer indexer;  // meaningful when learned_embedding
    int input_dim = 0;     // conv input channels
    ModelGraph graph;

    nlohmann::ordered_json to_json();
    static HybridModel from_json(const nlohmann::ordered_json& j);
};

HybridModel build_hybrid_tokens(const std::vector<std::string>& vocab_tokens,
                                const HybridConfig& config, uint64_t seed);
HybridModel build_hybrid_vectors(int input_dim, const HybridConfig& config,
                                 uint64_t seed);

Tensor hybrid_input(const TokenSeq& tokens, const HybridModel& model);

// Class distribution over the 8 labels (inference mode).
DenseVector hybrid_forward(const TokenSeq& tokens, HybridModel& model);

}  // namespace emoforge::neural
