#include "emoforge/neural.hpp"

#include <algorithm>

namespace emoforge::neural {

namespace {

nlohmann::ordered_json encoder_config_json(const EncoderConfig& c) {
    return {{"max_len", c.max_len}, {"dim", c.dim},       {"heads", c.heads},
            {"blocks", c.blocks},   {"ff", c.ff},         {"classes", c.classes}};
}

EncoderConfig encoder_config_from(const nlohmann::ordered_json& j) {
    EncoderConfig c;
    c.max_len = j.at("max_len");
    c.dim = j.at("dim");
    c.heads = j.at("heads");
    c.blocks = j.at("blocks");
    c.ff = j.at("ff");
    c.classes = j.at("classes");
    return c;
}

nlohmann::ordered_json hybrid_config_json(const HybridConfig& c) {
    return {{"embed_dim", c.embed_dim}, {"kernel", c.kernel},
            {"filters", c.filters},     {"pool", c.pool},
            {"lstm", c.lstm},           {"dropout", c.dropout},
            {"classes", c.classes}};
}

HybridConfig hybrid_config_from(const nlohmann::ordered_json& j) {
    HybridConfig c;
    c.embed_dim = j.at("embed_dim");
    c.kernel = j.at("kernel");
    c.filters = j.at("filters");
    c.pool = j.at("pool");
    c.lstm = j.at("lstm");
    c.dropout = j.at("dropout");
    c.classes = j.at("classes");
    return c;
}

void check_version(const nlohmann::ordered_json& j, const char* want_type) {
    if (!j.contains("version") || j.at("version") != kModelVersion)
        throw data_error("unsupported model version");
    if (!j.contains("type") || j.at("type") != want_type)
        throw data_error(std::string("model file is not a ") + want_type + " model");
}

void add_hybrid_tail(ModelGraph& g, const HybridConfig& c, int in_channels) {
    g.add(make_conv1d(in_channels, c.filters, c.kernel, Activation::relu));
    g.add(make_max_pool1d(c.pool));
    g.add(make_lstm(c.filters, c.lstm, false));
    g.add(make_dropout(c.dropout));
    g.add(make_dense(c.lstm, c.classes, Activation::identity));
}

}  // namespace

ContextualModel build_encoder(const std::vector<std::string>& vocab_tokens,
                              const EncoderConfig& config, uint64_t seed) {
    if (config.max_len < 2) throw usage_error("encoder max_len must be >= 2");
    ContextualModel m;
    m.config = config;
    m.indexer = TokenIndexer::build(vocab_tokens, true);
    m.graph.add(make_embedding(m.indexer.vocab_size(), config.dim, config.max_len));
    for (int b = 0; b < config.blocks; ++b)
        m.graph.add(make_attention_block(config.dim, config.heads, config.ff));
    m.graph.add(make_mean_pool());
    m.graph.add(make_dense(config.dim, config.classes, Activation::identity));
    m.graph.init_params(seed);
    return m;
}

Tensor encoder_input(const TokenSeq& tokens, const ContextualModel& model) {
    std::vector<int> ids{model.indexer.cls};
    for (const auto& t : tokens) {
        if (t == kPadToken) continue;
        if (static_cast<int>(ids.size()) >= model.config.max_len) break;
        ids.push_back(model.indexer.id(t));
    }
    Tensor x(static_cast<int>(ids.size()), 1);
    for (size_t i = 0; i < ids.size(); ++i) x.at(static_cast<int>(i), 0) = ids[i];
    return x;
}

DenseVector encode_contextual(const TokenSeq& tokens, ContextualModel& model) {
    Tensor x = encoder_input(tokens, model);
    Tensor pooled =
        model.graph.forward_prefix(x, model.graph.layers.size() - 1, false, nullptr);
    return DenseVector(pooled.data.begin(), pooled.data.end());
}

nlohmann::ordered_json ContextualModel::to_json() {
    nlohmann::ordered_json j;
    j["version"] = kModelVersion;
    j["type"] = "contextual";
    j["config"] = encoder_config_json(config);
    j["tokens"] = indexer.tokens;
    j["graph"] = graph.to_json();
    return j;
}

ContextualModel ContextualModel::from_json(const nlohmann::ordered_json& j) {
    check_version(j, "contextual");
    ContextualModel m;
    m.config = encoder_config_from(j.at("config"));
    m.indexer =
        TokenIndexer::build(j.at("tokens").get<std::vector<std::string>>(), true);
    m.graph = ModelGraph::from_json(j.at("graph"));
    return m;
}

HybridModel build_hybrid_tokens(const std::vector<std::string>& vocab_tokens,
                                const HybridConfig& config, uint64_t seed) {
    HybridModel m;
    m.config = config;
    m.learned_embedding = true;
    m.indexer = TokenIndexer::build(vocab_tokens, false);
    m.input_dim = config.embed_dim;
    m.graph.add(make_embedding(m.indexer.vocab_size(), config.embed_dim, 0));
    add_hybrid_tail(m.graph, config, config.embed_dim);
    m.graph.init_params(seed);
    return m;
}

HybridModel build_hybrid_vectors(int input_dim, const HybridConfig& config,
                                 uint64_t seed) {
    if (input_dim < 1) throw usage_error("hybrid input_dim must be >= 1");
    HybridModel m;
    m.config = config;
    m.learned_embedding = false;
    m.input_dim = input_dim;
    add_hybrid_tail(m.graph, config, input_dim);
    m.graph.init_params(seed);
    return m;
}

Tensor hybrid_input(const TokenSeq& tokens, const HybridModel& model) {
    if (!model.learned_embedding)
        throw usage_error("hybrid_input needs a token-embedding model");
    std::vector<int> ids;
    for (const auto& t : tokens) {
        if (t == kPadToken) continue;
        ids.push_back(model.indexer.id(t));
    }
    if (ids.empty()) ids.push_back(model.indexer.pad);
    Tensor x(static_cast<int>(ids.size()), 1);
    for (size_t i = 0; i < ids.size(); ++i) x.at(static_cast<int>(i), 0) = ids[i];
    return x;
}

DenseVector hybrid_forward(const TokenSeq& tokens, HybridModel& model) {
    Tensor logits = model.graph.forward(hybrid_input(tokens, model), false, nullptr);
    DenseVector lv(logits.data.begin(), logits.data.end());
    return softmax(lv);
}

nlohmann::ordered_json HybridModel::to_json() {
    nlohmann::ordered_json j;
    j["version"] = kModelVersion;
    j["type"] = "hybrid";
    j["config"] = hybrid_config_json(config);
    j["learned_embedding"] = learned_embedding;
    j["tokens"] = indexer.tokens;
    j["input_dim"] = input_dim;
    j["graph"] = graph.to_json();
    return j;
}

HybridModel HybridModel::from_json(const nlohmann::ordered_json& j) {
    check_version(j, "hybrid");
    HybridModel m;
    m.config = hybrid_config_from(j.at("config"));
    m.learned_embedding = j.at("learned_embedding");
    if (m.learned_embedding)
        m.indexer =
            TokenIndexer::build(j.at("tokens").get<std::vector<std::string>>(), false);
    m.input_dim = j.at("input_dim");
    m.graph = ModelGraph::from_json(j.at("graph"));
    return m;
}

}  // namespace emoforge::neural
