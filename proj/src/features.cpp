#include "emoforge/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "emoforge/common.hpp"

namespace emoforge::features {

namespace {

double log_sigmoid(double x) {
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double dot(const DenseVector& a, const DenseVector& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

int Vocabulary::lookup(std::string_view token) const {
    auto it = index.find(std::string(token));
    return it == index.end() ? -1 : it->second;
}

Vocabulary build_vocab(const std::vector<TokenSeq>& docs, size_t min_freq) {
    if (min_freq < 1) throw usage_error("min_freq must be at least 1");
    std::map<std::string, size_t> freq;
    std::map<std::string, size_t> df;
    for (const auto& doc : docs) {
        std::set<std::string_view> seen;
        for (const auto& t : doc) {
            ++freq[t];
            if (seen.insert(t).second) ++df[t];
        }
    }
    std::vector<std::pair<std::string, size_t>> kept;
    for (const auto& [t, f] : freq)
        if (f >= min_freq) kept.emplace_back(t, f);
    // UTF-8 byte order equals code-point order, so string compare suffices.
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    v.num_docs = docs.size();
    v.tokens.reserve(kept.size());
    for (const auto& [t, f] : kept) {
        v.index[t] = static_cast<int>(v.tokens.size());
        v.tokens.push_back(t);
        v.freq.push_back(f);
        v.df.push_back(df[t]);
    }
    return v;
}

double SparseVector::sum() const {
    double s = 0.0;
    for (const auto& [i, x] : entries) s += x;
    return s;
}

double SparseVector::norm() const {
    double s = 0.0;
    for (const auto& [i, x] : entries) s += x * x;
    return std::sqrt(s);
}

DenseVector SparseVector::dense() const {
    DenseVector v(dim, 0.0);
    for (const auto& [i, x] : entries) v[i] = x;
    return v;
}

SparseVector count_vectorize(const TokenSeq& tokens, const Vocabulary& vocab) {
    std::map<int, double> counts;
    for (const auto& t : tokens) {
        int idx = vocab.lookup(t);
        if (idx >= 0) counts[idx] += 1.0;
    }
    SparseVector out;
    out.dim = vocab.size();
    out.entries.assign(counts.begin(), counts.end());
    return out;
}

TfidfModel fit_tfidf(const Vocabulary& vocab) {
    TfidfModel m;
    m.idf.resize(vocab.tokens.size());
    const double n = static_cast<double>(vocab.num_docs);
    for (size_t i = 0; i < m.idf.size(); ++i)
        m.idf[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(vocab.df[i]))) + 1.0;
    return m;
}

SparseVector tfidf_transform(const TokenSeq& tokens, const Vocabulary& vocab,
                             const TfidfModel& model) {
    SparseVector v = count_vectorize(tokens, vocab);
    for (auto& [i, x] : v.entries) x *= model.idf[i];
    double n = v.norm();
    if (n > 0.0)
        for (auto& [i, x] : v.entries) x /= n;
    return v;
}

std::vector<std::string> char_ngrams(std::string_view token, int n_min, int n_max) {
    auto cps = textprep::utf8_decode(token);
    std::vector<std::string> grams;
    const int len = static_cast<int>(cps.size());
    for (int n = n_min; n <= n_max; ++n) {
        for (int i = 0; i + n <= len; ++i) {
            std::string g;
            for (int j = i; j < i + n; ++j) textprep::utf8_append(g, cps[j]);
            grams.push_back(std::move(g));
        }
    }
    return grams;
}

uint32_t ngram_bucket(std::string_view ngram, uint32_t buckets) {
    return fnv1a32(ngram) % buckets;
}

namespace {

DenseVector seeded_init_row(uint64_t seed, int dim) {
    Rng rng(seed);
    DenseVector row(dim);
    for (int j = 0; j < dim; ++j) row[j] = (rng.uniform() - 0.5) / dim;
    return row;
}

// Cumulative unigram^0.75 distribution for negative sampling.
struct NegativeTable {
    std::vector<double> cum;
    double total = 0.0;

    explicit NegativeTable(const std::vector<size_t>& freq) {
        cum.reserve(freq.size());
        for (size_t f : freq) {
            total += std::pow(static_cast<double>(f), 0.75);
            cum.push_back(total);
        }
    }
    int draw(Rng& rng) const {
        double u = rng.uniform() * total;
        auto it = std::lower_bound(cum.begin(), cum.end(), u);
        if (it == cum.end()) --it;
        return static_cast<int>(it - cum.begin());
    }
};

struct SgnsOptions {
    int dim, window, negatives, epochs;
    double lr0;
    uint64_t seed;
};

// Shared SGNS trainer. `inputs[w]` lists the rows composing word w's input
// vector: the word row and, in subword mode, its n-gram bucket rows.
void run_sgns(const std::vector<std::vector<int>>& stream,
              const std::vector<std::vector<DenseVector*>>& inputs,
              std::vector<DenseVector>& ctx, const std::vector<size_t>& freq,
              const SgnsOptions& opt, TrainStats* stats) {
    size_t corpus_tokens = 0;
    bool has_pair = false;
    for (const auto& doc : stream) {
        corpus_tokens += doc.size();
        if (doc.size() >= 2) has_pair = true;
    }
    if (opt.window < 1 || !has_pair)
        throw training_error("no training pairs");

    NegativeTable neg(freq);
    Rng rng(derive_seed(opt.seed, 0x59));
    const double total =
        static_cast<double>(corpus_tokens) * static_cast<double>(opt.epochs);
    const int dim = opt.dim;
    DenseVector grad_h(dim);
    size_t processed = 0;

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        double loss_sum = 0.0;
        size_t pairs = 0;
        for (const auto& doc : stream) {
            const int n = static_cast<int>(doc.size());
            for (int pos = 0; pos < n; ++pos) {
                double lr = opt.lr0 * (1.0 - static_cast<double>(processed) / total);
                lr = std::max(lr, opt.lr0 * 1e-4);
                ++processed;

                const int b = static_cast<int>(rng.uniform_int(
                    static_cast<uint64_t>(opt.window))) + 1;
                const auto& comp = inputs[doc[pos]];
                for (int off = -b; off <= b; ++off) {
                    if (off == 0) continue;
                    int j = pos + off;
                    if (j < 0 || j >= n) continue;
                    const int target = doc[j];

                    DenseVector h(dim, 0.0);
                    for (const DenseVector* part : comp)
                        for (int t = 0; t < dim; ++t) h[t] += (*part)[t];

                    std::fill(grad_h.begin(), grad_h.end(), 0.0);
                    double loss = 0.0;
                    for (int s = 0; s <= opt.negatives; ++s) {
                        int out;
                        double label;
                        if (s == 0) {
                            out = target;
                            label = 1.0;
                        } else {
                            out = neg.draw(rng);
                            if (out == target) continue;
                            label = 0.0;
                        }
                        DenseVector& u = ctx[out];
                        const double score = dot(u, h);
                        const double g = sigmoid(score) - label;
                        loss += label > 0.5 ? -log_sigmoid(score) : -log_sigmoid(-score);
                        for (int t = 0; t < dim; ++t) {
                            grad_h[t] += g * u[t];
                            u[t] -= lr * g * h[t];
                        }
                    }
                    for (DenseVector* part : comp)
                        for (int t = 0; t < dim; ++t) (*part)[t] -= lr * grad_h[t];
                    loss_sum += loss;
                    ++pairs;
                }
            }
        }
        if (stats) stats->epoch_loss.push_back(pairs ? loss_sum / pairs : 0.0);
    }
}

std::vector<std::vector<int>> to_stream(const std::vector<TokenSeq>& docs,
                                        const Vocabulary& vocab) {
    std::vector<std::vector<int>> stream;
    stream.reserve(docs.size());
    for (const auto& doc : docs) {
        std::vector<int> ids;
        ids.reserve(doc.size());
        for (const auto& t : doc) {
            int idx = vocab.lookup(t);
            if (idx >= 0) ids.push_back(idx);
        }
        stream.push_back(std::move(ids));
    }
    return stream;
}

}  // namespace

EmbeddingTable train_skipgram(const std::vector<TokenSeq>& docs,
                              const Vocabulary& vocab, const SkipgramConfig& config,
                              TrainStats* stats) {
    if (vocab.size() == 0) throw training_error("no training pairs");
    EmbeddingTable table;
    table.dim = config.dim;
    table.tokens = vocab.tokens;
    table.index = vocab.index;
    table.rows.resize(vocab.size());
    for (int w = 0; w < vocab.size(); ++w)
        table.rows[w] =
            seeded_init_row(derive_seed(derive_seed(config.seed, 0x12), w), config.dim);

    std::vector<DenseVector> ctx(vocab.size(), DenseVector(config.dim, 0.0));
    std::vector<std::vector<DenseVector*>> inputs(vocab.size());
    for (int w = 0; w < vocab.size(); ++w) inputs[w] = {&table.rows[w]};

    SgnsOptions opt{config.dim,   config.window, config.negatives,
                    config.epochs, config.lr0,    config.seed};
    run_sgns(to_stream(docs, vocab), inputs, ctx, vocab.freq, opt, stats);
    return table;
}

EmbeddingTable train_subword(const std::vector<TokenSeq>& docs,
                             const Vocabulary& vocab, const SubwordConfig& config,
                             TrainStats* stats) {
    if (vocab.size() == 0) throw training_error("no training pairs");
    if (config.n_min < 1 || config.n_max < config.n_min)
        throw usage_error("invalid n-gram range");
    EmbeddingTable table;
    table.dim = config.dim;
    table.tokens = vocab.tokens;
    table.index = vocab.index;
    table.subword = true;
    table.n_min = config.n_min;
    table.n_max = config.n_max;
    table.buckets = config.buckets;
    table.init_seed = derive_seed(config.seed, 0xB0C4);
    table.rows.resize(vocab.size());
    for (int w = 0; w < vocab.size(); ++w)
        table.rows[w] =
            seeded_init_row(derive_seed(derive_seed(config.seed, 0x12), w), config.dim);

    // Materialize the bucket rows reachable from the vocabulary.
    std::vector<std::vector<uint32_t>> word_buckets(vocab.size());
    for (int w = 0; w < vocab.size(); ++w)
        for (const auto& g : char_ngrams(vocab.tokens[w], config.n_min, config.n_max))
            word_buckets[w].push_back(ngram_bucket(g, config.buckets));
    for (const auto& ids : word_buckets)
        for (uint32_t b : ids)
            if (!table.bucket_rows.count(b))
                table.bucket_rows[b] =
                    seeded_init_row(derive_seed(table.init_seed, b), config.dim);

    std::vector<std::vector<DenseVector*>> inputs(vocab.size());
    for (int w = 0; w < vocab.size(); ++w) {
        inputs[w].push_back(&table.rows[w]);
        for (uint32_t b : word_buckets[w]) inputs[w].push_back(&table.bucket_rows[b]);
    }

    std::vector<DenseVector> ctx(vocab.size(), DenseVector(config.dim, 0.0));
    SgnsOptions opt{config.dim,   config.window, config.negatives,
                    config.epochs, config.lr0,    config.seed};
    run_sgns(to_stream(docs, vocab), inputs, ctx, vocab.freq, opt, stats);
    return table;
}

std::optional<DenseVector> EmbeddingTable::token_vector(std::string_view token) const {
    auto it = index.find(std::string(token));
    if (!subword) {
        if (it == index.end()) return std::nullopt;
        return rows[it->second];
    }
    DenseVector v(dim, 0.0);
    bool any = false;
    if (it != index.end()) {
        const DenseVector& r = rows[it->second];
        for (int j = 0; j < dim; ++j) v[j] += r[j];
        any = true;
    }
    for (const auto& g : char_ngrams(token, n_min, n_max)) {
        uint32_t b = ngram_bucket(g, buckets);
        auto bit = bucket_rows.find(b);
        if (bit != bucket_rows.end()) {
            for (int j = 0; j < dim; ++j) v[j] += bit->second[j];
        } else {
            DenseVector r = seeded_init_row(derive_seed(init_seed, b), dim);
            for (int j = 0; j < dim; ++j) v[j] += r[j];
        }
        any = true;
    }
    if (!any) return std::nullopt;
    return v;
}

DenseVector embed_sentence(const TokenSeq& tokens, const EmbeddingTable& table) {
    DenseVector acc(table.dim, 0.0);
    size_t found = 0;
    for (const auto& t : tokens) {
        auto v = table.token_vector(t);
        if (!v) continue;
        for (int j = 0; j < table.dim; ++j) acc[j] += (*v)[j];
        ++found;
    }
    if (found > 0)
        for (double& x : acc) x /= static_cast<double>(found);
    return acc;
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot write embeddings: " + path);
    f << table.tokens.size() << ' ' << table.dim << '\n';
    f << std::setprecision(17);
    for (size_t w = 0; w < table.tokens.size(); ++w) {
        f << table.tokens[w];
        for (double x : table.rows[w]) f << ' ' << x;
        f << '\n';
    }
    f.flush();
    if (!f) throw io_error("write failed: " + path);
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open embeddings: " + path);
    size_t v = 0;
    int d = 0;
    std::string header;
    if (!std::getline(f, header)) throw data_error("empty embeddings file: " + path);
    {
        std::istringstream hs(header);
        if (!(hs >> v >> d) || d <= 0)
            throw data_error("malformed embeddings header: " + path);
    }
    EmbeddingTable table;
    table.dim = d;
    std::string line;
    for (size_t w = 0; w < v; ++w) {
        if (!std::getline(f, line))
            throw data_error("truncated embeddings file: " + path);
        std::istringstream ls(line);
        std::string token;
        if (!(ls >> token)) throw data_error("malformed embeddings line");
        DenseVector row(d);
        for (int j = 0; j < d; ++j)
            if (!(ls >> row[j])) throw data_error("malformed embeddings line");
        table.index[token] = static_cast<int>(table.tokens.size());
        table.tokens.push_back(token);
        table.rows.push_back(std::move(row));
    }
    return table;
}

nlohmann::ordered_json SmoteReport::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json b = nlohmann::ordered_json::object();
    nlohmann::ordered_json a = nlohmann::ordered_json::object();
    for (int i = 0; i < corpus::kNumLabels; ++i) {
        auto name = std::string(corpus::label_name(static_cast<corpus::EmotionLabel>(i)));
        b[name] = before[i];
        a[name] = after[i];
    }
    j["before"] = b;
    j["after"] = a;
    j["synthetic"] = synthetic;
    return j;
}

std::pair<std::vector<DenseVector>, std::vector<corpus::EmotionLabel>> smote_balance(
    const std::vector<DenseVector>& X, const std::vector<corpus::EmotionLabel>& y,
    const SmoteConfig& config, SmoteReport* report) {
    if (X.size() != y.size()) throw usage_error("feature/label size mismatch");
    if (config.k < 1) throw usage_error("smote k must be at least 1");
    if (!X.empty()) {
        const size_t d = X[0].size();
        for (const auto& x : X)
            if (x.size() != d) throw data_error("smote inputs have mixed dimensions");
    }

    std::array<std::vector<size_t>, corpus::kNumLabels> members;
    for (size_t i = 0; i < y.size(); ++i)
        members[static_cast<int>(y[i])].push_back(i);

    size_t target = config.target;
    if (target == 0)
        for (const auto& m : members) target = std::max(target, m.size());
    for (const auto& m : members)
        if (m.size() > target)
            throw usage_error("smote target below an existing class count");

    std::vector<DenseVector> out_x = X;
    std::vector<corpus::EmotionLabel> out_y = y;
    SmoteReport rep;
    for (int c = 0; c < corpus::kNumLabels; ++c) {
        rep.before[c] = members[c].size();
        rep.after[c] = members[c].size();
    }

    for (int c = 0; c < corpus::kNumLabels; ++c) {
        const auto& idx = members[c];
        if (idx.empty() || idx.size() >= target) continue;
        if (idx.size() < 2)
            throw data_error(
                "smote cannot oversample class \"" +
                std::string(corpus::label_name(static_cast<corpus::EmotionLabel>(c))) +
                "\" with a single sample");

        const size_t k_eff =
            std::min<size_t>(static_cast<size_t>(config.k), idx.size() - 1);
        // k nearest same-class neighbours per point, ties by input order
        std::vector<std::vector<size_t>> nn(idx.size());
        for (size_t a = 0; a < idx.size(); ++a) {
            std::vector<std::pair<double, size_t>> d;
            d.reserve(idx.size() - 1);
            for (size_t b = 0; b < idx.size(); ++b) {
                if (b == a) continue;
                double s = 0.0;
                const auto& xa = X[idx[a]];
                const auto& xb = X[idx[b]];
                for (size_t t = 0; t < xa.size(); ++t) {
                    double diff = xa[t] - xb[t];
                    s += diff * diff;
                }
                d.emplace_back(s, b);
            }
            std::sort(d.begin(), d.end());
            nn[a].reserve(k_eff);
            for (size_t t = 0; t < k_eff; ++t) nn[a].push_back(d[t].second);
        }

        Rng rng(derive_seed(config.seed, 0x510 + static_cast<uint64_t>(c)));
        size_t need = target - idx.size();
        for (size_t s = 0; s < need; ++s) {
            size_t a = rng.uniform_int(idx.size());
            size_t b = nn[a][rng.uniform_int(k_eff)];
            double lambda = rng.uniform();
            const auto& xa = X[idx[a]];
            const auto& xb = X[idx[b]];
            DenseVector synth(xa.size());
            for (size_t t = 0; t < xa.size(); ++t)
                synth[t] = xa[t] + lambda * (xb[t] - xa[t]);
            out_x.push_back(std::move(synth));
            out_y.push_back(static_cast<corpus::EmotionLabel>(c));
            ++rep.after[c];
            ++rep.synthetic;
        }
    }
    if (report) *report = rep;
    return {std::move(out_x), std::move(out_y)};
}

}  // namespace emoforge::features
