#include "emoforge/neural.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace emoforge::neural {

namespace {

double apply_act(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::tanh_fn: return std::tanh(z);
        default: return z;
    }
}

// Derivative expressed through the pre-activation z.
double act_grad(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::tanh_fn: {
            double t = std::tanh(z);
            return 1.0 - t * t;
        }
        default: return 1.0;
    }
}

double glorot_limit(int fan_in, int fan_out) {
    return std::sqrt(6.0 / (fan_in + fan_out));
}

void fill_uniform(std::vector<double>& v, Rng& rng, double limit) {
    for (double& x : v) x = rng.uniform(-limit, limit);
}

void check_cols(const Tensor& x, int want, const char* kind) {
    if (x.cols != want)
        throw usage_error(std::string(kind) + ": expected " + std::to_string(want) +
                          " input columns, got " + std::to_string(x.cols));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

class EmbeddingLayer : public Layer {
public:
    EmbeddingLayer(int vocab, int dim, int max_positions)
        : vocab_(vocab), dim_(dim), max_positions_(max_positions) {
        if (vocab < 1 || dim < 1) throw usage_error("embedding: dimensions must be >= 1");
        table_.assign(static_cast<size_t>(vocab) * dim, 0.0);
        g_table_.assign(table_.size(), 0.0);
        if (max_positions_ > 0) {
            pos_.assign(static_cast<size_t>(max_positions_) * dim, 0.0);
            g_pos_.assign(pos_.size(), 0.0);
        }
    }

    std::string kind() const override { return "embedding"; }

    void init(Rng& rng) override {
        fill_uniform(table_, rng, 0.1);
        if (max_positions_ > 0) fill_uniform(pos_, rng, 0.1);
    }

    Tensor forward(const Tensor& x, bool train, Rng*) override {
        check_cols(x, 1, "embedding");
        if (max_positions_ > 0 && x.rows > max_positions_)
            throw usage_error("embedding: sequence longer than the position table");
        Tensor y(x.rows, dim_);
        for (int t = 0; t < x.rows; ++t) {
            int id = static_cast<int>(x.at(t, 0));
            if (id < 0 || id >= vocab_)
                throw usage_error("embedding: token id out of range");
            for (int j = 0; j < dim_; ++j) {
                double v = table_[static_cast<size_t>(id) * dim_ + j];
                if (max_positions_ > 0) v += pos_[static_cast<size_t>(t) * dim_ + j];
                y.at(t, j) = v;
            }
        }
        if (train) ids_.assign(x.data.begin(), x.data.end());
        return y;
    }

    Tensor backward(const Tensor& g) override {
        if (ids_.empty() && g.rows > 0 && static_cast<int>(ids_.size()) != g.rows)
            throw training_error("embedding: backward without cached forward");
        for (int t = 0; t < g.rows; ++t) {
            int id = static_cast<int>(ids_[t]);
            for (int j = 0; j < dim_; ++j) {
                g_table_[static_cast<size_t>(id) * dim_ + j] += g.at(t, j);
                if (max_positions_ > 0)
                    g_pos_[static_cast<size_t>(t) * dim_ + j] += g.at(t, j);
            }
        }
        return Tensor(g.rows, 1);
    }

    void collect_params(std::vector<Param>& out, const std::string& p) override {
        out.push_back({p + ".table", &table_, &g_table_});
        if (max_positions_ > 0) out.push_back({p + ".positions", &pos_, &g_pos_});
    }

    nlohmann::ordered_json spec() const override {
        return {{"kind", "embedding"},
                {"vocab", vocab_},
                {"dim", dim_},
                {"max_positions", max_positions_}};
    }

private:
    int vocab_, dim_, max_positions_;
    std::vector<double> table_, g_table_, pos_, g_pos_;
    std::vector<double> ids_;
};

class DenseLayer : public Layer {
public:
    DenseLayer(int in, int out, Activation act) : in_(in), out_(out), act_(act) {
        if (in < 1 || out < 1) throw usage_error("dense: dimensions must be >= 1");
        w_.assign(static_cast<size_t>(in) * out, 0.0);
        b_.assign(out, 0.0);
        gw_.assign(w_.size(), 0.0);
        gb_.assign(b_.size(), 0.0);
    }

    std::string kind() const override { return "dense"; }

    void init(Rng& rng) override { fill_uniform(w_, rng, glorot_limit(in_, out_)); }

    Tensor forward(const Tensor& x, bool train, Rng*) override {
        check_cols(x, in_, "dense");
        Tensor z(x.rows, out_);
        for (int r = 0; r < x.rows; ++r)
            for (int j = 0; j < out_; ++j) {
                double s = b_[j];
                for (int i = 0; i < in_; ++i)
                    s += x.at(r, i) * w_[static_cast<size_t>(i) * out_ + j];
                z.at(r, j) = s;
            }
        Tensor y(x.rows, out_);
        for (size_t i = 0; i < z.data.size(); ++i) y.data[i] = apply_act(act_, z.data[i]);
        if (train) {
            x_ = x;
            z_ = std::move(z);
        }
        return y;
    }

    Tensor backward(const Tensor& g) override {
        if (z_.rows != g.rows) throw training_error("dense: backward without cached forward");
        Tensor ga(g.rows, out_);
        for (size_t i = 0; i < ga.data.size(); ++i)
            ga.data[i] = g.data[i] * act_grad(act_, z_.data[i]);
        for (int r = 0; r < g.rows; ++r)
            for (int i = 0; i < in_; ++i) {
                const double xv = x_.at(r, i);
                for (int j = 0; j < out_; ++j)
                    gw_[static_cast<size_t>(i) * out_ + j] += xv * ga.at(r, j);
            }
        for (int r = 0; r < g.rows; ++r)
            for (int j = 0; j < out_; ++j) gb_[j] += ga.at(r, j);
        Tensor gx(g.rows, in_);
        for (int r = 0; r < g.rows; ++r)
            for (int i = 0; i < in_; ++i) {
                double s = 0.0;
                for (int j = 0; j < out_; ++j)
                    s += ga.at(r, j) * w_[static_cast<size_t>(i) * out_ + j];
                gx.at(r, i) = s;
            }
        return gx;
    }

    void collect_params(std::vector<Param>& out, const std::string& p) override {
        out.push_back({p + ".w", &w_, &gw_});
        out.push_back({p + ".b", &b_, &gb_});
    }

    nlohmann::ordered_json spec() const override {
        return {{"kind", "dense"},
                {"in", in_},
                {"out", out_},
                {"activation", std::string(activation_name(act_))}};
    }

private:
    int in_, out_;
    Activation act_;
    std::vector<double> w_, b_, gw_, gb_;
    Tensor x_, z_;
};

class DropoutLayer : public Layer {
public:
    explicit DropoutLayer(double rate) : rate_(rate) {
        if (rate < 0.0 || rate >= 1.0) throw usage_error("dropout rate must be in [0,1)");
    }

    std::string kind() const override { return "dropout"; }
    void init(Rng&) override {}

    Tensor forward(const Tensor& x, bool train, Rng* rng) override {
        if (!train || rate_ == 0.0) {
            mask_.clear();
            return x;
        }
        if (!rng) throw training_error("dropout needs an RNG in train mode");
        const double scale = 1.0 / (1.0 - rate_);
        mask_.resize(x.data.size());
        Tensor y(x.rows, x.cols);
        for (size_t i = 0; i < x.data.size(); ++i) {
            mask_[i] = rng->uniform() >= rate_ ? scale : 0.0;
            y.data[i] = x.data[i] * mask_[i];
        }
        return y;
    }

    Tensor backward(const Tensor& g) override {
        if (mask_.empty()) return g;  // rate 0 path
        Tensor gx(g.rows, g.cols);
        for (size_t i = 0; i < g.data.size(); ++i) gx.data[i] = g.data[i] * mask_[i];
        return gx;
    }

    void collect_params(std::vector<Param>&, const std::string&) override {}

    nlohmann::ordered_json spec() const override {
        return {{"kind", "dropout"}, {"rate", rate_}};
    }

private:
    double rate_;
    std::vector<double> mask_;
};

// Same-padded 1-D convolution over time.
class Conv1dLayer : public Layer {
public:
    Conv1dLayer(int in_channels, int filters, int width, Activation act)
        : in_(in_channels), filters_(filters), width_(width), act_(act) {
        if (in_channels < 1 || filters < 1 || width < 1)
            throw usage_error("conv1d: dimensions must be >= 1");
        w_.assign(static_cast<size_t>(filters) * width * in_channels, 0.0);
        b_.assign(filters, 0.0);
        gw_.assign(w_.size(), 0.0);
        gb_.assign(b_.size(), 0.0);
    }

    std::string kind() const override { return "conv1d"; }

    void init(Rng& rng) override {
        fill_uniform(w_, rng, glorot_limit(width_ * in_, filters_));
    }

    Tensor forward(const Tensor& x, bool train, Rng*) override {
        check_cols(x, in_, "conv1d");
        const int pad = (width_ - 1) / 2;
        Tensor z(x.rows, filters_);
        for (int t = 0; t < x.rows; ++t)
            for (int f = 0; f < filters_; ++f) {
                double s = b_[f];
                for (int k = 0; k < width_; ++k) {
                    int src = t + k - pad;
                    if (src < 0 || src >= x.rows) continue;
                    const size_t base =
                        (static_cast<size_t>(f) * width_ + k) * in_;
                    for (int c = 0; c < in_; ++c) s += w_[base + c] * x.at(src, c);
                }
                z.at(t, f) = s;
            }
        Tensor y(x.rows, filters_);
        for (size_t i = 0; i < z.data.size(); ++i) y.data[i] = apply_act(act_, z.data[i]);
        if (train) {
            x_ = x;
            z_ = std::move(z);
        }
        return y;
    }

    Tensor backward(const Tensor& g) override {
        if (z_.rows != g.rows) throw training_error("conv1d: backward without cached forward");
        const int pad = (width_ - 1) / 2;
        Tensor ga(g.rows, filters_);
        for (size_t i = 0; i < ga.data.size(); ++i)
            ga.data[i] = g.data[i] * act_grad(act_, z_.data[i]);
        Tensor gx(x_.rows, in_);
        for (int t = 0; t < g.rows; ++t)
            for (int f = 0; f < filters_; ++f) {
                const double gv = ga.at(t, f);
                if (gv == 0.0) continue;
                gb_[f] += gv;
                for (int k = 0; k < width_; ++k) {
                    int src = t + k - pad;
                    if (src < 0 || src >= x_.rows) continue;
                    const size_t base =
                        (static_cast<size_t>(f) * width_ + k) * in_;
                    for (int c = 0; c < in_; ++c) {
                        gw_[base + c] += gv * x_.at(src, c);
                        gx.at(src, c) += gv * w_[base + c];
                    }
                }
            }
        return gx;
    }

    void collect_params(std::vector<Param>& out, const std::string& p) override {
        out.push_back({p + ".w", &w_, &gw_});
        out.push_back({p + ".b", &b_, &gb_});
    }

    nlohmann::ordered_json spec() const override {
        return {{"kind", "conv1d"},
                {"in", in_},
                {"filters", filters_},
                {"width", width_},
                {"activation", std::string(activation_name(act_))}};
    }

private:
    int in_, filters_, width_;
    Activation act_;
    std::vector<double> w_, b_, gw_, gb_;
    Tensor x_, z_;
};

// Non-overlapping max pooling over time; a trailing partial window is kept.
class MaxPool1dLayer : public Layer {
public:
    explicit MaxPool1dLayer(int width) : width_(width) {
        if (width < 1) throw usage_error("max_pool1d: width must be >= 1");
    }

    std::string kind() const override { return "max_pool1d"; }
    void init(Rng&) override {}

    Tensor forward(const Tensor& x, bool train, Rng*) override {
        if (x.rows < 1) throw usage_error("max_pool1d: empty sequence");
        const int out_rows = (x.rows + width_ - 1) / width_;
        Tensor y(out_rows, x.cols);
        argmax_.assign(static_cast<size_t>(out_rows) * x.cols, 0);
        for (int w = 0; w < out_rows; ++w) {
            const int lo = w * width_;
            const int hi = std::min(lo + width_, x.rows);
            for (int c = 0; c < x.cols; ++c) {
                int best = lo;
                double bv = x.at(lo, c);
                for (int t = lo + 1; t < hi; ++t)
                    if (x.at(t, c) > bv) {
                        bv = x.at(t, c);
                        best = t;
                    }
                y.at(w, c) = bv;
                argmax_[static_cast<size_t>(w) * x.cols + c] = best;
            }
        }
        if (train) in_rows_ = x.rows;
        (void)train;
        return y;
    }

    Tensor backward(const Tensor& g) override {
        Tensor gx(in_rows_, g.cols);
        for (int w = 0; w < g.rows; ++w)
            for (int c = 0; c < g.cols; ++c)
                gx.at(argmax_[static_cast<size_t>(w) * g.cols + c], c) += g.at(w, c);
        return gx;
    }

    void collect_params(std::vector<Param>&, const std::string&) override {}

    nlohmann::ordered_json spec() const override {
        return {{"kind", "max_pool1d"}, {"width", width_}};
    }

private:
    int width_;
    int in_rows_ = 0;
    std::vector<int> argmax_;
};

class RnnLayer : public Layer {
public:
    RnnLayer(int in, int hidden, bool sequences)
        : in_(in), hidden_(hidden), sequences_(sequences) {
        if (in < 1 || hidden < 1) throw usage_error("rnn_cell: dimensions must be >= 1");
        wx_.assign(static_cast<size_t>(in) * hidden, 0.0);
        wh_.assign(static_cast<size_t>(hidden) * hidden, 0.0);
        b_.assign(hidden, 0.0);
        gwx_.assign(wx_.size(), 0.0);
        gwh_.assign(wh_.size(), 0.0);
        gb_.assign(b_.size(), 0.0);
    }

    std::string kind() const override { return "rnn_cell"; }

    void init(Rng& rng) override {
        fill_uniform(wx_, rng, 0.1);
        fill_uniform(wh_, rng, 0.1);
    }

    Tensor forward(const Tensor& x, bool train, Rng*) override {
        check_cols(x, in_, "rnn_cell");
        if (x.rows < 1) throw usage_error("rnn_cell: empty sequence");
        const int T = x.rows;
        h_.assign(static_cast<size_t>(T) * hidden_, 0.0);
        for (int t = 0; t < T; ++t) {
            for (int j = 0; j < hidden_; ++j) {
                double s = b_[j];
                for (int i = 0; i < in_; ++i)
                    s += x.at(t, i) * wx_[static_cast<size_t>(i) * hidden_ + j];
                if (t > 0)
                    for (int i = 0; i < hidden_; ++i)
                        s += h_[static_cast<size_t>(t - 1) * hidden_ + i] *
                             wh_[static_cast<size_t>(i) * hidden_ + j];
                h_[static_cast<size_t>(t) * hidden_ + j] = std::tanh(s);
            }
        }
        if (train) x_ = x;
        if (sequences_) {
            Tensor y(T, hidden_);
            y.data = h_;
            return y;
        }
        Tensor y(1, hidden_);
        std::copy(h_.begin() + static_cast<size_t>(T - 1) * hidden_, h_.end(),
                  y.data.begin());
        return y;
    }

    Tensor backward(const Tensor& g) override {
        const int T = x_.rows;
        if (T < 1) throw training_error("rnn_cell: backward without cached forward");
        Tensor gx(T, in_);
        std::vector<double> gh(hidden_, 0.0);
        for (int t = T - 1; t >= 0; --t) {
            for (int j = 0; j < hidden_; ++j) {
                double up = 0.0;
                if (sequences_) up = g.at(t, j);
                else if (t == T - 1) up = g.at(0, j);
                gh[j] += up;
            }
            std::vector<double> gz(hidden_);
            for (int j = 0; j < hidden_; ++j) {
                const double hv = h_[static_cast<size_t>(t) * hidden_ + j];
                gz[j] = gh[j] * (1.0 - hv * hv);
            }
            for (int j = 0; j < hidden_; ++j) gb_[j] += gz[j];
            for (int i = 0; i < in_; ++i) {
                const double xv = x_.at(t, i);
                double s = 0.0;
                for (int j = 0; j < hidden_; ++j) {
                    gwx_[static_cast<size_t>(i) * hidden_ + j] += xv * gz[j];
                    s += gz[j] * wx_[static_cast<size_t>(i) * hidden_ + j];
                }
                gx.at(t, i) = s;
            }
            std::fill(gh.begin(), gh.end(), 0.0);
            if (t > 0) {
                for (int i = 0; i < hidden_; ++i) {
                    const double hv = h_[static_cast<size_t>(t - 1) * hidden_ + i];
                    double s = 0.0;
                    for (int j = 0; j < hidden_; ++j) {
                        gwh_[static_cast<size_t>(i) * hidden_ + j] += hv * gz[j];
                        s += gz[j] * wh_[static_cast<size_t>(i) * hidden_ + j];
                    }
                    gh[i] = s;
                }
            }
        }
        return gx;
    }

    void collect_params(std::vector<Param>& out, const std::string& p) override {
        out.push_back({p + ".wx", &wx_, &gwx_});
        out.push_back({p + ".wh", &wh_, &gwh_});
        out.push_back({p + ".b", &b_, &gb_});
    }

    nlohmann::ordered_json spec() const override {
        return {{"kind", "rnn_cell"},
                {"in", in_},
                {"hidden", hidden_},
                {"sequences", sequences_}};
    }

private:
    int in_, hidden_;
    bool sequences_;
    std::vector<double> wx_, wh_, b_, gwx_, gwh_, gb_;
    std::vector<double> h_;
    Tensor x_;
};

// Gate order in the fused weight matrices: input, forget, cell, output.
class LstmLayer : public Layer {
public:
    LstmLayer(int in, int hidden, bool sequences)
        : in_(in), hidden_(hidden), sequences_(sequences) {
        if (in < 1 || hidden < 1) throw usage_error("lstm_cell: dimensions must be >= 1");
        wx_.assign(static_cast<size_t>(in) * 4 * hidden, 0.0);
        wh_.assign(static_cast<size_t>(hidden) * 4 * hidden, 0.0);
        b_.assign(static_cast<size_t>(4) * hidden, 0.0);
        gwx_.assign(wx_.size(), 0.0);
        gwh_.assign(wh_.size(), 0.0);
        gb_.assign(b_.size(), 0.0);
    }

    std::string kind() const override { return "lstm_cell"; }

    void init(Rng& rng) override {
        fill_uniform(wx_, rng, 0.1);
        fill_uniform(wh_, rng, 0.1);
        // forget-gate bias starts at one
        for (int j = 0; j < hidden_; ++j) b_[hidden_ + j] = 1.0;
    }

    Tensor forward(const Tensor& x, bool train, Rng*) override {
        check_cols(x, in_, "lstm_cell");
        if (x.rows < 1) throw usage_error("lstm_cell: empty sequence");
        const int T = x.rows;
        const int H = hidden_;
        gates_.assign(static_cast<size_t>(T) * 4 * H, 0.0);
        c_.assign(static_cast<size_t>(T) * H, 0.0);
        h_.assign(static_cast<size_t>(T) * H, 0.0);
        tanh_c_.assign(static_cast<size_t>(T) * H, 0.0);
        for (int t = 0; t < T; ++t) {
            std::vector<double> z(static_cast<size_t>(4) * H);
            for (int j = 0; j < 4 * H; ++j) {
                double s = b_[j];
                for (int i = 0; i < in_; ++i)
                    s += x.at(t, i) * wx_[static_cast<size_t>(i) * 4 * H + j];
                if (t > 0)
                    for (int i = 0; i < H; ++i)
                        s += h_[static_cast<size_t>(t - 1) * H + i] *
                             wh_[static_cast<size_t>(i) * 4 * H + j];
                z[j] = s;
            }
            for (int j = 0; j < H; ++j) {
                const double iv = sigmoid(z[j]);
                const double fv = sigmoid(z[H + j]);
                const double gv = std::tanh(z[2 * H + j]);
                const double ov = sigmoid(z[3 * H + j]);
                const double cprev = t > 0 ? c_[static_cast<size_t>(t - 1) * H + j] : 0.0;
                const double cv = fv * cprev + iv * gv;
                const double tc = std::tanh(cv);
                const size_t gbase = static_cast<size_t>(t) * 4 * H;
                gates_[gbase + j] = iv;
                gates_[gbase + H + j] = fv;
                gates_[gbase + 2 * H + j] = gv;
                gates_[gbase + 3 * H + j] = ov;
                c_[static_cast<size_t>(t) * H + j] = cv;
                tanh_c_[static_cast<size_t>(t) * H + j] = tc;
                h_[static_cast<size_t>(t) * H + j] = ov * tc;
            }
        }
        if (train) x_ = x;
        if (sequences_) {
            Tensor y(T, H);
            y.data = h_;
            return y;
        }
        Tensor y(1, H);
        std::copy(h_.begin() + static_cast<size_t>(T - 1) * H, h_.end(), y.data.begin());
        return y;
    }

    Tensor backward(const Tensor& g) override {
        const int T = x_.rows;
        const int H = hidden_;
        if (T < 1) throw training_error("lstm_cell: backward without cached forward");
        Tensor gx(T, in_);
        std::vector<double> gh(H, 0.0), gc(H, 0.0), gz(static_cast<size_t>(4) * H);
        for (int t = T - 1; t >= 0; --t) {
            const size_t gbase = static_cast<size_t>(t) * 4 * H;
            for (int j = 0; j < H; ++j) {
                double up = 0.0;
                if (sequences_) up = g.at(t, j);
                else if (t == T - 1) up = g.at(0, j);
                gh[j] += up;
            }
            for (int j = 0; j < H; ++j) {
                const double iv = gates_[gbase + j];
                const double fv = gates_[gbase + H + j];
                const double gv = gates_[gbase + 2 * H + j];
                const double ov = gates_[gbase + 3 * H + j];
                const double tc = tanh_c_[static_cast<size_t>(t) * H + j];
                const double cprev = t > 0 ? c_[static_cast<size_t>(t - 1) * H + j] : 0.0;

                const double go = gh[j] * tc;
                gc[j] += gh[j] * ov * (1.0 - tc * tc);
                const double gi = gc[j] * gv;
                const double gg = gc[j] * iv;
                const double gf = gc[j] * cprev;

                gz[j] = gi * iv * (1.0 - iv);
                gz[H + j] = gf * fv * (1.0 - fv);
                gz[2 * H + j] = gg * (1.0 - gv * gv);
                gz[3 * H + j] = go * ov * (1.0 - ov);

                gc[j] *= fv;  // flows to c_{t-1}
            }
            for (int j = 0; j < 4 * H; ++j) gb_[j] += gz[j];
            for (int i = 0; i < in_; ++i) {
                const double xv = x_.at(t, i);
                double s = 0.0;
                for (int j = 0; j < 4 * H; ++j) {
                    gwx_[static_cast<size_t>(i) * 4 * H + j] += xv * gz[j];
                    s += gz[j] * wx_[static_cast<size_t>(i) * 4 * H + j];
                }
                gx.at(t, i) = s;
            }
            std::fill(gh.begin(), gh.end(), 0.0);
            if (t > 0) {
                for (int i = 0; i < H; ++i) {
                    const double hv = h_[static_cast<size_t>(t - 1) * H + i];
                    double s = 0.0;
                    for (int j = 0; j < 4 * H; ++j) {
                        gwh_[static_cast<size_t>(i) * 4 * H + j] += hv * gz[j];
                        s += gz[j] * wh_[static_cast<size_t>(i) * 4 * H + j];
                    }
                    gh[i] = s;
                }
            }
        }
        return gx;
    }

    void collect_params(std::vector<Param>& out, const std::string& p) override {
        out.push_back({p + ".wx", &wx_, &gwx_});
        out.push_back({p + ".wh", &wh_, &gwh_});
        out.push_back({p + ".b", &b_, &gb_});
    }

    nlohmann::ordered_json spec() const override {
        return {{"kind", "lstm_cell"},
                {"in", in_},
                {"hidden", hidden_},
                {"sequences", sequences_}};
    }

private:
    int in_, hidden_;
    bool sequences_;
    std::vector<double> wx_, wh_, b_, gwx_, gwh_, gb_;
    std::vector<double> gates_, c_, h_, tanh_c_;
    Tensor x_;
};

// Row-wise layer normalization used inside the attention block.
struct LayerNorm {
    int dim = 0;
    std::vector<double> gamma, beta, g_gamma, g_beta;
    Tensor xhat;
    std::vector<double> inv_std;
    static constexpr double kEps = 1e-5;

    explicit LayerNorm(int d) : dim(d) {
        gamma.assign(d, 1.0);
        beta.assign(d, 0.0);
        g_gamma.assign(d, 0.0);
        g_beta.assign(d, 0.0);
    }

    Tensor forward(const Tensor& x, bool train) {
        Tensor y(x.rows, dim);
        Tensor xh(x.rows, dim);
        std::vector<double> istd(x.rows);
        for (int r = 0; r < x.rows; ++r) {
            double mean = 0.0;
            for (int j = 0; j < dim; ++j) mean += x.at(r, j);
            mean /= dim;
            double var = 0.0;
            for (int j = 0; j < dim; ++j) {
                double d = x.at(r, j) - mean;
                var += d * d;
            }
            var /= dim;
            const double is = 1.0 / std::sqrt(var + kEps);
            istd[r] = is;
            for (int j = 0; j < dim; ++j) {
                const double xn = (x.at(r, j) - mean) * is;
                xh.at(r, j) = xn;
                y.at(r, j) = xn * gamma[j] + beta[j];
            }
        }
        if (train) {
            xhat = std::move(xh);
            inv_std = std::move(istd);
        }
        return y;
    }

    Tensor backward(const Tensor& g) {
        Tensor gx(g.rows, dim);
        for (int r = 0; r < g.rows; ++r) {
            double sum_gx = 0.0, sum_gxx = 0.0;
            for (int j = 0; j < dim; ++j) {
                const double gxh = g.at(r, j) * gamma[j];
                sum_gx += gxh;
                sum_gxx += gxh * xhat.at(r, j);
                g_gamma[j] += g.at(r, j) * xhat.at(r, j);
                g_beta[j] += g.at(r, j);
            }
            const double inv_d = 1.0 / dim;
            for (int j = 0; j < dim; ++j) {
                const double gxh = g.at(r, j) * gamma[j];
                gx.at(r, j) = inv_std[r] *
                              (gxh - inv_d * sum_gx - xhat.at(r, j) * inv_d * sum_gxx);
            }
        }
        return gx;
    }
};

// Pre-norm transformer block: x + MHA(LN1(x)), then x + FF(LN2(x)).
class AttentionBlockLayer : public Layer {
public:
    AttentionBlockLayer(int dim, int heads, int ff)
        : dim_(dim), heads_(heads), ff_(ff), ln1_(dim), ln2_(dim) {
        if (dim < 1 || heads < 1 || ff < 1)
            throw usage_error("self_attention_block: dimensions must be >= 1");
        if (dim % heads != 0)
            throw usage_error("self_attention_block: model dim not divisible by heads");
        auto alloc = [](std::vector<double>& v, std::vector<double>& g, size_t n) {
            v.assign(n, 0.0);
            g.assign(n, 0.0);
        };
        const size_t dd = static_cast<size_t>(dim) * dim;
        alloc(wq_, gwq_, dd);
        alloc(wk_, gwk_, dd);
        alloc(wv_, gwv_, dd);
        alloc(wo_, gwo_, dd);
        alloc(bq_, gbq_, dim);
        alloc(bk_, gbk_, dim);
        alloc(bv_, gbv_, dim);
        alloc(bo_, gbo_, dim);
        alloc(w1_, gw1_, static_cast<size_t>(dim) * ff);
        alloc(b1_, gb1_, ff);
        alloc(w2_, gw2_, static_cast<size_t>(ff) * dim);
        alloc(b2_, gb2_, dim);
    }

    std::string kind() const override { return "self_attention_block"; }

    void init(Rng& rng) override {
        const double la = glorot_limit(dim_, dim_);
        fill_uniform(wq_, rng, la);
        fill_uniform(wk_, rng, la);
        fill_uniform(wv_, rng, la);
        fill_uniform(wo_, rng, la);
        fill_uniform(w1_, rng, glorot_limit(dim_, ff_));
        fill_uniform(w2_, rng, glorot_limit(ff_, dim_));
    }

    Tensor forward(const Tensor& x, bool train, Rng*) override {
        check_cols(x, dim_, "self_attention_block");
        const int T = x.rows;
        const int hd = dim_ / heads_;
        const double isq = 1.0 / std::sqrt(static_cast<double>(hd));

        Tensor a = ln1_.forward(x, train);
        Tensor q = affine(a, wq_, bq_, dim_);
        Tensor k = affine(a, wk_, bk_, dim_);
        Tensor v = affine(a, wv_, bv_, dim_);

        Tensor att(T, dim_);                 // concatenated head outputs
        Tensor probs(static_cast<int>(heads_) * T, T);
        for (int h = 0; h < heads_; ++h) {
            const int off = h * hd;
            for (int r = 0; r < T; ++r) {
                // scaled scores against every position, softmax row
                std::vector<double> row(T);
                double mx = -std::numeric_limits<double>::infinity();
                for (int c = 0; c < T; ++c) {
                    double s = 0.0;
                    for (int j = 0; j < hd; ++j) s += q.at(r, off + j) * k.at(c, off + j);
                    row[c] = s * isq;
                    mx = std::max(mx, row[c]);
                }
                double z = 0.0;
                for (int c = 0; c < T; ++c) {
                    row[c] = std::exp(row[c] - mx);
                    z += row[c];
                }
                for (int c = 0; c < T; ++c) {
                    row[c] /= z;
                    probs.at(h * T + r, c) = row[c];
                }
                for (int j = 0; j < hd; ++j) {
                    double s = 0.0;
                    for (int c = 0; c < T; ++c) s += row[c] * v.at(c, off + j);
                    att.at(r, off + j) = s;
                }
            }
        }
        Tensor proj = affine(att, wo_, bo_, dim_);
        Tensor x1(T, dim_);
        for (size_t i = 0; i < x1.data.size(); ++i)
            x1.data[i] = x.data[i] + proj.data[i];

        Tensor b = ln2_.forward(x1, train);
        Tensor z1(T, ff_);
        for (int r = 0; r < T; ++r)
            for (int j = 0; j < ff_; ++j) {
                double s = b1_[j];
                for (int i = 0; i < dim_; ++i)
                    s += b.at(r, i) * w1_[static_cast<size_t>(i) * ff_ + j];
                z1.at(r, j) = s;
            }
        Tensor f1(T, ff_);
        for (size_t i = 0; i < z1.data.size(); ++i)
            f1.data[i] = z1.data[i] > 0.0 ? z1.data[i] : 0.0;
        Tensor y(T, dim_);
        for (int r = 0; r < T; ++r)
            for (int j = 0; j < dim_; ++j) {
                double s = b2_[j];
                for (int i = 0; i < ff_; ++i)
                    s += f1.at(r, i) * w2_[static_cast<size_t>(i) * dim_ + j];
                y.at(r, j) = x1.at(r, j) + s;
            }

        if (train) {
            a_ = std::move(a);
            q_ = std::move(q);
            k_ = std::move(k);
            v_ = std::move(v);
            att_ = std::move(att);
            probs_ = std::move(probs);
            x1_ = std::move(x1);
            bnorm_ = std::move(b);
            z1_ = std::move(z1);
            f1_ = std::move(f1);
        }
        return y;
    }

    Tensor backward(const Tensor& g) override {
        const int T = g.rows;
        if (x1_.rows != T)
            throw training_error("self_attention_block: backward without cached forward");
        const int hd = dim_ / heads_;
        const double isq = 1.0 / std::sqrt(static_cast<double>(hd));

        // feed-forward branch
        Tensor gf1(T, ff_);
        for (int r = 0; r < T; ++r) {
            for (int j = 0; j < dim_; ++j) gb2_[j] += g.at(r, j);
            for (int i = 0; i < ff_; ++i) {
                double s = 0.0;
                const double f1v = f1_.at(r, i);
                for (int j = 0; j < dim_; ++j) {
                    gw2_[static_cast<size_t>(i) * dim_ + j] += f1v * g.at(r, j);
                    s += g.at(r, j) * w2_[static_cast<size_t>(i) * dim_ + j];
                }
                gf1.at(r, i) = z1_.at(r, i) > 0.0 ? s : 0.0;
            }
        }
        Tensor gb(T, dim_);
        for (int r = 0; r < T; ++r) {
            for (int j = 0; j < ff_; ++j) gb1_[j] += gf1.at(r, j);
            for (int i = 0; i < dim_; ++i) {
                double s = 0.0;
                const double bv = bnorm_.at(r, i);
                for (int j = 0; j < ff_; ++j) {
                    gw1_[static_cast<size_t>(i) * ff_ + j] += bv * gf1.at(r, j);
                    s += gf1.at(r, j) * w1_[static_cast<size_t>(i) * ff_ + j];
                }
                gb.at(r, i) = s;
            }
        }
        Tensor gx1 = ln2_.backward(gb);
        for (size_t i = 0; i < gx1.data.size(); ++i) gx1.data[i] += g.data[i];

        // attention branch: gx1 flows into the projection and the residual
        Tensor gatt(T, dim_);
        for (int r = 0; r < T; ++r) {
            for (int j = 0; j < dim_; ++j) gbo_[j] += gx1.at(r, j);
            for (int i = 0; i < dim_; ++i) {
                double s = 0.0;
                const double av = att_.at(r, i);
                for (int j = 0; j < dim_; ++j) {
                    gwo_[static_cast<size_t>(i) * dim_ + j] += av * gx1.at(r, j);
                    s += gx1.at(r, j) * wo_[static_cast<size_t>(i) * dim_ + j];
                }
                gatt.at(r, i) = s;
            }
        }

        Tensor gq(T, dim_), gk(T, dim_), gv(T, dim_);
        for (int h = 0; h < heads_; ++h) {
            const int off = h * hd;
            for (int r = 0; r < T; ++r) {
                // dP, then softmax backward to scores
                std::vector<double> gp(T), gs(T);
                double dot = 0.0;
                for (int c = 0; c < T; ++c) {
                    double s = 0.0;
                    for (int j = 0; j < hd; ++j)
                        s += gatt.at(r, off + j) * v_.at(c, off + j);
                    gp[c] = s;
                    dot += gp[c] * probs_.at(h * T + r, c);
                }
                for (int c = 0; c < T; ++c) {
                    const double p = probs_.at(h * T + r, c);
                    gs[c] = p * (gp[c] - dot) * isq;
                }
                for (int c = 0; c < T; ++c) {
                    const double p = probs_.at(h * T + r, c);
                    for (int j = 0; j < hd; ++j) {
                        gv.at(c, off + j) += p * gatt.at(r, off + j);
                        gq.at(r, off + j) += gs[c] * k_.at(c, off + j);
                        gk.at(c, off + j) += gs[c] * q_.at(r, off + j);
                    }
                }
            }
        }

        Tensor ga(T, dim_);
        affine_backward(a_, gq, wq_, gwq_, gbq_, ga);
        affine_backward(a_, gk, wk_, gwk_, gbk_, ga);
        affine_backward(a_, gv, wv_, gwv_, gbv_, ga);
        Tensor gx = ln1_.backward(ga);
        for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gx1.data[i];
        return gx;
    }

    void collect_params(std::vector<Param>& out, const std::string& p) override {
        out.push_back({p + ".ln1.gamma", &ln1_.gamma, &ln1_.g_gamma});
        out.push_back({p + ".ln1.beta", &ln1_.beta, &ln1_.g_beta});
        out.push_back({p + ".wq", &wq_, &gwq_});
        out.push_back({p + ".bq", &bq_, &gbq_});
        out.push_back({p + ".wk", &wk_, &gwk_});
        out.push_back({p + ".bk", &bk_, &gbk_});
        out.push_back({p + ".wv", &wv_, &gwv_});
        out.push_back({p + ".bv", &bv_, &gbv_});
        out.push_back({p + ".wo", &wo_, &gwo_});
        out.push_back({p + ".bo", &bo_, &gbo_});
        out.push_back({p + ".ln2.gamma", &ln2_.gamma, &ln2_.g_gamma});
        out.push_back({p + ".ln2.beta", &ln2_.beta, &ln2_.g_beta});
        out.push_back({p + ".w1", &w1_, &gw1_});
        out.push_back({p + ".b1", &b1_, &gb1_});
        out.push_back({p + ".w2", &w2_, &gw2_});
        out.push_back({p + ".b2", &b2_, &gb2_});
    }

    nlohmann::ordered_json spec() const override {
        return {{"kind", "self_attention_block"},
                {"dim", dim_},
                {"heads", heads_},
                {"ff", ff_}};
    }

private:
    Tensor affine(const Tensor& x, const std::vector<double>& w,
                  const std::vector<double>& b, int out) const {
        Tensor y(x.rows, out);
        for (int r = 0; r < x.rows; ++r)
            for (int j = 0; j < out; ++j) {
                double s = b[j];
                for (int i = 0; i < dim_; ++i)
                    s += x.at(r, i) * w[static_cast<size_t>(i) * out + j];
                y.at(r, j) = s;
            }
        return y;
    }

    void affine_backward(const Tensor& x, const Tensor& gy, const std::vector<double>& w,
                         std::vector<double>& gw, std::vector<double>& gbias,
                         Tensor& gx_accum) const {
        for (int r = 0; r < x.rows; ++r) {
            for (int j = 0; j < dim_; ++j) gbias[j] += gy.at(r, j);
            for (int i = 0; i < dim_; ++i) {
                double s = 0.0;
                const double xv = x.at(r, i);
                for (int j = 0; j < dim_; ++j) {
                    gw[static_cast<size_t>(i) * dim_ + j] += xv * gy.at(r, j);
                    s += gy.at(r, j) * w[static_cast<size_t>(i) * dim_ + j];
                }
                gx_accum.at(r, i) += s;
            }
        }
    }

    int dim_, heads_, ff_;
    LayerNorm ln1_, ln2_;
    std::vector<double> wq_, wk_, wv_, wo_, bq_, bk_, bv_, bo_;
    std::vector<double> gwq_, gwk_, gwv_, gwo_, gbq_, gbk_, gbv_, gbo_;
    std::vector<double> w1_, b1_, w2_, b2_, gw1_, gb1_, gw2_, gb2_;
    Tensor a_, q_, k_, v_, att_, probs_, x1_, bnorm_, z1_, f1_;
};

class MeanPoolLayer : public Layer {
public:
    std::string kind() const override { return "mean_pool"; }
    void init(Rng&) override {}

    Tensor forward(const Tensor& x, bool train, Rng*) override {
        if (x.rows < 1) throw usage_error("mean_pool: empty sequence");
        Tensor y(1, x.cols);
        for (int r = 0; r < x.rows; ++r)
            for (int c = 0; c < x.cols; ++c) y.at(0, c) += x.at(r, c);
        for (int c = 0; c < x.cols; ++c) y.at(0, c) /= x.rows;
        if (train) rows_ = x.rows;
        return y;
    }

    Tensor backward(const Tensor& g) override {
        Tensor gx(rows_, g.cols);
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < g.cols; ++c) gx.at(r, c) = g.at(0, c) / rows_;
        return gx;
    }

    void collect_params(std::vector<Param>&, const std::string&) override {}

    nlohmann::ordered_json spec() const override { return {{"kind", "mean_pool"}}; }

private:
    int rows_ = 0;
};

}  // namespace

std::string_view activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh_fn: return "tanh";
        default: return "identity";
    }
}

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh_fn;
    if (name == "identity") return Activation::identity;
    throw data_error("unknown activation \"" + std::string(name) + "\"");
}

std::unique_ptr<Layer> make_embedding(int vocab, int dim, int max_positions) {
    return std::make_unique<EmbeddingLayer>(vocab, dim, max_positions);
}
std::unique_ptr<Layer> make_dense(int in, int out, Activation act) {
    return std::make_unique<DenseLayer>(in, out, act);
}
std::unique_ptr<Layer> make_dropout(double rate) {
    return std::make_unique<DropoutLayer>(rate);
}
std::unique_ptr<Layer> make_conv1d(int in_channels, int filters, int width,
                                   Activation act) {
    return std::make_unique<Conv1dLayer>(in_channels, filters, width, act);
}
std::unique_ptr<Layer> make_max_pool1d(int width) {
    return std::make_unique<MaxPool1dLayer>(width);
}
std::unique_ptr<Layer> make_rnn(int in, int hidden, bool sequences) {
    return std::make_unique<RnnLayer>(in, hidden, sequences);
}
std::unique_ptr<Layer> make_lstm(int in, int hidden, bool sequences) {
    return std::make_unique<LstmLayer>(in, hidden, sequences);
}
std::unique_ptr<Layer> make_attention_block(int dim, int heads, int ff) {
    return std::make_unique<AttentionBlockLayer>(dim, heads, ff);
}
std::unique_ptr<Layer> make_mean_pool() { return std::make_unique<MeanPoolLayer>(); }

std::unique_ptr<Layer> layer_from_spec(const nlohmann::ordered_json& s) {
    const std::string kind = s.at("kind").get<std::string>();
    if (kind == "embedding")
        return make_embedding(s.at("vocab"), s.at("dim"), s.at("max_positions"));
    if (kind == "dense")
        return make_dense(s.at("in"), s.at("out"),
                          parse_activation(s.at("activation").get<std::string>()));
    if (kind == "dropout") return make_dropout(s.at("rate"));
    if (kind == "conv1d")
        return make_conv1d(s.at("in"), s.at("filters"), s.at("width"),
                           parse_activation(s.at("activation").get<std::string>()));
    if (kind == "max_pool1d") return make_max_pool1d(s.at("width"));
    if (kind == "rnn_cell") return make_rnn(s.at("in"), s.at("hidden"), s.at("sequences"));
    if (kind == "lstm_cell")
        return make_lstm(s.at("in"), s.at("hidden"), s.at("sequences"));
    if (kind == "self_attention_block")
        return make_attention_block(s.at("dim"), s.at("heads"), s.at("ff"));
    if (kind == "mean_pool") return make_mean_pool();
    throw data_error("unknown layer kind \"" + kind + "\"");
}

void ModelGraph::init_params(uint64_t seed_value) {
    seed = seed_value;
    Rng rng(derive_seed(seed_value, 0x1417));
    for (auto& layer : layers) layer->init(rng);
}

Tensor ModelGraph::forward(const Tensor& x, bool train, Rng* rng) {
    return forward_prefix(x, layers.size(), train, rng);
}

Tensor ModelGraph::forward_prefix(const Tensor& x, size_t n, bool train, Rng* rng) {
    Tensor cur = x;
    for (size_t i = 0; i < n && i < layers.size(); ++i) {
        try {
            cur = layers[i]->forward(cur, train, rng);
        } catch (const Error& e) {
            throw Error(e.kind(),
                        "layer " + std::to_string(i) + ": " + std::string(e.what()));
        }
    }
    return cur;
}

Tensor ModelGraph::backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (size_t i = layers.size(); i-- > 0;) {
        try {
            g = layers[i]->backward(g);
        } catch (const Error& e) {
            throw Error(e.kind(),
                        "layer " + std::to_string(i) + ": " + std::string(e.what()));
        }
    }
    return g;
}

std::vector<Param> ModelGraph::params() {
    std::vector<Param> out;
    for (size_t i = 0; i < layers.size(); ++i)
        layers[i]->collect_params(out, "layer" + std::to_string(i));
    return out;
}

size_t ModelGraph::param_count() {
    size_t n = 0;
    for (const auto& p : params()) n += p.value->size();
    return n;
}

void ModelGraph::zero_grads() {
    for (const auto& p : params()) std::fill(p.grad->begin(), p.grad->end(), 0.0);
}

std::vector<std::vector<double>> ModelGraph::snapshot_params() {
    std::vector<std::vector<double>> snap;
    for (const auto& p : params()) snap.push_back(*p.value);
    return snap;
}

void ModelGraph::restore_params(const std::vector<std::vector<double>>& snap) {
    auto ps = params();
    if (ps.size() != snap.size())
        throw training_error("parameter snapshot does not match the model");
    for (size_t i = 0; i < ps.size(); ++i) *ps[i].value = snap[i];
}

nlohmann::ordered_json ModelGraph::to_json() {
    nlohmann::ordered_json j;
    j["layers"] = nlohmann::ordered_json::array();
    for (const auto& layer : layers) j["layers"].push_back(layer->spec());
    nlohmann::ordered_json params_json = nlohmann::ordered_json::object();
    for (const auto& p : params()) params_json[p.name] = *p.value;
    j["params"] = params_json;
    return j;
}

ModelGraph ModelGraph::from_json(const nlohmann::ordered_json& j) {
    ModelGraph m;
    for (const auto& spec : j.at("layers")) m.add(layer_from_spec(spec));
    auto ps = m.params();
    const auto& params_json = j.at("params");
    for (auto& p : ps) {
        if (!params_json.contains(p.name))
            throw data_error("model file missing parameter \"" + p.name + "\"");
        const auto& arr = params_json.at(p.name);
        if (arr.size() != p.value->size())
            throw data_error("model parameter \"" + p.name + "\" has wrong size");
        for (size_t i = 0; i < p.value->size(); ++i) (*p.value)[i] = arr[i].get<double>();
    }
    return m;
}

DenseVector softmax(const DenseVector& logits) {
    if (logits.empty()) throw training_error("softmax: empty logits");
    double mx = -std::numeric_limits<double>::infinity();
    for (double z : logits) {
        if (!std::isfinite(z)) throw training_error("softmax: non-finite logit");
        mx = std::max(mx, z);
    }
    DenseVector p(logits.size());
    double z = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        z += p[i];
    }
    for (double& x : p) x /= z;
    return p;
}

double weighted_cross_entropy(const DenseVector& probs, int label, double weight) {
    if (label < 0 || label >= static_cast<int>(probs.size()))
        throw data_error("cross-entropy label out of range");
    if (weight < 0.0) throw usage_error("cross-entropy weight must be nonnegative");
    return -weight * std::log(probs[label] + 1e-12);
}

void adam_step(std::vector<Param>& params, AdamState& state, const TrainConfig& cfg) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i].value->size(), 0.0);
            state.v[i].assign(params[i].value->size(), 0.0);
        }
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& value = *params[i].value;
        const auto& grad = *params[i].grad;
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (size_t k = 0; k < value.size(); ++k) {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * grad[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
            const double mh = m[k] / bc1;
            const double vh = v[k] / bc2;
            value[k] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
        }
    }
}

bool EarlyStopper::feed(double val_loss) {
    ++epoch_;
    if (val_loss < best_) {
        best_ = val_loss;
        best_epoch_ = epoch_;
        bad_ = 0;
        improved_ = true;
        return false;
    }
    improved_ = false;
    ++bad_;
    return bad_ >= patience_;
}

nlohmann::ordered_json history_to_json(const std::vector<EpochStats>& history) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& e : history)
        arr.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"val_loss", e.val_loss},
                       {"seconds", e.seconds}});
    return arr;
}

namespace {

// Fused softmax + weighted cross-entropy on the (1 x K) logits row.
double example_loss_and_grad(ModelGraph& model, const Example& ex, double grad_scale,
                             bool train, Rng* rng, bool do_backward) {
    Tensor logits = model.forward(ex.input, train, rng);
    if (logits.rows != 1)
        throw usage_error("training head must emit a single logits row");
    DenseVector lv(logits.data.begin(), logits.data.end());
    DenseVector p = softmax(lv);
    if (ex.label < 0 || ex.label >= static_cast<int>(p.size()))
        throw data_error("label out of range for the model head");
    const double loss = weighted_cross_entropy(p, ex.label, ex.weight);
    if (do_backward) {
        Tensor g(1, logits.cols);
        for (int j = 0; j < logits.cols; ++j) {
            const double onehot = j == ex.label ? 1.0 : 0.0;
            g.at(0, j) = grad_scale * ex.weight * (p[j] - onehot);
        }
        model.backward(g);
    }
    return loss;
}

double eval_mean_loss(ModelGraph& model, const std::vector<Example>& data) {
    double total = 0.0;
    for (const auto& ex : data)
        total += example_loss_and_grad(model, ex, 0.0, false, nullptr, false);
    return total / static_cast<double>(data.size());
}

}  // namespace

TrainResult train_supervised(ModelGraph& model, const std::vector<Example>& train,
                             const std::vector<Example>& val, const TrainConfig& cfg) {
    if (train.empty() || val.empty())
        throw data_error("train_supervised requires non-empty train and val sets");
    if (cfg.lr <= 0.0 || cfg.batch < 1 || cfg.max_epochs < 1 || cfg.patience < 1)
        throw usage_error("invalid training configuration");

    Rng rng(derive_seed(cfg.seed, 0x7e41));
    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    auto params = model.params();
    AdamState adam;
    EarlyStopper stopper(cfg.patience);
    TrainResult result;
    std::vector<std::vector<double>> best = model.snapshot_params();
    result.best_epoch = 0;
    result.best_val_loss = std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        shuffle(order, rng);
        double train_total = 0.0;
        double val_loss = 0.0;
        try {
            for (size_t start = 0; start < order.size();
                 start += static_cast<size_t>(cfg.batch)) {
                const size_t end =
                    std::min(order.size(), start + static_cast<size_t>(cfg.batch));
                const double scale = 1.0 / static_cast<double>(end - start);
                model.zero_grads();
                for (size_t i = start; i < end; ++i)
                    train_total += example_loss_and_grad(model, train[order[i]], scale,
                                                         true, &rng, true);
                adam_step(params, adam, cfg);
            }
            val_loss = eval_mean_loss(model, val);
        } catch (const Error& e) {
            if (e.kind() != ErrKind::training) throw;
            throw training_error("loss diverged at epoch " + std::to_string(epoch) +
                                 ": " + std::string(e.what()));
        }
        const double train_loss = train_total / static_cast<double>(train.size());
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
            throw training_error("loss diverged at epoch " + std::to_string(epoch));

        double seconds = 0.0;
        if (cfg.wall_clock) {
            const auto t1 = std::chrono::steady_clock::now();
            seconds = std::chrono::duration<double>(t1 - t0).count();
        }
        result.history.push_back({epoch, train_loss, val_loss, seconds});

        const bool stop = stopper.feed(val_loss);
        if (stopper.improved_last()) {
            best = model.snapshot_params();
            result.best_epoch = epoch;
            result.best_val_loss = val_loss;
        }
        if (stop) break;
    }
    model.restore_params(best);
    return result;
}

double grad_check(ModelGraph& model, const std::vector<Example>& batch, double eps,
                  size_t max_params, uint64_t seed) {
    if (batch.empty()) throw usage_error("grad_check needs a non-empty batch");

    const auto loss_fn = [&]() {
        Rng rng(seed);
        double total = 0.0;
        for (const auto& ex : batch)
            total += example_loss_and_grad(model, ex, 0.0, true, &rng, false);
        return total;
    };

    // analytic pass under the same fixed dropout stream
    model.zero_grads();
    {
        Rng rng(seed);
        for (const auto& ex : batch)
            example_loss_and_grad(model, ex, 1.0, true, &rng, true);
    }
    auto params = model.params();
    std::vector<std::pair<size_t, size_t>> coords;  // (param array, offset)
    size_t total = 0;
    for (const auto& p : params) total += p.value->size();
    const size_t want = std::min(total, std::max<size_t>(max_params, 1));
    for (size_t j = 0; j < want; ++j) {
        size_t flat = total <= want ? j : (j * total) / want;
        size_t a = 0;
        while (flat >= params[a].value->size()) {
            flat -= params[a].value->size();
            ++a;
        }
        coords.emplace_back(a, flat);
    }

    double worst = 0.0;
    for (const auto& [a, off] : coords) {
        const double analytic = (*params[a].grad)[off];
        double& theta = (*params[a].value)[off];
        const double saved = theta;
        theta = saved + eps;
        const double fp = loss_fn();
        theta = saved - eps;
        const double fm = loss_fn();
        theta = saved;
        const double numeric = (fp - fm) / (2.0 * eps);
        const double rel = std::fabs(analytic - numeric) /
                           std::max(std::fabs(analytic) + std::fabs(numeric), 1e-3);
        worst = std::max(worst, rel);
    }
    return worst;
}

int TokenIndexer::id(std::string_view token) const {
    auto it = map.find(std::string(token));
    return it == map.end() ? unk : it->second;
}

TokenIndexer TokenIndexer::build(const std::vector<std::string>& vocab_tokens,
                                 bool with_cls) {
    TokenIndexer ix;
    ix.reserved = with_cls ? 3 : 2;
    ix.cls = with_cls ? 2 : -1;
    ix.tokens = vocab_tokens;
    for (size_t i = 0; i < vocab_tokens.size(); ++i)
        ix.map[vocab_tokens[i]] = ix.reserved + static_cast<int>(i);
    return ix;
}

}  // namespace emoforge::neural
