#include "cough/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "cough/error.hpp"

namespace cough {

namespace {

struct BlockDims {
    int in_ch, out_ch;
    int h, w;    // conv input == output spatial (SAME padding)
    int ph, pw;  // after 2x2 max pool
    std::size_t w_off, b_off;
};

struct Dims {
    std::vector<BlockDims> blocks;
    std::size_t flat = 0;
    int hidden = 0, classes = 0;
    std::size_t d1_w = 0, d1_b = 0, d2_w = 0, d2_b = 0;
    std::size_t total = 0;
};

Dims compute_dims(const ModelConfig& c) {
    Dims d;
    int h = static_cast<int>(c.input_rows);
    int w = static_cast<int>(c.input_cols);
    int in_ch = 1;
    std::size_t off = 0;
    for (int oc : c.conv_channels) {
        BlockDims b;
        b.in_ch = in_ch;
        b.out_ch = oc;
        b.h = h;
        b.w = w;
        b.w_off = off;
        off += static_cast<std::size_t>(oc) * in_ch * 9;
        b.b_off = off;
        off += static_cast<std::size_t>(oc);
        b.ph = h / 2;
        b.pw = w / 2;
        h = b.ph;
        w = b.pw;
        in_ch = oc;
        d.blocks.push_back(b);
    }
    d.flat = static_cast<std::size_t>(in_ch) * h * w;
    d.hidden = c.hidden_units;
    d.classes = c.n_classes;
    d.d1_w = off;
    off += static_cast<std::size_t>(c.hidden_units) * d.flat;
    d.d1_b = off;
    off += static_cast<std::size_t>(c.hidden_units);
    d.d2_w = off;
    off += static_cast<std::size_t>(c.n_classes) * c.hidden_units;
    d.d2_b = off;
    off += static_cast<std::size_t>(c.n_classes);
    d.total = off;
    return d;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    a ^= b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2);
    return a * 0xFF51AFD7ED558CCDULL + 1;
}

// One sample's activations, kept around for the backward pass.
struct ForwardState {
    std::vector<float> input;                    // 1 x H x W
    std::vector<std::vector<float>> conv_act;    // post-relu, per block
    std::vector<std::vector<float>> pooled;      // per block
    std::vector<std::vector<int>> argmax;        // pooled cell -> conv index
    std::vector<float> hidden_relu;              // dense1 post-relu
    std::vector<float> drop_scale;               // per-unit inverted-dropout factor
    std::vector<float> hidden_drop;              // after dropout
    std::vector<double> probs;
};

void conv_same_3x3(const float* in, int in_ch, int h, int w, const float* kw,
                   const float* kb, int out_ch, float* out) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int oc = 0; oc < out_ch; ++oc) {
        std::fill(out + oc * plane, out + (oc + 1) * plane, kb[oc]);
    }
    for (int oc = 0; oc < out_ch; ++oc) {
        float* out_plane = out + oc * plane;
        for (int ic = 0; ic < in_ch; ++ic) {
            const float* in_plane = in + ic * plane;
            const float* k = kw + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                const int dy = ky - 1;
                for (int kx = 0; kx < 3; ++kx) {
                    const int dx = kx - 1;
                    const float wv = k[ky * 3 + kx];
                    const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                    const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                    for (int y = y0; y < y1; ++y) {
                        const float* src = in_plane + (y + dy) * w + dx;
                        float* dst = out_plane + y * w;
                        for (int x = x0; x < x1; ++x) dst[x] += wv * src[x];
                    }
                }
            }
        }
    }
}

// Gradient w.r.t. the conv input and weights, given dL/d(conv output).
void conv_same_3x3_backward(const float* in, int in_ch, int h, int w,
                            const float* kw, int out_ch, const float* dout,
                            float* din, float* dkw, float* dkb) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int oc = 0; oc < out_ch; ++oc) {
        const float* dout_plane = dout + oc * plane;
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += dout_plane[i];
        dkb[oc] += static_cast<float>(acc);
        for (int ic = 0; ic < in_ch; ++ic) {
            const float* in_plane = in + ic * plane;
            float* din_plane = din ? din + ic * plane : nullptr;
            const float* k = kw + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
            float* dk = dkw + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                const int dy = ky - 1;
                for (int kx = 0; kx < 3; ++kx) {
                    const int dx = kx - 1;
                    const float wv = k[ky * 3 + kx];
                    const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                    const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                    float wsum = 0.0f;
                    for (int y = y0; y < y1; ++y) {
                        const float* src = in_plane + (y + dy) * w + dx;
                        const float* g = dout_plane + y * w;
                        float* dsrc = din_plane ? din_plane + (y + dy) * w + dx
                                                : nullptr;
                        float row = 0.0f;
                        if (dsrc) {
                            for (int x = x0; x < x1; ++x) {
                                row += g[x] * src[x];
                                dsrc[x] += wv * g[x];
                            }
                        } else {
                            for (int x = x0; x < x1; ++x) row += g[x] * src[x];
                        }
                        wsum += row;
                    }
                    dk[ky * 3 + kx] += wsum;
                }
            }
        }
    }
}

void maxpool_2x2(const float* in, int ch, int h, int w, int ph, int pw,
                 float* out, int* argmax) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t pplane = static_cast<std::size_t>(ph) * pw;
    for (int c = 0; c < ch; ++c) {
        const float* src = in + c * plane;
        float* dst = out + c * pplane;
        int* arg = argmax + c * pplane;
        for (int py = 0; py < ph; ++py) {
            for (int px = 0; px < pw; ++px) {
                int base = (2 * py) * w + 2 * px;
                int best = base;
                float bv = src[base];
                if (src[base + 1] > bv) { bv = src[base + 1]; best = base + 1; }
                if (src[base + w] > bv) { bv = src[base + w]; best = base + w; }
                if (src[base + w + 1] > bv) { bv = src[base + w + 1]; best = base + w + 1; }
                dst[py * pw + px] = bv;
                arg[py * pw + px] = c * static_cast<int>(plane) + best;
            }
        }
    }
}

std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

void forward_impl(const ModelBundle& bundle, const Dims& dims,
                  const Matrix& image, bool training, std::uint64_t mask_seed,
                  ForwardState& st) {
    if (image.rows != bundle.config.input_rows ||
        image.cols != bundle.config.input_cols) {
        throw ShapeMismatch("feature shape does not match model input");
    }
    const float* weights = bundle.weights.data();

    st.input.resize(image.v.size());
    for (std::size_t i = 0; i < image.v.size(); ++i) {
        st.input[i] = static_cast<float>(image.v[i]);
    }

    st.conv_act.resize(dims.blocks.size());
    st.pooled.resize(dims.blocks.size());
    st.argmax.resize(dims.blocks.size());

    const float* cur = st.input.data();
    for (std::size_t b = 0; b < dims.blocks.size(); ++b) {
        const auto& bd = dims.blocks[b];
        st.conv_act[b].assign(static_cast<std::size_t>(bd.out_ch) * bd.h * bd.w,
                              0.0f);
        conv_same_3x3(cur, bd.in_ch, bd.h, bd.w, weights + bd.w_off,
                      weights + bd.b_off, bd.out_ch, st.conv_act[b].data());
        for (auto& v : st.conv_act[b]) v = std::max(v, 0.0f);

        st.pooled[b].assign(static_cast<std::size_t>(bd.out_ch) * bd.ph * bd.pw,
                            0.0f);
        st.argmax[b].assign(st.pooled[b].size(), 0);
        maxpool_2x2(st.conv_act[b].data(), bd.out_ch, bd.h, bd.w, bd.ph, bd.pw,
                    st.pooled[b].data(), st.argmax[b].data());
        cur = st.pooled[b].data();
    }

    const float* flat = cur;
    st.hidden_relu.assign(static_cast<std::size_t>(dims.hidden), 0.0f);
    for (int j = 0; j < dims.hidden; ++j) {
        const float* row = weights + dims.d1_w + static_cast<std::size_t>(j) * dims.flat;
        float acc = weights[dims.d1_b + j];
        for (std::size_t i = 0; i < dims.flat; ++i) acc += row[i] * flat[i];
        st.hidden_relu[j] = std::max(acc, 0.0f);
    }

    st.drop_scale.assign(static_cast<std::size_t>(dims.hidden), 1.0f);
    if (training && bundle.config.dropout_rate > 0.0) {
        std::mt19937_64 rng(mask_seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double keep = 1.0 - bundle.config.dropout_rate;
        for (int j = 0; j < dims.hidden; ++j) {
            st.drop_scale[j] =
                u(rng) < keep ? static_cast<float>(1.0 / keep) : 0.0f;
        }
    }
    st.hidden_drop.resize(static_cast<std::size_t>(dims.hidden));
    for (int j = 0; j < dims.hidden; ++j) {
        st.hidden_drop[j] = st.hidden_relu[j] * st.drop_scale[j];
    }

    std::vector<double> logits(static_cast<std::size_t>(dims.classes));
    for (int c = 0; c < dims.classes; ++c) {
        const float* row = weights + dims.d2_w + static_cast<std::size_t>(c) * dims.hidden;
        double acc = weights[dims.d2_b + c];
        for (int j = 0; j < dims.hidden; ++j) acc += row[j] * st.hidden_drop[j];
        logits[static_cast<std::size_t>(c)] = acc;
    }
    st.probs = softmax(logits);
}

// Backprop from dL/dlogits; accumulates into grads (same layout as weights).
void backward_impl(const ModelBundle& bundle, const Dims& dims,
                   const ForwardState& st, const std::vector<double>& dlogits,
                   float* grads) {
    const float* weights = bundle.weights.data();

    std::vector<float> dhidden(static_cast<std::size_t>(dims.hidden), 0.0f);
    for (int c = 0; c < dims.classes; ++c) {
        const float g = static_cast<float>(dlogits[static_cast<std::size_t>(c)]);
        const float* row = weights + dims.d2_w + static_cast<std::size_t>(c) * dims.hidden;
        float* drow = grads + dims.d2_w + static_cast<std::size_t>(c) * dims.hidden;
        for (int j = 0; j < dims.hidden; ++j) {
            drow[j] += g * st.hidden_drop[j];
            dhidden[j] += g * row[j];
        }
        grads[dims.d2_b + c] += g;
    }

    // Back through dropout then relu.
    for (int j = 0; j < dims.hidden; ++j) {
        dhidden[j] *= st.drop_scale[j];
        if (st.hidden_relu[j] <= 0.0f) dhidden[j] = 0.0f;
    }

    const float* flat =
        dims.blocks.empty() ? st.input.data() : st.pooled.back().data();
    std::vector<float> dflat(dims.flat, 0.0f);
    for (int j = 0; j < dims.hidden; ++j) {
        const float g = dhidden[j];
        if (g == 0.0f) continue;
        const float* row = weights + dims.d1_w + static_cast<std::size_t>(j) * dims.flat;
        float* drow = grads + dims.d1_w + static_cast<std::size_t>(j) * dims.flat;
        for (std::size_t i = 0; i < dims.flat; ++i) {
            drow[i] += g * flat[i];
            dflat[i] += g * row[i];
        }
        grads[dims.d1_b + j] += g;
    }

    // Walk the conv blocks backwards.
    std::vector<float> dpool = std::move(dflat);
    for (std::size_t bi = dims.blocks.size(); bi-- > 0;) {
        const auto& bd = dims.blocks[bi];
        std::vector<float> dconv(st.conv_act[bi].size(), 0.0f);
        for (std::size_t i = 0; i < dpool.size(); ++i) {
            dconv[static_cast<std::size_t>(st.argmax[bi][i])] += dpool[i];
        }
        for (std::size_t i = 0; i < dconv.size(); ++i) {
            if (st.conv_act[bi][i] <= 0.0f) dconv[i] = 0.0f;
        }

        const float* block_in =
            bi == 0 ? st.input.data() : st.pooled[bi - 1].data();
        const bool need_din = bi > 0;
        std::vector<float> din;
        if (need_din) {
            din.assign(static_cast<std::size_t>(bd.in_ch) * bd.h * bd.w, 0.0f);
        }
        conv_same_3x3_backward(block_in, bd.in_ch, bd.h, bd.w,
                               weights + bd.w_off, bd.out_ch, dconv.data(),
                               need_din ? din.data() : nullptr,
                               grads + bd.w_off, grads + bd.b_off);
        dpool = std::move(din);
    }
}

void check_bundle(const ModelBundle& bundle, const Dims& dims) {
    if (!bundle.config.valid()) {
        throw ShapeMismatch("model config pools below 1x1");
    }
    if (bundle.weights.size() != dims.total) {
        throw WeightCountMismatch("bundle weight count does not match config");
    }
}

}  // namespace

std::size_t ModelConfig::weight_count() const { return compute_dims(*this).total; }

bool ModelConfig::valid() const {
    if (conv_channels.empty() || hidden_units < 1 || n_classes < 2 ||
        n_classes > 3 || dropout_rate < 0.0 || dropout_rate >= 1.0 ||
        input_rows < 1 || input_cols < 1) {
        return false;
    }
    int h = static_cast<int>(input_rows), w = static_cast<int>(input_cols);
    for (std::size_t i = 0; i < conv_channels.size(); ++i) {
        if (conv_channels[i] < 1) return false;
        h /= 2;
        w /= 2;
        if (h < 1 || w < 1) return false;
    }
    return true;
}

ModelBundle init_bundle(const ModelConfig& config, std::uint64_t seed) {
    if (!config.valid()) throw ShapeMismatch("invalid model config");
    Dims dims = compute_dims(config);

    ModelBundle bundle;
    bundle.config = config;
    bundle.weights.assign(dims.total, 0.0f);

    std::mt19937_64 rng(mix(seed, 0xC0FFEEULL));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto& bd : dims.blocks) {
        const double std_dev = std::sqrt(2.0 / (bd.in_ch * 9.0));
        for (std::size_t i = 0; i < static_cast<std::size_t>(bd.out_ch) * bd.in_ch * 9; ++i) {
            bundle.weights[bd.w_off + i] = static_cast<float>(normal(rng) * std_dev);
        }
    }
    const double d1_std = std::sqrt(2.0 / static_cast<double>(dims.flat));
    for (std::size_t i = 0; i < static_cast<std::size_t>(dims.hidden) * dims.flat; ++i) {
        bundle.weights[dims.d1_w + i] = static_cast<float>(normal(rng) * d1_std);
    }
    const double d2_std = std::sqrt(1.0 / static_cast<double>(dims.hidden));
    for (std::size_t i = 0; i < static_cast<std::size_t>(dims.classes) * dims.hidden; ++i) {
        bundle.weights[dims.d2_w + i] = static_cast<float>(normal(rng) * d2_std);
    }
    bundle.config.input_rows = config.input_rows;
    return bundle;
}

std::vector<double> forward(const ModelBundle& bundle, const MelFeature& feature,
                            bool training, std::uint64_t rng_seed) {
    Dims dims = compute_dims(bundle.config);
    check_bundle(bundle, dims);
    ForwardState st;
    forward_impl(bundle, dims, feature.image(bundle.feature_config), training,
                 mix(rng_seed, 0), st);
    return st.probs;
}

std::pair<double, std::vector<float>> loss_and_gradients(
    const ModelBundle& bundle, const std::vector<TrainSample>& batch,
    std::uint64_t rng_seed, bool training) {
    if (batch.empty()) throw EmptyInput("empty batch");
    Dims dims = compute_dims(bundle.config);
    check_bundle(bundle, dims);

    std::vector<float> grads(dims.total, 0.0f);
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    ForwardState st;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& sample = batch[i];
        if (sample.label < 0 || sample.label >= dims.classes) {
            throw ShapeMismatch("label out of range");
        }
        forward_impl(bundle, dims, sample.feature.image(bundle.feature_config),
                     training, mix(rng_seed, i), st);
        const double p = std::max(st.probs[static_cast<std::size_t>(sample.label)], 1e-12);
        loss -= std::log(p) * inv_n;

        std::vector<double> dlogits(st.probs);
        dlogits[static_cast<std::size_t>(sample.label)] -= 1.0;
        for (auto& g : dlogits) g *= inv_n;
        backward_impl(bundle, dims, st, dlogits, grads.data());
    }
    return {loss, std::move(grads)};
}

std::pair<ModelBundle, TrainHistory> train(
    const std::vector<TrainSample>& train_set,
    const std::vector<TrainSample>& val_set, const ModelConfig& model_cfg,
    const TrainConfig& train_cfg) {
    if (train_set.empty() || val_set.empty()) {
        throw EmptyInput("train and validation splits must be nonempty");
    }
    bool seen[3] = {false, false, false};
    for (const auto& s : train_set) {
        if (s.label < 0 || s.label >= model_cfg.n_classes) {
            throw ShapeMismatch("label out of range");
        }
        seen[s.label] = true;
    }
    int distinct = 0;
    for (bool b : seen) distinct += b ? 1 : 0;
    if (distinct < 2) throw SingleClass("training split has a single class");

    ModelBundle bundle = init_bundle(model_cfg, train_cfg.seed);
    Dims dims = compute_dims(model_cfg);

    std::vector<double> m, v, vel;
    if (train_cfg.optimizer == TrainConfig::Optimizer::adam) {
        m.assign(dims.total, 0.0);
        v.assign(dims.total, 0.0);
    } else {
        vel.assign(dims.total, 0.0);
    }
    long step = 0;

    TrainHistory history;
    std::vector<float> best_weights = bundle.weights;
    double best_acc = -1.0;

    std::mt19937_64 shuffle_rng(mix(train_cfg.seed, 0x5A0FFULL));
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const int batch_size = std::max(1, train_cfg.batch_size);

    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        std::size_t counted = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(batch_size));
            std::vector<TrainSample> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const TrainSample& src = train_set[order[i]];
                if (train_cfg.augment.enabled) {
                    TrainSample aug;
                    aug.label = src.label;
                    const double fill = *std::min_element(
                        src.feature.matrix.v.begin(), src.feature.matrix.v.end());
                    aug.feature = augment(
                        src.feature,
                        mix(train_cfg.seed, (static_cast<std::uint64_t>(epoch) << 32) ^ order[i]),
                        train_cfg.augment, fill);
                    batch.push_back(std::move(aug));
                } else {
                    batch.push_back(src);
                }
            }

            auto [loss, grads] = loss_and_gradients(
                bundle, batch,
                mix(train_cfg.seed, 0xD0ULL + static_cast<std::uint64_t>(step)), true);
            if (!std::isfinite(loss)) {
                throw DivergedLoss("training loss became non-finite");
            }
            epoch_loss += loss * static_cast<double>(batch.size());
            counted += batch.size();

            ++step;
            if (train_cfg.optimizer == TrainConfig::Optimizer::adam) {
                const double b1 = train_cfg.beta1, b2 = train_cfg.beta2;
                const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step));
                const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step));
                for (std::size_t i = 0; i < dims.total; ++i) {
                    const double g = grads[i];
                    m[i] = b1 * m[i] + (1.0 - b1) * g;
                    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                    bundle.weights[i] -= static_cast<float>(
                        train_cfg.learning_rate * (m[i] / bc1) /
                        (std::sqrt(v[i] / bc2) + 1e-8));
                }
            } else {
                for (std::size_t i = 0; i < dims.total; ++i) {
                    vel[i] = train_cfg.momentum * vel[i] -
                             train_cfg.learning_rate * grads[i];
                    bundle.weights[i] += static_cast<float>(vel[i]);
                }
            }
            for (float wv : bundle.weights) {
                if (!std::isfinite(wv)) {
                    throw DivergedLoss("weights became non-finite");
                }
            }
        }
        history.train_loss.push_back(epoch_loss / static_cast<double>(counted));

        double val_loss = 0.0;
        std::size_t correct = 0;
        ForwardState st;
        for (const auto& s : val_set) {
            forward_impl(bundle, dims, s.feature.image(bundle.feature_config),
                         false, 0, st);
            const double p =
                std::max(st.probs[static_cast<std::size_t>(s.label)], 1e-12);
            val_loss -= std::log(p);
            int predicted;
            if (dims.classes == 2) {
                predicted = st.probs[1] >= bundle.decision_threshold ? 1 : 0;
            } else {
                predicted = static_cast<int>(
                    std::max_element(st.probs.begin(), st.probs.end()) -
                    st.probs.begin());
            }
            if (predicted == s.label) ++correct;
        }
        history.val_loss.push_back(val_loss / static_cast<double>(val_set.size()));
        history.val_accuracy.push_back(static_cast<double>(correct) /
                                       static_cast<double>(val_set.size()));

        if (history.val_accuracy.back() > best_acc) {
            best_acc = history.val_accuracy.back();
            best_weights = bundle.weights;
            history.best_epoch = epoch;
        }
    }

    bundle.weights = std::move(best_weights);
    return {std::move(bundle), std::move(history)};
}

Prediction predict(const ModelBundle& bundle, const MelFeature& feature) {
    std::vector<double> probs = forward(bundle, feature, false, 0);
    Prediction pred;
    pred.score = probs.back();
    if (bundle.config.n_classes == 2) {
        pred.label = pred.score >= bundle.decision_threshold ? 1 : 0;
    } else {
        pred.label = static_cast<int>(
            std::max_element(probs.begin(), probs.end()) - probs.begin());
    }
    return pred;
}

Aggregate aggregate_recording(const std::vector<double>& scores,
                              AggregatePolicy policy, double threshold) {
    if (scores.empty()) throw EmptyScores("no chunk scores to aggregate");
    Aggregate agg;
    switch (policy) {
        case AggregatePolicy::mean: {
            double sum = 0.0;
            for (double s : scores) sum += s;
            agg.score = sum / static_cast<double>(scores.size());
            break;
        }
        case AggregatePolicy::max:
            agg.score = *std::max_element(scores.begin(), scores.end());
            break;
        case AggregatePolicy::majority: {
            std::size_t pos = 0;
            for (double s : scores) {
                if (s >= threshold) ++pos;
            }
            agg.score = static_cast<double>(pos) / static_cast<double>(scores.size());
            break;
        }
    }
    agg.positive = agg.score >= threshold;
    return agg;
}

namespace {

std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

std::string join_reals(const double* v, std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) s += ',';
        s += fmt_real(v[i]);
    }
    return s;
}

std::string config_text(const ModelBundle& b) {
    std::map<std::string, std::string> kv;
    kv["conv_channels"] = join_ints(b.config.conv_channels);
    kv["decision_threshold"] = fmt_real(b.decision_threshold);
    kv["dropout_rate"] = fmt_real(b.config.dropout_rate);
    kv["feature.fft_size"] = std::to_string(b.feature_config.fft_size);
    kv["feature.fmax_hz"] = fmt_real(b.feature_config.fmax_hz);
    kv["feature.fmin_hz"] = fmt_real(b.feature_config.fmin_hz);
    kv["feature.frame_len"] = std::to_string(b.feature_config.frame_len);
    kv["feature.hop"] = std::to_string(b.feature_config.hop);
    kv["feature.log_floor"] = fmt_real(b.feature_config.log_floor);
    kv["feature.n_mels"] = std::to_string(b.feature_config.n_mels);
    kv["feature.n_mfcc"] = std::to_string(b.feature_config.n_mfcc);
    kv["feature.use_mfcc"] = b.feature_config.use_mfcc ? "1" : "0";
    kv["feature_mean"] = fmt_real(b.feature_stats.mean);
    kv["feature_std"] = fmt_real(b.feature_stats.std_dev);
    kv["gate_threshold"] = fmt_real(b.gate.decision_threshold);
    kv["gate_weights"] = join_reals(b.gate.weights.data(), b.gate.weights.size());
    kv["hidden_units"] = std::to_string(b.config.hidden_units);
    kv["input_cols"] = std::to_string(b.config.input_cols);
    kv["input_rows"] = std::to_string(b.config.input_rows);
    kv["n_classes"] = std::to_string(b.config.n_classes);
    kv["preprocess.gate_over_subtraction"] = fmt_real(b.preprocess.gate_over_subtraction);
    kv["preprocess.noise_floor_percentile"] = fmt_real(b.preprocess.noise_floor_percentile);
    kv["preprocess.snr_denoise_threshold_db"] = fmt_real(b.preprocess.snr_denoise_threshold_db);
    kv["preprocess.spectral_floor"] = fmt_real(b.preprocess.spectral_floor);
    kv["preprocess.target_peak"] = fmt_real(b.preprocess.target_peak);
    kv["preprocess.target_rate_hz"] = std::to_string(b.preprocess.target_rate_hz);

    std::string text;
    for (const auto& [k, val] : kv) {
        text += k;
        text += '=';
        text += val;
        text += '\n';
    }
    return text;
}

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw TruncatedFile(std::string("bundle ended before ") + what);
    }
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

std::map<std::string, std::string> parse_kv(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

const std::string& need(const std::map<std::string, std::string>& kv,
                        const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error("bundle missing key: " + key);
    return it->second;
}

std::vector<double> split_reals(const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::strtod(tok.c_str(), nullptr));
    return out;
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const std::string& path) {
    Dims dims = compute_dims(bundle.config);
    if (bundle.weights.size() != dims.total) {
        throw WeightCountMismatch("bundle weight count does not match config");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open for write: " + path);

    out.write("CGHM", 4);
    put_u32(out, bundle.format_version);
    const std::string text = config_text(bundle);
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    put_u32(out, static_cast<std::uint32_t>(bundle.weights.size()));
    for (float w : bundle.weights) {
        std::uint32_t bits;
        std::memcpy(&bits, &w, 4);
        put_u32(out, bits);
    }
    if (!out) throw IoFailure("write failed: " + path);
}

ModelBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open: " + path);

    char magic[4];
    if (!in.read(magic, 4)) throw TruncatedFile("bundle file too short");
    if (std::memcmp(magic, "CGHM", 4) != 0) {
        throw BadMagic("not a model bundle: " + path);
    }
    const std::uint32_t version = get_u32(in, "version");
    if (version != 1) {
        throw VersionUnsupported("bundle format version " + std::to_string(version));
    }
    const std::uint32_t text_len = get_u32(in, "config length");
    std::string text(text_len, '\0');
    if (!in.read(text.data(), text_len)) {
        throw TruncatedFile("bundle ended inside config block");
    }
    auto kv = parse_kv(text);

    ModelBundle b;
    b.format_version = version;
    b.config.conv_channels = split_ints(need(kv, "conv_channels"));
    b.decision_threshold = std::strtod(need(kv, "decision_threshold").c_str(), nullptr);
    b.config.dropout_rate = std::strtod(need(kv, "dropout_rate").c_str(), nullptr);
    b.config.hidden_units = std::stoi(need(kv, "hidden_units"));
    b.config.input_cols = static_cast<std::size_t>(std::stoul(need(kv, "input_cols")));
    b.config.input_rows = static_cast<std::size_t>(std::stoul(need(kv, "input_rows")));
    b.config.n_classes = std::stoi(need(kv, "n_classes"));
    b.feature_config.fft_size = std::stoi(need(kv, "feature.fft_size"));
    b.feature_config.fmax_hz = std::strtod(need(kv, "feature.fmax_hz").c_str(), nullptr);
    b.feature_config.fmin_hz = std::strtod(need(kv, "feature.fmin_hz").c_str(), nullptr);
    b.feature_config.frame_len = std::stoi(need(kv, "feature.frame_len"));
    b.feature_config.hop = std::stoi(need(kv, "feature.hop"));
    b.feature_config.log_floor = std::strtod(need(kv, "feature.log_floor").c_str(), nullptr);
    b.feature_config.n_mels = std::stoi(need(kv, "feature.n_mels"));
    b.feature_config.n_mfcc = std::stoi(need(kv, "feature.n_mfcc"));
    b.feature_config.use_mfcc = need(kv, "feature.use_mfcc") == "1";
    b.feature_stats.mean = std::strtod(need(kv, "feature_mean").c_str(), nullptr);
    b.feature_stats.std_dev = std::strtod(need(kv, "feature_std").c_str(), nullptr);
    b.gate.decision_threshold = std::strtod(need(kv, "gate_threshold").c_str(), nullptr);
    auto gw = split_reals(need(kv, "gate_weights"));
    if (gw.size() != b.gate.weights.size()) {
        throw Error("bundle gate weight count unexpected");
    }
    std::copy(gw.begin(), gw.end(), b.gate.weights.begin());
    b.preprocess.gate_over_subtraction =
        std::strtod(need(kv, "preprocess.gate_over_subtraction").c_str(), nullptr);
    b.preprocess.noise_floor_percentile =
        std::strtod(need(kv, "preprocess.noise_floor_percentile").c_str(), nullptr);
    b.preprocess.snr_denoise_threshold_db =
        std::strtod(need(kv, "preprocess.snr_denoise_threshold_db").c_str(), nullptr);
    b.preprocess.spectral_floor =
        std::strtod(need(kv, "preprocess.spectral_floor").c_str(), nullptr);
    b.preprocess.target_peak =
        std::strtod(need(kv, "preprocess.target_peak").c_str(), nullptr);
    b.preprocess.target_rate_hz = std::stoi(need(kv, "preprocess.target_rate_hz"));

    const std::uint32_t stored_count = get_u32(in, "weight count");
    const std::size_t expected = b.config.weight_count();
    if (stored_count != expected) {
        throw WeightCountMismatch("bundle holds " + std::to_string(stored_count) +
                                  " weights, config needs " +
                                  std::to_string(expected));
    }
    b.weights.resize(expected);
    for (auto& w : b.weights) {
        std::uint32_t bits;
        unsigned char raw[4];
        if (!in.read(reinterpret_cast<char*>(raw), 4)) {
            throw WeightCountMismatch("bundle weight data truncated");
        }
        bits = static_cast<std::uint32_t>(raw[0]) |
               (static_cast<std::uint32_t>(raw[1]) << 8) |
               (static_cast<std::uint32_t>(raw[2]) << 16) |
               (static_cast<std::uint32_t>(raw[3]) << 24);
        std::memcpy(&w, &bits, 4);
    }
    for (float w : b.weights) {
        if (!std::isfinite(w)) throw Error("bundle holds non-finite weights");
    }
    return b;
}

void save_history_csv(const TrainHistory& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot open for write: " + path);
    out << "epoch,train_loss,val_loss,val_accuracy\n";
    for (std::size_t i = 0; i < history.train_loss.size(); ++i) {
        out << i << ',' << fmt_real(history.train_loss[i]) << ','
            << fmt_real(history.val_loss[i]) << ','
            << fmt_real(history.val_accuracy[i]) << '\n';
    }
}

}  // namespace cough
