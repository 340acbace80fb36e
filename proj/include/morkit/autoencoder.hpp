#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "morkit/dense.hpp"
#include "morkit/errors.hpp"
#include "morkit/rng.hpp"
#include "morkit/snapshots.hpp"

namespace mor {

enum class LossKind { vanilla, sparse, contractive };

inline std::string to_string(LossKind k) {
    switch (k) {
        case LossKind::vanilla: return "vanilla";
        case LossKind::sparse: return "sparse";
        case LossKind::contractive: return "contractive";
    }
    return "?";
}

struct TrainConfig {
    double learning_rate = 1e-2;
    std::size_t epochs = 20000;
    std::size_t batch = 0;          // 0 = full batch
    std::uint64_t seed = 12345;
    double init_gain = 1.0;         // weights ~ U(-g/sqrt(fan_in), g/sqrt(fan_in))
    double norm_floor_rel = 1e-2;   // relative floor on per-feature half-ranges

    void validate() const {
        if (!(learning_rate > 0.0)) throw ValidationError("TrainConfig: learning_rate must be positive");
        if (epochs < 1) throw ValidationError("TrainConfig: epochs must be >= 1");
    }
};

/// Per-feature affine scaling of inputs into [-1, 1], fit on the training
/// range. Features whose range is below floor_rel of the largest half-range
/// keep a proportionally smaller image; amplifying vanishing-range features
/// to full scale destroys the training signal.
struct FeatureScaler {
    Vector center, half_range;

    static FeatureScaler fit(const DenseMatrix& data, double floor_rel) {
        FeatureScaler s;
        const std::size_t dim = data.cols();
        s.center.resize(dim);
        s.half_range.resize(dim);
        double biggest = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            double lo = data(0, d), hi = data(0, d);
            for (std::size_t i = 1; i < data.rows(); ++i) {
                lo = std::min(lo, data(i, d));
                hi = std::max(hi, data(i, d));
            }
            s.center[d] = 0.5 * (lo + hi);
            s.half_range[d] = 0.5 * (hi - lo);
            biggest = std::max(biggest, s.half_range[d]);
        }
        const double floor = floor_rel * biggest;
        for (auto& h : s.half_range) h = std::max(h, floor > 0.0 ? floor : 1.0);
        return s;
    }

    Vector normalize(std::span<const double> u) const {
        Vector out(u.size());
        for (std::size_t d = 0; d < u.size(); ++d) out[d] = (u[d] - center[d]) / half_range[d];
        return out;
    }

    Vector denormalize(std::span<const double> v) const {
        Vector out(v.size());
        for (std::size_t d = 0; d < v.size(); ++d) out[d] = center[d] + half_range[d] * v[d];
        return out;
    }
};

namespace detail {

struct Layer {
    DenseMatrix w;  // out x in
    Vector b;
};

}  // namespace detail

/*
 * tanh encoder-decoder D -> D/2 -> N -> D/2 -> D. The latent layer is tanh
 * as well; only the output layer is linear. Loss variants add either an L1
 * penalty on the latent activations or the squared Frobenius norm of the
 * encoder Jacobian.
 */
struct AutoencoderModel {
    std::vector<std::size_t> layer_dims;  // {D, D/2, N, D/2, D}
    std::vector<detail::Layer> layers;    // 4 affine layers
    LossKind loss_kind = LossKind::vanilla;
    double lambda_reg = 1e-4;
    FeatureScaler scaler;

    static AutoencoderModel create(std::size_t input_dim, std::size_t latent_dim,
                                   LossKind kind = LossKind::vanilla, double lambda = 1e-4) {
        if (input_dim < 2) throw ValidationError("AutoencoderModel: input_dim must be >= 2");
        if (latent_dim < 1) throw ValidationError("AutoencoderModel: latent_dim must be >= 1");
        const std::size_t hidden = std::max<std::size_t>(1, input_dim / 2);
        AutoencoderModel m;
        m.layer_dims = {input_dim, hidden, latent_dim, hidden, input_dim};
        m.loss_kind = kind;
        m.lambda_reg = lambda;
        for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
            detail::Layer layer;
            layer.w = DenseMatrix(m.layer_dims[l + 1], m.layer_dims[l]);
            layer.b.assign(m.layer_dims[l + 1], 0.0);
            m.layers.push_back(std::move(layer));
        }
        m.scaler.center.assign(input_dim, 0.0);
        m.scaler.half_range.assign(input_dim, 1.0);
        return m;
    }

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t latent_dim() const { return layer_dims[2]; }

    void init_weights(std::uint64_t seed, double gain) {
        SplitMix64 rng(seed);
        for (auto& layer : layers) {
            const double s = gain / std::sqrt(static_cast<double>(layer.w.cols()));
            for (auto& v : layer.w.data()) v = rng.uniform(-s, s);
            for (auto& v : layer.b) v = rng.uniform(-s, s);
        }
    }
};

struct ForwardCache {
    Vector input;          // normalized input
    Vector pre1, a1;       // encoder hidden
    Vector pre2, z;        // latent
    Vector pre3, a3;       // decoder hidden
    Vector output;         // linear reconstruction (normalized space)
};

inline ForwardCache forward(const AutoencoderModel& model, std::span<const double> u_normalized) {
    if (u_normalized.size() != model.input_dim())
        throw ValidationError("forward: input dimension mismatch");
    ForwardCache c;
    c.input.assign(u_normalized.begin(), u_normalized.end());

    auto affine = [](const detail::Layer& l, const Vector& in) {
        Vector out = l.b;
        for (std::size_t r = 0; r < l.w.rows(); ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < l.w.cols(); ++k) s += l.w(r, k) * in[k];
            out[r] += s;
        }
        return out;
    };
    auto tanh_of = [](const Vector& v) {
        Vector out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
        return out;
    };

    c.pre1 = affine(model.layers[0], c.input);
    c.a1 = tanh_of(c.pre1);
    c.pre2 = affine(model.layers[1], c.a1);
    c.z = tanh_of(c.pre2);
    c.pre3 = affine(model.layers[2], c.z);
    c.a3 = tanh_of(c.pre3);
    c.output = affine(model.layers[3], c.a3);
    return c;
}

/// Squared Frobenius norm of the encoder Jacobian dz/du at the cached point.
inline double encoder_jacobian_frob2(const AutoencoderModel& model, const ForwardCache& c) {
    const auto& w1 = model.layers[0].w;
    const auto& w2 = model.layers[1].w;
    const std::size_t n_lat = w2.rows(), hid = w1.rows(), dim = w1.cols();
    double total = 0.0;
    for (std::size_t k = 0; k < n_lat; ++k) {
        const double s2 = 1.0 - c.z[k] * c.z[k];
        for (std::size_t d = 0; d < dim; ++d) {
            double j = 0.0;
            for (std::size_t h = 0; h < hid; ++h)
                j += w2(k, h) * (1.0 - c.a1[h] * c.a1[h]) * w1(h, d);
            total += s2 * j * s2 * j;
        }
    }
    return total;
}

/// Mean over the batch of ||u - reconstruction||^2 plus the variant term.
/// Rows of `batch` are expected in normalized coordinates.
inline double loss(const AutoencoderModel& model, const DenseMatrix& batch) {
    if (batch.rows() == 0) throw ValidationError("loss: empty batch");
    double acc = 0.0;
    for (std::size_t i = 0; i < batch.rows(); ++i) {
        ForwardCache c = forward(model, batch.row(i));
        for (std::size_t d = 0; d < c.output.size(); ++d) {
            const double e = c.output[d] - c.input[d];
            acc += e * e;
        }
        if (model.loss_kind == LossKind::sparse) {
            double l1 = 0.0;
            for (double z : c.z) l1 += std::abs(z);
            acc += model.lambda_reg * l1 / static_cast<double>(c.z.size());
        } else if (model.loss_kind == LossKind::contractive) {
            acc += model.lambda_reg * encoder_jacobian_frob2(model, c);
        }
    }
    return acc / static_cast<double>(batch.rows());
}

struct Gradients {
    std::vector<DenseMatrix> w;
    std::vector<Vector> b;

    static Gradients zeros_like(const AutoencoderModel& model) {
        Gradients g;
        for (const auto& layer : model.layers) {
            g.w.emplace_back(layer.w.rows(), layer.w.cols());
            g.b.emplace_back(layer.b.size(), 0.0);
        }
        return g;
    }
};

namespace detail {

/// Adds the gradient of lambda * ||dz/du||_F^2 for one sample.
inline void accumulate_contractive(const AutoencoderModel& model, const ForwardCache& c,
                                   double scale, Gradients& g) {
    const auto& w1 = model.layers[0].w;
    const auto& w2 = model.layers[1].w;
    const std::size_t n_lat = w2.rows(), hid = w1.rows(), dim = w1.cols();

    Vector s1(hid), s2(n_lat);
    for (std::size_t h = 0; h < hid; ++h) s1[h] = 1.0 - c.a1[h] * c.a1[h];
    for (std::size_t k = 0; k < n_lat; ++k) s2[k] = 1.0 - c.z[k] * c.z[k];

    // R = W2 diag(s1) W1, J = diag(s2) R, F = sum_k s2_k^2 ||R_k||^2
    DenseMatrix r(n_lat, dim);
    for (std::size_t k = 0; k < n_lat; ++k)
        for (std::size_t d = 0; d < dim; ++d) {
            double s = 0.0;
            for (std::size_t h = 0; h < hid; ++h) s += w2(k, h) * s1[h] * w1(h, d);
            r(k, d) = s;
        }

    Vector row_norm2(n_lat, 0.0);
    for (std::size_t k = 0; k < n_lat; ++k)
        for (std::size_t d = 0; d < dim; ++d) row_norm2[k] += r(k, d) * r(k, d);

    // dF/dR = 2 diag(s2^2) R
    DenseMatrix gr(n_lat, dim);
    for (std::size_t k = 0; k < n_lat; ++k)
        for (std::size_t d = 0; d < dim; ++d) gr(k, d) = 2.0 * s2[k] * s2[k] * r(k, d);

    // explicit parts through R
    for (std::size_t k = 0; k < n_lat; ++k)
        for (std::size_t h = 0; h < hid; ++h) {
            double s = 0.0;
            for (std::size_t d = 0; d < dim; ++d) s += gr(k, d) * w1(h, d);
            g.w[1](k, h) += scale * s * s1[h];
        }
    DenseMatrix gw1_explicit(hid, dim);
    for (std::size_t h = 0; h < hid; ++h)
        for (std::size_t d = 0; d < dim; ++d) {
            double s = 0.0;
            for (std::size_t k = 0; k < n_lat; ++k) s += w2(k, h) * gr(k, d);
            gw1_explicit(h, d) = s1[h] * s;
            g.w[0](h, d) += scale * gw1_explicit(h, d);
        }

    // dF/ds1_h = [W2^T gr W1^T]_hh ; dF/ds2_k = 2 s2_k ||R_k||^2
    Vector gs1(hid, 0.0);
    for (std::size_t h = 0; h < hid; ++h) {
        double s = 0.0;
        for (std::size_t k = 0; k < n_lat; ++k)
            for (std::size_t d = 0; d < dim; ++d) s += w2(k, h) * gr(k, d) * w1(h, d);
        gs1[h] = s;
    }

    // chain through s2 -> pre2 and s1 -> pre1
    Vector gq(n_lat);
    for (std::size_t k = 0; k < n_lat; ++k)
        gq[k] = 2.0 * s2[k] * row_norm2[k] * (-2.0 * c.z[k] * s2[k]);
    for (std::size_t k = 0; k < n_lat; ++k) {
        for (std::size_t h = 0; h < hid; ++h) g.w[1](k, h) += scale * gq[k] * c.a1[h];
        g.b[1][k] += scale * gq[k];
    }
    Vector ga1(hid, 0.0);
    for (std::size_t h = 0; h < hid; ++h)
        for (std::size_t k = 0; k < n_lat; ++k) ga1[h] += w2(k, h) * gq[k];
    for (std::size_t h = 0; h < hid; ++h) {
        const double gp = gs1[h] * (-2.0 * c.a1[h] * s1[h]) + ga1[h] * s1[h];
        for (std::size_t d = 0; d < dim; ++d) g.w[0](h, d) += scale * gp * c.input[d];
        g.b[0][h] += scale * gp;
    }
}

}  // namespace detail

/// Exact gradients of loss() for every parameter, all three loss kinds.
inline Gradients gradient(const AutoencoderModel& model, const DenseMatrix& batch) {
    if (batch.rows() == 0) throw ValidationError("gradient: empty batch");
    Gradients g = Gradients::zeros_like(model);
    const double inv_n = 1.0 / static_cast<double>(batch.rows());

    for (std::size_t i = 0; i < batch.rows(); ++i) {
        ForwardCache c = forward(model, batch.row(i));
        const std::size_t dim = c.input.size();

        Vector delta(dim);  // d loss / d output
        for (std::size_t d = 0; d < dim; ++d) delta[d] = 2.0 * (c.output[d] - c.input[d]) * inv_n;

        // output layer (linear)
        for (std::size_t r = 0; r < model.layers[3].w.rows(); ++r) {
            for (std::size_t k = 0; k < model.layers[3].w.cols(); ++k)
                g.w[3](r, k) += delta[r] * c.a3[k];
            g.b[3][r] += delta[r];
        }
        Vector ga3(model.layers[3].w.cols(), 0.0);
        for (std::size_t k = 0; k < ga3.size(); ++k)
            for (std::size_t r = 0; r < model.layers[3].w.rows(); ++r)
                ga3[k] += model.layers[3].w(r, k) * delta[r];

        Vector gp3(ga3.size());
        for (std::size_t k = 0; k < ga3.size(); ++k) gp3[k] = ga3[k] * (1.0 - c.a3[k] * c.a3[k]);
        for (std::size_t r = 0; r < model.layers[2].w.rows(); ++r) {
            for (std::size_t k = 0; k < model.layers[2].w.cols(); ++k)
                g.w[2](r, k) += gp3[r] * c.z[k];
            g.b[2][r] += gp3[r];
        }
        Vector gz(model.layers[2].w.cols(), 0.0);
        for (std::size_t k = 0; k < gz.size(); ++k)
            for (std::size_t r = 0; r < model.layers[2].w.rows(); ++r)
                gz[k] += model.layers[2].w(r, k) * gp3[r];

        if (model.loss_kind == LossKind::sparse) {
            const double lam = model.lambda_reg * inv_n / static_cast<double>(c.z.size());
            for (std::size_t k = 0; k < gz.size(); ++k)
                gz[k] += lam * (c.z[k] > 0.0 ? 1.0 : (c.z[k] < 0.0 ? -1.0 : 0.0));
        }

        Vector gp2(gz.size());
        for (std::size_t k = 0; k < gz.size(); ++k) gp2[k] = gz[k] * (1.0 - c.z[k] * c.z[k]);
        for (std::size_t r = 0; r < model.layers[1].w.rows(); ++r) {
            for (std::size_t k = 0; k < model.layers[1].w.cols(); ++k)
                g.w[1](r, k) += gp2[r] * c.a1[k];
            g.b[1][r] += gp2[r];
        }
        Vector ga1(model.layers[1].w.cols(), 0.0);
        for (std::size_t k = 0; k < ga1.size(); ++k)
            for (std::size_t r = 0; r < model.layers[1].w.rows(); ++r)
                ga1[k] += model.layers[1].w(r, k) * gp2[r];

        Vector gp1(ga1.size());
        for (std::size_t k = 0; k < ga1.size(); ++k) gp1[k] = ga1[k] * (1.0 - c.a1[k] * c.a1[k]);
        for (std::size_t r = 0; r < model.layers[0].w.rows(); ++r) {
            for (std::size_t k = 0; k < model.layers[0].w.cols(); ++k)
                g.w[0](r, k) += gp1[r] * c.input[k];
            g.b[0][r] += gp1[r];
        }

        if (model.loss_kind == LossKind::contractive)
            detail::accumulate_contractive(model, c, model.lambda_reg * inv_n, g);
    }
    return g;
}

struct TrainResult {
    AutoencoderModel model;
    Vector loss_history;  // entry e = loss before update e (history[0] = initial loss)
};

/*
 * Seeded deterministic training. Full-batch fixed-rate gradient descent by
 * default; cfg.batch > 0 switches to deterministic mini-batches over a
 * seeded shuffle. The loss history records the full-batch loss each epoch;
 * divergence past 10x the initial loss aborts.
 */
inline TrainResult train(AutoencoderModel model, const SnapshotSet& set, const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t n = set.size();
    model.scaler = FeatureScaler::fit(set.data, cfg.norm_floor_rel);
    model.init_weights(cfg.seed, cfg.init_gain);

    DenseMatrix batch(n, model.input_dim());
    for (std::size_t i = 0; i < n; ++i) {
        Vector v = model.scaler.normalize(set.data.row(i));
        for (std::size_t d = 0; d < v.size(); ++d) batch(i, d) = v[d];
    }

    TrainResult result;
    result.loss_history.reserve(cfg.epochs + 1);
    const double initial = loss(model, batch);
    result.loss_history.push_back(initial);

    SplitMix64 shuffle_rng(cfg.seed ^ 0x5DEECE66DULL);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    const std::size_t bs = cfg.batch == 0 ? n : std::min(cfg.batch, n);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (bs == n) {
            Gradients g = gradient(model, batch);
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                auto& layer = model.layers[l];
                for (std::size_t k = 0; k < layer.w.data().size(); ++k)
                    layer.w.data()[k] -= cfg.learning_rate * g.w[l].data()[k];
                for (std::size_t k = 0; k < layer.b.size(); ++k)
                    layer.b[k] -= cfg.learning_rate * g.b[l][k];
            }
        } else {
            for (std::size_t i = n - 1; i > 0; --i)
                std::swap(order[i], order[shuffle_rng.below(i + 1)]);
            for (std::size_t start = 0; start < n; start += bs) {
                const std::size_t count = std::min(bs, n - start);
                DenseMatrix mini(count, model.input_dim());
                for (std::size_t i = 0; i < count; ++i)
                    for (std::size_t d = 0; d < model.input_dim(); ++d)
                        mini(i, d) = batch(order[start + i], d);
                Gradients g = gradient(model, mini);
                for (std::size_t l = 0; l < model.layers.size(); ++l) {
                    auto& layer = model.layers[l];
                    for (std::size_t k = 0; k < layer.w.data().size(); ++k)
                        layer.w.data()[k] -= cfg.learning_rate * g.w[l].data()[k];
                    for (std::size_t k = 0; k < layer.b.size(); ++k)
                        layer.b[k] -= cfg.learning_rate * g.b[l][k];
                }
            }
        }
        const double current = loss(model, batch);
        result.loss_history.push_back(current);
        if (!std::isfinite(current) || current > 10.0 * initial + 1e-12)
            throw NumericalError("train: diverged at epoch " + std::to_string(epoch) +
                                 " (loss " + std::to_string(current) + "); use a smaller learning_rate");
    }
    if (result.loss_history.back() > result.loss_history.front())
        throw NumericalError("train: final loss above initial loss; use a smaller learning_rate");
    result.model = std::move(model);
    return result;
}

/// Encode/decode one raw-space snapshot through the trained model.
inline Vector autoencode(const AutoencoderModel& model, std::span<const double> u_raw) {
    Vector v = model.scaler.normalize(u_raw);
    ForwardCache c = forward(model, v);
    return model.scaler.denormalize(c.output);
}

inline Vector encode(const AutoencoderModel& model, std::span<const double> u_raw) {
    Vector v = model.scaler.normalize(u_raw);
    return forward(model, v).z;
}

// ---- checkpoint I/O: self-describing text, bitwise round trip ----

inline void save_checkpoint(const AutoencoderModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("save_checkpoint: cannot open " + path);
    out << "morkit-autoencoder 1\n";
    out << "layer_dims";
    for (auto d : model.layer_dims) out << ' ' << d;
    out << "\nloss " << to_string(model.loss_kind) << "\nlambda_reg "
        << detail::fmt17(model.lambda_reg) << '\n';
    auto dump_vec = [&](const Vector& v) {
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << detail::fmt17(v[i]);
        out << '\n';
    };
    out << "scaler_center\n";
    dump_vec(model.scaler.center);
    out << "scaler_half_range\n";
    dump_vec(model.scaler.half_range);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        out << "layer " << l << " weight " << model.layers[l].w.rows() << ' '
            << model.layers[l].w.cols() << '\n';
        for (std::size_t r = 0; r < model.layers[l].w.rows(); ++r) {
            for (std::size_t c = 0; c < model.layers[l].w.cols(); ++c)
                out << (c ? " " : "") << detail::fmt17(model.layers[l].w(r, c));
            out << '\n';
        }
        out << "layer " << l << " bias " << model.layers[l].b.size() << '\n';
        dump_vec(model.layers[l].b);
    }
}

inline AutoencoderModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("load_checkpoint: cannot open " + path);
    std::string word;
    int version = 0;
    in >> word >> version;
    if (word != "morkit-autoencoder" || version != 1)
        throw ValidationError("load_checkpoint: unrecognized format in " + path);

    AutoencoderModel model;
    in >> word;  // layer_dims
    model.layer_dims.resize(5);
    for (auto& d : model.layer_dims) in >> d;
    in >> word;  // loss
    std::string kind;
    in >> kind;
    if (kind == "vanilla") model.loss_kind = LossKind::vanilla;
    else if (kind == "sparse") model.loss_kind = LossKind::sparse;
    else if (kind == "contractive") model.loss_kind = LossKind::contractive;
    else throw ValidationError("load_checkpoint: unknown loss kind " + kind);
    in >> word >> model.lambda_reg;

    const std::size_t dim = model.layer_dims.front();
    in >> word;  // scaler_center
    model.scaler.center.resize(dim);
    for (auto& v : model.scaler.center) in >> v;
    in >> word;  // scaler_half_range
    model.scaler.half_range.resize(dim);
    for (auto& v : model.scaler.half_range) in >> v;

    for (std::size_t l = 0; l < 4; ++l) {
        std::size_t idx, rows, cols, blen;
        in >> word >> idx >> word >> rows >> cols;
        detail::Layer layer;
        layer.w = DenseMatrix(rows, cols);
        for (auto& v : layer.w.data()) in >> v;
        in >> word >> idx >> word >> blen;
        layer.b.resize(blen);
        for (auto& v : layer.b) in >> v;
        model.layers.push_back(std::move(layer));
    }
    if (!in) throw ValidationError("load_checkpoint: truncated file " + path);
    return model;
}

inline void save_loss_history(const Vector& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("save_loss_history: cannot open " + path);
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < history.size(); ++e)
        out << e << ',' << detail::fmt17(history[e]) << '\n';
}

}  // namespace mor
