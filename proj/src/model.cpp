#include "osc/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace osc {

void ModelConfig::validate() const {
    if (input_dim == 0 || hidden_dim == 0 || num_layers == 0 || num_heads == 0 || max_frames == 0)
        throw ValidationError("model dimensions must be positive");
    if (num_classes < 4) throw ValidationError("model needs at least 4 classes");
    if (hidden_dim % num_heads != 0)
        throw ValidationError("hidden_dim " + std::to_string(hidden_dim) +
                              " is not divisible by num_heads " + std::to_string(num_heads));
}

// ---------------------------------------------------------------------------
// Parameter containers

ModelParameters ModelParameters::zeros_like() const {
    ModelParameters out = *this;
    out.for_each([](const std::string&, Matrix& m) { m.setZero(); });
    return out;
}

std::size_t ModelParameters::parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
}

bool ModelParameters::all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const Matrix& m) { ok = ok && m.allFinite(); });
    return ok;
}

namespace {

// Visits matching tensors of two parameter sets in lockstep.
template <typename M, typename A, typename Fn>
void zip(A& a, const ModelParameters& b, Fn&& fn) {
    std::vector<M*> lhs;
    std::vector<const Matrix*> rhs;
    a.for_each([&](const std::string&, M& m) { lhs.push_back(&m); });
    b.for_each([&](const std::string&, const Matrix& m) { rhs.push_back(&m); });
    if (lhs.size() != rhs.size()) throw ValidationError("parameter sets have different layouts");
    for (std::size_t i = 0; i < lhs.size(); ++i) fn(*lhs[i], *rhs[i]);
}

}  // namespace

ModelParameters& ModelParameters::operator+=(const ModelParameters& other) {
    zip<Matrix>(*this, other, [](Matrix& a, const Matrix& b) { a += b; });
    return *this;
}

ModelParameters& ModelParameters::operator*=(double scale) {
    for_each([&](const std::string&, Matrix& m) { m *= scale; });
    return *this;
}

bool ModelParameters::operator==(const ModelParameters& other) const {
    if (blocks.size() != other.blocks.size()) return false;
    bool equal = true;
    zip<const Matrix>(*this, other, [&](const Matrix& a, const Matrix& b) {
        equal = equal && a.rows() == b.rows() && a.cols() == b.cols() && a == b;
    });
    return equal;
}

ModelParameters init_parameters(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    const auto H = static_cast<Eigen::Index>(config.hidden_dim);
    const auto F = static_cast<Eigen::Index>(config.ff_dim());
    const auto D = static_cast<Eigen::Index>(config.input_dim);
    const auto C = static_cast<Eigen::Index>(config.num_classes);

    auto xavier = [&](Eigen::Index fan_in, Eigen::Index fan_out) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Matrix m(fan_in, fan_out);
        // Row-major fill so the draw order does not depend on Eigen's storage.
        for (Eigen::Index i = 0; i < fan_in; ++i)
            for (Eigen::Index j = 0; j < fan_out; ++j) m(i, j) = dist(rng);
        return m;
    };
    auto zeros = [](Eigen::Index n) { return Matrix::Zero(1, n); };
    auto ones = [](Eigen::Index n) { return Matrix::Ones(1, n); };

    ModelParameters p;
    p.proj1_w = xavier(D, H);
    p.proj1_b = zeros(H);
    p.proj2_w = xavier(H, H);
    p.proj2_b = zeros(H);
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        BlockParameters b;
        b.ln1_gain = ones(H);
        b.ln1_bias = zeros(H);
        b.query_w = xavier(H, H);
        b.query_b = zeros(H);
        b.key_w = xavier(H, H);
        b.value_w = xavier(H, H);
        b.value_b = zeros(H);
        b.out_w = xavier(H, H);
        b.out_b = zeros(H);
        b.ln2_gain = ones(H);
        b.ln2_bias = zeros(H);
        b.ff1_w = xavier(H, F);
        b.ff1_b = zeros(F);
        b.ff2_w = xavier(F, H);
        b.ff2_b = zeros(H);
        p.blocks.push_back(std::move(b));
    }
    p.final_ln_gain = ones(H);
    p.final_ln_bias = zeros(H);
    p.head_w = xavier(H, C);
    p.head_b = zeros(C);
    return p;
}

// ---------------------------------------------------------------------------
// Feature plumbing

Matrix concat_object_features(const FeatureSequence& features) {
    if (!features.object) throw ValidationError("object features are missing");
    features.validate();
    Matrix out(features.global.rows(), features.global.cols() + features.object->cols());
    out << features.global, *features.object;
    return out;
}

Matrix positional_embedding(std::size_t frames, std::size_t hidden_dim) {
    if (frames == 0 || hidden_dim == 0) throw ValidationError("positional table needs positive dims");
    Matrix pe(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(hidden_dim));
    for (std::size_t i = 0; 2 * i < hidden_dim; ++i) {
        const double freq =
            std::pow(10000.0, -static_cast<double>(2 * i) / static_cast<double>(hidden_dim));
        for (std::size_t t = 0; t < frames; ++t) {
            const double angle = static_cast<double>(t) * freq;
            const auto row = static_cast<Eigen::Index>(t);
            pe(row, static_cast<Eigen::Index>(2 * i)) = std::sin(angle);
            if (2 * i + 1 < hidden_dim) pe(row, static_cast<Eigen::Index>(2 * i + 1)) = std::cos(angle);
        }
    }
    return pe;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

struct LayerNormCache {
    Matrix normalized;
    Eigen::VectorXd inv_std;
};

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, LayerNormCache* cache) {
    const Eigen::VectorXd mean = x.rowwise().mean();
    Matrix centered = x.colwise() - mean;
    const Eigen::VectorXd var = centered.array().square().rowwise().mean();
    const Eigen::VectorXd inv_std = (var.array() + kLayerNormEps).rsqrt();
    Matrix normalized = centered.array().colwise() * inv_std.array();
    Matrix y = (normalized.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
    if (cache) {
        cache->normalized = std::move(normalized);
        cache->inv_std = inv_std;
    }
    return y;
}

Matrix layer_norm_backward(const Matrix& dy, const LayerNormCache& cache, const Matrix& gain,
                           Matrix& dgain, Matrix& dbias) {
    dgain += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
    dbias += dy.colwise().sum();
    const Matrix dxhat = dy.array().rowwise() * gain.row(0).array();
    const Eigen::VectorXd m1 = dxhat.rowwise().mean();
    const Eigen::VectorXd m2 = (dxhat.array() * cache.normalized.array()).rowwise().mean();
    Matrix dx = dxhat.colwise() - m1;
    dx -= (cache.normalized.array().colwise() * m2.array()).matrix();
    return dx.array().colwise() * cache.inv_std.array();
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
    constexpr double kInvSqrt2Pi = 0.3989422804014327;
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
    Matrix y = x * w;
    y.rowwise() += b.row(0);
    return y;
}

struct BlockCache {
    LayerNormCache ln1;
    Matrix attn_in;  // LN1 output
    Matrix q, k, v;
    std::vector<Matrix> probs;  // per head, T x T
    Matrix heads;               // concatenated head outputs
    LayerNormCache ln2;
    Matrix ff_in;  // LN2 output
    Matrix ff_pre;
    Matrix ff_act;
};

struct ForwardCache {
    Matrix proj_pre;
    Matrix proj_act;
    std::vector<BlockCache> blocks;
    LayerNormCache final_ln;
    Matrix final_out;
};

void check_inputs(const ModelParameters& params, const ModelConfig& config, const Matrix& inputs,
                  std::size_t valid_frames) {
    config.validate();
    if (static_cast<std::size_t>(inputs.cols()) != config.input_dim)
        throw ValidationError("input has width " + std::to_string(inputs.cols()) +
                              ", model expects " + std::to_string(config.input_dim));
    if (inputs.rows() < 1) throw ValidationError("input has no frames");
    if (static_cast<std::size_t>(inputs.rows()) > config.max_frames)
        throw ValidationError("input has " + std::to_string(inputs.rows()) +
                              " frames, model supports at most " + std::to_string(config.max_frames));
    if (valid_frames > static_cast<std::size_t>(inputs.rows()))
        throw ValidationError("valid frame count exceeds input length");
    if (!inputs.allFinite()) throw ValidationError("input has non-finite entries");
    if (params.blocks.size() != config.num_layers ||
        static_cast<std::size_t>(params.proj1_w.rows()) != config.input_dim ||
        static_cast<std::size_t>(params.proj1_w.cols()) != config.hidden_dim ||
        static_cast<std::size_t>(params.head_w.cols()) != config.num_classes)
        throw ValidationError("parameters do not match the model config");
}

Matrix attention(const BlockParameters& b, const ModelConfig& config, const Matrix& x,
                 Eigen::Index valid, BlockCache& c) {
    const auto T = x.rows();
    const auto dh = static_cast<Eigen::Index>(config.head_dim());
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    c.q = affine(x, b.query_w, b.query_b);
    c.k = x * b.key_w;
    c.v = affine(x, b.value_w, b.value_b);
    c.heads.resize(T, x.cols());
    c.probs.resize(config.num_heads);
    for (std::size_t h = 0; h < config.num_heads; ++h) {
        const auto off = static_cast<Eigen::Index>(h) * dh;
        Matrix scores = (c.q.middleCols(off, dh) * c.k.middleCols(off, dh).transpose()) * scale;
        Matrix& p = c.probs[h];
        p.setZero(T, T);
        for (Eigen::Index i = 0; i < T; ++i) {
            const double mx = scores.row(i).head(valid).maxCoeff();
            double sum = 0.0;
            for (Eigen::Index j = 0; j < valid; ++j) {
                p(i, j) = std::exp(scores(i, j) - mx);
                sum += p(i, j);
            }
            p.row(i).head(valid) /= sum;
        }
        c.heads.middleCols(off, dh) = p * c.v.middleCols(off, dh);
    }
    return affine(c.heads, b.out_w, b.out_b);
}

Matrix run_forward(const ModelParameters& params, const ModelConfig& config, const Matrix& inputs,
                   std::size_t valid_frames, ForwardCache& cache) {
    check_inputs(params, config, inputs, valid_frames);
    const auto T = inputs.rows();
    const Eigen::Index valid = valid_frames == 0 ? T : static_cast<Eigen::Index>(valid_frames);

    cache.proj_pre = affine(inputs, params.proj1_w, params.proj1_b);
    cache.proj_act = cache.proj_pre.unaryExpr(&gelu);
    Matrix z = affine(cache.proj_act, params.proj2_w, params.proj2_b);
    z += positional_embedding(static_cast<std::size_t>(T), config.hidden_dim);

    cache.blocks.resize(params.blocks.size());
    for (std::size_t l = 0; l < params.blocks.size(); ++l) {
        const auto& b = params.blocks[l];
        auto& c = cache.blocks[l];
        c.attn_in = layer_norm(z, b.ln1_gain, b.ln1_bias, &c.ln1);
        z += attention(b, config, c.attn_in, valid, c);
        c.ff_in = layer_norm(z, b.ln2_gain, b.ln2_bias, &c.ln2);
        c.ff_pre = affine(c.ff_in, b.ff1_w, b.ff1_b);
        c.ff_act = c.ff_pre.unaryExpr(&gelu);
        z += affine(c.ff_act, b.ff2_w, b.ff2_b);
    }
    cache.final_out = layer_norm(z, params.final_ln_gain, params.final_ln_bias, &cache.final_ln);
    return affine(cache.final_out, params.head_w, params.head_b);
}

void attention_backward(const BlockParameters& b, const ModelConfig& config, const BlockCache& c,
                        const Matrix& dout, BlockParameters& g, Matrix& dx) {
    const auto dh = static_cast<Eigen::Index>(config.head_dim());
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    g.out_w += c.heads.transpose() * dout;
    g.out_b += dout.colwise().sum();
    const Matrix dheads = dout * b.out_w.transpose();

    Matrix dq(c.q.rows(), c.q.cols());
    Matrix dk(c.k.rows(), c.k.cols());
    Matrix dv(c.v.rows(), c.v.cols());
    for (std::size_t h = 0; h < config.num_heads; ++h) {
        const auto off = static_cast<Eigen::Index>(h) * dh;
        const Matrix& p = c.probs[h];
        const auto dhead = dheads.middleCols(off, dh);
        const Matrix dp = dhead * c.v.middleCols(off, dh).transpose();
        dv.middleCols(off, dh) = p.transpose() * dhead;
        const Eigen::VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
        const Matrix ds = (p.array() * (dp.colwise() - row_dot).array()).matrix() * scale;
        dq.middleCols(off, dh) = ds * c.k.middleCols(off, dh);
        dk.middleCols(off, dh) = ds.transpose() * c.q.middleCols(off, dh);
    }
    g.query_w += c.attn_in.transpose() * dq;
    g.query_b += dq.colwise().sum();
    g.key_w += c.attn_in.transpose() * dk;
    g.value_w += c.attn_in.transpose() * dv;
    g.value_b += dv.colwise().sum();
    dx = dq * b.query_w.transpose() + dk * b.key_w.transpose() + dv * b.value_w.transpose();
}

}  // namespace

Matrix forward(const ModelParameters& params, const ModelConfig& config, const Matrix& inputs,
               std::size_t valid_frames) {
    ForwardCache cache;
    return run_forward(params, config, inputs, valid_frames, cache);
}

FrameScores infer(const ModelParameters& params, const ModelConfig& config, const Matrix& inputs) {
    return FrameScores(forward(params, config, inputs));
}

LossValue masked_cross_entropy(const Matrix& logits, const std::vector<std::size_t>& targets) {
    if (targets.size() != static_cast<std::size_t>(logits.rows()))
        throw ValidationError("logits have " + std::to_string(logits.rows()) + " frames, labels " +
                              std::to_string(targets.size()));
    LossValue out;
    double sum = 0.0;
    for (Eigen::Index t = 0; t < logits.rows(); ++t) {
        const auto target = targets[static_cast<std::size_t>(t)];
        if (target == kIgnoreClass) continue;
        if (target >= static_cast<std::size_t>(logits.cols()))
            throw ValidationError("target class out of range");
        const double mx = logits.row(t).maxCoeff();
        const double lse = mx + std::log((logits.row(t).array() - mx).exp().sum());
        sum += lse - logits(t, static_cast<Eigen::Index>(target));
        ++out.valid_frames;
    }
    out.loss = out.valid_frames == 0 ? 0.0 : sum / static_cast<double>(out.valid_frames);
    return out;
}

std::vector<std::size_t> targets_from_labels(const LabelSequence& labels) {
    std::vector<std::size_t> out;
    out.reserve(labels.size());
    for (auto l : labels)
        out.push_back(l == StateLabel::Ambiguous ? kIgnoreClass : static_cast<std::size_t>(l));
    return out;
}

LossValue masked_cross_entropy(const FrameScores& logits, const LabelSequence& pseudo) {
    return masked_cross_entropy(logits.values(), targets_from_labels(pseudo));
}

LossValue accumulate_gradients(const ModelParameters& params, const ModelConfig& config,
                               const Matrix& inputs, const std::vector<std::size_t>& targets,
                               double scale, ModelParameters& grads, std::size_t valid_frames) {
    ForwardCache cache;
    const Matrix logits = run_forward(params, config, inputs, valid_frames, cache);
    if (targets.size() > static_cast<std::size_t>(logits.rows()))
        throw ValidationError("more labels than frames");
    const Eigen::Index valid =
        valid_frames == 0 ? logits.rows() : static_cast<Eigen::Index>(valid_frames);

    LossValue out;
    double sum = 0.0;
    Matrix dlogits = Matrix::Zero(logits.rows(), logits.cols());
    for (Eigen::Index t = 0; t < valid && t < static_cast<Eigen::Index>(targets.size()); ++t) {
        const auto target = targets[static_cast<std::size_t>(t)];
        if (target == kIgnoreClass) continue;
        if (target >= static_cast<std::size_t>(logits.cols()))
            throw ValidationError("target class out of range");
        const double mx = logits.row(t).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(t).array() - mx).exp();
        const double z = e.sum();
        sum += mx + std::log(z) - logits(t, static_cast<Eigen::Index>(target));
        dlogits.row(t) = (e / z) * scale;
        dlogits(t, static_cast<Eigen::Index>(target)) -= scale;
        ++out.valid_frames;
    }
    out.loss = sum;
    if (out.valid_frames == 0) return out;

    grads.head_w += cache.final_out.transpose() * dlogits;
    grads.head_b += dlogits.colwise().sum();
    Matrix dz = layer_norm_backward(dlogits * params.head_w.transpose(), cache.final_ln,
                                    params.final_ln_gain, grads.final_ln_gain, grads.final_ln_bias);

    for (std::size_t l = params.blocks.size(); l-- > 0;) {
        const auto& b = params.blocks[l];
        const auto& c = cache.blocks[l];
        auto& g = grads.blocks[l];

        // Feed-forward residual branch.
        g.ff2_w += c.ff_act.transpose() * dz;
        g.ff2_b += dz.colwise().sum();
        Matrix dpre = dz * b.ff2_w.transpose();
        dpre.array() *= c.ff_pre.unaryExpr(&gelu_grad).array();
        g.ff1_w += c.ff_in.transpose() * dpre;
        g.ff1_b += dpre.colwise().sum();
        dz += layer_norm_backward(dpre * b.ff1_w.transpose(), c.ln2, b.ln2_gain, g.ln2_gain,
                                  g.ln2_bias);

        // Attention residual branch.
        Matrix dattn_in;
        attention_backward(b, config, c, dz, g, dattn_in);
        dz += layer_norm_backward(dattn_in, c.ln1, b.ln1_gain, g.ln1_gain, g.ln1_bias);
    }

    grads.proj2_w += cache.proj_act.transpose() * dz;
    grads.proj2_b += dz.colwise().sum();
    Matrix dpre = dz * params.proj2_w.transpose();
    dpre.array() *= cache.proj_pre.unaryExpr(&gelu_grad).array();
    grads.proj1_w += inputs.transpose() * dpre;
    grads.proj1_b += dpre.colwise().sum();
    return out;
}

Gradients backward(const ModelParameters& params, const ModelConfig& config, const Matrix& inputs,
                   const std::vector<std::size_t>& targets) {
    if (targets.size() != static_cast<std::size_t>(inputs.rows()))
        throw ValidationError("inputs have " + std::to_string(inputs.rows()) + " frames, labels " +
                              std::to_string(targets.size()));
    std::size_t count = 0;
    for (auto t : targets) count += t == kIgnoreClass ? 0 : 1;

    Gradients out{params.zeros_like(), {}};
    const double scale = count == 0 ? 0.0 : 1.0 / static_cast<double>(count);
    const auto sum = accumulate_gradients(params, config, inputs, targets, scale, out.grads);
    out.loss.valid_frames = sum.valid_frames;
    out.loss.loss = count == 0 ? 0.0 : sum.loss / static_cast<double>(count);
    return out;
}

}  // namespace osc
