#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "osc/core.hpp"
#include "osc/decode.hpp"

namespace osc {

/// Temporal frame classifier shape. Defaults follow the reference setup:
/// 3 pre-norm transformer blocks, 512 hidden units, 4 heads.
struct ModelConfig {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 512;
    std::size_t num_layers = 3;
    std::size_t num_heads = 4;
    std::size_t num_classes = 4;
    std::size_t max_frames = 1024;

    std::size_t ff_dim() const noexcept { return 4 * hidden_dim; }
    std::size_t head_dim() const noexcept { return hidden_dim / num_heads; }

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

struct BlockParameters {
    Matrix ln1_gain, ln1_bias;                // 1 x H
    Matrix query_w, query_b;                  // H x H, 1 x H
    Matrix key_w;                             // H x H (a key bias cancels in softmax)
    Matrix value_w, value_b;                  // H x H, 1 x H
    Matrix out_w, out_b;                      // H x H, 1 x H
    Matrix ln2_gain, ln2_bias;                // 1 x H
    Matrix ff1_w, ff1_b;                      // H x 4H, 1 x 4H
    Matrix ff2_w, ff2_b;                      // 4H x H, 1 x H
};

/// All trainable tensors. Gradients use the same type.
struct ModelParameters {
    Matrix proj1_w, proj1_b;  // D_in x H
    Matrix proj2_w, proj2_b;  // H x H
    std::vector<BlockParameters> blocks;
    Matrix final_ln_gain, final_ln_bias;
    Matrix head_w, head_b;  // H x C

    /// Visits every tensor with a stable name, in a fixed order.
    template <typename Self, typename Fn>
    static void visit(Self& self, Fn&& fn);

    template <typename Fn>
    void for_each(Fn&& fn) { visit(*this, fn); }
    template <typename Fn>
    void for_each(Fn&& fn) const { visit(*this, fn); }

    /// Same shapes, all zeros.
    ModelParameters zeros_like() const;
    std::size_t parameter_count() const;
    bool all_finite() const;

    ModelParameters& operator+=(const ModelParameters& other);
    ModelParameters& operator*=(double scale);

    bool operator==(const ModelParameters& other) const;
};

template <typename Self, typename Fn>
void ModelParameters::visit(Self& self, Fn&& fn) {
    fn("proj1.weight", self.proj1_w);
    fn("proj1.bias", self.proj1_b);
    fn("proj2.weight", self.proj2_w);
    fn("proj2.bias", self.proj2_b);
    for (std::size_t i = 0; i < self.blocks.size(); ++i) {
        auto& b = self.blocks[i];
        const std::string p = "blocks." + std::to_string(i) + ".";
        fn(p + "ln1.gain", b.ln1_gain);
        fn(p + "ln1.bias", b.ln1_bias);
        fn(p + "attn.query.weight", b.query_w);
        fn(p + "attn.query.bias", b.query_b);
        fn(p + "attn.key.weight", b.key_w);
        fn(p + "attn.value.weight", b.value_w);
        fn(p + "attn.value.bias", b.value_b);
        fn(p + "attn.out.weight", b.out_w);
        fn(p + "attn.out.bias", b.out_b);
        fn(p + "ln2.gain", b.ln2_gain);
        fn(p + "ln2.bias", b.ln2_bias);
        fn(p + "ff1.weight", b.ff1_w);
        fn(p + "ff1.bias", b.ff1_b);
        fn(p + "ff2.weight", b.ff2_w);
        fn(p + "ff2.bias", b.ff2_b);
    }
    fn("final_ln.gain", self.final_ln_gain);
    fn("final_ln.bias", self.final_ln_bias);
    fn("head.weight", self.head_w);
    fn("head.bias", self.head_b);
}

/// Xavier-uniform weights, zero biases, unit layer-norm gains.
ModelParameters init_parameters(const ModelConfig& config, std::uint64_t seed);

/// Row t = [global_t, object_t]. Throws if object features are missing.
Matrix concat_object_features(const FeatureSequence& features);

/// Sinusoidal table: column 2i holds sin(t / 10000^(2i/H)), column 2i+1 the
/// matching cosine.
Matrix positional_embedding(std::size_t frames, std::size_t hidden_dim);

/// Logits for every frame. Frames at or beyond `valid_frames` are padding:
/// they are never attended to. `valid_frames == 0` means all frames are real.
Matrix forward(const ModelParameters& params, const ModelConfig& config, const Matrix& inputs,
               std::size_t valid_frames = 0);

/// Forward pass wrapped as FrameScores (no intermediate state kept).
FrameScores infer(const ModelParameters& params, const ModelConfig& config, const Matrix& inputs);

struct LossValue {
    double loss = 0.0;
    std::size_t valid_frames = 0;
};

/// Mean negative log-likelihood over frames whose label is not Ambiguous.
/// Labels are class indices; `kIgnoreClass` marks excluded frames.
inline constexpr std::size_t kIgnoreClass = static_cast<std::size_t>(-1);

LossValue masked_cross_entropy(const Matrix& logits, const std::vector<std::size_t>& targets);

/// Convenience for 4-class models: Background/I/T/E map to 0..3, Ambiguous
/// is ignored.
std::vector<std::size_t> targets_from_labels(const LabelSequence& labels);
LossValue masked_cross_entropy(const FrameScores& logits, const LabelSequence& pseudo);

/// Adds `scale` x d(sum of per-frame NLL over non-ignored frames)/d(params)
/// into `grads`, returning the unscaled NLL sum and frame count. Padding
/// semantics match `forward`.
LossValue accumulate_gradients(const ModelParameters& params, const ModelConfig& config,
                               const Matrix& inputs, const std::vector<std::size_t>& targets,
                               double scale, ModelParameters& grads,
                               std::size_t valid_frames = 0);

struct Gradients {
    ModelParameters grads;
    LossValue loss;
};

/// Exact gradients of masked_cross_entropy for one video.
Gradients backward(const ModelParameters& params, const ModelConfig& config, const Matrix& inputs,
                   const std::vector<std::size_t>& targets);

// Checkpoint file: "OSCM", u32 version, config, named float64 tensors.
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ModelParameters& params);

struct Checkpoint {
    ModelConfig config;
    ModelParameters params;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace osc
