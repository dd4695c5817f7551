#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "osc/model.hpp"

namespace osc {

/// AdamW training schedule.
struct TrainConfig {
    double learning_rate = 1e-4;
    double weight_decay = 1e-4;
    std::size_t batch_size = 64;
    std::size_t epochs = 50;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    void validate() const;
};

/// One training video: model inputs plus per-frame class targets
/// (kIgnoreClass for Ambiguous frames).
struct TrainingExample {
    Matrix inputs;
    std::vector<std::size_t> targets;
};

struct TrainResult {
    ModelParameters params;
    std::vector<double> epoch_loss;  // mean NLL over labeled frames, per epoch
};

/// Decoupled-weight-decay Adam.
class AdamW {
public:
    AdamW(const ModelParameters& like, const TrainConfig& config);

    void step(ModelParameters& params, const ModelParameters& grads);
    std::size_t steps() const noexcept { return step_; }

private:
    TrainConfig config_;
    ModelParameters m_;
    ModelParameters v_;
    std::size_t step_ = 0;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Mini-batch training. Each epoch shuffles the videos with a generator seeded
/// from `train.seed`; videos in a batch are zero-padded to the longest one and
/// padded frames are masked out of attention and loss. The batch loss is the
/// mean over all labeled frames in the batch. Per-video gradients may be
/// computed on several workers; they are summed in batch order.
TrainResult train(const std::vector<TrainingExample>& data, const ModelConfig& model,
                  const TrainConfig& train, const EpochCallback& on_epoch = {});

}  // namespace osc
