#include "osc/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "osc/parallel.hpp"

namespace osc {

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !(weight_decay >= 0.0))
        throw ValidationError("learning rate and weight decay must be non-negative");
    if (batch_size == 0 || epochs == 0) throw ValidationError("batch size and epochs must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0))
        throw ValidationError("invalid AdamW moment parameters");
}

AdamW::AdamW(const ModelParameters& like, const TrainConfig& config)
    : config_(config), m_(like.zeros_like()), v_(like.zeros_like()) {}

void AdamW::step(ModelParameters& params, const ModelParameters& grads) {
    ++step_;
    const double t = static_cast<double>(step_);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    const double lr = config_.learning_rate;
    const double decay = 1.0 - lr * config_.weight_decay;

    std::vector<Matrix*> p, m, v;
    std::vector<const Matrix*> g;
    params.for_each([&](const std::string&, Matrix& x) { p.push_back(&x); });
    m_.for_each([&](const std::string&, Matrix& x) { m.push_back(&x); });
    v_.for_each([&](const std::string&, Matrix& x) { v.push_back(&x); });
    grads.for_each([&](const std::string&, const Matrix& x) { g.push_back(&x); });

    for (std::size_t i = 0; i < p.size(); ++i) {
        *m[i] = config_.beta1 * *m[i] + (1.0 - config_.beta1) * *g[i];
        *v[i] = config_.beta2 * *v[i] + (1.0 - config_.beta2) * g[i]->cwiseAbs2();
        *p[i] *= decay;
        p[i]->array() -= lr * (m[i]->array() / c1) / ((v[i]->array() / c2).sqrt() + config_.epsilon);
    }
}

TrainResult train(const std::vector<TrainingExample>& data, const ModelConfig& model,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    model.validate();
    config.validate();
    if (data.empty()) throw ValidationError("training set is empty");
    for (const auto& ex : data) {
        if (static_cast<std::size_t>(ex.inputs.cols()) != model.input_dim)
            throw ValidationError("training video has input width " + std::to_string(ex.inputs.cols()) +
                                  ", model expects " + std::to_string(model.input_dim));
        if (ex.targets.size() != static_cast<std::size_t>(ex.inputs.rows()))
            throw ValidationError("training video has mismatched targets");
    }

    TrainResult result;
    result.params = init_parameters(model, config.seed);
    AdamW optimizer(result.params, config);
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    const ModelParameters zero = result.params.zeros_like();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_nll = 0.0;
        std::size_t epoch_frames = 0;

        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const std::size_t n = end - start;

            Eigen::Index longest = 0;
            std::size_t labeled = 0;
            for (std::size_t b = start; b < end; ++b) {
                const auto& ex = data[order[b]];
                longest = std::max(longest, ex.inputs.rows());
                for (auto t : ex.targets) labeled += t == kIgnoreClass ? 0 : 1;
            }
            if (labeled == 0) continue;
            const double scale = 1.0 / static_cast<double>(labeled);

            std::vector<ModelParameters> grads(n, zero);
            std::vector<LossValue> losses(n);
            parallel_for(n, config.workers, [&](std::size_t i) {
                const auto& ex = data[order[start + i]];
                const auto frames = ex.inputs.rows();
                Matrix padded = Matrix::Zero(longest, ex.inputs.cols());
                padded.topRows(frames) = ex.inputs;
                losses[i] = accumulate_gradients(result.params, model, padded, ex.targets, scale,
                                                 grads[i], static_cast<std::size_t>(frames));
            });

            ModelParameters total = zero;
            for (std::size_t i = 0; i < n; ++i) {
                total += grads[i];
                epoch_nll += losses[i].loss;
                epoch_frames += losses[i].valid_frames;
            }
            if (!std::isfinite(epoch_nll) || !total.all_finite()) {
                std::ostringstream os;
                os << "non-finite loss at epoch " << epoch + 1 << ", batch starting at " << start;
                throw TrainingError(os.str());
            }
            optimizer.step(result.params, total);
        }

        const double mean = epoch_frames == 0 ? 0.0 : epoch_nll / static_cast<double>(epoch_frames);
        if (!std::isfinite(mean) || !result.params.all_finite())
            throw TrainingError("training diverged at epoch " + std::to_string(epoch + 1));
        result.epoch_loss.push_back(mean);
        if (on_epoch) on_epoch(epoch + 1, mean);
    }
    return result;
}

}  // namespace osc
