#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tribo/nn/model.hpp"

namespace tribo::nn {

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 32;
    std::size_t epochs = 30;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Rows of `inputs` are model input windows; labels are class indices.
struct Dataset {
    Matrix inputs;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
};

class Adam {
public:
    explicit Adam(const TrainConfig& cfg) : cfg_(cfg) {}

    /// One bias-corrected update of every parameter from its gradient.
    void step(const std::vector<ParamRef>& params);
    std::size_t steps() const noexcept { return t_; }

private:
    TrainConfig cfg_;
    std::size_t t_ = 0;
    std::vector<Matrix> m_, v_;
};

struct EpochStats {
    std::size_t epoch;
    double loss;
    double accuracy;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
};

/// Mini-batch training. Shuffling and dropout draw from streams derived from cfg.seed.
TrainHistory train(Model& model, const Dataset& data, const TrainConfig& cfg,
                   const std::function<void(const EpochStats&)>& on_epoch = {});

struct ConfusionMatrix {
    std::size_t classes = 0;
    std::vector<std::size_t> counts;  // row = truth, column = prediction

    explicit ConfusionMatrix(std::size_t n = 0) : classes(n), counts(n * n, 0) {}
    std::size_t& at(std::size_t truth, std::size_t pred) { return counts[truth * classes + pred]; }
    std::size_t at(std::size_t truth, std::size_t pred) const { return counts[truth * classes + pred]; }
    std::size_t row_sum(std::size_t truth) const;
};

struct EvalResult {
    double accuracy = 0.0;
    ConfusionMatrix confusion;
    std::vector<int> predictions;
    Matrix probabilities;
};

/// Index of the row maximum; ties go to the lowest index.
int argmax(const Eigen::Ref<const RowVector>& row);

EvalResult evaluate(Model& model, const Dataset& data, std::size_t batch_size = 64);

}  // namespace tribo::nn
