#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tribo/nn/model.hpp"

namespace tribo::nn {

struct GradCheckOptions {
    double step = 1e-5;
    /// Relative error is |a - n| / max(|a|, |n|, floor).
    double floor = 1e-6;
    bool training = true;
    std::uint64_t seed = 0;
    /// Entries checked per parameter block and for the input; 0 means all.
    std::size_t max_entries = 0;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::string worst;  // "<block>[index]" of the largest error
};

/// Compares backward() of one layer against central finite differences of
/// the scalar loss sum(R .* layer(x)) for a fixed random R. Dropout masks are
/// reproduced by reseeding the forward rng on every evaluation.
GradCheckResult check_layer_gradients(Layer& layer, const Activation& input, const GradCheckOptions& opt = {});

/// Same for the full model under softmax cross-entropy.
GradCheckResult check_model_gradients(Model& model, const Matrix& inputs, const std::vector<int>& labels,
                                      const GradCheckOptions& opt = {});

/// Softmax cross-entropy gradient with respect to the logits.
GradCheckResult check_loss_gradients(const Matrix& logits, const std::vector<int>& labels,
                                     const GradCheckOptions& opt = {});

struct LayerTypeReport {
    std::string type;
    std::size_t shapes = 0;
    double max_rel_error = 0.0;
    std::string worst;
};

/// Runs check_layer_gradients over `shapes_per_type` random small shapes for
/// every layer type (both batch-norm modes, both activations), the loss, and
/// a small end-to-end model.
std::vector<LayerTypeReport> gradient_suite(std::uint64_t seed, std::size_t shapes_per_type = 20);

}  // namespace tribo::nn
