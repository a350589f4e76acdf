#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tribo/nn/layers.hpp"

namespace tribo::nn {

struct ConvBlock {
    std::size_t filters = 64;
    std::size_t kernel = 32;
    bool activation = true;  // activation between batch-norm and pooling
};

struct ModelConfig {
    std::size_t input_len = 220;
    std::vector<ConvBlock> conv{{64, 32, false}, {16, 32, true}};
    std::size_t pool = 2;
    std::vector<std::size_t> lstm_hidden{32, 32};
    double dropout = 0.3;
    std::size_t attention_units = 64;
    std::size_t classes = 8;
    ActivationKind conv_activation = ActivationKind::Relu;
    ActivationKind head_activation = ActivationKind::Tanh;

    /// Throws InvalidSpec on empty blocks, zero sizes, or a sequence that pools away.
    void validate() const;

    /// Uniform conv stack for hyperparameter sweeps: `layers` blocks of
    /// `filters` x `kernel`, activation on every block but the first.
    static ModelConfig with_conv(std::size_t filters, std::size_t kernel, std::size_t layers, std::size_t classes = 8);
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

enum class Tap { Input, PostCnn, PostBiLstm, PostAttention };

std::string_view to_string(Tap t);
Tap parse_tap(std::string_view s);

struct LayerSummary {
    std::string name;
    std::string kind;
    std::size_t steps;
    std::size_t channels;
    std::size_t params;
};

class Model {
public:
    Model(ModelConfig config, std::uint64_t seed);

    const ModelConfig& config() const noexcept { return config_; }
    std::uint64_t seed() const noexcept { return seed_; }

    /// Display names for the output classes (defaults to "0".."n-1").
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    void set_labels(std::vector<std::string> labels);

    std::vector<std::unique_ptr<Layer>>& layers() noexcept { return layers_; }
    Layer& layer(std::string_view name);

    /// inputs: batch x input_len. Returns logits, batch x classes.
    Matrix forward(const Matrix& inputs, ForwardContext& ctx);
    /// Must follow forward() on the same batch. Accumulates parameter gradients.
    void backward(const Matrix& grad_logits);

    /// Inference-mode softmax probabilities.
    Matrix predict_proba(const Matrix& inputs);
    /// Inference-mode activations at a tap, flattened to one row per sample.
    Matrix features(const Matrix& inputs, Tap tap);

    std::vector<ParamRef> params();
    std::vector<Matrix*> state();
    void zero_grad();

    std::size_t param_count();
    std::size_t trainable_count();
    std::vector<LayerSummary> summary();

private:
    Activation run(const Matrix& inputs, ForwardContext& ctx, std::optional<Tap> stop);

    ModelConfig config_;
    std::uint64_t seed_;
    std::vector<std::string> labels_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::size_t post_cnn_ = 0, post_lstm_ = 0, post_attention_ = 0;  // layer counts up to each tap
};

/// "TRBMODEL", u32 format version, u32 header length, JSON header, then every
/// parameter and state matrix in layer order as little-endian f64.
void save_model(Model& m, std::ostream& os);
void save_model(Model& m, const std::filesystem::path& path);
Model load_model(std::istream& is);
Model load_model(const std::filesystem::path& path);

inline constexpr std::uint32_t kModelFormatVersion = 1;

}  // namespace tribo::nn
