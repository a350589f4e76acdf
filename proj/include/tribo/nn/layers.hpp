#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tribo/nn/tensor.hpp"
#include "tribo/rng.hpp"

namespace tribo::nn {

struct ForwardContext {
    bool training = false;
    Rng* rng = nullptr;  // required by dropout in training mode
};

struct ParamRef {
    Matrix* value;
    Matrix* grad;
    std::string name;
};

/// Common interface. backward() must follow a forward() on the same batch;
/// it accumulates parameter gradients and returns the gradient with respect
/// to the layer input.
class Layer {
public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;

    const std::string& name() const noexcept { return name_; }
    virtual std::string_view kind() const = 0;

    virtual Activation forward(const Activation& in, ForwardContext& ctx) = 0;
    virtual Activation backward(const Activation& grad_out) = 0;

    virtual std::vector<ParamRef> params() { return {}; }
    /// Non-trainable persistent state (batch-norm running statistics).
    virtual std::vector<Matrix*> state() { return {}; }

    /// Parameter count as reported in a Keras-style summary (trainable plus state).
    std::size_t param_count();
    std::size_t trainable_count();
    void zero_grad();

    virtual std::size_t output_steps(std::size_t in_steps) const { return in_steps; }
    virtual std::size_t output_channels(std::size_t in_channels) const { return in_channels; }

private:
    std::string name_;
};

/// 1-D convolution with "same" padding (left pad (K-1)/2) and bias.
class Conv1D final : public Layer {
public:
    Conv1D(std::string name, std::size_t in_channels, std::size_t filters, std::size_t kernel);

    std::string_view kind() const override { return "Conv1D"; }
    Activation forward(const Activation& in, ForwardContext& ctx) override;
    Activation backward(const Activation& grad_out) override;
    std::vector<ParamRef> params() override;
    std::size_t output_channels(std::size_t) const override { return filters_; }

    void init(Rng& rng);
    Matrix& weight() { return weight_; }  // (kernel * in_channels) x filters
    Matrix& bias() { return bias_; }      // 1 x filters

private:
    Matrix im2col(const Activation& in, std::size_t sample) const;

    std::size_t in_channels_, filters_, kernel_, pad_left_;
    Matrix weight_, bias_, grad_weight_, grad_bias_;
    Activation input_;
};

/// Per-channel batch normalization over all (sample, step) rows.
class BatchNorm final : public Layer {
public:
    BatchNorm(std::string name, std::size_t channels, double momentum = 0.99, double eps = 1e-3);

    std::string_view kind() const override { return "BatchNormalization"; }
    Activation forward(const Activation& in, ForwardContext& ctx) override;
    Activation backward(const Activation& grad_out) override;
    std::vector<ParamRef> params() override;
    std::vector<Matrix*> state() override { return {&running_mean_, &running_var_}; }

    Matrix& gamma() { return gamma_; }
    Matrix& beta() { return beta_; }
    Matrix& running_mean() { return running_mean_; }
    Matrix& running_var() { return running_var_; }

private:
    std::size_t channels_;
    double momentum_, eps_;
    Matrix gamma_, beta_, running_mean_, running_var_;
    Matrix grad_gamma_, grad_beta_;
    Matrix xhat_, inv_std_;
    bool trained_batch_ = false;
};

enum class ActivationKind { Relu, Tanh };

std::string_view to_string(ActivationKind a);

class Activate final : public Layer {
public:
    Activate(std::string name, ActivationKind kind) : Layer(std::move(name)), kind_(kind) {}

    std::string_view kind() const override { return "Activation"; }
    Activation forward(const Activation& in, ForwardContext& ctx) override;
    Activation backward(const Activation& grad_out) override;

private:
    ActivationKind kind_;
    Matrix output_;
};

/// Non-overlapping max pooling along time; trailing odd steps are dropped.
class MaxPool1D final : public Layer {
public:
    MaxPool1D(std::string name, std::size_t pool) : Layer(std::move(name)), pool_(pool) {}

    std::string_view kind() const override { return "MaxPooling1D"; }
    Activation forward(const Activation& in, ForwardContext& ctx) override;
    Activation backward(const Activation& grad_out) override;
    std::size_t output_steps(std::size_t in_steps) const override { return in_steps / pool_; }

private:
    std::size_t pool_;
    std::vector<Eigen::Index> argmax_;  // input row per output element
    std::size_t in_rows_ = 0;
};

/// Inverted dropout; identity at inference.
class Dropout final : public Layer {
public:
    Dropout(std::string name, double rate) : Layer(std::move(name)), rate_(rate) {}

    std::string_view kind() const override { return "Dropout"; }
    Activation forward(const Activation& in, ForwardContext& ctx) override;
    Activation backward(const Activation& grad_out) override;

private:
    double rate_;
    Matrix mask_;
    bool active_ = false;
};

/// Forward and time-reversed LSTMs over the same input, outputs concatenated
/// per step as [forward | backward]. Gate order i, f, g, o.
class BiLSTM final : public Layer {
public:
    BiLSTM(std::string name, std::size_t in_channels, std::size_t hidden);

    std::string_view kind() const override { return "Bidirectional(LSTM)"; }
    Activation forward(const Activation& in, ForwardContext& ctx) override;
    Activation backward(const Activation& grad_out) override;
    std::vector<ParamRef> params() override;
    std::size_t output_channels(std::size_t) const override { return 2 * hidden_; }

    void init(Rng& rng);

    struct Direction {
        Matrix wx, wh, b;        // C x 4H, H x 4H, 1 x 4H
        Matrix gwx, gwh, gb;
        // Per processing step s (input step t = s forward, T-1-s backward):
        std::vector<Matrix> gates;  // B x 4H after nonlinearities
        std::vector<Matrix> cell;   // B x H
        std::vector<Matrix> hidden; // B x H
    };

    Direction& direction(bool reverse) { return reverse ? bwd_ : fwd_; }

private:
    void run(Direction& d, const Activation& in, bool reverse, Matrix& out, std::size_t col_offset);
    void run_backward(Direction& d, const Activation& grad_out, bool reverse, std::size_t col_offset, Matrix& grad_in);

    std::size_t in_channels_, hidden_;
    Direction fwd_, bwd_;
    Activation input_;
};

/// Additive attention pooling: e_t = v . tanh(W h_t + b), alpha = softmax(e),
/// context = sum alpha_t h_t. Output is [context | h_last(first half) |
/// h_first(second half)], i.e. twice the input width.
class AdditiveAttention final : public Layer {
public:
    AdditiveAttention(std::string name, std::size_t in_channels, std::size_t units);

    std::string_view kind() const override { return "Attention"; }
    Activation forward(const Activation& in, ForwardContext& ctx) override;
    Activation backward(const Activation& grad_out) override;
    std::vector<ParamRef> params() override;
    std::size_t output_steps(std::size_t) const override { return 1; }
    std::size_t output_channels(std::size_t in_channels) const override { return 2 * in_channels; }

    void init(Rng& rng);
    Matrix& w() { return w_; }
    Matrix& b() { return b_; }
    Matrix& v() { return v_; }
    /// Attention weights of the last forward pass, batch x steps.
    const Matrix& weights() const { return alpha_; }

private:
    std::size_t in_channels_, units_;
    Matrix w_, b_, v_, gw_, gb_, gv_;
    Activation input_;
    Matrix proj_;   // tanh(W h + b), rows as input
    Matrix alpha_;  // batch x steps
};

/// Fully connected layer over the channel dimension.
class Dense final : public Layer {
public:
    Dense(std::string name, std::size_t in, std::size_t out);

    std::string_view kind() const override { return "Dense"; }
    Activation forward(const Activation& in, ForwardContext& ctx) override;
    Activation backward(const Activation& grad_out) override;
    std::vector<ParamRef> params() override;
    std::size_t output_channels(std::size_t) const override { return out_; }

    void init(Rng& rng);
    Matrix& weight() { return weight_; }
    Matrix& bias() { return bias_; }

private:
    std::size_t in_, out_;
    Matrix weight_, bias_, grad_weight_, grad_bias_;
    Matrix input_;
};

/// Row-wise softmax.
Matrix softmax(const Matrix& logits);

/// Mean categorical cross-entropy of softmax(logits) against integer labels.
/// When grad is non-null it receives d loss / d logits.
double softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels, Matrix* grad);

}  // namespace tribo::nn
