#include "tribo/nn/layers.hpp"

#include <fmt/format.h>

#include <cmath>

#include "tribo/error.hpp"

namespace tribo::nn {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::ShapeError, what);
}

void fill_uniform(Matrix& m, Rng& rng, double limit) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::size_t Layer::param_count() {
    std::size_t n = trainable_count();
    for (Matrix* m : state()) n += static_cast<std::size_t>(m->size());
    return n;
}

std::size_t Layer::trainable_count() {
    std::size_t n = 0;
    for (const ParamRef& p : params()) n += static_cast<std::size_t>(p.value->size());
    return n;
}

void Layer::zero_grad() {
    for (ParamRef& p : params()) p.grad->setZero();
}

// ---------------------------------------------------------------- Conv1D

Conv1D::Conv1D(std::string name, std::size_t in_channels, std::size_t filters, std::size_t kernel)
    : Layer(std::move(name)), in_channels_(in_channels), filters_(filters), kernel_(kernel), pad_left_((kernel - 1) / 2) {
    weight_ = Matrix::Zero(static_cast<Eigen::Index>(kernel * in_channels), static_cast<Eigen::Index>(filters));
    bias_ = Matrix::Zero(1, static_cast<Eigen::Index>(filters));
    grad_weight_ = Matrix::Zero(weight_.rows(), weight_.cols());
    grad_bias_ = Matrix::Zero(1, bias_.cols());
}

void Conv1D::init(Rng& rng) {
    fill_uniform(weight_, rng, std::sqrt(3.0 / static_cast<double>(kernel_ * in_channels_)));
    bias_.setZero();
}

std::vector<ParamRef> Conv1D::params() {
    return {{&weight_, &grad_weight_, "kernel"}, {&bias_, &grad_bias_, "bias"}};
}

Matrix Conv1D::im2col(const Activation& in, std::size_t sample) const {
    const auto steps = static_cast<Eigen::Index>(in.steps);
    const auto c = static_cast<Eigen::Index>(in_channels_);
    Matrix col = Matrix::Zero(steps, static_cast<Eigen::Index>(kernel_) * c);
    const Eigen::Index base = static_cast<Eigen::Index>(sample) * steps;
    for (Eigen::Index t = 0; t < steps; ++t) {
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(kernel_); ++k) {
            const Eigen::Index src = t + k - static_cast<Eigen::Index>(pad_left_);
            if (src < 0 || src >= steps) continue;
            col.block(t, k * c, 1, c) = in.values.row(base + src);
        }
    }
    return col;
}

Activation Conv1D::forward(const Activation& in, ForwardContext&) {
    require(in.channels() == in_channels_,
            fmt::format("{}: expected {} input channels, got {}", name(), in_channels_, in.channels()));
    input_ = in;
    Activation out{Matrix(in.values.rows(), static_cast<Eigen::Index>(filters_)), in.batch, in.steps};
    const auto steps = static_cast<Eigen::Index>(in.steps);
    for (std::size_t s = 0; s < in.batch; ++s) {
        const Matrix col = im2col(in, s);
        out.values.middleRows(static_cast<Eigen::Index>(s) * steps, steps).noalias() = col * weight_;
    }
    out.values.rowwise() += bias_.row(0);
    return out;
}

Activation Conv1D::backward(const Activation& grad_out) {
    const auto steps = static_cast<Eigen::Index>(input_.steps);
    const auto c = static_cast<Eigen::Index>(in_channels_);
    Activation grad_in{Matrix::Zero(input_.values.rows(), c), input_.batch, input_.steps};
    grad_bias_ += grad_out.values.colwise().sum();
    for (std::size_t s = 0; s < input_.batch; ++s) {
        const Eigen::Index base = static_cast<Eigen::Index>(s) * steps;
        const Matrix col = im2col(input_, s);
        const auto dy = grad_out.values.middleRows(base, steps);
        grad_weight_.noalias() += col.transpose() * dy;
        const Matrix dcol = dy * weight_.transpose();
        for (Eigen::Index t = 0; t < steps; ++t) {
            for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(kernel_); ++k) {
                const Eigen::Index dst = t + k - static_cast<Eigen::Index>(pad_left_);
                if (dst < 0 || dst >= steps) continue;
                grad_in.values.row(base + dst) += dcol.block(t, k * c, 1, c);
            }
        }
    }
    return grad_in;
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::string name, std::size_t channels, double momentum, double eps)
    : Layer(std::move(name)), channels_(channels), momentum_(momentum), eps_(eps) {
    const auto c = static_cast<Eigen::Index>(channels);
    gamma_ = Matrix::Ones(1, c);
    beta_ = Matrix::Zero(1, c);
    running_mean_ = Matrix::Zero(1, c);
    running_var_ = Matrix::Ones(1, c);
    grad_gamma_ = Matrix::Zero(1, c);
    grad_beta_ = Matrix::Zero(1, c);
}

std::vector<ParamRef> BatchNorm::params() {
    return {{&gamma_, &grad_gamma_, "gamma"}, {&beta_, &grad_beta_, "beta"}};
}

Activation BatchNorm::forward(const Activation& in, ForwardContext& ctx) {
    require(in.channels() == channels_, fmt::format("{}: expected {} channels", name(), channels_));
    const auto n = static_cast<double>(in.values.rows());
    Activation out{Matrix(in.values.rows(), in.values.cols()), in.batch, in.steps};
    if (ctx.training) {
        require(in.values.rows() > 1, name() + ": batch statistics need more than one row");
        const RowVector mean = in.values.colwise().mean();
        const Matrix centered = in.values.rowwise() - mean;
        const RowVector var = centered.array().square().colwise().sum() / n;
        inv_std_ = (var.array() + eps_).rsqrt().matrix();
        xhat_ = centered.array().rowwise() * inv_std_.row(0).array();
        running_mean_ = momentum_ * running_mean_ + (1.0 - momentum_) * mean;
        running_var_ = momentum_ * running_var_ + (1.0 - momentum_) * var;
        trained_batch_ = true;
    } else {
        inv_std_ = (running_var_.array() + eps_).rsqrt().matrix();
        xhat_ = (in.values.rowwise() - running_mean_.row(0)).array().rowwise() * inv_std_.row(0).array();
        trained_batch_ = false;
    }
    out.values = (xhat_.array().rowwise() * gamma_.row(0).array()).rowwise() + beta_.row(0).array();
    return out;
}

Activation BatchNorm::backward(const Activation& grad_out) {
    const Matrix& dy = grad_out.values;
    grad_beta_ += dy.colwise().sum();
    grad_gamma_ += (dy.array() * xhat_.array()).matrix().colwise().sum();
    const Matrix dxhat = dy.array().rowwise() * gamma_.row(0).array();
    Activation grad_in{Matrix(dy.rows(), dy.cols()), grad_out.batch, grad_out.steps};
    if (!trained_batch_) {
        grad_in.values = dxhat.array().rowwise() * inv_std_.row(0).array();
        return grad_in;
    }
    const auto n = static_cast<double>(dy.rows());
    const RowVector sum_dxhat = dxhat.colwise().sum();
    const RowVector sum_dxhat_xhat = (dxhat.array() * xhat_.array()).matrix().colwise().sum();
    const Matrix inner = ((dxhat * n).rowwise() - sum_dxhat).array() - xhat_.array().rowwise() * sum_dxhat_xhat.array();
    grad_in.values = inner.array().rowwise() * (inv_std_.row(0).array() / n);
    return grad_in;
}

// ---------------------------------------------------------------- Activate

std::string_view to_string(ActivationKind a) {
    return a == ActivationKind::Relu ? "relu" : "tanh";
}

Activation Activate::forward(const Activation& in, ForwardContext&) {
    Activation out{Matrix(in.values.rows(), in.values.cols()), in.batch, in.steps};
    if (kind_ == ActivationKind::Relu) out.values = in.values.cwiseMax(0.0);
    else out.values = in.values.array().tanh();
    output_ = out.values;
    return out;
}

Activation Activate::backward(const Activation& grad_out) {
    Activation grad_in{Matrix(grad_out.values.rows(), grad_out.values.cols()), grad_out.batch, grad_out.steps};
    if (kind_ == ActivationKind::Relu) {
        grad_in.values = (output_.array() > 0.0).select(grad_out.values, 0.0);
    } else {
        grad_in.values = grad_out.values.array() * (1.0 - output_.array().square());
    }
    return grad_in;
}

// ---------------------------------------------------------------- MaxPool1D

Activation MaxPool1D::forward(const Activation& in, ForwardContext&) {
    const std::size_t out_steps = in.steps / pool_;
    require(out_steps >= 1, name() + ": sequence shorter than the pool size");
    const Eigen::Index c = in.values.cols();
    Activation out{Matrix(static_cast<Eigen::Index>(in.batch * out_steps), c), in.batch, out_steps};
    argmax_.assign(static_cast<std::size_t>(out.values.size()), 0);
    in_rows_ = static_cast<std::size_t>(in.values.rows());
    for (std::size_t b = 0; b < in.batch; ++b) {
        for (std::size_t j = 0; j < out_steps; ++j) {
            const auto orow = static_cast<Eigen::Index>(b * out_steps + j);
            const auto first = static_cast<Eigen::Index>(b * in.steps + j * pool_);
            for (Eigen::Index ch = 0; ch < c; ++ch) {
                Eigen::Index best = first;
                for (std::size_t q = 1; q < pool_; ++q) {
                    const Eigen::Index r = first + static_cast<Eigen::Index>(q);
                    if (in.values(r, ch) > in.values(best, ch)) best = r;
                }
                out.values(orow, ch) = in.values(best, ch);
                argmax_[static_cast<std::size_t>(orow * c + ch)] = best;
            }
        }
    }
    return out;
}

Activation MaxPool1D::backward(const Activation& grad_out) {
    const Eigen::Index c = grad_out.values.cols();
    Activation grad_in{Matrix::Zero(static_cast<Eigen::Index>(in_rows_), c), grad_out.batch, grad_out.steps * pool_};
    grad_in.steps = in_rows_ / grad_out.batch;
    for (Eigen::Index r = 0; r < grad_out.values.rows(); ++r) {
        for (Eigen::Index ch = 0; ch < c; ++ch) {
            grad_in.values(argmax_[static_cast<std::size_t>(r * c + ch)], ch) += grad_out.values(r, ch);
        }
    }
    return grad_in;
}

// ---------------------------------------------------------------- Dropout

Activation Dropout::forward(const Activation& in, ForwardContext& ctx) {
    active_ = ctx.training && rate_ > 0.0;
    if (!active_) return in;
    if (!ctx.rng) throw Error(ErrorKind::InvalidInput, name() + ": training dropout needs an rng");
    mask_.resize(in.values.rows(), in.values.cols());
    const double keep_scale = 1.0 / (1.0 - rate_);
    for (Eigen::Index i = 0; i < mask_.size(); ++i) mask_.data()[i] = ctx.rng->uniform() >= rate_ ? keep_scale : 0.0;
    Activation out{in.values.cwiseProduct(mask_), in.batch, in.steps};
    return out;
}

Activation Dropout::backward(const Activation& grad_out) {
    if (!active_) return grad_out;
    return Activation{grad_out.values.cwiseProduct(mask_), grad_out.batch, grad_out.steps};
}

// ---------------------------------------------------------------- BiLSTM

BiLSTM::BiLSTM(std::string name, std::size_t in_channels, std::size_t hidden)
    : Layer(std::move(name)), in_channels_(in_channels), hidden_(hidden) {
    const auto c = static_cast<Eigen::Index>(in_channels);
    const auto h = static_cast<Eigen::Index>(hidden);
    for (Direction* d : {&fwd_, &bwd_}) {
        d->wx = Matrix::Zero(c, 4 * h);
        d->wh = Matrix::Zero(h, 4 * h);
        d->b = Matrix::Zero(1, 4 * h);
        d->gwx = Matrix::Zero(c, 4 * h);
        d->gwh = Matrix::Zero(h, 4 * h);
        d->gb = Matrix::Zero(1, 4 * h);
    }
}

void BiLSTM::init(Rng& rng) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(hidden_));
    const auto h = static_cast<Eigen::Index>(hidden_);
    for (Direction* d : {&fwd_, &bwd_}) {
        fill_uniform(d->wx, rng, limit);
        fill_uniform(d->wh, rng, limit);
        d->b.setZero();
        d->b.block(0, h, 1, h).setOnes();  // forget gate
    }
}

std::vector<ParamRef> BiLSTM::params() {
    return {{&fwd_.wx, &fwd_.gwx, "forward_kernel"},   {&fwd_.wh, &fwd_.gwh, "forward_recurrent"},
            {&fwd_.b, &fwd_.gb, "forward_bias"},       {&bwd_.wx, &bwd_.gwx, "backward_kernel"},
            {&bwd_.wh, &bwd_.gwh, "backward_recurrent"}, {&bwd_.b, &bwd_.gb, "backward_bias"}};
}

void BiLSTM::run(Direction& d, const Activation& in, bool reverse, Matrix& out, std::size_t col_offset) {
    const auto batch = static_cast<Eigen::Index>(in.batch);
    const auto steps = static_cast<Eigen::Index>(in.steps);
    const auto h = static_cast<Eigen::Index>(hidden_);
    const Matrix xproj = (in.values * d.wx).rowwise() + d.b.row(0);
    d.gates.assign(static_cast<std::size_t>(steps), Matrix());
    d.cell.assign(static_cast<std::size_t>(steps), Matrix());
    d.hidden.assign(static_cast<std::size_t>(steps), Matrix());
    Matrix h_prev = Matrix::Zero(batch, h);
    Matrix c_prev = Matrix::Zero(batch, h);
    Matrix z(batch, 4 * h);
    for (Eigen::Index s = 0; s < steps; ++s) {
        const Eigen::Index t = reverse ? steps - 1 - s : s;
        for (Eigen::Index b = 0; b < batch; ++b) z.row(b) = xproj.row(b * steps + t);
        z.noalias() += h_prev * d.wh;
        Matrix gates(batch, 4 * h);
        Matrix c(batch, h), hh(batch, h);
        for (Eigen::Index b = 0; b < batch; ++b) {
            for (Eigen::Index j = 0; j < h; ++j) {
                const double i_g = sigmoid(z(b, j));
                const double f_g = sigmoid(z(b, h + j));
                const double g_g = std::tanh(z(b, 2 * h + j));
                const double o_g = sigmoid(z(b, 3 * h + j));
                gates(b, j) = i_g;
                gates(b, h + j) = f_g;
                gates(b, 2 * h + j) = g_g;
                gates(b, 3 * h + j) = o_g;
                c(b, j) = f_g * c_prev(b, j) + i_g * g_g;
                hh(b, j) = o_g * std::tanh(c(b, j));
            }
        }
        for (Eigen::Index b = 0; b < batch; ++b) {
            out.block(b * steps + t, static_cast<Eigen::Index>(col_offset), 1, h) = hh.row(b);
        }
        d.gates[static_cast<std::size_t>(s)] = std::move(gates);
        d.cell[static_cast<std::size_t>(s)] = c;
        d.hidden[static_cast<std::size_t>(s)] = hh;
        c_prev = std::move(c);
        h_prev = std::move(hh);
    }
}

Activation BiLSTM::forward(const Activation& in, ForwardContext&) {
    require(in.channels() == in_channels_,
            fmt::format("{}: expected {} input channels, got {}", name(), in_channels_, in.channels()));
    input_ = in;
    Activation out{Matrix(in.values.rows(), static_cast<Eigen::Index>(2 * hidden_)), in.batch, in.steps};
    run(fwd_, in, false, out.values, 0);
    run(bwd_, in, true, out.values, hidden_);
    return out;
}

void BiLSTM::run_backward(Direction& d, const Activation& grad_out, bool reverse, std::size_t col_offset,
                          Matrix& grad_in) {
    const auto batch = static_cast<Eigen::Index>(input_.batch);
    const auto steps = static_cast<Eigen::Index>(input_.steps);
    const auto h = static_cast<Eigen::Index>(hidden_);
    Matrix dz_all = Matrix::Zero(batch * steps, 4 * h);  // aligned with input rows
    Matrix dh_next = Matrix::Zero(batch, h);
    Matrix dc_next = Matrix::Zero(batch, h);
    Matrix dz(batch, 4 * h);
    const Matrix zeros = Matrix::Zero(batch, h);
    for (Eigen::Index s = steps - 1; s >= 0; --s) {
        const Eigen::Index t = reverse ? steps - 1 - s : s;
        const Matrix& gates = d.gates[static_cast<std::size_t>(s)];
        const Matrix& c = d.cell[static_cast<std::size_t>(s)];
        const Matrix& c_prev = s > 0 ? d.cell[static_cast<std::size_t>(s - 1)] : zeros;
        for (Eigen::Index b = 0; b < batch; ++b) {
            for (Eigen::Index j = 0; j < h; ++j) {
                const double i_g = gates(b, j), f_g = gates(b, h + j), g_g = gates(b, 2 * h + j), o_g = gates(b, 3 * h + j);
                const double dh = grad_out.values(b * steps + t, static_cast<Eigen::Index>(col_offset) + j) + dh_next(b, j);
                const double tc = std::tanh(c(b, j));
                const double dc = dh * o_g * (1.0 - tc * tc) + dc_next(b, j);
                dz(b, j) = dc * g_g * i_g * (1.0 - i_g);
                dz(b, h + j) = dc * c_prev(b, j) * f_g * (1.0 - f_g);
                dz(b, 2 * h + j) = dc * i_g * (1.0 - g_g * g_g);
                dz(b, 3 * h + j) = dh * tc * o_g * (1.0 - o_g);
                dc_next(b, j) = dc * f_g;
            }
        }
        if (s > 0) d.gwh.noalias() += d.hidden[static_cast<std::size_t>(s - 1)].transpose() * dz;
        dh_next.noalias() = dz * d.wh.transpose();
        for (Eigen::Index b = 0; b < batch; ++b) dz_all.row(b * steps + t) = dz.row(b);
    }
    d.gb += dz_all.colwise().sum();
    d.gwx.noalias() += input_.values.transpose() * dz_all;
    grad_in.noalias() += dz_all * d.wx.transpose();
}

Activation BiLSTM::backward(const Activation& grad_out) {
    Activation grad_in{Matrix::Zero(input_.values.rows(), static_cast<Eigen::Index>(in_channels_)), input_.batch,
                       input_.steps};
    run_backward(fwd_, grad_out, false, 0, grad_in.values);
    run_backward(bwd_, grad_out, true, hidden_, grad_in.values);
    return grad_in;
}

// ---------------------------------------------------------------- AdditiveAttention

AdditiveAttention::AdditiveAttention(std::string name, std::size_t in_channels, std::size_t units)
    : Layer(std::move(name)), in_channels_(in_channels), units_(units) {
    require(in_channels % 2 == 0, "attention input width must be even");
    const auto d = static_cast<Eigen::Index>(in_channels);
    const auto a = static_cast<Eigen::Index>(units);
    w_ = Matrix::Zero(d, a);
    b_ = Matrix::Zero(1, a);
    v_ = Matrix::Zero(1, a);
    gw_ = Matrix::Zero(d, a);
    gb_ = Matrix::Zero(1, a);
    gv_ = Matrix::Zero(1, a);
}

void AdditiveAttention::init(Rng& rng) {
    fill_uniform(w_, rng, std::sqrt(3.0 / static_cast<double>(in_channels_)));
    b_.setZero();
    fill_uniform(v_, rng, std::sqrt(3.0 / static_cast<double>(units_)));
}

std::vector<ParamRef> AdditiveAttention::params() {
    return {{&w_, &gw_, "W"}, {&b_, &gb_, "b"}, {&v_, &gv_, "v"}};
}

Activation AdditiveAttention::forward(const Activation& in, ForwardContext&) {
    require(in.channels() == in_channels_,
            fmt::format("{}: expected {} input channels, got {}", name(), in_channels_, in.channels()));
    input_ = in;
    const auto batch = static_cast<Eigen::Index>(in.batch);
    const auto steps = static_cast<Eigen::Index>(in.steps);
    const auto d = static_cast<Eigen::Index>(in_channels_);
    const Eigen::Index half = d / 2;
    proj_ = ((in.values * w_).rowwise() + b_.row(0)).array().tanh();
    const Matrix scores = proj_ * v_.transpose();  // (B*T) x 1
    alpha_.resize(batch, steps);
    Activation out{Matrix::Zero(batch, 2 * d), in.batch, 1};
    for (Eigen::Index b = 0; b < batch; ++b) {
        const auto e = scores.middleRows(b * steps, steps).col(0);
        const double m = e.maxCoeff();
        double z = 0.0;
        for (Eigen::Index t = 0; t < steps; ++t) {
            alpha_(b, t) = std::exp(e(t) - m);
            z += alpha_(b, t);
        }
        alpha_.row(b) /= z;
        out.values.block(b, 0, 1, d).noalias() = alpha_.row(b) * in.values.middleRows(b * steps, steps);
        out.values.block(b, d, 1, half) = in.values.block(b * steps + steps - 1, 0, 1, half);
        out.values.block(b, d + half, 1, half) = in.values.block(b * steps, half, 1, half);
    }
    return out;
}

Activation AdditiveAttention::backward(const Activation& grad_out) {
    const auto batch = static_cast<Eigen::Index>(input_.batch);
    const auto steps = static_cast<Eigen::Index>(input_.steps);
    const auto d = static_cast<Eigen::Index>(in_channels_);
    const Eigen::Index half = d / 2;
    Activation grad_in{Matrix::Zero(input_.values.rows(), d), input_.batch, input_.steps};
    Matrix de(batch * steps, 1);
    for (Eigen::Index b = 0; b < batch; ++b) {
        const auto dctx = grad_out.values.block(b, 0, 1, d);
        const auto h = input_.values.middleRows(b * steps, steps);
        grad_in.values.middleRows(b * steps, steps).noalias() += alpha_.row(b).transpose() * dctx;
        const Eigen::VectorXd dalpha = h * dctx.transpose();
        const double weighted = alpha_.row(b).dot(dalpha.transpose());
        for (Eigen::Index t = 0; t < steps; ++t) de(b * steps + t, 0) = alpha_(b, t) * (dalpha(t) - weighted);
        grad_in.values.block(b * steps + steps - 1, 0, 1, half) += grad_out.values.block(b, d, 1, half);
        grad_in.values.block(b * steps, half, 1, half) += grad_out.values.block(b, d + half, 1, half);
    }
    gv_.noalias() += de.transpose() * proj_;
    const Matrix dpre = ((de * v_).array() * (1.0 - proj_.array().square())).matrix();
    gw_.noalias() += input_.values.transpose() * dpre;
    gb_ += dpre.colwise().sum();
    grad_in.values.noalias() += dpre * w_.transpose();
    return grad_in;
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::string name, std::size_t in, std::size_t out) : Layer(std::move(name)), in_(in), out_(out) {
    weight_ = Matrix::Zero(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
    bias_ = Matrix::Zero(1, static_cast<Eigen::Index>(out));
    grad_weight_ = Matrix::Zero(weight_.rows(), weight_.cols());
    grad_bias_ = Matrix::Zero(1, bias_.cols());
}

void Dense::init(Rng& rng) {
    fill_uniform(weight_, rng, std::sqrt(3.0 / static_cast<double>(in_)));
    bias_.setZero();
}

std::vector<ParamRef> Dense::params() {
    return {{&weight_, &grad_weight_, "kernel"}, {&bias_, &grad_bias_, "bias"}};
}

Activation Dense::forward(const Activation& in, ForwardContext&) {
    require(in.channels() == in_, fmt::format("{}: expected {} inputs, got {}", name(), in_, in.channels()));
    input_ = in.values;
    Activation out{(in.values * weight_).rowwise() + bias_.row(0), in.batch, in.steps};
    return out;
}

Activation Dense::backward(const Activation& grad_out) {
    grad_weight_.noalias() += input_.transpose() * grad_out.values;
    grad_bias_ += grad_out.values.colwise().sum();
    return Activation{grad_out.values * weight_.transpose(), grad_out.batch, grad_out.steps};
}

// ---------------------------------------------------------------- loss

Matrix softmax(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        p.row(r) = (logits.row(r).array() - m).exp();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

double softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels, Matrix* grad) {
    require(static_cast<std::size_t>(logits.rows()) == labels.size(), "label count does not match batch");
    const Matrix p = softmax(logits);
    const auto n = static_cast<double>(labels.size());
    double loss = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const int y = labels[static_cast<std::size_t>(r)];
        require(y >= 0 && y < logits.cols(), "label out of range");
        // log-sum-exp form avoids log(0) for saturated rows.
        const double m = logits.row(r).maxCoeff();
        const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
        loss += lse - logits(r, y);
    }
    if (grad) {
        *grad = p;
        for (Eigen::Index r = 0; r < logits.rows(); ++r) (*grad)(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
        *grad /= n;
    }
    return loss / n;
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) { data.assign(numel(), 0.0); }

std::size_t Tensor::numel() const noexcept {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

void Tensor::validate() const {
    if (numel() != data.size()) throw Error(ErrorKind::ShapeError, "tensor data does not match its shape");
    for (double v : data) {
        if (!std::isfinite(v)) throw Error(ErrorKind::ShapeError, "tensor holds non-finite values");
    }
}

}  // namespace tribo::nn
