#include "tribo/nn/train.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numeric>

#include "tribo/error.hpp"

namespace tribo::nn {

void TrainConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::InvalidSpec, m); };
    if (!(learning_rate > 0.0)) fail("learning rate must be positive");
    if (epochs < 1) fail("epochs must be at least 1");
    if (batch_size < 1) fail("batch size must be at least 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("Adam betas must be in [0, 1)");
    if (!(epsilon > 0.0)) fail("Adam epsilon must be positive");
}

void Adam::step(const std::vector<ParamRef>& params) {
    if (m_.empty()) {
        for (const ParamRef& p : params) {
            m_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
            v_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
        }
    }
    if (m_.size() != params.size()) throw Error(ErrorKind::ShapeError, "parameter list changed between Adam steps");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const double step = cfg_.learning_rate / c1;
    const double root_c2 = std::sqrt(c2);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Matrix& g = *params[i].grad;
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
        // lr * m_hat / (sqrt(v_hat) + eps) with the corrections folded in.
        params[i].value->array() -= step * m_[i].array() / (v_[i].array().sqrt() / root_c2 + cfg_.epsilon);
    }
}

int argmax(const Eigen::Ref<const RowVector>& row) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < row.size(); ++k) {
        if (row(k) > row(best)) best = k;
    }
    return static_cast<int>(best);
}

namespace {

void check_dataset(const Model& model, const Dataset& data) {
    if (data.size() == 0) throw Error(ErrorKind::EmptyDataset, "dataset has no samples");
    if (static_cast<std::size_t>(data.inputs.rows()) != data.size()) {
        throw Error(ErrorKind::ShapeError, "input rows do not match label count");
    }
    for (int y : data.labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= model.config().classes) {
            throw Error(ErrorKind::InvalidInput, fmt::format("label {} outside the model's {} classes", y,
                                                             model.config().classes));
        }
    }
}

}  // namespace

TrainHistory train(Model& model, const Dataset& data, const TrainConfig& cfg,
                   const std::function<void(const EpochStats&)>& on_epoch) {
    cfg.validate();
    check_dataset(model, data);
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5F));
    Rng dropout_rng(derive_seed(cfg.seed, 0xD0));
    Adam adam(cfg);
    const auto params = model.params();
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    TrainHistory history;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        portable_shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t n = std::min(cfg.batch_size, order.size() - start);
            Matrix x(static_cast<Eigen::Index>(n), data.inputs.cols());
            std::vector<int> y(n);
            for (std::size_t i = 0; i < n; ++i) {
                x.row(static_cast<Eigen::Index>(i)) = data.inputs.row(static_cast<Eigen::Index>(order[start + i]));
                y[i] = data.labels[order[start + i]];
            }
            ForwardContext ctx{true, &dropout_rng};
            model.zero_grad();
            const Matrix logits = model.forward(x, ctx);
            Matrix grad;
            loss_sum += softmax_cross_entropy(logits, y, &grad) * static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (argmax(logits.row(static_cast<Eigen::Index>(i))) == y[i]) ++correct;
            }
            model.backward(grad);
            adam.step(params);
        }
        EpochStats s{epoch, loss_sum / static_cast<double>(data.size()),
                     static_cast<double>(correct) / static_cast<double>(data.size())};
        history.epochs.push_back(s);
        if (on_epoch) on_epoch(s);
    }
    return history;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
    std::size_t s = 0;
    for (std::size_t p = 0; p < classes; ++p) s += at(truth, p);
    return s;
}

EvalResult evaluate(Model& model, const Dataset& data, std::size_t batch_size) {
    check_dataset(model, data);
    if (batch_size == 0) batch_size = data.size();
    EvalResult r;
    r.confusion = ConfusionMatrix(model.config().classes);
    r.probabilities.resize(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(model.config().classes));
    std::size_t correct = 0;
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        const auto n = static_cast<Eigen::Index>(std::min(batch_size, data.size() - start));
        const auto first = static_cast<Eigen::Index>(start);
        r.probabilities.middleRows(first, n) = model.predict_proba(data.inputs.middleRows(first, n));
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int pred = argmax(r.probabilities.row(static_cast<Eigen::Index>(i)));
        r.predictions.push_back(pred);
        ++r.confusion.at(static_cast<std::size_t>(data.labels[i]), static_cast<std::size_t>(pred));
        if (pred == data.labels[i]) ++correct;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    return r;
}

}  // namespace tribo::nn
