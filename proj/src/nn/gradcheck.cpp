#include "tribo/nn/gradcheck.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>

namespace tribo::nn {

namespace {

// Checks d loss / d m against the analytic gradient `analytic` (same shape as m).
void compare_block(Matrix& m, const Matrix& analytic, const std::function<double()>& loss, const std::string& label,
                   const GradCheckOptions& opt, Rng& pick, GradCheckResult& r) {
    const auto n = static_cast<std::size_t>(m.size());
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (opt.max_entries > 0 && opt.max_entries < n) {
        portable_shuffle(idx.begin(), idx.end(), pick);
        idx.resize(opt.max_entries);
    }
    for (std::size_t i : idx) {
        double& v = m.data()[i];
        const double saved = v;
        v = saved + opt.step;
        const double up = loss();
        v = saved - opt.step;
        const double down = loss();
        v = saved;
        const double numeric = (up - down) / (2.0 * opt.step);
        const double a = analytic.data()[i];
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opt.floor});
        ++r.checked;
        if (rel > r.max_rel_error || !std::isfinite(rel)) {
            r.max_rel_error = std::isfinite(rel) ? rel : INFINITY;
            r.worst = fmt::format("{}[{}]", label, i);
        }
    }
}

}  // namespace

GradCheckResult check_layer_gradients(Layer& layer, const Activation& input, const GradCheckOptions& opt) {
    Rng rng(opt.seed);
    const std::uint64_t dropout_seed = derive_seed(opt.seed, 1);
    Activation x = input;
    auto run = [&]() {
        Rng dr(dropout_seed);
        ForwardContext ctx{opt.training, &dr};
        return layer.forward(x, ctx);
    };
    const Activation out0 = run();
    Matrix weights(out0.values.rows(), out0.values.cols());
    for (Eigen::Index i = 0; i < weights.size(); ++i) weights.data()[i] = rng.uniform(-1.0, 1.0);
    auto loss = [&]() { return run().values.cwiseProduct(weights).sum(); };

    layer.zero_grad();
    run();
    const Activation grad_in = layer.backward(Activation{weights, out0.batch, out0.steps});
    std::vector<Matrix> grads;
    for (const ParamRef& p : layer.params()) grads.push_back(*p.grad);

    GradCheckResult r;
    Rng pick(derive_seed(opt.seed, 2));
    compare_block(x.values, grad_in.values, loss, layer.name() + "/input", opt, pick, r);
    auto params = layer.params();
    for (std::size_t k = 0; k < params.size(); ++k) {
        compare_block(*params[k].value, grads[k], loss, layer.name() + "/" + params[k].name, opt, pick, r);
    }
    return r;
}

GradCheckResult check_model_gradients(Model& model, const Matrix& inputs, const std::vector<int>& labels,
                                      const GradCheckOptions& opt) {
    const std::uint64_t dropout_seed = derive_seed(opt.seed, 1);
    Matrix x = inputs;
    auto logits = [&]() {
        Rng dr(dropout_seed);
        ForwardContext ctx{opt.training, &dr};
        return model.forward(x, ctx);
    };
    auto loss = [&]() { return softmax_cross_entropy(logits(), labels, nullptr); };

    model.zero_grad();
    Matrix g;
    softmax_cross_entropy(logits(), labels, &g);
    model.backward(g);
    std::vector<Matrix> grads;
    for (const ParamRef& p : model.params()) grads.push_back(*p.grad);

    GradCheckResult r;
    Rng pick(derive_seed(opt.seed, 2));
    auto params = model.params();
    for (std::size_t k = 0; k < params.size(); ++k) {
        compare_block(*params[k].value, grads[k], loss, params[k].name, opt, pick, r);
    }
    return r;
}

GradCheckResult check_loss_gradients(const Matrix& logits, const std::vector<int>& labels,
                                     const GradCheckOptions& opt) {
    Matrix z = logits;
    Matrix g;
    softmax_cross_entropy(z, labels, &g);
    GradCheckResult r;
    Rng pick(derive_seed(opt.seed, 2));
    compare_block(z, g, [&]() { return softmax_cross_entropy(z, labels, nullptr); }, "logits", opt, pick, r);
    return r;
}

namespace {

Activation random_activation(Rng& rng, std::size_t batch, std::size_t steps, std::size_t channels) {
    Activation a{Matrix(static_cast<Eigen::Index>(batch * steps), static_cast<Eigen::Index>(channels)), batch, steps};
    for (Eigen::Index i = 0; i < a.values.size(); ++i) a.values.data()[i] = rng.normal();
    return a;
}

void randomize_params(Layer& l, Rng& rng, double scale) {
    for (const ParamRef& p : l.params()) {
        for (Eigen::Index i = 0; i < p.value->size(); ++i) p.value->data()[i] = scale * rng.normal();
    }
}

void absorb(LayerTypeReport& rep, const GradCheckResult& r) {
    ++rep.shapes;
    if (r.max_rel_error > rep.max_rel_error || !std::isfinite(r.max_rel_error)) {
        rep.max_rel_error = r.max_rel_error;
        rep.worst = r.worst;
    }
}

}  // namespace

std::vector<LayerTypeReport> gradient_suite(std::uint64_t seed, std::size_t shapes_per_type) {
    Rng rng(seed);
    auto dim = [&](std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng.below(hi - lo + 1)); };
    std::vector<LayerTypeReport> out;
    auto suite = [&](const std::string& type, const std::function<GradCheckResult(std::uint64_t)>& one) {
        LayerTypeReport rep;
        rep.type = type;
        for (std::size_t s = 0; s < shapes_per_type; ++s) absorb(rep, one(rng.next()));
        out.push_back(rep);
    };
    GradCheckOptions opt;

    suite("Conv1D", [&](std::uint64_t s) {
        const std::size_t c = dim(1, 3), f = dim(1, 4), k = dim(1, 6);
        Conv1D l("conv", c, f, k);
        randomize_params(l, rng, 0.5);
        opt.seed = s;
        return check_layer_gradients(l, random_activation(rng, dim(1, 3), dim(2, 9), c), opt);
    });
    for (bool training : {true, false}) {
        suite(training ? "BatchNormalization(train)" : "BatchNormalization(infer)", [&](std::uint64_t s) {
            const std::size_t c = dim(1, 4);
            BatchNorm l("bn", c);
            randomize_params(l, rng, 1.0);
            for (Eigen::Index i = 0; i < l.running_mean().size(); ++i) {
                l.running_mean()(0, i) = rng.normal();
                l.running_var()(0, i) = rng.uniform(0.5, 2.0);
            }
            opt.seed = s;
            opt.training = training;
            auto r = check_layer_gradients(l, random_activation(rng, dim(1, 3), dim(2, 6), c), opt);
            opt.training = true;
            return r;
        });
    }
    for (ActivationKind k : {ActivationKind::Relu, ActivationKind::Tanh}) {
        suite(fmt::format("Activation({})", to_string(k)), [&](std::uint64_t s) {
            Activate l("act", k);
            opt.seed = s;
            return check_layer_gradients(l, random_activation(rng, dim(1, 3), dim(1, 6), dim(1, 4)), opt);
        });
    }
    suite("MaxPooling1D", [&](std::uint64_t s) {
        MaxPool1D l("pool", dim(1, 3));
        opt.seed = s;
        return check_layer_gradients(l, random_activation(rng, dim(1, 3), dim(3, 10), dim(1, 4)), opt);
    });
    suite("Dropout", [&](std::uint64_t s) {
        Dropout l("dropout", rng.uniform(0.1, 0.6));
        opt.seed = s;
        return check_layer_gradients(l, random_activation(rng, dim(1, 3), dim(1, 6), dim(1, 4)), opt);
    });
    suite("Bidirectional(LSTM)", [&](std::uint64_t s) {
        const std::size_t c = dim(1, 4);
        BiLSTM l("bilstm", c, dim(1, 4));
        randomize_params(l, rng, 0.5);
        opt.seed = s;
        return check_layer_gradients(l, random_activation(rng, dim(1, 3), dim(1, 6), c), opt);
    });
    suite("Attention", [&](std::uint64_t s) {
        const std::size_t c = 2 * dim(1, 3);
        AdditiveAttention l("attention", c, dim(1, 5));
        randomize_params(l, rng, 0.7);
        opt.seed = s;
        return check_layer_gradients(l, random_activation(rng, dim(1, 3), dim(1, 7), c), opt);
    });
    suite("Dense", [&](std::uint64_t s) {
        const std::size_t in = dim(1, 6);
        Dense l("dense", in, dim(1, 5));
        randomize_params(l, rng, 0.5);
        opt.seed = s;
        return check_layer_gradients(l, random_activation(rng, dim(1, 4), 1, in), opt);
    });
    suite("SoftmaxCrossEntropy", [&](std::uint64_t s) {
        const std::size_t b = dim(1, 4), k = dim(2, 8);
        Matrix z(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k));
        for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = 2.0 * rng.normal();
        std::vector<int> y(b);
        for (int& v : y) v = static_cast<int>(rng.below(k));
        opt.seed = s;
        return check_loss_gradients(z, y, opt);
    });
    suite("Model", [&](std::uint64_t s) {
        ModelConfig cfg;
        cfg.input_len = dim(8, 16);
        cfg.conv = {{dim(2, 4), dim(2, 5), false}, {dim(2, 4), dim(2, 5), true}};
        cfg.lstm_hidden = {dim(2, 3), dim(2, 3)};
        cfg.attention_units = dim(2, 4);
        cfg.classes = dim(2, 5);
        Model m(cfg, s);
        const std::size_t b = dim(2, 3);
        Matrix x(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(cfg.input_len));
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        std::vector<int> y(b);
        for (int& v : y) v = static_cast<int>(rng.below(cfg.classes));
        opt.seed = s;
        opt.max_entries = 12;
        auto r = check_model_gradients(m, x, y, opt);
        opt.max_entries = 0;
        return r;
    });
    return out;
}

}  // namespace tribo::nn
