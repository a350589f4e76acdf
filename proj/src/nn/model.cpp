#include "tribo/nn/model.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "tribo/error.hpp"

namespace tribo::nn {

namespace {

std::string suffixed(std::string_view base, std::size_t i) {
    return i == 0 ? std::string(base) : fmt::format("{}_{}", base, i);
}

ActivationKind parse_activation(const std::string& s) {
    if (s == "relu") return ActivationKind::Relu;
    if (s == "tanh") return ActivationKind::Tanh;
    throw Error(ErrorKind::ParseError, fmt::format("unknown activation '{}'", s));
}

}  // namespace

void ModelConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::InvalidSpec, m); };
    if (input_len == 0) fail("input_len must be positive");
    if (conv.empty()) fail("at least one conv block is required");
    if (lstm_hidden.empty()) fail("at least one BiLSTM block is required");
    if (pool < 1) fail("pool must be at least 1");
    if (classes < 2) fail("at least two classes are required");
    if (attention_units == 0) fail("attention_units must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
    std::size_t steps = input_len;
    for (const ConvBlock& b : conv) {
        if (b.filters == 0 || b.kernel == 0) fail("conv filters and kernel must be positive");
        steps /= pool;
    }
    if (steps == 0) fail("input is pooled away before the recurrent layers");
    for (std::size_t h : lstm_hidden) {
        if (h == 0) fail("LSTM hidden size must be positive");
    }
}

ModelConfig ModelConfig::with_conv(std::size_t filters, std::size_t kernel, std::size_t layers, std::size_t classes) {
    ModelConfig c;
    c.classes = classes;
    c.conv.clear();
    for (std::size_t i = 0; i < layers; ++i) c.conv.push_back({filters, kernel, i > 0});
    return c;
}

nlohmann::json to_json(const ModelConfig& c) {
    nlohmann::json conv = nlohmann::json::array();
    for (const ConvBlock& b : c.conv) {
        conv.push_back({{"filters", b.filters}, {"kernel", b.kernel}, {"activation", b.activation}});
    }
    return {{"input_len", c.input_len},
            {"conv", conv},
            {"pool", c.pool},
            {"lstm_hidden", c.lstm_hidden},
            {"dropout", c.dropout},
            {"attention_units", c.attention_units},
            {"classes", c.classes},
            {"conv_activation", std::string(to_string(c.conv_activation))},
            {"head_activation", std::string(to_string(c.head_activation))}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    try {
        c.input_len = j.at("input_len").get<std::size_t>();
        c.conv.clear();
        for (const auto& b : j.at("conv")) {
            c.conv.push_back({b.at("filters").get<std::size_t>(), b.at("kernel").get<std::size_t>(),
                              b.at("activation").get<bool>()});
        }
        c.pool = j.at("pool").get<std::size_t>();
        c.lstm_hidden = j.at("lstm_hidden").get<std::vector<std::size_t>>();
        c.dropout = j.at("dropout").get<double>();
        c.attention_units = j.at("attention_units").get<std::size_t>();
        c.classes = j.at("classes").get<std::size_t>();
        c.conv_activation = parse_activation(j.at("conv_activation").get<std::string>());
        c.head_activation = parse_activation(j.at("head_activation").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, fmt::format("model config: {}", e.what()));
    }
    c.validate();
    return c;
}

std::string_view to_string(Tap t) {
    switch (t) {
        case Tap::Input: return "input";
        case Tap::PostCnn: return "post-cnn";
        case Tap::PostBiLstm: return "post-bilstm";
        case Tap::PostAttention: return "post-attention";
    }
    return "?";
}

Tap parse_tap(std::string_view s) {
    for (Tap t : {Tap::Input, Tap::PostCnn, Tap::PostBiLstm, Tap::PostAttention}) {
        if (s == to_string(t)) return t;
    }
    throw Error(ErrorKind::InvalidInput, fmt::format("unknown tap '{}'", s));
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)), seed_(seed) {
    config_.validate();
    Rng rng(derive_seed(seed, 0x1A17));
    std::size_t channels = 1;
    std::size_t activations = 0;
    for (std::size_t i = 0; i < config_.conv.size(); ++i) {
        const ConvBlock& b = config_.conv[i];
        auto conv = std::make_unique<Conv1D>(suffixed("conv_layer", i), channels, b.filters, b.kernel);
        conv->init(rng);
        layers_.push_back(std::move(conv));
        layers_.push_back(std::make_unique<BatchNorm>(suffixed("batch_normalization", i), b.filters));
        if (b.activation) {
            layers_.push_back(std::make_unique<Activate>(suffixed("activation", i), config_.conv_activation));
            ++activations;
        }
        layers_.push_back(std::make_unique<MaxPool1D>(fmt::format("max_pooling_{}", i + 1), config_.pool));
        channels = b.filters;
    }
    post_cnn_ = layers_.size();
    for (std::size_t i = 0; i < config_.lstm_hidden.size(); ++i) {
        auto lstm = std::make_unique<BiLSTM>(fmt::format("bilstm_layer_{}", i + 1), channels, config_.lstm_hidden[i]);
        lstm->init(rng);
        layers_.push_back(std::move(lstm));
        layers_.push_back(std::make_unique<Dropout>(suffixed("dropout", i), config_.dropout));
        channels = 2 * config_.lstm_hidden[i];
    }
    post_lstm_ = layers_.size();
    auto att = std::make_unique<AdditiveAttention>("attention_layer", channels, config_.attention_units);
    att->init(rng);
    layers_.push_back(std::move(att));
    post_attention_ = layers_.size();
    channels *= 2;
    layers_.push_back(std::make_unique<Activate>(fmt::format("activation_{}", std::max<std::size_t>(activations, 1) + 1),
                                                 config_.head_activation));
    auto dense = std::make_unique<Dense>("dense", channels, config_.classes);
    dense->init(rng);
    layers_.push_back(std::move(dense));

    labels_.clear();
    for (std::size_t k = 0; k < config_.classes; ++k) labels_.push_back(std::to_string(k));
}

void Model::set_labels(std::vector<std::string> labels) {
    if (labels.size() != config_.classes) {
        throw Error(ErrorKind::ShapeError, fmt::format("expected {} labels, got {}", config_.classes, labels.size()));
    }
    labels_ = std::move(labels);
}

Layer& Model::layer(std::string_view name) {
    for (auto& l : layers_) {
        if (l->name() == name) return *l;
    }
    throw Error(ErrorKind::IndexError, fmt::format("no layer named '{}'", name));
}

Activation Model::run(const Matrix& inputs, ForwardContext& ctx, std::optional<Tap> stop) {
    if (static_cast<std::size_t>(inputs.cols()) != config_.input_len) {
        throw Error(ErrorKind::ShapeError,
                    fmt::format("model expects {} input values, got {}", config_.input_len, inputs.cols()));
    }
    if (inputs.rows() == 0) throw Error(ErrorKind::ShapeError, "empty batch");
    Activation a;
    a.batch = static_cast<std::size_t>(inputs.rows());
    a.steps = config_.input_len;
    a.values = Eigen::Map<const Matrix>(inputs.data(), inputs.size(), 1);
    std::size_t end = layers_.size();
    if (stop) {
        switch (*stop) {
            case Tap::Input: end = 0; break;
            case Tap::PostCnn: end = post_cnn_; break;
            case Tap::PostBiLstm: end = post_lstm_; break;
            case Tap::PostAttention: end = post_attention_; break;
        }
    }
    for (std::size_t i = 0; i < end; ++i) a = layers_[i]->forward(a, ctx);
    return a;
}

Matrix Model::forward(const Matrix& inputs, ForwardContext& ctx) { return run(inputs, ctx, std::nullopt).values; }

void Model::backward(const Matrix& grad_logits) {
    Activation g{grad_logits, static_cast<std::size_t>(grad_logits.rows()), 1};
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

Matrix Model::predict_proba(const Matrix& inputs) {
    ForwardContext ctx;
    return softmax(forward(inputs, ctx));
}

Matrix Model::features(const Matrix& inputs, Tap tap) {
    ForwardContext ctx;
    const Activation a = run(inputs, ctx, tap);
    const auto width = static_cast<Eigen::Index>(a.steps * a.channels());
    return Eigen::Map<const Matrix>(a.values.data(), static_cast<Eigen::Index>(a.batch), width);
}

std::vector<ParamRef> Model::params() {
    std::vector<ParamRef> out;
    for (auto& l : layers_) {
        for (ParamRef p : l->params()) {
            p.name = l->name() + "/" + p.name;
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::vector<Matrix*> Model::state() {
    std::vector<Matrix*> out;
    for (auto& l : layers_) {
        for (Matrix* m : l->state()) out.push_back(m);
    }
    return out;
}

void Model::zero_grad() {
    for (auto& l : layers_) l->zero_grad();
}

std::size_t Model::param_count() {
    std::size_t n = 0;
    for (auto& l : layers_) n += l->param_count();
    return n;
}

std::size_t Model::trainable_count() {
    std::size_t n = 0;
    for (auto& l : layers_) n += l->trainable_count();
    return n;
}

std::vector<LayerSummary> Model::summary() {
    std::vector<LayerSummary> out;
    std::size_t steps = config_.input_len, channels = 1;
    for (auto& l : layers_) {
        steps = l->output_steps(steps);
        channels = l->output_channels(channels);
        out.push_back({l->name(), std::string(l->kind()), steps, channels, l->param_count()});
    }
    return out;
}

// ---------------------------------------------------------------- serialization

namespace {

constexpr char kMagic[8] = {'T', 'R', 'B', 'M', 'O', 'D', 'E', 'L'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorKind::ParseError, "model file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void put_f64(std::ostream& os, double d) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error(ErrorKind::ParseError, "model parameter block truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

std::vector<Matrix*> blocks(Model& m) {
    std::vector<Matrix*> out;
    for (auto& l : m.layers()) {
        for (const ParamRef& p : l->params()) out.push_back(p.value);
        for (Matrix* s : l->state()) out.push_back(s);
    }
    return out;
}

}  // namespace

void save_model(Model& m, std::ostream& os) {
    const nlohmann::json header{{"format", "tribo-model"},
                                {"version", kModelFormatVersion},
                                {"seed", m.seed()},
                                {"config", to_json(m.config())},
                                {"labels", m.labels()},
                                {"param_count", m.param_count()}};
    const std::string text = header.dump();
    os.write(kMagic, sizeof kMagic);
    put_u32(os, kModelFormatVersion);
    put_u32(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (Matrix* b : blocks(m)) {
        for (Eigen::Index i = 0; i < b->size(); ++i) put_f64(os, b->data()[i]);
    }
    if (!os) throw Error(ErrorKind::IoError, "failed to write model");
}

void save_model(Model& m, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::IoError, fmt::format("cannot open {} for writing", path.string()));
    save_model(m, os);
}

Model load_model(std::istream& is) {
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        throw Error(ErrorKind::ParseError, "not a model file (bad magic)");
    }
    const std::uint32_t version = get_u32(is);
    if (version != kModelFormatVersion) {
        throw Error(ErrorKind::Unsupported, fmt::format("model format version {} is not supported", version));
    }
    const std::uint32_t len = get_u32(is);
    if (len > (1u << 24)) throw Error(ErrorKind::ParseError, "model header is implausibly large");
    std::string text(len, '\0');
    if (!is.read(text.data(), len)) throw Error(ErrorKind::ParseError, "model header truncated");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, fmt::format("model header: {}", e.what()));
    }
    Model m(model_config_from_json(header.at("config")), header.at("seed").get<std::uint64_t>());
    if (header.at("param_count").get<std::size_t>() != m.param_count()) {
        throw Error(ErrorKind::ModelError, "parameter count in header does not match the config");
    }
    if (header.contains("labels")) m.set_labels(header.at("labels").get<std::vector<std::string>>());
    for (Matrix* b : blocks(m)) {
        for (Eigen::Index i = 0; i < b->size(); ++i) b->data()[i] = get_f64(is);
    }
    if (is.peek() != std::char_traits<char>::eof()) throw Error(ErrorKind::ModelError, "trailing bytes after parameters");
    return m;
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::IoError, fmt::format("cannot open model {}", path.string()));
    return load_model(is);
}

}  // namespace tribo::nn
