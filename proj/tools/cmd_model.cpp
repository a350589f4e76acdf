#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <memory>
#include <sstream>

#include "cli.hpp"
#include "tribo/csv.hpp"
#include "tribo/error.hpp"
#include "tribo/nn/model.hpp"
#include "tribo/nn/train.hpp"

namespace tribo::cli {

namespace {

std::string confusion_csv(const nn::ConfusionMatrix& m, const std::vector<std::string>& labels) {
    std::string out = "truth\\predicted";
    for (const auto& l : labels) out += "," + l;
    out += "\n";
    for (std::size_t t = 0; t < m.classes; ++t) {
        out += labels[t];
        for (std::size_t p = 0; p < m.classes; ++p) out += fmt::format(",{}", m.at(t, p));
        out += "\n";
    }
    return out;
}

void add_train(CLI::App& app) {
    struct Opts {
        std::string dataset, out, history;
        std::optional<std::size_t> classes, epochs, filters, kernel, layers;
        std::size_t batch = 32;
        double lr = 1e-3;
        std::uint64_t seed = 1;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("train", "Train a CNN-BiLSTM-attention model on a dataset directory");
    c->add_option("--dataset", o->dataset, "Dataset root (uses train/) or split directory")->required();
    c->add_option("--out", o->out, "Model file to write")->required();
    c->add_option("--classes", o->classes, "Expected class count (checked against the dataset)");
    c->add_option("--epochs", o->epochs, "Epochs (default 30 for posture, 60 for identity)");
    c->add_option("--batch", o->batch, "Mini-batch size")->capture_default_str();
    c->add_option("--lr", o->lr, "Adam learning rate")->capture_default_str();
    c->add_option("--filters", o->filters, "Uniform conv filters (sweep-style architecture)");
    c->add_option("--kernel", o->kernel, "Uniform conv kernel (sweep-style architecture)");
    c->add_option("--conv-layers", o->layers, "Conv block count (sweep-style architecture)");
    c->add_option("--history", o->history, "Per-epoch loss/accuracy CSV");
    c->add_option("--seed", o->seed, "Seeds initialization, shuffling and dropout")->capture_default_str();
    c->callback([o] {
        const DatasetSplit split = load_split(o->dataset, "train");
        const auto labels = class_labels(split.task, split.records);
        if (o->classes && *o->classes != labels.size()) {
            throw Error(ErrorKind::InvalidSpec,
                        fmt::format("--classes {} but the dataset has {} labels", *o->classes, labels.size()));
        }
        nn::ModelConfig mc;
        if (o->filters || o->kernel || o->layers) {
            mc = nn::ModelConfig::with_conv(o->filters.value_or(64), o->kernel.value_or(32), o->layers.value_or(2), labels.size());
        }
        mc.classes = labels.size();
        nn::Model model(mc, init_seed(o->seed));
        model.set_labels(labels);
        const nn::Dataset data = build_dataset(split, labels);
        nn::TrainConfig tc;
        tc.epochs = o->epochs.value_or(split.task == Task::Identity ? 60 : 30);
        tc.batch_size = o->batch;
        tc.learning_rate = o->lr;
        tc.seed = o->seed;
        const auto hist = nn::train(model, data, tc, [](const nn::EpochStats& s) {
            spdlog::info("epoch {} loss {:.4f} accuracy {:.4f}", s.epoch, s.loss, s.accuracy);
        });
        nn::save_model(model, o->out);
        if (!o->history.empty()) {
            std::string text = "epoch,loss,accuracy\n";
            for (const auto& e : hist.epochs) text += fmt::format("{},{:.6f},{:.6f}\n", e.epoch, e.loss, e.accuracy);
            write_text(o->history, text);
        }
        const auto& last = hist.epochs.back();
        print_json({{"task", std::string(to_string(split.task))},
                    {"samples", data.size()},
                    {"classes", labels.size()},
                    {"params", model.param_count()},
                    {"epochs", tc.epochs},
                    {"loss", last.loss},
                    {"train_accuracy", last.accuracy},
                    {"out", o->out}});
    });
}

void add_eval(CLI::App& app) {
    struct Opts {
        std::string model, dataset, confusion;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("eval", "Accuracy and confusion matrix of a model on a dataset split");
    c->add_option("--model", o->model, "Model file")->required()->check(CLI::ExistingFile);
    c->add_option("--dataset", o->dataset, "Dataset root (uses test/) or split directory")->required();
    c->add_option("--confusion", o->confusion, "Confusion matrix CSV (rows truth, columns prediction)");
    c->callback([o] {
        nn::Model model = nn::load_model(o->model);
        const DatasetSplit split = load_split(o->dataset, "test");
        const nn::Dataset data = build_dataset(split, model.labels());
        const auto r = nn::evaluate(model, data);
        if (!o->confusion.empty()) write_text(o->confusion, confusion_csv(r.confusion, model.labels()));
        print_json({{"accuracy", r.accuracy}, {"samples", data.size()}});
    });
}

void add_infer(CLI::App& app) {
    struct Opts {
        std::string model, in;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("infer", "Classify one 4-channel record CSV");
    c->add_option("--model", o->model, "Model file")->required()->check(CLI::ExistingFile);
    c->add_option("--in", o->in, "Record CSV")->required()->check(CLI::ExistingFile);
    c->callback([o] {
        nn::Model model = nn::load_model(o->model);
        const auto w = preprocess(csv::read_record(o->in));
        nn::Matrix x(1, static_cast<Eigen::Index>(w.values.size()));
        for (std::size_t i = 0; i < w.values.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = w.values[i];
        const nn::Matrix p = model.predict_proba(x);
        const int k = nn::argmax(p.row(0));
        std::vector<double> probs(p.data(), p.data() + p.cols());
        print_json({{"class", model.labels()[static_cast<std::size_t>(k)]}, {"confidence", probs[static_cast<std::size_t>(k)]}, {"probs", probs}});
    });
}

void add_export(CLI::App& app) {
    struct Opts {
        std::string model, dataset, tap = "post-attention", out;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("export-features", "Per-record activations at a tap point as CSV");
    c->add_option("--model", o->model, "Model file")->required()->check(CLI::ExistingFile);
    c->add_option("--dataset", o->dataset, "Dataset root (uses test/) or split directory")->required();
    c->add_option("--tap", o->tap, "input, post-cnn, post-bilstm or post-attention")
        ->check(CLI::IsMember({"input", "post-cnn", "post-bilstm", "post-attention"}))
        ->capture_default_str();
    c->add_option("--out", o->out, "Output CSV (- for stdout)")->capture_default_str();
    c->callback([o] {
        nn::Model model = nn::load_model(o->model);
        const DatasetSplit split = load_split(o->dataset, "test");
        std::ostringstream os;
        export_features(model, split, nn::parse_tap(o->tap), os);
        write_text(o->out, os.str());
    });
}

void add_sweep(CLI::App& app) {
    struct Opts {
        std::string dataset, out, param = "all";
        std::size_t epochs = 10;
        std::uint64_t seed = 1;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("sweep", "Conv hyperparameter grid: filters, kernel size and layer count");
    c->add_option("--dataset", o->dataset, "Dataset root with train/ and test/")->required();
    c->add_option("--out", o->out, "Result CSV (- for stdout)")->capture_default_str();
    c->add_option("--param", o->param, "filters, kernel, layers or all")
        ->check(CLI::IsMember({"filters", "kernel", "layers", "all"}))
        ->capture_default_str();
    c->add_option("--epochs", o->epochs, "Epochs per configuration")->capture_default_str();
    c->add_option("--seed", o->seed, "Random seed shared by every configuration")->capture_default_str();
    c->callback([o] {
        const DatasetSplit train_split = read_split(std::filesystem::path(o->dataset) / "train");
        const DatasetSplit test_split = read_split(std::filesystem::path(o->dataset) / "test");
        const auto labels = class_labels(train_split.task, train_split.records);
        const nn::Dataset train_data = build_dataset(train_split, labels);
        const nn::Dataset test_data = build_dataset(test_split, labels);

        struct Point {
            std::string param;
            std::size_t value, filters, kernel, layers;
        };
        std::vector<Point> grid;
        if (o->param == "filters" || o->param == "all") {
            for (std::size_t f : {16, 32, 64, 128}) grid.push_back({"filters", f, f, 32, 2});
        }
        if (o->param == "kernel" || o->param == "all") {
            for (std::size_t k : {8, 16, 32, 64}) grid.push_back({"kernel", k, 64, k, 2});
        }
        if (o->param == "layers" || o->param == "all") {
            for (std::size_t l : {1, 2, 3}) grid.push_back({"layers", l, 64, 32, l});
        }

        std::string text = "param,value,filters,kernel,layers,params,train_accuracy,test_accuracy,seconds\n";
        for (const auto& pt : grid) {
            const auto t0 = std::chrono::steady_clock::now();
            nn::Model model(nn::ModelConfig::with_conv(pt.filters, pt.kernel, pt.layers, labels.size()), init_seed(o->seed));
            model.set_labels(labels);
            nn::TrainConfig tc;
            tc.epochs = o->epochs;
            tc.seed = o->seed;
            const auto hist = nn::train(model, train_data, tc);
            const double test_acc = nn::evaluate(model, test_data).accuracy;
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            spdlog::info("{}={}: test accuracy {:.4f} ({:.1f} s)", pt.param, pt.value, test_acc, secs);
            text += fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{:.2f}\n", pt.param, pt.value, pt.filters, pt.kernel,
                                pt.layers, model.param_count(), hist.epochs.back().accuracy, test_acc, secs);
        }
        write_text(o->out, text);
    });
}

}  // namespace

void add_model_commands(CLI::App& app) {
    add_train(app);
    add_sweep(app);
    add_eval(app);
    add_infer(app);
    add_export(app);
}

}  // namespace tribo::cli
