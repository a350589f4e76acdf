#include <fmt/format.h>

#include <filesystem>
#include <memory>
#include <sstream>

#include "cli.hpp"
#include "tribo/csv.hpp"
#include "tribo/emd.hpp"
#include "tribo/error.hpp"
#include "tribo/stft.hpp"
#include "tribo/synth.hpp"
#include "tribo/wavelet.hpp"

namespace tribo::cli {

namespace fs = std::filesystem;

namespace {

void add_synth(CLI::App& app) {
    auto* synth = app.add_subcommand("synth", "Generate synthetic datasets, records, ECG traces or sensor responses");
    synth->require_subcommand(1);

    {
        struct Opts {
            std::string out, task = "posture";
            std::size_t per_class = 100, sets = 50, train_sets = 40, samples = 500;
            double duration = 5.0, rate = 100.0, snr = 31.2, drift = 0.1, train_fraction = 0.8;
            std::uint64_t seed = 1;
        };
        auto o = std::make_shared<Opts>();
        auto* c = synth->add_subcommand("dataset", "Write DIR/train and DIR/test with CSV records and manifest.json");
        c->add_option("--out", o->out, "Output directory")->required();
        c->add_option("--task", o->task, "posture or identity")->check(CLI::IsMember({"posture", "identity"}))->capture_default_str();
        c->add_option("--per-class", o->per_class, "Posture: records per class")->capture_default_str();
        c->add_option("--train-fraction", o->train_fraction, "Posture: training share per class")->capture_default_str();
        c->add_option("--duration", o->duration, "Posture: record length, s")->capture_default_str();
        c->add_option("--sets", o->sets, "Identity: records per subject")->capture_default_str();
        c->add_option("--train-sets", o->train_sets, "Identity: training records per subject")->capture_default_str();
        c->add_option("--samples", o->samples, "Identity: samples per channel")->capture_default_str();
        c->add_option("--rate", o->rate, "Sample rate, Hz")->capture_default_str();
        c->add_option("--snr", o->snr, "Sensor noise SNR, dB")->capture_default_str();
        c->add_option("--drift", o->drift, "Baseline drift RMS, V")->capture_default_str();
        c->add_option("--seed", o->seed, "Random seed")->capture_default_str();
        c->callback([o] {
            LabeledSet set;
            const Task task = parse_task(o->task);
            if (task == Task::Posture) {
                DatasetSpec spec;
                spec.samples_per_class = o->per_class;
                spec.train_fraction = o->train_fraction;
                spec.duration_s = o->duration;
                spec.sample_rate_hz = o->rate;
                spec.snr_db = o->snr;
                spec.drift_rms_v = o->drift;
                spec.seed = o->seed;
                set = synth_dataset(spec);
            } else {
                IdentitySpec spec;
                spec.sets = o->sets;
                spec.train_sets = o->train_sets;
                spec.samples = o->samples;
                spec.sample_rate_hz = o->rate;
                spec.snr_db = o->snr;
                spec.drift_rms_v = o->drift;
                spec.seed = o->seed;
                set = synth_identity_set(spec);
            }
            write_labeled_set(o->out, set, task);
            print_json({{"task", o->task}, {"train", set.train.size()}, {"test", set.test.size()}, {"out", o->out}});
        });
    }
    {
        struct Opts {
            std::string out, gait = "NormalWalking";
            int subject = 1;
            double duration = 5.0, rate = 100.0, snr = 31.2, drift = 0.0;
            bool clean = false;
            std::uint64_t seed = 0;
        };
        auto o = std::make_shared<Opts>();
        auto* c = synth->add_subcommand("record", "Write one 4-channel record as CSV");
        c->add_option("--out", o->out, "Output CSV (- for stdout)")->required();
        c->add_option("--gait", o->gait, "Gait class name")->capture_default_str();
        c->add_option("--subject", o->subject, "Subject profile id (1..5)")->capture_default_str();
        c->add_option("--duration", o->duration, "Length, s")->capture_default_str();
        c->add_option("--rate", o->rate, "Sample rate, Hz")->capture_default_str();
        c->add_option("--snr", o->snr, "Sensor noise SNR, dB")->capture_default_str();
        c->add_flag("--clean", o->clean, "No sensor noise");
        c->add_option("--drift", o->drift, "Baseline drift RMS, V")->capture_default_str();
        c->add_option("--seed", o->seed, "Random seed")->capture_default_str();
        c->callback([o] {
            const auto subjects = default_subjects();
            if (o->subject < 1 || o->subject > static_cast<int>(subjects.size())) {
                throw Error(ErrorKind::InvalidInput, fmt::format("subject must be 1..{}", subjects.size()));
            }
            SynthOptions opt;
            opt.duration_s = o->duration;
            opt.sample_rate_hz = o->rate;
            opt.snr_db = o->clean ? std::nullopt : std::optional<double>(o->snr);
            opt.drift_rms_v = o->drift;
            opt.seed = o->seed;
            const auto r = synth_record(gait_from(o->gait), subjects[static_cast<std::size_t>(o->subject - 1)], opt);
            std::ostringstream os;
            csv::write_signals(os, {r.channels.begin(), r.channels.end()});
            write_text(o->out, os.str());
        });
    }
    {
        struct Opts {
            std::string out;
            double bpm = 60.0, duration = 10.0, rate = 100.0, phase = 0.0;
            std::optional<double> snr;
            std::uint64_t seed = 0;
        };
        auto o = std::make_shared<Opts>();
        auto* c = synth->add_subcommand("ecg", "Write a synthetic ECG trace as CSV");
        c->add_option("--out", o->out, "Output CSV (- for stdout)")->required();
        c->add_option("--bpm", o->bpm, "Heart rate")->capture_default_str();
        c->add_option("--duration", o->duration, "Length, s")->capture_default_str();
        c->add_option("--rate", o->rate, "Sample rate, Hz")->capture_default_str();
        c->add_option("--phase", o->phase, "Time of the first R peak, s")->capture_default_str();
        c->add_option("--snr", o->snr, "White-noise SNR, dB (default clean)");
        c->add_option("--seed", o->seed, "Random seed")->capture_default_str();
        c->callback([o] {
            EcgOptions opt;
            opt.bpm = o->bpm;
            opt.duration_s = o->duration;
            opt.sample_rate_hz = o->rate;
            opt.phase_s = o->phase;
            opt.snr_db = o->snr;
            opt.seed = o->seed;
            std::ostringstream os;
            csv::write_signals(os, {synth_ecg(opt)});
            write_text(o->out, os.str());
        });
    }
    {
        struct Opts {
            double force = 4.0, freq = 1.0;
        };
        auto o = std::make_shared<Opts>();
        auto* c = synth->add_subcommand("sensor", "Print the peak voltage and current of one press");
        c->add_option("--force", o->force, "Force, N (0.5..6)")->capture_default_str();
        c->add_option("--freq", o->freq, "Press rate, Hz (0.5..6)")->capture_default_str();
        c->callback([o] {
            const auto r = sensor_response(o->force, o->freq);
            print_json({{"force_n", o->force}, {"freq_hz", o->freq}, {"voltage_v", r.voltage_v}, {"current_ua", r.current_ua}});
        });
    }
}

void add_emd(CLI::App& app) {
    struct Opts {
        std::string in, out_dir, denoised;
        std::size_t channel = 1, max_imfs = 10, max_iters = 50;
        double sd = 0.2, drift_cutoff = 0.3, energy_floor = 0.01;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("emd", "Decompose one channel into IMFs and a residual; optionally denoise");
    c->add_option("--in", o->in, "Input CSV")->required()->check(CLI::ExistingFile);
    c->add_option("--out-dir", o->out_dir, "Directory for imf_NN.csv, residual.csv and summary.json")->required();
    c->add_option("--channel", o->channel, "1-based channel")->capture_default_str();
    c->add_option("--sd", o->sd, "Sifting stop threshold")->capture_default_str();
    c->add_option("--max-imfs", o->max_imfs, "Upper bound on IMFs")->capture_default_str();
    c->add_option("--max-iters", o->max_iters, "Sifting iterations per IMF")->capture_default_str();
    c->add_option("--denoise", o->denoised, "Also write the baseline-removed signal here");
    c->add_option("--drift-cutoff", o->drift_cutoff, "Drift IMF frequency cutoff, Hz")->capture_default_str();
    c->add_option("--energy-floor", o->energy_floor, "Noise IMF energy share floor")->capture_default_str();
    c->callback([o] {
        const Signal s = read_channel(o->in, o->channel);
        SiftConfig sc;
        sc.sd_threshold = o->sd;
        sc.max_imfs = o->max_imfs;
        sc.max_sift_iters = o->max_iters;
        const auto d = emd(s, sc);
        fs::create_directories(o->out_dir);
        const auto summary = summarize(d);
        nlohmann::json comps = nlohmann::json::array();
        for (std::size_t k = 0; k <= d.size(); ++k) {
            const bool residual = k == d.size();
            const std::string file = residual ? "residual.csv" : fmt::format("imf_{:02d}.csv", k + 1);
            csv::write_signal(fs::path(o->out_dir) / file, residual ? d.residual : d.imfs[k]);
            comps.push_back({{"file", file},
                             {"dominant_hz", summary[k].dominant_hz},
                             {"energy_fraction", summary[k].energy_fraction}});
        }
        const nlohmann::json j{{"input", o->in}, {"channel", o->channel}, {"imfs", d.size()}, {"components", comps}};
        write_text((fs::path(o->out_dir) / "summary.json").string(), j.dump(2) + "\n");
        if (!o->denoised.empty()) {
            DenoiseConfig dn;
            dn.drift_cutoff_hz = o->drift_cutoff;
            dn.energy_floor = o->energy_floor;
            csv::write_signal(o->denoised, denoise_baseline(s, sc, dn));
        }
        print_json({{"imfs", d.size()}, {"out_dir", o->out_dir}});
    });
}

void add_stft(CLI::App& app) {
    struct Opts {
        std::string in, out, window = "hann";
        std::size_t channel = 1, window_len = 256, hop = 128;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("stft", "Magnitude spectrogram of one channel as CSV");
    c->add_option("--in", o->in, "Input CSV")->required()->check(CLI::ExistingFile);
    c->add_option("--out", o->out, "Output CSV (- for stdout)")->capture_default_str();
    c->add_option("--channel", o->channel, "1-based channel")->capture_default_str();
    c->add_option("--window-len", o->window_len, "Frame length W")->capture_default_str();
    c->add_option("--hop", o->hop, "Hop H")->capture_default_str();
    c->add_option("--window", o->window, "hann or rect")->check(CLI::IsMember({"hann", "rect"}))->capture_default_str();
    c->callback([o] {
        StftParams p;
        p.window_len = o->window_len;
        p.hop = o->hop;
        p.window = o->window == "hann" ? WindowKind::Hann : WindowKind::Rectangular;
        std::ostringstream os;
        write_spectrogram_csv(os, stft(read_channel(o->in, o->channel), p));
        write_text(o->out, os.str());
    });
}

void add_wavelet(CLI::App& app) {
    struct Opts {
        std::string in, out;
        std::size_t channel = 1;
        std::optional<std::size_t> levels;
        std::optional<double> threshold;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("wavelet", "db4 soft-threshold denoising of one channel");
    c->add_option("--in", o->in, "Input CSV")->required()->check(CLI::ExistingFile);
    c->add_option("--out", o->out, "Output CSV")->required();
    c->add_option("--channel", o->channel, "1-based channel")->capture_default_str();
    c->add_option("--levels", o->levels, "Decomposition levels (default: up to 4, as many as the length allows)");
    c->add_option("--threshold", o->threshold, "Fixed threshold (default: universal)");
    c->callback([o] {
        const Signal s = read_channel(o->in, o->channel);
        WaveletConfig cfg;
        if (o->levels) {
            cfg.levels = *o->levels;
        } else {
            cfg.levels = 1;
            while (cfg.levels < 4 && s.size() % (std::size_t{1} << (cfg.levels + 1)) == 0) ++cfg.levels;
        }
        cfg.threshold = o->threshold;
        const double lambda = o->threshold ? *o->threshold : universal_threshold(dwt(s, cfg), s.size());
        csv::write_signal(o->out, wavelet_denoise(s, cfg));
        print_json({{"levels", cfg.levels}, {"threshold", lambda}, {"out", o->out}});
    });
}

void add_snr(CLI::App& app) {
    struct Opts {
        std::string signal, noise, gait = "NormalWalking";
        std::size_t channel = 1;
        bool synth = false;
        int subject = 1;
        std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("snr", "SNR in dB from signal and noise files, or of a default synthetic record");
    c->add_option("--signal", o->signal, "Clean signal CSV")->check(CLI::ExistingFile);
    c->add_option("--noise", o->noise, "Noise CSV")->check(CLI::ExistingFile);
    c->add_option("--channel", o->channel, "1-based channel")->capture_default_str();
    c->add_flag("--synth", o->synth, "Measure a freshly generated record per channel instead");
    c->add_option("--gait", o->gait, "With --synth: gait class")->capture_default_str();
    c->add_option("--subject", o->subject, "With --synth: subject id")->capture_default_str();
    c->add_option("--seed", o->seed, "With --synth: random seed")->capture_default_str();
    c->callback([o] {
        if (o->synth) {
            SynthOptions opt;
            opt.seed = o->seed;
            const auto subjects = default_subjects();
            if (o->subject < 1 || o->subject > static_cast<int>(subjects.size())) {
                throw Error(ErrorKind::InvalidInput, fmt::format("subject must be 1..{}", subjects.size()));
            }
            const auto parts = synth_components(gait_from(o->gait), subjects[static_cast<std::size_t>(o->subject - 1)], opt);
            nlohmann::json chans = nlohmann::json::array();
            for (std::size_t ch = 0; ch < kChannelCount; ++ch) chans.push_back(snr_db(parts.motion[ch], parts.noise[ch]).snr_db);
            print_json({{"snr_db", chans}});
            return;
        }
        if (o->signal.empty() || o->noise.empty()) throw Error(ErrorKind::InvalidInput, "need --signal and --noise, or --synth");
        const auto r = snr_db(read_channel(o->signal, o->channel), read_channel(o->noise, o->channel));
        print_json({{"ps", r.ps}, {"pn", r.pn}, {"snr_db", r.snr_db}});
    });
}

void add_corr(CLI::App& app) {
    struct Opts {
        std::vector<std::string> in;
        std::string out;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("corr", "Pearson correlation matrix across every channel of the inputs");
    c->add_option("--in", o->in, "Input CSV (repeatable)")->required()->check(CLI::ExistingFile);
    c->add_option("--out", o->out, "Output CSV (- for stdout)")->capture_default_str();
    c->callback([o] {
        std::vector<Signal> all;
        std::vector<std::string> names;
        for (const auto& path : o->in) {
            auto sigs = csv::read_signals(path);
            for (std::size_t k = 0; k < sigs.size(); ++k) {
                names.push_back(fmt::format("{}:ch{}", fs::path(path).filename().string(), k + 1));
                all.push_back(std::move(sigs[k]));
            }
        }
        const auto m = correlation_matrix(all);
        std::string text = "signal";
        for (const auto& n : names) text += "," + n;
        text += "\n";
        for (std::size_t i = 0; i < m.n; ++i) {
            text += names[i];
            for (std::size_t j = 0; j < m.n; ++j) text += fmt::format(",{:.6f}", m(i, j));
            text += "\n";
        }
        write_text(o->out, text);
    });
}

}  // namespace

void add_signal_commands(CLI::App& app) {
    add_synth(app);
    add_emd(app);
    add_stft(app);
    add_wavelet(app);
    add_snr(app);
    add_corr(app);
}

}  // namespace tribo::cli
