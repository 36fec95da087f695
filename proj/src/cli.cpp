#include "ozone/cli.hpp"

#include "ozone/analysis.hpp"
#include "ozone/datapipe.hpp"
#include "ozone/error.hpp"
#include "ozone/modelpack.hpp"
#include "ozone/record.hpp"
#include "ozone/regress.hpp"
#include "ozone/rng.hpp"
#include "ozone/simdevice.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

namespace ozone::cli {

namespace {

// Bad flag values detected after CLI11 parsing; mapped to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataFlags {
    std::string data;
    std::string features;
    std::string map;
    std::string impute = "auto";
};

struct TrainFlags {
    std::string solver = "ols";
    double lambda = 0.0;
    double lr = 0.05;
    std::size_t batch = 32;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
    double split = 0.8;
    bool no_shuffle = false;
    double tol = 5.0;
};

void add_data_flags(CLI::App& cmd, DataFlags& f, bool features_required) {
    cmd.add_option("--data", f.data, "CSV file with a header row");
    auto* feat = cmd.add_option("--features", f.features, "comma list of co,temperature,pressure");
    if (features_required) feat->required();
    cmd.add_option("--map", f.map, "role=column[:unit],... (default: columns named after roles)");
    cmd.add_option("--impute", f.impute, "drop_rows | mean_impute | forward_fill | auto")->capture_default_str();
}

void add_train_flags(CLI::App& cmd, TrainFlags& f) {
    cmd.add_option("--solver", f.solver, "ols | sgd")->capture_default_str();
    cmd.add_option("--lambda", f.lambda, "ridge penalty on weights")->capture_default_str();
    cmd.add_option("--lr", f.lr, "SGD learning rate")->capture_default_str();
    cmd.add_option("--batch", f.batch, "SGD batch size")->capture_default_str();
    cmd.add_option("--epochs", f.epochs, "SGD epochs")->capture_default_str();
    cmd.add_option("--seed", f.seed, "seed for split, SGD and CV")->capture_default_str();
    cmd.add_option("--split", f.split, "training fraction")->capture_default_str();
    cmd.add_flag("--no-shuffle", f.no_shuffle, "keep row order when splitting");
    cmd.add_option("--tol", f.tol, "absolute error counted as accurate")->capture_default_str();
}

TrainConfig make_train_config(const TrainFlags& f) {
    TrainConfig cfg;
    if (f.solver == "ols") {
        cfg.solver = Solver::ols;
    } else if (f.solver == "sgd") {
        cfg.solver = Solver::sgd;
    } else {
        throw UsageError("--solver must be ols or sgd");
    }
    cfg.lambda = f.lambda;
    cfg.learning_rate = f.lr;
    cfg.batch_size = f.batch;
    cfg.epochs = f.epochs;
    cfg.seed = f.seed;
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    if (!(f.split > 0.0 && f.split < 1.0)) throw UsageError("--split must be in (0,1)");
    if (!(f.tol > 0.0)) throw UsageError("--tol must be > 0");
    return cfg;
}

SplitSpec make_split(const TrainFlags& f) { return {f.split, f.seed, !f.no_shuffle}; }

// Flag-level parsing that must fail with exit 2, including UnknownFeature.
FeatureSet parse_features_flag(const std::string& text) {
    try {
        return parse_feature_set(text, ',');
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

ColumnMapping parse_map_flag(const std::string& text) {
    if (text.empty()) return ColumnMapping::identity();
    try {
        return ColumnMapping::parse(text);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

ImputePolicy parse_impute_flag(const std::string& text) {
    const auto policy = parse_impute_policy(text);
    if (!policy) throw UsageError("--impute must be drop_rows, mean_impute, forward_fill or auto");
    return *policy;
}

// Load + impute; the impute report is echoed as a record.
RawTable load_clean(const DataFlags& f, std::ostream& out) {
    if (f.data.empty()) throw UsageError("--data is required");
    const ColumnMapping mapping = parse_map_flag(f.map);
    const ImputePolicy policy = parse_impute_flag(f.impute);
    const RawTable raw = load_csv(f.data, mapping);
    auto [clean, report] = impute(raw, policy);
    out << report.to_record() << '\n';
    return clean;
}

std::string join_numbers(const std::vector<double>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ',';
        s += format_number(values[i]);
    }
    return s;
}

std::string model_record(const LinearModel& m, Solver solver) {
    const auto raw = raw_coefficients(m);
    std::ostringstream o;
    o << "model features=" << join_roles(m.feature_names) << " solver=" << solver_name(solver)
      << " weights=" << join_numbers(m.weights) << " bias=" << format_number(m.bias)
      << " mean=" << join_numbers(m.scaler.mean) << " std=" << join_numbers(m.scaler.stddev)
      << " raw_slopes=" << join_numbers(raw.slopes) << " raw_intercept=" << format_number(raw.intercept);
    return o.str();
}

// ---------------------------------------------------------------------------
// train

struct TuneChoice {
    double lr;
    std::size_t batch;
};

// Documented grid for --tune: every (lr, batch) pair, 5-fold CV on the
// training split, lowest mean MSE wins (first in grid order on ties).
TuneChoice tune_sgd(const Dataset& train, TrainConfig cfg, double tol, std::ostream& out) {
    static constexpr double kRates[] = {0.3, 0.1, 0.03, 0.01};
    static constexpr std::size_t kBatches[] = {16, 32, 64, 128};
    std::optional<TuneChoice> best;
    double best_mse = std::numeric_limits<double>::infinity();
    for (double lr : kRates) {
        for (std::size_t batch : kBatches) {
            cfg.learning_rate = lr;
            cfg.batch_size = batch;
            out << "tune lr=" << format_number(lr) << " batch=" << batch;
            try {
                const CVReport cv = cross_validate(train, 5, cfg, cfg.seed, tol);
                out << " mean_mse=" << format_number(cv.mean_mse) << " mean_r2=" << format_number(cv.mean_r2) << '\n';
                if (cv.mean_mse < best_mse) {
                    best_mse = cv.mean_mse;
                    best = TuneChoice{lr, batch};
                }
            } catch (const Error& e) {
                if (e.code() != ErrorCode::Diverged) throw;
                out << " status=diverged\n";
            }
        }
    }
    if (!best) throw Error(ErrorCode::Diverged, "every grid point diverged");
    out << "tuned lr=" << format_number(best->lr) << " batch=" << best->batch << '\n';
    return *best;
}

int cmd_train(const DataFlags& df, const TrainFlags& tf, const std::string& out_path, bool quantized,
              std::size_t cv_folds, bool tune, std::ostream& out) {
    const FeatureSet features = parse_features_flag(df.features);
    TrainConfig cfg = make_train_config(tf);
    if (tune && cfg.solver != Solver::sgd) throw UsageError("--tune applies to --solver sgd");
    if (cv_folds == 1) throw UsageError("--cv needs k >= 2");

    const RawTable clean = load_clean(df, out);
    const Dataset ds = to_dataset(clean, features);
    const auto [train, test] = split(ds, make_split(tf));

    if (tune) {
        const TuneChoice choice = tune_sgd(train, cfg, tf.tol, out);
        cfg.learning_rate = choice.lr;
        cfg.batch_size = choice.batch;
    }
    if (cv_folds >= 2) out << cross_validate(train, cv_folds, cfg, tf.seed, tf.tol).to_records();

    const LinearModel model = fit(train, cfg);
    out << model_record(model, cfg.solver) << '\n';
    out << evaluate(model, train, tf.tol).to_record("metrics split=train") << '\n';
    out << evaluate(model, test, tf.tol).to_record("metrics split=test") << '\n';

    if (!out_path.empty()) {
        const Bytes bytes = quantized ? serialize(quantize(model)) : serialize(model);
        write_artifact(out_path, bytes);
        out << "artifact path=" << out_path << " scheme=" << (quantized ? "int8" : "float32")
            << " bytes=" << bytes.size() << '\n';
        if (quantized) out << "quantization error_bound=" << format_number(error_bound(quantize(model))) << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

std::vector<FeatureSet> parse_combos(const std::vector<std::string>& items) {
    std::vector<FeatureSet> combos;
    for (const auto& item : items) {
        std::string text = item;
        std::replace(text.begin(), text.end(), ',', '+');
        try {
            combos.push_back(parse_feature_set(text, '+'));
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
    }
    return combos;
}

int cmd_sweep(const DataFlags& df, const TrainFlags& tf, const std::vector<std::string>& combo_flags, bool pretty,
              std::ostream& out) {
    const std::vector<FeatureSet> combos = combo_flags.empty() ? default_combos() : parse_combos(combo_flags);
    const TrainConfig cfg = make_train_config(tf);
    const RawTable clean = load_clean(df, out);
    const Dataset ds = to_dataset(clean, kAllFeatures);
    const SweepReport report = feature_sweep(ds, combos, cfg, make_split(tf), tf.tol);
    out << (pretty ? report.to_table() : report.to_records());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sensitivity

int cmd_sensitivity(const DataFlags& df, const TrainFlags& tf, const std::string& model_path, bool pretty,
                    std::ostream& out) {
    std::optional<LinearModel> model;
    if (!model_path.empty()) {
        const Artifact artifact = deserialize(read_artifact(model_path));
        if (const auto* q = std::get_if<QuantizedModel>(&artifact)) {
            model = dequantize(*q);
        } else {
            model = std::get<LinearModel>(artifact);
        }
    }

    SensitivityReport report;
    if (!df.data.empty()) {
        const FeatureSet features =
            model ? model->feature_names
                  : (df.features.empty() ? FeatureSet(std::begin(kAllFeatures), std::end(kAllFeatures))
                                         : parse_features_flag(df.features));
        const TrainConfig cfg = make_train_config(tf);
        const RawTable clean = load_clean(df, out);
        const Dataset ds = to_dataset(clean, features);
        if (!model) {
            const auto [train, test] = split(ds, make_split(tf));
            model = fit(train, cfg);
            out << model_record(*model, cfg.solver) << '\n';
        }
        report = sensitivity(*model, ds);
    } else if (model) {
        report = sensitivity(*model);
    } else {
        throw UsageError("sensitivity needs --model and/or --data");
    }
    out << (pretty ? report.to_table() : report.to_records());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimFlags {
    std::string model;
    SimConfig cfg;
    Mq7Params mq7;
    bool noise_free = false;
    bool summary_only = false;
    std::string planted;
};

PlantedRelation parse_planted(const std::string& text, PlantedRelation planted) {
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("--planted entries are key=value");
        const std::string key = item.substr(0, eq);
        double value = 0.0;
        try {
            std::size_t used = 0;
            value = std::stod(item.substr(eq + 1), &used);
            if (used != item.size() - eq - 1) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("--planted value for '" + key + "' is not a number");
        }
        if (key == "co") planted.co_slope = value;
        else if (key == "temperature") planted.temperature_slope = value;
        else if (key == "pressure") planted.pressure_slope = value;
        else if (key == "intercept") planted.intercept = value;
        else if (key == "noise") planted.noise_std = value;
        else throw UsageError("--planted key '" + key + "' unknown");
    }
    return planted;
}

void add_channel_flags(CLI::App& cmd, const std::string& prefix, ChannelProcess& c) {
    cmd.add_option("--" + prefix + "-init", c.initial, "initial value")->capture_default_str();
    cmd.add_option("--" + prefix + "-mean", c.mean, "long-run mean")->capture_default_str();
    cmd.add_option("--" + prefix + "-theta", c.theta, "mean-reversion rate")->capture_default_str();
    cmd.add_option("--" + prefix + "-eta", c.eta, "process noise std")->capture_default_str();
}

int cmd_simulate(SimFlags f, std::ostream& out) {
    if (!f.planted.empty()) f.cfg.planted = parse_planted(f.planted, f.cfg.planted);
    if (f.noise_free) f.cfg = f.cfg.noise_free();
    try {
        f.cfg.validate();
        f.mq7.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const Bytes bytes = read_artifact(f.model);
    const LoopSummary summary = run_loop(bytes, f.cfg, f.mq7, [&](const StepRecord& step) {
        if (!f.summary_only) out << step.to_record() << '\n';
    });
    out << summary.to_record() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const std::string& path, std::size_t rows, std::uint64_t seed, double missing_rate,
              std::ostream& out) {
    if (rows < 2) throw UsageError("--rows must be >= 2");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw UsageError("--missing-rate must be in [0,1)");
    SimConfig cfg;
    cfg.seed = seed;
    cfg.steps = rows;
    cfg.dt = 10.0;   // samples roughly decorrelated between rows
    const auto truth = gen_trajectory(cfg);
    Rng holes(mix_seed(seed, 7));

    std::ostringstream csv;
    csv << "timestamp,co,temperature,pressure,ozone\n";
    auto cell = [&](double v) { return holes.uniform() < missing_rate ? std::string("NA") : format_number(v); };
    for (std::size_t t = 0; t < truth.size(); ++t) {
        const auto& s = truth[t];
        csv << static_cast<double>(t) * cfg.dt << ',' << cell(s.co) << ',' << cell(s.temperature) << ','
            << cell(s.pressure) << ',' << cell(s.ozone) << '\n';
    }
    if (path.empty() || path == "-") {
        out << csv.str();
    } else {
        std::ofstream file(path, std::ios::binary | std::ios::trunc);
        if (!file) throw Error(ErrorCode::FileNotFound, "cannot write " + path);
        file << csv.str();
        out << "synth path=" << path << " rows=" << rows << " seed=" << seed << '\n';
    }
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Ozone regression pipeline: train, sweep, sensitivity, export and device simulation", "ozone"};
    app.require_subcommand(1);

    DataFlags df;
    TrainFlags tf;

    auto* train = app.add_subcommand("train", "train a model and optionally export a .toz artifact");
    add_data_flags(*train, df, true);
    add_train_flags(*train, tf);
    std::string out_path;
    bool quantized = false;
    std::size_t cv_folds = 0;
    bool tune = false;
    train->add_option("--out", out_path, "write the model artifact here");
    train->add_flag("--quantize", quantized, "export the int8 scheme instead of float32");
    train->add_option("--cv", cv_folds, "k-fold cross-validation on the training split");
    train->add_flag("--tune", tune, "grid-search SGD learning rate and batch size by 5-fold CV");

    DataFlags sweep_df;
    TrainFlags sweep_tf;
    std::vector<std::string> combos;
    bool sweep_pretty = false;
    auto* sweep = app.add_subcommand("sweep", "compare feature combinations on one shared split");
    add_data_flags(*sweep, sweep_df, false);
    add_train_flags(*sweep, sweep_tf);
    sweep->add_option("--combos", combos, "feature sets, e.g. co temperature+pressure (';' also separates)")
        ->delimiter(';');
    sweep->add_flag("--pretty", sweep_pretty, "human-readable table");

    DataFlags sens_df;
    TrainFlags sens_tf;
    std::string sens_model;
    bool sens_pretty = false;
    auto* sens = app.add_subcommand("sensitivity", "SRC and OAT sensitivity indices");
    add_data_flags(*sens, sens_df, false);
    add_train_flags(*sens, sens_tf);
    sens->add_option("--model", sens_model, "trained .toz artifact");
    sens->add_flag("--pretty", sens_pretty, "human-readable table");

    SimFlags sf;
    auto* sim = app.add_subcommand("simulate", "run the acquire -> infer -> display loop on simulated sensors");
    sim->add_option("--model", sf.model, ".toz artifact to deploy")->required();
    sim->add_option("--seed", sf.cfg.seed)->capture_default_str();
    sim->add_option("--steps", sf.cfg.steps)->capture_default_str();
    sim->add_option("--dt", sf.cfg.dt, "seconds per step")->capture_default_str();
    add_channel_flags(*sim, "co", sf.cfg.co);
    add_channel_flags(*sim, "temp", sf.cfg.temperature);
    add_channel_flags(*sim, "pressure", sf.cfg.pressure);
    sim->add_option("--adc-noise", sf.cfg.sensor.adc_lsb, "CO reading noise std in ADC steps")->capture_default_str();
    sim->add_option("--temp-noise", sf.cfg.sensor.temperature)->capture_default_str();
    sim->add_option("--pressure-noise", sf.cfg.sensor.pressure)->capture_default_str();
    sim->add_option("--planted", sf.planted, "co=..,temperature=..,pressure=..,intercept=..,noise=..");
    sim->add_option("--mq7-a", sf.mq7.a)->capture_default_str();
    sim->add_option("--mq7-b", sf.mq7.b)->capture_default_str();
    sim->add_option("--r0", sf.mq7.r0)->capture_default_str();
    sim->add_option("--rl", sf.mq7.rl)->capture_default_str();
    sim->add_option("--adc-bits", sf.mq7.adc_bits)->capture_default_str();
    sim->add_option("--tol", sf.cfg.tolerance, "accuracy threshold for the summary")->capture_default_str();
    sim->add_flag("--noise-free", sf.noise_free, "disable every noise source");
    sim->add_flag("--summary-only", sf.summary_only, "print only the summary record");

    std::string synth_out;
    std::size_t synth_rows = 2000;
    std::uint64_t synth_seed = 7;
    double synth_missing = 0.01;
    auto* synth = app.add_subcommand("synth", "write a synthetic air-quality CSV");
    synth->add_option("--out", synth_out, "CSV path ('-' for stdout)");
    synth->add_option("--rows", synth_rows)->capture_default_str();
    synth->add_option("--seed", synth_seed)->capture_default_str();
    synth->add_option("--missing-rate", synth_missing, "fraction of cells written as NA")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (train->parsed()) return cmd_train(df, tf, out_path, quantized, cv_folds, tune, out);
        if (sweep->parsed()) return cmd_sweep(sweep_df, sweep_tf, combos, sweep_pretty, out);
        if (sens->parsed()) return cmd_sensitivity(sens_df, sens_tf, sens_model, sens_pretty, out);
        if (sim->parsed()) return cmd_simulate(sf, out);
        if (synth->parsed()) return cmd_synth(synth_out, synth_rows, synth_seed, synth_missing, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitPipeline;
    }
    return kExitUsage;
}

} // namespace ozone::cli
