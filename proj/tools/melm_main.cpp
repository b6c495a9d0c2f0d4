// Command-line driver: byte->image conversion, ELM training/evaluation,
// ensemble runs, and kernel timing benchmarks.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/configuration error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "melm/dataset.hpp"
#include "melm/elm.hpp"
#include "melm/ensemble.hpp"
#include "melm/image.hpp"
#include "melm/image_io.hpp"
#include "melm/metrics.hpp"
#include "melm/model_io.hpp"
#include "melm/rng.hpp"
#include "melm/simd/kernels.hpp"

namespace fs = std::filesystem;
using namespace melm;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------------
// Shared featurization flags
// ----------------------------------------------------------------------

struct FeatureFlags {
    std::size_t image_size = 64;
    std::size_t vec1d = 0;  // nonzero selects 1-D block-average features
    std::string resize_method = "bilinear";

    void add_to(CLI::App* cmd) {
        cmd->add_option("--image-size", image_size,
                        "Square image size for 2-D features (default 64)");
        cmd->add_option("--vec1d", vec1d,
                        "Use 1-D features of this length instead of 2-D images");
        cmd->add_option("--resize-method", resize_method, "bilinear or nearest")
            ->check(CLI::IsMember({"bilinear", "nearest"}));
    }

    Featurizer featurizer() const {
        Featurizer f;
        if (vec1d > 0) {
            f.mode = Featurizer::Mode::Vector1d;
            f.vector_length = vec1d;
        } else {
            if (image_size == 0) throw UsageError("image-size must be positive");
            f.mode = Featurizer::Mode::Image2d;
            f.image_width = f.image_height = image_size;
            f.resize_method = (resize_method == "nearest") ? ResizeMethod::NearestNeighbor
                                                           : ResizeMethod::Bilinear;
        }
        return f;
    }
};

struct ModelFlags {
    std::size_t neurons = 1024;
    std::string activation = "relu";
    double alpha = 1.0;
    std::size_t dropout_fanin = 0;
    double rbf_width_scale = 1.0;
    double ridge = 0.0;
    std::uint64_t seed = 0;

    CLI::Option* seed_option = nullptr;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--neurons", neurons, "Hidden layer width (default 1024)");
        cmd->add_option("--activation", activation,
                        "tanh, relu, softlim, hardlim or multiquadric")
            ->check(CLI::IsMember({"tanh", "relu", "softlim", "hardlim", "multiquadric"}));
        cmd->add_option("--alpha", alpha, "Kernel mix: 1 = MLP only, 0 = RBF only")
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--dropout-fanin", dropout_fanin,
                        "Connect each hidden unit to exactly K inputs (0 = fully connected)");
        cmd->add_option("--rbf-width-scale", rbf_width_scale, "RBF width multiplier");
        cmd->add_option("--ridge", ridge, "Optional diagonal regularizer (default 0)");
        seed_option = cmd->add_option("--seed", seed, "Random seed (default 0)");
    }

    ElmConfig config() const {
        ElmConfig cfg;
        cfg.hidden_neurons = neurons;
        cfg.activation = parse_activation(activation);
        cfg.alpha = alpha;
        cfg.fan_in = dropout_fanin;
        cfg.rbf_width_scale = rbf_width_scale;
        cfg.ridge = ridge;
        cfg.seed = seed;
        cfg.validate();
        return cfg;
    }
};

void require_seed_when_strict(bool strict, const CLI::Option* seed_option) {
    if (strict && seed_option && seed_option->count() == 0) {
        throw UsageError("--strict-repro requires an explicit --seed");
    }
}

// ----------------------------------------------------------------------
// convert
// ----------------------------------------------------------------------

struct ConvertArgs {
    std::vector<std::string> inputs;
    std::string out_dir;
    std::string format = "png";
    std::string manifest;
    std::size_t forced_width = 0;
};

int run_convert(const ConvertArgs& args) {
    std::vector<fs::path> files;
    for (const auto& input : args.inputs) {
        fs::path p(input);
        if (fs::is_directory(p)) {
            for (const auto& entry : fs::recursive_directory_iterator(p)) {
                if (entry.is_regular_file()) files.push_back(entry.path());
            }
        } else if (fs::is_regular_file(p)) {
            files.push_back(p);
        } else {
            std::cerr << "warning: no such input: " << input << "\n";
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw UsageError("no inputs");

    fs::create_directories(args.out_dir);
    std::ostringstream manifest;
    manifest << "file,size_bytes,width,height\n";

    std::set<std::string> used_names;
    std::size_t converted = 0;
    for (const auto& file : files) {
        try {
            const auto bytes = read_file_bytes(file);
            const GrayImage img = args.forced_width
                                      ? bytes_to_image(bytes, args.forced_width)
                                      : bytes_to_image(bytes);
            std::string stem = file.stem().string();
            std::string name = stem + "." + args.format;
            for (int suffix = 2; used_names.count(name); ++suffix) {
                name = stem + "_" + std::to_string(suffix) + "." + args.format;
            }
            used_names.insert(name);
            const fs::path out = fs::path(args.out_dir) / name;
            if (args.format == "pgm") {
                save_pgm(img, out);
            } else {
                save_png(img, out);
            }
            manifest << file.string() << "," << bytes.size() << "," << img.width << ","
                     << img.height << "\n";
            ++converted;
        } catch (const std::exception& e) {
            std::cerr << "warning: " << file.string() << ": " << e.what() << "\n";
        }
    }
    if (converted == 0) {
        std::cerr << "error: all " << files.size() << " inputs failed\n";
        return 1;
    }
    const fs::path manifest_path = args.manifest.empty()
                                       ? fs::path(args.out_dir) / "manifest.csv"
                                       : fs::path(args.manifest);
    atomic_write_file(manifest_path, manifest.str());
    std::cout << "converted " << converted << "/" << files.size() << " files to "
              << args.out_dir << "\n";
    return 0;
}

// ----------------------------------------------------------------------
// train
// ----------------------------------------------------------------------

struct TrainArgs {
    std::string corpus;
    std::string out = "model.elm";
    FeatureFlags features;
    ModelFlags model;
    std::size_t ensemble_count = 0;
    bool weighted = false;
    double test_fraction = 0.2;
    std::uint64_t split_seed = 0;
    bool split_seed_given = false;
    std::size_t jobs = 1;
    std::string class_manifest;
    std::uint64_t tie_seed = 0;
};

int run_train(const TrainArgs& args) {
    const Featurizer featurizer = args.features.featurizer();
    const ElmConfig config = args.model.config();

    std::cout << "kernels: " << simd::active_kernel_name() << "\n";
    std::cout << "loading corpus " << args.corpus << " (" << featurizer.describe() << ")\n";
    const Dataset full = load_corpus(args.corpus, featurizer);
    std::cout << "loaded " << full.size() << " samples, " << full.catalog.num_classes()
              << " classes, dim " << full.feature_dim << "\n";

    if (!args.class_manifest.empty()) {
        atomic_write_file(args.class_manifest, catalog_manifest_csv(full.catalog));
    }

    const std::uint64_t split_seed = args.split_seed_given ? args.split_seed : config.seed;
    const auto [trainset, testset] = stratified_split(full, args.test_fraction, split_seed);
    std::cout << "split: " << trainset.size() << " train / " << testset.size() << " test"
              << " (fraction " << args.test_fraction << ", seed " << split_seed << ")\n";

    std::vector<double> weights;
    const std::vector<double>* weights_ptr = nullptr;
    if (args.weighted) {
        weights = class_weights(trainset.catalog);
        weights_ptr = &weights;
    }

    if (args.ensemble_count > 0) {
        Ensemble ensemble = train_ensemble(trainset, config, args.ensemble_count, config.seed,
                                           weights_ptr, args.jobs);
        for (auto& member : ensemble.members) member.featurization = featurizer;
        save_ensemble(ensemble, args.out);

        const auto train_eval = evaluate_members(ensemble, trainset, args.tie_seed);
        const auto test_eval = evaluate_members(ensemble, testset, args.tie_seed);
        std::printf("train accuracy: %.4f (member mean %.4f)\n", train_eval.ensemble_accuracy,
                    train_eval.mean);
        std::printf("test accuracy:  %.4f (member mean %.4f, stddev %.4f)\n",
                    test_eval.ensemble_accuracy, test_eval.mean, test_eval.stddev);
        std::cout << "wrote ensemble (" << ensemble.count() << " members) to " << args.out
                  << "\n";
    } else {
        ElmModel model = train(trainset, config, weights_ptr);
        model.featurization = featurizer;
        save_model(model, args.out);
        std::printf("train accuracy: %.4f\n", accuracy_on(model, trainset));
        std::printf("test accuracy:  %.4f\n", accuracy_on(model, testset));
        std::cout << "wrote model to " << args.out << "\n";
    }
    return 0;
}

// ----------------------------------------------------------------------
// eval
// ----------------------------------------------------------------------

struct EvalArgs {
    std::string model_file;
    std::string corpus;
    std::string out_prefix = "report";
    std::string split = "full";
    double test_fraction = 0.2;
    std::uint64_t split_seed = 0;
    std::uint64_t tie_seed = 0;
    FeatureFlags features;
    bool features_given = false;
};

struct LoadedClassifier {
    std::optional<ElmModel> model;
    std::optional<Ensemble> ensemble;

    const ElmModel& reference() const { return model ? *model : ensemble->members.front(); }
};

LoadedClassifier load_classifier(const std::string& path) {
    const auto raw = read_file_bytes(path);
    const std::string bytes(raw.begin(), raw.end());
    LoadedClassifier out;
    if (bytes.size() >= 4 && bytes.compare(0, 4, "ELME") == 0) {
        out.ensemble = deserialize_ensemble(bytes);
    } else {
        out.model = deserialize_model(bytes);
    }
    return out;
}

int run_eval(const EvalArgs& args) {
    const LoadedClassifier clf = load_classifier(args.model_file);
    const ElmModel& ref = clf.reference();

    Featurizer featurizer;
    if (args.features_given || !ref.featurization) {
        featurizer = args.features.featurizer();
    } else {
        featurizer = *ref.featurization;
    }

    if (featurizer.dim() != ref.input_dim) {
        throw UsageError("featurization produces dim " + std::to_string(featurizer.dim()) +
                         " but the model expects dim " + std::to_string(ref.input_dim) +
                         " (model featurization: " +
                         (ref.featurization ? ref.featurization->describe() : "unknown") + ")");
    }

    const Dataset full = load_corpus(args.corpus, featurizer);
    if (full.catalog.names != ref.class_names) {
        std::cerr << "warning: corpus classes differ from the model's training catalog\n";
    }

    Dataset subset = full;
    if (args.split != "full") {
        auto [trainset, testset] = stratified_split(full, args.test_fraction, args.split_seed);
        subset = (args.split == "train") ? std::move(trainset) : std::move(testset);
    }
    std::cout << "evaluating " << subset.size() << " samples (" << args.split << " split)\n";

    std::vector<std::uint32_t> predicted;
    std::string member_lines;
    if (clf.ensemble) {
        predicted = vote_batch(*clf.ensemble, subset.features, args.tie_seed);
        const auto members = evaluate_members(*clf.ensemble, subset, args.tie_seed);
        char buf[128];
        std::snprintf(buf, sizeof buf, "member mean accuracy:   %.4f\n", members.mean);
        member_lines += buf;
        std::snprintf(buf, sizeof buf, "member accuracy stddev: %.4f\n", members.stddev);
        member_lines += buf;
    } else {
        predicted = predict_batch(*clf.model, subset.features);
    }

    const EvaluationReport report =
        evaluate_predictions(subset.labels, predicted, subset.catalog.names);

    atomic_write_file(args.out_prefix + ".csv", report_csv(report));
    atomic_write_file(args.out_prefix + ".txt", report_table(report) + member_lines);
    std::cout << report_table(report) << member_lines;
    std::cout << "wrote " << args.out_prefix << ".csv and " << args.out_prefix << ".txt\n";
    return 0;
}

// ----------------------------------------------------------------------
// bench
// ----------------------------------------------------------------------

struct BenchArgs {
    std::string corpus;
    std::vector<double> alphas{1.0, 0.5};
    std::vector<std::size_t> neurons{512, 1024};
    std::size_t count = 10;
    std::string out = "bench.csv";
    FeatureFlags features;
    ModelFlags model;
};

int run_bench(const BenchArgs& args) {
    const Featurizer featurizer = args.features.featurizer();
    const Dataset corpus = load_corpus(args.corpus, featurizer);
    std::cout << "kernels: " << simd::active_kernel_name() << "; corpus " << corpus.size()
              << " samples, dim " << corpus.feature_dim << "\n";

    std::ostringstream csv;
    csv << "alpha,neurons,count,total_seconds,seconds_per_model\n";
    for (const double alpha : args.alphas) {
        for (const std::size_t width : args.neurons) {
            ElmConfig config = args.model.config();
            config.alpha = alpha;
            config.hidden_neurons = width;
            const auto start = std::chrono::steady_clock::now();
            for (std::size_t i = 0; i < args.count; ++i) {
                ElmConfig member = config;
                member.seed = derive_seed(config.seed, i);
                (void)train(corpus, member);
            }
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            char row[160];
            std::snprintf(row, sizeof row, "%g,%zu,%zu,%.6f,%.6f", alpha, width, args.count,
                          seconds, seconds / static_cast<double>(args.count));
            csv << row << "\n";
            std::cout << row << "\n";
        }
    }
    atomic_write_file(args.out, csv.str());
    std::cout << "wrote " << args.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Image-based malware classification with extreme learning machines"};
    app.require_subcommand(1);
    bool strict_repro = false;
    app.add_flag("--strict-repro", strict_repro,
                 "Fail unless every randomized command got an explicit --seed");

    ConvertArgs convert_args;
    auto* convert_cmd = app.add_subcommand("convert", "Convert binaries to grayscale images");
    convert_cmd->add_option("inputs", convert_args.inputs, "Input files or directories")
        ->required();
    convert_cmd->add_option("-o,--out-dir", convert_args.out_dir, "Output directory")->required();
    convert_cmd->add_option("--format", convert_args.format, "png or pgm")
        ->check(CLI::IsMember({"png", "pgm"}));
    convert_cmd->add_option("--manifest", convert_args.manifest,
                            "Manifest CSV path (default <out-dir>/manifest.csv)");
    convert_cmd->add_option("--width", convert_args.forced_width,
                            "Force image width instead of the size-bucket table");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train a model or ensemble on a corpus");
    train_cmd->set_config("--config", "", "key=value config file (flags override it)");
    train_cmd->add_option("corpus", train_args.corpus, "Class-per-directory image corpus")
        ->required();
    train_cmd->add_option("-o,--out", train_args.out, "Output model path (default model.elm)");
    train_args.features.add_to(train_cmd);
    train_args.model.add_to(train_cmd);
    train_cmd->add_option("--ensemble", train_args.ensemble_count,
                          "Train a majority-vote ensemble of this many members");
    train_cmd->add_flag("--weighted", train_args.weighted,
                        "Scale training rows by sqrt(total/class_count)");
    train_cmd->add_option("--test-fraction", train_args.test_fraction,
                          "Held-out fraction per class (default 0.2)")
        ->check(CLI::Range(1e-9, 1.0 - 1e-9));
    auto* split_seed_opt =
        train_cmd->add_option("--split-seed", train_args.split_seed,
                              "Seed for the stratified split (default: --seed)");
    train_cmd->add_option("--jobs", train_args.jobs, "Parallel ensemble training workers")
        ->check(CLI::Range(std::size_t{1}, std::size_t{256}));
    train_cmd->add_option("--class-manifest", train_args.class_manifest,
                          "Write class,count,weight CSV for the loaded corpus");
    train_cmd->add_option("--tie-seed", train_args.tie_seed, "Seed for vote tie-breaks");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a saved model on a corpus");
    eval_cmd->set_config("--config", "", "key=value config file (flags override it)");
    eval_cmd->add_option("model", eval_args.model_file, "Model or ensemble file")->required();
    eval_cmd->add_option("corpus", eval_args.corpus, "Class-per-directory image corpus")
        ->required();
    eval_cmd->add_option("--out-prefix", eval_args.out_prefix,
                         "Report path prefix (default 'report')");
    eval_cmd->add_option("--split", eval_args.split, "full, test or train")
        ->check(CLI::IsMember({"full", "test", "train"}));
    eval_cmd->add_option("--test-fraction", eval_args.test_fraction,
                         "Split fraction when --split is not full");
    eval_cmd->add_option("--split-seed", eval_args.split_seed, "Split seed");
    eval_cmd->add_option("--tie-seed", eval_args.tie_seed, "Seed for vote tie-breaks");
    eval_args.features.add_to(eval_cmd);

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "Time model training over a parameter grid");
    bench_cmd->set_config("--config", "", "key=value config file (flags override it)");
    bench_cmd->add_option("corpus", bench_args.corpus, "Class-per-directory image corpus")
        ->required();
    bench_cmd->add_option("--alphas", bench_args.alphas, "Kernel mix grid")->delimiter(',');
    bench_cmd->add_option("--neurons-grid", bench_args.neurons, "Hidden width grid")
        ->delimiter(',');
    bench_cmd->add_option("--count", bench_args.count, "Models per grid point");
    bench_cmd->add_option("-o,--out", bench_args.out, "Timing CSV path (default bench.csv)");
    bench_args.features.add_to(bench_cmd);
    bench_args.model.add_to(bench_cmd);

    std::string inspect_file;
    auto* inspect_cmd = app.add_subcommand("inspect", "Print a model file's header");
    inspect_cmd->add_option("file", inspect_file, "Model or ensemble file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (*convert_cmd) return run_convert(convert_args);
        if (*train_cmd) {
            require_seed_when_strict(strict_repro, train_args.model.seed_option);
            train_args.split_seed_given = split_seed_opt->count() > 0;
            return run_train(train_args);
        }
        if (*eval_cmd) {
            eval_args.features_given =
                eval_cmd->count("--image-size") || eval_cmd->count("--vec1d") ||
                eval_cmd->count("--resize-method");
            return run_eval(eval_args);
        }
        if (*bench_cmd) {
            require_seed_when_strict(strict_repro, bench_args.model.seed_option);
            return run_bench(bench_args);
        }
        if (*inspect_cmd) {
            std::cout << describe_model_file(inspect_file);
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
