#include "moc/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "moc/byte_io.hpp"
#include "moc/dataset.hpp"
#include "moc/error.hpp"
#include "moc/evaluation.hpp"
#include "moc/gradcheck.hpp"
#include "moc/rng.hpp"
#include "moc/splits.hpp"
#include "moc/synthetic.hpp"
#include "moc/training.hpp"

namespace moc::cli {

namespace {

namespace fs = std::filesystem;

constexpr double kGradcheckTolerance = 1e-5;

struct Options {
    std::string manifest = "data/manifest.tsv";
    std::string split_file = "data/splits.json";
    std::string out;
    std::string spec = "default";
    std::string bank = "confidence_peak,normalized_certainty,divergence_extremum,background_suppression";
    std::string fusion = "meta";
    std::string slide;
    std::string checkpoint;
    int shots = 1;
    int folds = 5;
    int fold = -1;
    std::size_t val_size = 4;
    std::size_t test_size = 16;
    std::size_t q = 1000;
    std::size_t topk = 150;
    double lr = 1e-3;
    int epochs = 100;
    int patience = 20;
    std::size_t hidden = 128;
    std::uint64_t seed = 7;
    std::size_t threads = 0;
    std::size_t instances = 20;
    double temperature = 1.0;
    bool no_nomination = false;
    bool standardize = false;
    bool linear_head = false;
};

std::string fixed(double v, int digits = 6)
{
    char buffer[48];
    std::snprintf(buffer, sizeof(buffer), "%.*f", digits, v);
    return buffer;
}

void add_pipeline_options(CLI::App& app, Options& o)
{
    app.add_option("--q", o.q, "patches elected per classifier")->check(CLI::PositiveNumber);
    app.add_option("--topk", o.topk, "K of top-K pooling")->check(CLI::PositiveNumber);
    app.add_option("--bank", o.bank, "comma-separated classifier ids");
    app.add_option("--fusion", o.fusion, "meta or sum")->check(CLI::IsMember({"meta", "sum"}));
    app.add_flag("--no-nomination", o.no_nomination, "score every patch instead of the nominated bag");
    app.add_option("--temperature", o.temperature, "softmax temperature of normalized_certainty")
        ->check(CLI::PositiveNumber);
    app.add_flag("--standardize", o.standardize, "z-score each classifier's scores per slide");
    app.add_option("--threads", o.threads, "worker cap (0 = all cores)");
}

void add_training_options(CLI::App& app, Options& o)
{
    app.add_option("--lr", o.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    app.add_option("--epochs", o.epochs, "maximum epochs")->check(CLI::PositiveNumber);
    app.add_option("--patience", o.patience, "early-stopping patience in epochs")->check(CLI::PositiveNumber);
    app.add_option("--hidden", o.hidden, "meta-learner hidden width")->check(CLI::PositiveNumber);
    app.add_option("--seed", o.seed, "random seed");
    app.add_flag("--linear-head", o.linear_head, "raw classifier weights instead of softmax");
}

TrainConfig make_config(const Options& o)
{
    TrainConfig config;
    config.q = o.q;
    config.top_k = o.topk;
    config.lr = o.lr;
    config.epochs = o.epochs;
    config.patience = std::min(o.patience, o.epochs);
    config.hidden = o.hidden;
    config.seed = o.seed;
    config.bank = parse_bank(o.bank);
    config.fusion = o.fusion == "sum" ? Fusion::Sum : Fusion::Meta;
    config.head = o.linear_head ? WeightHead::Linear : WeightHead::Softmax;
    config.nomination = !o.no_nomination;
    config.bank_options.temperature = o.temperature;
    config.bank_options.standardize = o.standardize;
    config.threads = o.threads;
    validate_config(config);
    return config;
}

std::vector<FewShotSplit> selected_folds(const Options& o)
{
    auto splits = read_splits(o.split_file);
    if (o.fold < 0) {
        return splits;
    }
    for (auto& s : splits) {
        if (s.fold_index == o.fold) {
            return {s};
        }
    }
    throw Error(ErrorKind::Usage, "fold " + std::to_string(o.fold) + " not in " + o.split_file);
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorKind::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    }
}

fs::path checkpoint_path(const fs::path& dir, int fold)
{
    return dir / ("fold_" + std::to_string(fold) + ".mocm");
}

std::string metrics_table(const std::string& method, int shots, const std::vector<FoldMetrics>& folds)
{
    std::ostringstream out;
    out << "method\tshots\tfold\tauc\tacc\n";
    for (const auto& f : folds) {
        out << method << '\t' << shots << '\t' << f.fold_index << '\t' << fixed(f.auc) << '\t' << fixed(f.acc) << '\n';
    }
    const MetricSummary s = aggregate_folds(folds);
    out << method << '\t' << shots << "\tmean\t" << fixed(s.auc.mean) << '\t' << fixed(s.acc.mean) << '\n';
    out << method << '\t' << shots << "\tstd\t" << fixed(s.auc.std) << '\t' << fixed(s.acc.std) << '\n';
    return out.str();
}

void print_summary(std::ostream& out, const std::string& method, const std::vector<FoldMetrics>& folds)
{
    for (const auto& f : folds) {
        out << method << " fold " << f.fold_index << ": AUC " << fixed(f.auc, 4) << "  ACC " << fixed(f.acc, 4)
            << "  (n=" << f.n_test << ")\n";
    }
    const MetricSummary s = aggregate_folds(folds);
    out << method << " mean: AUC " << fixed(s.auc.mean, 4) << " +- " << fixed(s.auc.std, 4) << "  ACC "
        << fixed(s.acc.mean, 4) << " +- " << fixed(s.acc.std, 4) << '\n';
}

int cmd_synth(const Options& o, std::ostream& out)
{
    SyntheticSpec spec;
    if (o.spec == "default") {
        spec = default_synthetic_spec();
    } else if (o.spec == "scale-mismatch") {
        spec = scale_mismatch_synthetic_spec();
    } else {
        spec = parse_synthetic_spec(read_text_file(o.spec));
    }
    const fs::path dir = o.out.empty() ? fs::path("data") : fs::path(o.out);
    const SyntheticDataset ds = generate_synthetic(spec, o.seed);
    write_synthetic(ds, dir);
    write_text_file(dir / "synthetic_spec.cfg", format_synthetic_spec(spec));
    out << "wrote " << ds.bags.size() << " slides to " << dir.string() << '\n';
    out << "dataset checksum " << hex64(dataset_checksum(ds)) << '\n';
    return 0;
}

int cmd_split(const Options& o, std::ostream& out)
{
    const DatasetManifest manifest = read_manifest(o.manifest);
    const auto splits = sample_few_shot_splits(manifest, o.shots, o.folds, o.val_size, o.test_size, o.seed);
    const fs::path path = o.out.empty() ? fs::path(o.split_file) : fs::path(o.out);
    if (path.has_parent_path()) {
        ensure_dir(path.parent_path());
    }
    write_splits(splits, path);
    out << "wrote " << splits.size() << " folds (" << o.shots << "-shot) to " << path.string() << '\n';
    return 0;
}

int cmd_train(const Options& o, std::ostream& out)
{
    const TrainConfig config = make_config(o);
    if (config.fusion == Fusion::Sum) {
        throw Error(ErrorKind::Usage, "sum fusion has no trainable parameters; run eval --fusion sum directly");
    }
    const ManifestSource source(o.manifest);
    const fs::path dir = o.out.empty() ? fs::path("runs") : fs::path(o.out);
    ensure_dir(dir);
    for (const auto& split : selected_folds(o)) {
        const TrainResult result = train(source, split, config);
        save_checkpoint({result.meta, config.bank}, checkpoint_path(dir, split.fold_index));
        write_text_file(dir / ("train_fold_" + std::to_string(split.fold_index) + ".log"),
                        format_train_log(result.report));
        const auto& r = result.report;
        out << "fold " << split.fold_index << ": " << r.epoch_loss.size() << " epochs, selected epoch "
            << r.selected_epoch << ", loss " << fixed(r.epoch_loss[static_cast<std::size_t>(r.selected_epoch)])
            << ", val AUC " << fixed(r.val_auc[static_cast<std::size_t>(r.selected_epoch)], 4) << ", checksum "
            << hex64(r.checksum) << '\n';
    }
    return 0;
}

int cmd_eval(const Options& o, std::ostream& out)
{
    TrainConfig config = make_config(o);
    const ManifestSource source(o.manifest);
    const fs::path dir = o.out.empty() ? fs::path("runs") : fs::path(o.out);
    const fs::path checkpoints = o.checkpoint.empty() ? dir : fs::path(o.checkpoint);
    ensure_dir(dir);
    const auto splits = selected_folds(o);
    std::vector<FoldMetrics> folds;
    for (const auto& split : splits) {
        if (config.fusion == Fusion::Sum) {
            folds.push_back(evaluate_moc(source, split, nullptr, config));
            continue;
        }
        const MetaCheckpoint ckpt = load_checkpoint(checkpoint_path(checkpoints, split.fold_index));
        config.bank = ckpt.bank;
        config.head = ckpt.meta.head;
        folds.push_back(evaluate_moc(source, split, &ckpt.meta, config));
    }
    const std::string method = config.fusion == Fusion::Sum ? "sum" : "moc";
    const int shots = splits.empty() ? o.shots : splits.front().shots;
    write_text_file(dir / ("metrics_" + method + ".tsv"), metrics_table(method, shots, folds));
    print_summary(out, method, folds);
    return 0;
}

int cmd_zeroshot(const Options& o, bool shots_given, std::ostream& out)
{
    const TrainConfig config = make_config(o);
    const ManifestSource source(o.manifest);
    const auto splits = selected_folds(o);
    std::vector<FoldMetrics> folds;
    for (const auto& split : splits) {
        folds.push_back(evaluate_zero_shot(source, split, config));
    }
    const int shots = shots_given || splits.empty() ? o.shots : splits.front().shots;
    const fs::path dir = o.out.empty() ? fs::path("runs") : fs::path(o.out);
    ensure_dir(dir);
    write_text_file(dir / "metrics_zeroshot.tsv", metrics_table("zeroshot", shots, folds));
    print_summary(out, "zeroshot", folds);
    return 0;
}

int cmd_ablate(const Options& o, std::ostream& out)
{
    const TrainConfig config = make_config(o);
    const ManifestSource source(o.manifest);
    const auto splits = selected_folds(o);
    const auto rows = run_ablation(source, splits, config, all_subsets(config.bank));
    std::ostringstream table;
    table << "fusion\tsize\tsubset\tauc_mean\tauc_std\tacc_mean\tacc_std\n";
    for (const auto& row : rows) {
        table << to_string(row.fusion) << '\t' << row.subset.size() << '\t' << format_bank(row.subset) << '\t'
              << fixed(row.summary.auc.mean) << '\t' << fixed(row.summary.auc.std) << '\t'
              << fixed(row.summary.acc.mean) << '\t' << fixed(row.summary.acc.std) << '\n';
    }
    const fs::path dir = o.out.empty() ? fs::path("runs") : fs::path(o.out);
    ensure_dir(dir);
    write_text_file(dir / "ablation.tsv", table.str());
    out << table.str();
    for (Fusion fusion : {Fusion::Meta, Fusion::Sum}) {
        for (std::size_t size = 1; size <= config.bank.size(); ++size) {
            if (const auto mean = mean_auc_for_size(rows, fusion, size)) {
                out << to_string(fusion) << " bank size " << size << ": mean AUC " << fixed(*mean, 4) << '\n';
            }
        }
    }
    return 0;
}

int cmd_export(const Options& o, std::ostream& out)
{
    if (o.slide.empty() || o.out.empty()) {
        throw Error(ErrorKind::Usage, "export-scores needs --slide and --out");
    }
    TrainConfig config = make_config(o);
    const ManifestSource source(o.manifest);
    std::optional<MetaCheckpoint> ckpt;
    if (!o.checkpoint.empty()) {
        ckpt = load_checkpoint(o.checkpoint);
        config.bank = ckpt->bank;
        config.head = ckpt->meta.head;
    }
    export_patch_scores(source.load(o.slide), source.prompts(), ckpt ? &ckpt->meta : nullptr, config, o.out);
    out << "wrote patch scores for " << o.slide << " to " << o.out << '\n';
    return 0;
}

int cmd_gradcheck(const Options& o, std::ostream& out)
{
    const GradCheckResult meta = check_meta_gradients(o.seed, o.instances);
    const GradCheckResult e2e = check_end_to_end_gradients(o.seed, o.instances);
    auto line = [&](const char* name, const GradCheckResult& r) {
        char buffer[200];
        std::snprintf(buffer, sizeof(buffer), "%s: %zu instances, %zu parameters, max relative error %.3e\n", name,
                      r.instances, r.parameters_checked, r.max_relative_error);
        out << buffer;
    };
    line("meta-learner", meta);
    line("end-to-end", e2e);
    const double worst = std::max(meta.max_relative_error, e2e.max_relative_error);
    if (!(worst <= kGradcheckTolerance)) {
        out << "FAIL: exceeds " << kGradcheckTolerance << '\n';
        return 3;
    }
    out << "PASS\n";
    return 0;
}

const char* kUsage =
    "usage: moc <subcommand> [options]\n"
    "subcommands: synth, split, train, eval, zeroshot, ablate, export-scores, gradcheck\n"
    "run `moc <subcommand> --help` for options\n";

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    if (args.empty() || args[0] == "--help" || args[0] == "-h") {
        (args.empty() ? err : out) << kUsage;
        return args.empty() ? 1 : 0;
    }
    const std::string sub = args[0];
    Options o;
    CLI::App app("moc " + sub, "moc " + sub);
    app.set_config("--config", "", "flat key=value file; command-line flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);

    CLI::Option* shots_option = nullptr;
    if (sub == "synth") {
        app.add_option("--spec", o.spec, "default, scale-mismatch, or a key=value spec file");
        app.add_option("--seed", o.seed, "random seed");
        app.add_option("--out", o.out, "output directory (default data)");
    } else if (sub == "split") {
        app.add_option("--manifest", o.manifest, "dataset manifest");
        app.add_option("--shots", o.shots, "training slides per class")->check(CLI::PositiveNumber);
        app.add_option("--folds", o.folds, "number of folds")->check(CLI::PositiveNumber);
        app.add_option("--val-size", o.val_size, "validation slides per fold");
        app.add_option("--test-size", o.test_size, "test slides per fold");
        app.add_option("--seed", o.seed, "random seed");
        app.add_option("--out", o.out, "split file to write (default data/splits.json)");
    } else if (sub == "train" || sub == "eval" || sub == "ablate") {
        app.add_option("--manifest", o.manifest, "dataset manifest");
        app.add_option("--split-file", o.split_file, "split file");
        app.add_option("--fold", o.fold, "run a single fold");
        app.add_option("--out", o.out, "run directory (default runs)");
        add_pipeline_options(app, o);
        add_training_options(app, o);
        if (sub == "eval") {
            app.add_option("--checkpoint", o.checkpoint, "checkpoint directory (default: --out)");
        }
    } else if (sub == "zeroshot") {
        app.add_option("--manifest", o.manifest, "dataset manifest");
        app.add_option("--split-file", o.split_file, "split file");
        app.add_option("--fold", o.fold, "run a single fold");
        shots_option = app.add_option("--shots", o.shots, "recorded in the metrics file; has no effect");
        app.add_option("--topk", o.topk, "K of top-K pooling")->check(CLI::PositiveNumber);
        app.add_option("--threads", o.threads, "worker cap (0 = all cores)");
        app.add_option("--out", o.out, "run directory (default runs)");
    } else if (sub == "export-scores") {
        app.add_option("--manifest", o.manifest, "dataset manifest");
        app.add_option("--slide", o.slide, "slide id")->required();
        app.add_option("--checkpoint", o.checkpoint, "meta-learner checkpoint file");
        app.add_option("--out", o.out, "CSV file to write")->required();
        add_pipeline_options(app, o);
    } else if (sub == "gradcheck") {
        app.add_option("--seed", o.seed, "random seed");
        app.add_option("--instances", o.instances, "random instances per suite")->check(CLI::PositiveNumber);
    } else {
        err << "unknown subcommand '" << sub << "'\n" << kUsage;
        return 1;
    }

    try {
        std::vector<std::string> rest(args.rbegin(), args.rend() - 1); // CLI11 wants reversed order
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sub == "synth") {
            return cmd_synth(o, out);
        }
        if (sub == "split") {
            return cmd_split(o, out);
        }
        if (sub == "train") {
            return cmd_train(o, out);
        }
        if (sub == "eval") {
            return cmd_eval(o, out);
        }
        if (sub == "zeroshot") {
            return cmd_zeroshot(o, shots_option != nullptr && shots_option->count() > 0, out);
        }
        if (sub == "ablate") {
            return cmd_ablate(o, out);
        }
        if (sub == "export-scores") {
            return cmd_export(o, out);
        }
        return cmd_gradcheck(o, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace moc::cli
