// Acceptance suite: one PASS/FAIL line per criterion.
//
//   moc_acceptance            run every criterion
//   moc_acceptance NAME...    run the named criteria only
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "moc/byte_io.hpp"
#include "moc/cli.hpp"
#include "moc/dataset.hpp"
#include "moc/evaluation.hpp"
#include "moc/gradcheck.hpp"
#include "moc/nomination.hpp"
#include "moc/training.hpp"
#include "oracles.hpp"

using namespace moc;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kFormulaTolerance = 1e-12;
constexpr int kFormulaInstances = 1000;
constexpr double kFormulaSeconds = 5.0;

constexpr int kNominationInstances = 500;
constexpr double kNominationSeconds = 5.0;

constexpr double kGradientTolerance = 1e-5;
constexpr std::size_t kGradientInstances = 20;
constexpr double kGradientSeconds = 30.0;

constexpr int kPoolingInstances = 2000;
constexpr double kPoolingTolerance = 1e-12;

constexpr int kAucInstances = 200;
constexpr double kAucTolerance = 1e-12;

constexpr double kEndToEndMinAuc = 0.95;
constexpr double kEndToEndSeconds = 120.0;

constexpr int kAblationShots = 8;
constexpr double kMonotoneSlack = 0.01;

constexpr std::uint64_t kSeed = 7;
constexpr int kFolds = 5;
constexpr std::size_t kValSize = 4;
constexpr std::size_t kTestSize = 16;

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

std::string fmt(const char* pattern, double a)
{
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), pattern, a);
    return buffer;
}

Verdict formula_oracles()
{
    Stopwatch clock;
    Rng rng(derive_seed(kSeed, "formula-oracles"));
    double worst = 0.0;
    for (int trial = 0; trial < kFormulaInstances; ++trial) {
        const std::size_t d = 2 + rng.index(15);
        const std::size_t c = 2 + rng.index(4);
        const std::size_t cb = 1 + rng.index(4);
        const auto inst = oracle::random_instance(rng, 1 + rng.index(8), d, c, cb);
        const auto peak = oracle::confidence_peak(inst);
        const auto cert = oracle::normalized_certainty(inst, 1.0);
        const auto gap = oracle::divergence_extremum(inst);
        const auto bg = oracle::background_suppression(inst);
        const ScoreTable tp = score_confidence_peak(inst.bag, inst.prompts);
        const ScoreTable ts = score_normalized_certainty(inst.bag, inst.prompts);
        const ScoreTable td = score_divergence_extremum(inst.bag, inst.prompts);
        const ScoreTable tb = score_background_suppression(inst.bag, inst.prompts);
        for (std::size_t i = 0; i < inst.bag.size(); ++i) {
            for (std::size_t k = 0; k < c; ++k) {
                worst = std::max(worst, std::abs(tp.at(i, k) - peak[i][k]));
                worst = std::max(worst, std::abs(ts.at(i, k) - cert[i][k]));
            }
            worst = std::max(worst, std::abs(td.at(i, 0) - gap[i]));
            worst = std::max(worst, std::abs(tb.at(i, 0) - bg[i]));
        }
    }
    const double t = clock.seconds();
    return {worst <= kFormulaTolerance && t < kFormulaSeconds,
            std::to_string(kFormulaInstances) + " instances, max abs error " + fmt("%.3g", worst) + ", " +
                fmt("%.2f", t) + " s"};
}

Verdict nomination_oracle()
{
    Stopwatch clock;
    Rng rng(derive_seed(kSeed, "nomination-oracle"));
    int mismatches = 0;
    for (int trial = 0; trial < kNominationInstances; ++trial) {
        const std::size_t n = 1 + rng.index(50);
        const std::size_t q = 1 + rng.index(10);
        const auto inst = oracle::random_instance(rng, n, 2 + rng.index(15), 2 + rng.index(4), 1 + rng.index(4));
        if (nominate(inst.bag, inst.prompts, q).indices != oracle::nominate(inst, q)) {
            ++mismatches;
        }
    }
    const double t = clock.seconds();
    return {mismatches == 0 && t < kNominationSeconds,
            std::to_string(kNominationInstances) + " instances, " + std::to_string(mismatches) + " mismatches, " +
                fmt("%.2f", t) + " s"};
}

Verdict gradient_checks()
{
    Stopwatch clock;
    const GradCheckResult meta = check_meta_gradients(kSeed, kGradientInstances);
    const GradCheckResult e2e = check_end_to_end_gradients(kSeed, kGradientInstances);
    const double t = clock.seconds();
    const bool ok = meta.max_relative_error <= kGradientTolerance && e2e.max_relative_error <= kGradientTolerance &&
                    meta.instances >= kGradientInstances && e2e.instances >= kGradientInstances &&
                    t < kGradientSeconds;
    return {ok, "meta " + fmt("%.3g", meta.max_relative_error) + " over " + std::to_string(meta.instances) +
                    ", end-to-end " + fmt("%.3g", e2e.max_relative_error) + " over " + std::to_string(e2e.instances) +
                    " (" + std::to_string(e2e.rejected) + " near-kink draws skipped), " + fmt("%.2f", t) + " s"};
}

Verdict pooling_contract()
{
    Rng rng(derive_seed(kSeed, "pooling-contract"));
    std::size_t checks = 0;
    std::size_t failures = 0;
    for (int trial = 0; trial < kPoolingInstances; ++trial) {
        const std::size_t n = 1 + rng.index(30);
        const std::size_t c = 1 + rng.index(5);
        Matrix m(n, c);
        for (double& v : m.values()) {
            v = rng.index(5) == 0 ? 0.5 : rng.uniform(-2.0, 2.0);
        }
        const PoolResult k1 = topk_pool(m, 1);
        const PoolResult all = topk_pool(m, n + rng.index(5));
        for (std::size_t k = 1; k <= n; ++k) {
            const PoolResult r = topk_pool(m, k);
            for (std::size_t j = 0; j < c; ++j) {
                const Vector col = m.column(j);
                double mean = 0.0;
                double max = col[0];
                for (double v : col) {
                    mean += v;
                    max = std::max(max, v);
                }
                mean /= static_cast<double>(n);
                ++checks;
                const bool bounded = r.values[j] >= mean - kPoolingTolerance && r.values[j] <= max + kPoolingTolerance;
                const bool k1_is_max = k1.values[j] == max;
                const bool all_is_mean = std::abs(all.values[j] - mean) <= kPoolingTolerance;
                if (!bounded || !k1_is_max || !all_is_mean) {
                    ++failures;
                }
            }
        }
    }
    return {failures == 0, std::to_string(checks) + " (instance, K, class) checks, " + std::to_string(failures) +
                               " violations"};
}

Verdict auc_oracle()
{
    Rng rng(derive_seed(kSeed, "auc-oracle"));
    double worst = 0.0;
    for (int trial = 0; trial < kAucInstances; ++trial) {
        const std::size_t c = 2 + rng.index(4);
        const std::size_t n = c + rng.index(100 - c + 1);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<int>(i < c ? i : rng.index(c));
        }
        rng.shuffle(std::span<int>(labels));
        Matrix scores(n, c);
        for (double& v : scores.values()) {
            v = rng.index(4) == 0 ? std::round(rng.uniform() * 5) / 5 : rng.uniform();
        }
        worst = std::max(worst, std::abs(auc_macro_ovr(scores, labels) - oracle::pair_auc_macro(scores, labels)));
    }
    const std::vector<int> labels{0, 0, 1, 1};
    const double example = auc_binary(Vector{0.1, 0.4, 0.35, 0.8}, labels, 1);
    return {worst <= kAucTolerance && std::abs(example - 0.75) <= kAucTolerance,
            std::to_string(kAucInstances) + " instances, max abs error " + fmt("%.3g", worst) +
                ", worked example " + fmt("%.6f", example)};
}

Verdict synthetic_end_to_end()
{
    Stopwatch clock;
    const MemorySource source(generate_synthetic(default_synthetic_spec(), kSeed));
    const auto splits = sample_few_shot_splits(source.manifest(), 1, kFolds, kValSize, kTestSize, kSeed);
    const TrainConfig config;
    bool ok = true;
    std::ostringstream detail;
    detail << "1-shot";
    for (const auto& split : splits) {
        const TrainResult trained = train(source, split, config);
        const FoldMetrics moc = evaluate_moc(source, split, &trained.meta, config);
        const FoldMetrics zs = evaluate_zero_shot(source, split, config);
        ok = ok && moc.auc >= kEndToEndMinAuc && moc.auc >= zs.auc;
        detail << ", fold " << split.fold_index << " " << fmt("%.4f", moc.auc) << " vs " << fmt("%.4f", zs.auc);
    }
    const double t = clock.seconds();
    ok = ok && t < kEndToEndSeconds;
    detail << " (MOC vs zero-shot AUC), " << fmt("%.1f", t) << " s";
    return {ok, detail.str()};
}

Verdict ablation_direction()
{
    const MemorySource source(generate_synthetic(scale_mismatch_synthetic_spec(), kSeed));
    const auto splits =
        sample_few_shot_splits(source.manifest(), kAblationShots, kFolds, kValSize, kTestSize, kSeed);
    TrainConfig config;
    config.threads = 0;
    const auto rows = run_ablation(source, splits, config, all_subsets(config.bank));

    double full_meta = 0.0;
    double full_sum = 0.0;
    for (const auto& row : rows) {
        if (row.subset.size() == config.bank.size()) {
            (row.fusion == Fusion::Meta ? full_meta : full_sum) = row.summary.auc.mean;
        }
    }
    std::vector<double> meta_by_size;
    std::vector<double> sum_by_size;
    for (std::size_t size = 1; size <= config.bank.size(); ++size) {
        meta_by_size.push_back(*mean_auc_for_size(rows, Fusion::Meta, size));
        sum_by_size.push_back(*mean_auc_for_size(rows, Fusion::Sum, size));
    }
    double meta_all = 0.0;
    double sum_all = 0.0;
    for (std::size_t i = 0; i < meta_by_size.size(); ++i) {
        meta_all += meta_by_size[i];
        sum_all += sum_by_size[i];
    }
    bool monotone = true;
    for (std::size_t i = 1; i < meta_by_size.size(); ++i) {
        monotone = monotone && meta_by_size[i] >= meta_by_size[i - 1] - kMonotoneSlack;
    }
    std::ostringstream detail;
    detail << kAblationShots << "-shot, full bank meta " << fmt("%.4f", full_meta) << " vs sum "
           << fmt("%.4f", full_sum) << "; meta by size";
    for (double v : meta_by_size) {
        detail << ' ' << fmt("%.4f", v);
    }
    detail << "; sum by size";
    for (double v : sum_by_size) {
        detail << ' ' << fmt("%.4f", v);
    }
    return {full_meta >= full_sum && meta_all >= sum_all && monotone, detail.str()};
}

int cli(std::vector<std::string> args)
{
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    if (code != 0) {
        std::fprintf(stderr, "moc %s failed (%d): %s\n", args[0].c_str(), code, err.str().c_str());
    }
    return code;
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("moc_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Verdict determinism()
{
    const fs::path root = fresh_dir("determinism");
    const std::string seed = std::to_string(kSeed);
    std::vector<fs::path> runs;
    for (const char* name : {"a", "b"}) {
        const fs::path dir = root / name;
        const std::string data = (dir / "data").string();
        const std::string manifest = (dir / "data" / "manifest.tsv").string();
        const std::string split = (dir / "data" / "splits.json").string();
        const std::string out = (dir / "runs").string();
        if (cli({"synth", "--spec", "default", "--seed", seed, "--out", data}) != 0 ||
            cli({"split", "--manifest", manifest, "--shots", "1", "--folds", std::to_string(kFolds), "--seed", seed,
                 "--out", split}) != 0 ||
            cli({"train", "--manifest", manifest, "--split-file", split, "--seed", seed, "--out", out}) != 0 ||
            cli({"eval", "--manifest", manifest, "--split-file", split, "--out", out}) != 0) {
            return {false, "pipeline failed"};
        }
        runs.push_back(dir / "runs");
    }
    std::size_t compared = 0;
    std::size_t differing = 0;
    for (const auto& entry : fs::directory_iterator(runs[0])) {
        const auto name = entry.path().filename();
        ++compared;
        if (!fs::exists(runs[1] / name) || read_file_bytes(entry.path()) != read_file_bytes(runs[1] / name)) {
            ++differing;
        }
    }
    std::size_t checkpoints = 0;
    for (int f = 0; f < kFolds; ++f) {
        checkpoints += fs::exists(runs[0] / ("fold_" + std::to_string(f) + ".mocm")) ? 1 : 0;
    }
    const bool metrics = fs::exists(runs[0] / "metrics_moc.tsv");
    fs::remove_all(root);
    return {differing == 0 && checkpoints == kFolds && metrics,
            std::to_string(compared) + " files compared (" + std::to_string(checkpoints) +
                " checkpoints, metrics table), " + std::to_string(differing) + " differ"};
}

// Metrics table without its shots column.
std::string strip_shots(const std::string& table)
{
    std::istringstream in(table);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find('\t');
        const auto second = line.find('\t', first + 1);
        out << line.substr(0, first) << line.substr(second) << '\n';
    }
    return out.str();
}

Verdict zero_shot_invariance()
{
    const fs::path root = fresh_dir("zeroshot");
    const std::string seed = std::to_string(kSeed);
    const std::string manifest = (root / "data" / "manifest.tsv").string();
    if (cli({"synth", "--spec", "default", "--seed", seed, "--out", (root / "data").string()}) != 0) {
        return {false, "synth failed"};
    }
    std::vector<std::string> tables;
    std::string means;
    for (int shots : {1, 2, 4, 8}) {
        const std::string split = (root / ("splits_" + std::to_string(shots) + ".json")).string();
        const fs::path out = root / ("runs_" + std::to_string(shots));
        if (cli({"split", "--manifest", manifest, "--shots", std::to_string(shots), "--folds",
                 std::to_string(kFolds), "--seed", seed, "--out", split}) != 0 ||
            cli({"zeroshot", "--manifest", manifest, "--split-file", split, "--out", out.string()}) != 0) {
            return {false, "pipeline failed at " + std::to_string(shots) + " shots"};
        }
        tables.push_back(strip_shots(read_text_file(out / "metrics_zeroshot.tsv")));
    }
    bool identical = true;
    for (const auto& t : tables) {
        identical = identical && t == tables[0];
    }
    const auto mean_at = tables[0].find("zeroshot\tmean\t");
    const std::string mean_line =
        tables[0].substr(mean_at, tables[0].find('\n', mean_at) - mean_at);
    fs::remove_all(root);
    return {identical, "shots 1/2/4/8 " + std::string(identical ? "identical" : "differ") + " (" + mean_line + ")"};
}

struct Criterion {
    const char* name;
    Verdict (*run)();
};

constexpr Criterion kCriteria[] = {
    {"formula_oracles", formula_oracles},
    {"nomination_oracle", nomination_oracle},
    {"gradient_checks", gradient_checks},
    {"pooling_contract", pooling_contract},
    {"auc_oracle", auc_oracle},
    {"synthetic_end_to_end", synthetic_end_to_end},
    {"ablation_direction", ablation_direction},
    {"determinism", determinism},
    {"zero_shot_invariance", zero_shot_invariance},
};

} // namespace

int main(int argc, char** argv)
{
    std::vector<std::string> wanted(argv + 1, argv + argc);
    for (const auto& name : wanted) {
        bool known = false;
        for (const auto& c : kCriteria) {
            known = known || name == c.name;
        }
        if (!known) {
            std::fprintf(stderr, "unknown criterion '%s'\n", name.c_str());
            return 2;
        }
    }
    int failed = 0;
    for (const auto& c : kCriteria) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) {
            continue;
        }
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str());
        std::fflush(stdout);
        failed += v.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
