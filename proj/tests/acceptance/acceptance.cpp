// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.
//
//   flowcast_acceptance --cli <path to flowcast> --workdir <dir> [--only 1,4,7]

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flowcast/experiments.hpp"
#include "oracles.hpp"

using namespace flowcast;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets, pinned.
constexpr double kLstmGradTol = 1e-4;
constexpr double kMlpGradTol = 1e-6;
constexpr double kGradStep = 1e-6;
constexpr double kGradBudgetSeconds = 30.0;
constexpr double kCellTol = 1e-12;
constexpr double kMetricTol = 1e-10;
constexpr double kScalerTol = 1e-12;  // relative for |x| > 1, absolute below
constexpr double kOverfitMse = 1e-3;
constexpr std::size_t kOverfitMaxEpochs = 500;
constexpr double kOverfitBudgetSeconds = 60.0;
constexpr double kLstmR2Min = 0.90;
constexpr double kCompareBudgetSeconds = 15.0 * 60.0;
constexpr double kAblationMargin = 0.02;
constexpr double kSpearmanMax = -0.8;
constexpr double kSvrKktTol = 1e-3;
constexpr double kSvrObjectiveTol = 1e-3;
constexpr double kSvrMaeMax = 0.15;
constexpr std::uint64_t kSeed = 7;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Matrix random_rows(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (auto& v : m.span()) v = rng.uniform();
    return m;
}

Vector random_targets(Rng& rng, std::size_t n) {
    Vector v(n);
    for (auto& x : v) x = rng.uniform();
    return v;
}

// 1 ---------------------------------------------------------------------------
// Central differences against the library's analytic gradient, with the
// reference loss in long double (see oracle::fd_max_relative_error).
Outcome gradient_fidelity() {
    const auto t0 = Clock::now();
    Rng rng(101);
    const std::size_t hiddens[] = {2, 4, 8}, encs[] = {2, 3, 6}, inputs[] = {1, 5, 12};
    double worst_lstm = 0.0, worst_mlp = 0.0, double_checker = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t h = hiddens[rng.below(3)], e = encs[rng.below(3)], in = inputs[rng.below(3)];
        const auto p = LstmParams::init(rng, in, h, e);
        const auto x = random_rows(rng, 4, in * e);
        const auto y = random_targets(rng, 4);
        worst_lstm = std::max(worst_lstm, oracle::fd_max_relative_error(p, x, y, oracle::lstm_sequence<long double>, kGradStep));
        double_checker =
            std::max(double_checker, gradient_check(p, x, y, LossKind::Mse, kGradStep).max_relative_error);

        const auto m = MlpParams::init(rng, in * e, h);
        worst_mlp = std::max(worst_mlp, oracle::fd_max_relative_error(m, x, y, oracle::mlp_forward<long double>, kGradStep));
    }
    const double secs = seconds_since(t0);
    return {worst_lstm < kLstmGradTol && worst_mlp < kMlpGradTol && secs < kGradBudgetSeconds,
            fmt("20 configs, h=%.0e: LSTM max rel err %.2e (< %.0e), MLP %.2e (< %.0e), %.1f s (< %.0f s); "
                "double-precision checker for reference: LSTM %.2e",
                kGradStep, worst_lstm, kLstmGradTol, worst_mlp, kMlpGradTol, secs, kGradBudgetSeconds,
                double_checker)};
}

// 2 ---------------------------------------------------------------------------
Outcome cell_oracles() {
    Rng rng(202);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t in = 1 + rng.below(12), h = 1 + rng.below(8);
        const auto p = LstmParams::init(rng, in, h, 1, FixedRange{-1.0, 1.0});
        auto lp = p;
        for (auto* g : {&lp.forget, &lp.input, &lp.candidate, &lp.output}) {
            for (auto& b : g->bias) b = rng.uniform(-1, 1);
        }
        std::vector<double> x(in), hp(h), cp(h);
        for (auto& v : x) v = rng.uniform(-2, 2);
        for (auto& v : hp) v = rng.uniform(-1, 1);
        for (auto& v : cp) v = rng.uniform(-2, 2);
        const auto got = lstm_cell_forward(lp, x, LstmState{Vector(hp), Vector(cp)});
        const auto ref = oracle::lstm_cell(lp, x, hp, cp);
        for (std::size_t k = 0; k < h; ++k) {
            worst = std::max({worst, std::abs(got.state.h[k] - ref.h[k]), std::abs(got.state.c[k] - ref.c[k]),
                              std::abs(got.gates.forget[k] - ref.g[k]), std::abs(got.gates.input[k] - ref.i[k]),
                              std::abs(got.gates.candidate[k] - ref.cand[k]),
                              std::abs(got.gates.output[k] - ref.o[k])});
        }

        const auto r = RnnParams::init(rng, in, h, 1, FixedRange{-1.0, 1.0});
        const auto rg = rnn_cell_forward(r, x, hp);
        const auto rr = oracle::rnn_cell(r, x, hp);
        for (std::size_t k = 0; k < h; ++k) worst = std::max(worst, std::abs(rg.hidden[k] - rr.h[k]));
        worst = std::max(worst, std::abs(rg.output[0] - rr.y[0]));
    }
    return {worst <= kCellTol, fmt("100 LSTM + 100 RNN cells, max abs diff %.2e (<= %.0e)", worst, kCellTol)};
}

// 3 ---------------------------------------------------------------------------
Outcome metric_oracles() {
    Rng rng(303);
    double worst = 0.0, worst_scale = 0.0;
    bool ordered = true;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.below(100);
        std::vector<double> p(n), o(n);
        for (std::size_t i = 0; i < n; ++i) {
            o[i] = rng.uniform(0, 1000);
            p[i] = o[i] + rng.normal(0, 80);
        }
        const double a = rmse(p, o), b = mae(p, o), c = r2(p, o);
        worst = std::max({worst, std::abs(a - oracle::rmse(p, o)) / std::max(1.0, a),
                          std::abs(b - oracle::mae(p, o)) / std::max(1.0, b),
                          std::abs(c - oracle::r2_observed_mean(p, o))});
        ordered = ordered && a >= b;
        const double k = rng.uniform(0.01, 100.0);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] *= k;
            o[i] *= k;
        }
        worst_scale = std::max(worst_scale, std::abs(r2(p, o) - c));
    }
    return {worst <= kMetricTol && ordered && worst_scale <= kMetricTol,
            fmt("1000 pairs: oracle diff %.2e, r2 scale diff %.2e (<= %.0e), rmse>=mae %s", worst, worst_scale,
                kMetricTol, ordered ? "always" : "VIOLATED")};
}

// 4 ---------------------------------------------------------------------------
Outcome windowing_law() {
    Rng rng(404);
    std::size_t bad = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t enc = 1 + rng.below(24), pred = 1 + rng.below(12);
        SyntheticConfig sc;
        sc.n_hours = 100 + rng.below(300);  // the generator's minimum is 100 hours
        Rng data_rng(rng.next_u64());
        const auto table = generate_synthetic(data_rng, sc);
        const auto m = series_to_supervised(table, enc, pred, VariableSet{true, true, false});
        if (m.rows() != sc.n_hours - (enc + pred - 1) || m.n_features() != enc * 12) ++bad;
    }
    Rng data_rng(1);
    const auto table = generate_synthetic(data_rng, SyntheticConfig{});
    const auto standard = series_to_supervised(table, 12, 6, VariableSet{true, true, false});
    std::vector<std::string> vars{"Q"};
    for (std::size_t j = 1; j <= kRainStations; ++j) vars.push_back(rain_column_name(j));
    const auto layout = supervised_layout(12, 6, vars);
    const bool std_ok = standard.n_features() == 144 && standard.target_name == "Q(t+5)" &&
                        layout.size() >= 205 && layout[204] == "Q(t+5)";
    return {bad == 0 && std_ok,
            fmt("200 triples, %zu row-count mismatches; 12/6/12-variable case: %zu features, target %s, column 205 %s",
                bad, standard.n_features(), standard.target_name.c_str(),
                layout.size() >= 205 ? layout[204].c_str() : "missing")};
}

// 5 ---------------------------------------------------------------------------
Outcome scaler_round_trip() {
    Rng rng(505);
    double worst = 0.0;
    bool in_range = true, constants_zero = true;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t rows = 4 + rng.below(60), cols = 1 + rng.below(12);
        Matrix m(rows, cols);
        for (auto& v : m.span()) v = rng.uniform(0, 2000) * rng.uniform();
        const std::size_t constant_col = rng.below(cols);
        const double constant = rng.uniform(0, 50);
        for (std::size_t r = 0; r < rows; ++r) m(r, constant_col) = constant;

        // Fit on the first three quarters, as the pipeline does.
        const std::size_t n_train = rows * 3 / 4;
        Matrix train(n_train, cols, std::vector<double>(m.values().begin(),
                                                        m.values().begin() + static_cast<long>(n_train * cols)));
        const auto s = MinMaxScaler::fit(train);
        const auto scaled_train = s.transform(train);
        for (double v : scaled_train.values()) in_range = in_range && v >= 0.0 && v <= 1.0;
        const auto scaled = s.transform(m);
        for (std::size_t r = 0; r < rows; ++r) constants_zero = constants_zero && scaled(r, constant_col) == 0.0;
        const auto back = s.inverse_transform(scaled);
        for (std::size_t i = 0; i < m.size(); ++i) {
            worst = std::max(worst, std::abs(back.span()[i] - m.span()[i]) / std::max(1.0, std::abs(m.span()[i])));
        }
    }
    return {worst <= kScalerTol && in_range && constants_zero,
            fmt("100 tables: round-trip err %.2e (<= %.0e), train in [0,1] %s, constant columns -> 0 %s", worst,
                kScalerTol, in_range ? "yes" : "NO", constants_zero ? "yes" : "NO")};
}

// 6 ---------------------------------------------------------------------------
Outcome overfit_smoke() {
    const auto t0 = Clock::now();
    // 50 rows spread over the whole training period, so storms and recessions both appear.
    ExperimentConfig c;
    const auto data = prepare_data(load_dataset(c), c);
    // Rescaled to the subset's own range: under the full-series scaler the flow
    // targets are so skewed that predicting their mean already beats 1e-3.
    const auto rows = strided_indices(data.train.rows(), 50);
    const auto raw = select_rows(data.train_raw, rows);
    const auto subset = transform(fit_scaler(raw), raw);
    double mean = 0.0, var = 0.0;
    for (double t : subset.targets) mean += t / 50.0;
    for (double t : subset.targets) var += (t - mean) * (t - mean) / 50.0;
    Rng rng(kSeed);
    const auto init = LstmParams::init(rng, subset.n_variables, 8, subset.encoder_steps);
    TrainConfig tc;
    tc.optimizer = OptimizerKind::Adam;
    tc.learning_rate = 0.001;
    tc.batch_size = 10;
    tc.epochs = kOverfitMaxEpochs;
    tc.seed = kSeed;
    std::size_t reached = 0;
    double best = INFINITY;
    (void)train(init, subset, subset, tc, EpochCallback<LstmParams>{[&](const EpochLog& log, const LstmParams& p) {
        const double mse = evaluate_loss(p, subset, LossKind::Mse);
        best = std::min(best, mse);
        if (reached == 0 && mse < kOverfitMse) reached = log.epoch;
    }});
    const double secs = seconds_since(t0);
    return {reached != 0 && secs < kOverfitBudgetSeconds,
            fmt("hidden 8, Adam lr 0.001, batch 10, 50 rows (target variance %.2e): train MSE < %.0e %s (best %.2e), "
                "%.1f s (< %.0f s)",
                var, kOverfitMse, reached ? fmt("at epoch %zu", reached).c_str() : "never", best, secs,
                kOverfitBudgetSeconds)};
}

// CLI helpers -------------------------------------------------------------------
int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
    const std::string cmd = "\"" + cli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return status == -1 ? -1 : WEXITSTATUS(status);
}

struct CompareRuns {
    fs::path first, second;
    int code_first = -1, code_second = -1;
    double seconds_first = 0.0;
};

CompareRuns& compare_runs(const std::string& cli, const fs::path& workdir) {
    static std::optional<CompareRuns> runs;
    if (!runs) {
        runs.emplace();
        runs->first = workdir / "compare_a";
        runs->second = workdir / "compare_b";
        fs::remove_all(runs->first);
        fs::remove_all(runs->second);
        const auto seed = std::to_string(kSeed);
        const auto t0 = Clock::now();
        runs->code_first = run_cli(cli, "compare --seed " + seed + " --out \"" + runs->first.string() + "\"",
                                   workdir / "compare_a.log");
        runs->seconds_first = seconds_since(t0);
        runs->code_second = run_cli(cli, "compare --seed " + seed + " --out \"" + runs->second.string() + "\"",
                                    workdir / "compare_b.log");
    }
    return *runs;
}

// 7 ---------------------------------------------------------------------------
Outcome synthetic_comparative(const std::string& cli, const fs::path& workdir) {
    const auto& runs = compare_runs(cli, workdir);
    if (runs.code_first != 0) return {false, fmt("compare exited with %d; see compare_a.log", runs.code_first)};
    const auto report = nlohmann::json::parse(slurp(runs.first / "report.json"));
    double lstm_r2 = NAN;
    std::string scores;
    for (const auto& m : report.at("models")) {
        if (m.at("status") != "ok") {
            scores += m.at("model").get<std::string>() + " failed; ";
            continue;
        }
        const double r2v = m.at("report").at("r2").get<double>();
        scores += fmt("%s R2 %.3f; ", m.at("model").get<std::string>().c_str(), r2v);
        if (m.at("model") == "lstm") lstm_r2 = r2v;
    }
    std::string ordering;
    for (const auto& name : report.at("ordering_by_r2")) ordering += (ordering.empty() ? "" : " > ") + name.get<std::string>();
    const auto& s = report.at("settings");
    return {lstm_r2 >= kLstmR2Min && runs.seconds_first < kCompareBudgetSeconds,
            fmt("%zu train / %zu test, %sordering %s; LSTM R2 %.3f (>= %.2f), %.0f s (< %.0f s)",
                s.at("n_train").get<std::size_t>(), s.at("n_test").get<std::size_t>(), scores.c_str(),
                ordering.c_str(), lstm_r2, kLstmR2Min, runs.seconds_first, kCompareBudgetSeconds)};
}

// 8 ---------------------------------------------------------------------------
Outcome ablation_trend() {
    ExperimentConfig c;
    c.train.seed = kSeed;
    const auto result = run_input_ablation(c, load_dataset(c));
    auto score = [&](VariableSet v) {
        const auto* cell = result.find(v);
        return cell && cell->report ? cell->report->r2 : NAN;
    };
    const double fr = score({true, true, false}), r = score({false, true, false}), f = score({true, false, false});
    std::string all;
    for (const auto& cell : result.cells) {
        all += cell.inputs.label() + (cell.report ? fmt(" %.3f", cell.report->r2) : std::string(" failed")) + "; ";
    }
    return {fr > r + kAblationMargin && fr >= f,
            fmt("%sflow+rain %.3f vs rain %.3f (margin >= %.2f), vs flow %.3f", all.c_str(), fr, r, kAblationMargin,
                f)};
}

// 9 ---------------------------------------------------------------------------
Outcome predict_step_trend() {
    ExperimentConfig c;
    c.train.seed = kSeed;
    c.models = {ModelKind::Lstm};
    const std::vector<std::size_t> steps{1, 3, 6, 9, 12};
    const auto result = run_predict_step_sweep(c, load_dataset(c), steps);
    std::vector<double> xs, ys;
    std::string cells;
    for (const auto& cell : result.cells) {
        if (!cell.report) return {false, fmt("step %zu failed: %s", cell.value, cell.error.c_str())};
        xs.push_back(static_cast<double>(cell.value));
        ys.push_back(cell.report->r2);
        cells += fmt("step %zu R2 %.3f; ", cell.value, cell.report->r2);
    }
    const double rho = spearman(xs, ys);
    return {rho <= kSpearmanMax, fmt("%sSpearman %.2f (<= %.1f)", cells.c_str(), rho, kSpearmanMax)};
}

// 10 --------------------------------------------------------------------------
Outcome svr_correctness() {
    const std::size_t n = 200;
    Rng rng(1010);
    Matrix x(n, 1);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n - 1);
        y[i] = std::sin(x(i, 0)) + 0.1 * rng.normal();
    }
    const SvrOptions opt{1.0, 1.0, 0.05, 1e-3, 1000000};
    const auto model = svr_fit(x, y, opt);

    // Dual value per training row.
    std::vector<double> beta(n, 0.0);
    for (std::size_t k = 0; k < model.support_vectors.rows(); ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (x(i, 0) == model.support_vectors(k, 0)) beta[i] = model.dual_coeffs[k];
        }
    }
    double kkt = 0.0, abs_err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = svr_predict(model, x.row(i));
        const double r = y[i] - f, b = beta[i], eps = opt.epsilon_tube, C = opt.c;
        abs_err += std::abs(r);
        double v;
        if (b == 0.0) v = std::max(0.0, std::abs(r) - eps);
        else if (b > 0.0 && b < C) v = std::abs(r - eps);
        else if (b >= C) v = std::max(0.0, eps - r);
        else if (b > -C) v = std::abs(r + eps);
        else v = std::max(0.0, r + eps);
        kkt = std::max(kkt, v);
    }
    std::vector<double> K(n * n), a(n), as(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = x(i, 0) - x(j, 0);
            K[i * n + j] = std::exp(-opt.gamma * d * d);
        }
        a[i] = std::max(0.0, beta[i]);
        as[i] = std::max(0.0, -beta[i]);
    }
    const double smo = oracle::svr_dual_objective(K, a, as, y, opt.epsilon_tube);
    const auto qp = oracle::svr_dual_fista(K, y, opt.c, opt.epsilon_tube, 20000);
    const double gap = std::abs(smo - qp.objective), train_mae = abs_err / static_cast<double>(n);
    return {kkt <= kSvrKktTol && gap <= kSvrObjectiveTol && train_mae <= kSvrMaeMax,
            fmt("KKT violation %.2e (<= %.0e), objective %.6f vs QP oracle %.6f, gap %.2e (<= %.0e), "
                "train MAE %.4f (<= %.2f)",
                kkt, kSvrKktTol, smo, qp.objective, gap, kSvrObjectiveTol, train_mae, kSvrMaeMax)};
}

// 11 --------------------------------------------------------------------------
Outcome determinism(const std::string& cli, const fs::path& workdir) {
    const auto& runs = compare_runs(cli, workdir);
    if (runs.code_first != 0 || runs.code_second != 0) {
        return {false, fmt("compare exit codes %d and %d", runs.code_first, runs.code_second)};
    }
    std::string detail;
    bool all_same = true;
    for (const char* name : {"report.json", "trace.csv", "epochs.csv"}) {
        const auto a = slurp(runs.first / name), b = slurp(runs.second / name);
        const bool same = !a.empty() && a == b;
        all_same = all_same && same;
        detail += fmt("%s %s (%zu bytes); ", name, same ? "identical" : "DIFFERS", a.size());
    }
    return {all_same, "two `compare --seed 7` runs: " + detail};
}

// 12 --------------------------------------------------------------------------
Outcome reference_constants(const std::string& cli, const fs::path& workdir) {
    struct Row {
        const char* model;
        double rmse, mae, r2;
    };
    const Row expected[] = {{"svr", 136.022, 63.939, 0.917}, {"mlp", 99.359, 35.248, 0.956},
                            {"lstm", 82.007, 27.752, 0.970}};
    bool ok = true;
    const auto lib = published_comparison();
    ok = ok && lib.size() == 3;
    for (std::size_t i = 0; ok && i < 3; ++i) {
        ok = lib[i].model == expected[i].model && lib[i].rmse == expected[i].rmse && lib[i].mae == expected[i].mae &&
             lib[i].r2 == expected[i].r2;
    }
    const auto& runs = compare_runs(cli, workdir);
    bool in_report = false;
    if (runs.code_first == 0) {
        const auto ref = nlohmann::json::parse(slurp(runs.first / "report.json")).at("published_reference");
        in_report = ref.at("recomputable") == false && ref.at("scores").size() == 3 &&
                    !ref.at("note").get<std::string>().empty();
        for (std::size_t i = 0; in_report && i < 3; ++i) {
            const auto& s = ref.at("scores")[i];
            in_report = s.at("model") == expected[i].model && s.at("rmse").get<double>() == expected[i].rmse &&
                        s.at("mae").get<double>() == expected[i].mae && s.at("r2").get<double>() == expected[i].r2;
        }
    }
    return {ok && in_report, fmt("library constants %s; report.json published_reference %s (recomputable=false)",
                                 ok ? "exact" : "MISMATCH", in_report ? "exact" : "MISMATCH")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowcast acceptance suite"};
    std::string cli;
    std::string workdir = "acceptance_runs";
    std::vector<int> only;
    app.add_option("--cli", cli, "path to the flowcast executable")->required();
    app.add_option("--workdir", workdir, "scratch directory for CLI runs");
    app.add_option("--only", only, "run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    fs::create_directories(workdir);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gradient fidelity", gradient_fidelity},
        {"cell oracle equivalence", cell_oracles},
        {"metric oracle equivalence", metric_oracles},
        {"windowing law", windowing_law},
        {"scaler round trip", scaler_round_trip},
        {"overfit smoke", overfit_smoke},
        {"synthetic comparative", [&] { return synthetic_comparative(cli, workdir); }},
        {"ablation trend", ablation_trend},
        {"predict-step trend", predict_step_trend},
        {"SVR correctness", svr_correctness},
        {"determinism", [&] { return determinism(cli, workdir); }},
        {"reference constants", [&] { return reference_constants(cli, workdir); }},
    };

    const std::set<int> selected(only.begin(), only.end());
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        Outcome out;
        const auto t0 = Clock::now();
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        if (!out.pass) ++failures;
        std::cout << (out.pass ? "PASS" : "FAIL") << ' ' << id << ' ' << criteria[i].first << ": " << out.detail
                  << fmt(" [%.1f s]", seconds_since(t0)) << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
