// covden: simulate / clean / train / backtest front end.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covden/covden.hpp"

namespace fs = std::filesystem;
using namespace covden;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct DenoiserFlags {
    Index blocks = 10;
    Index filters = 64;
    Index kernel = 3;
    double lr = 1e-3;
    Index batch = 16;
    Index epochs = 10;
    double val_fraction = 0.2;

    void attach(CLI::App* cmd) {
        cmd->add_option("--blocks", blocks, "Residual blocks")->capture_default_str();
        cmd->add_option("--filters", filters, "Filters per convolution")->capture_default_str();
        cmd->add_option("--kernel", kernel, "Convolution kernel size (odd)")->capture_default_str();
        cmd->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
        cmd->add_option("--batch", batch, "Minibatch size")->capture_default_str();
        cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
        cmd->add_option("--val-fraction", val_fraction, "Trailing fraction held out for validation")->capture_default_str();
    }

    nn::DenoiserConfig config(Index p, std::uint64_t seed, nn::DenoiserMode mode) const {
        nn::DenoiserConfig c;
        c.input_size = p;
        c.num_blocks = blocks;
        c.num_filters = filters;
        c.kernel = kernel;
        c.learning_rate = lr;
        c.batch_size = batch;
        c.epochs = epochs;
        c.validation_fraction = val_fraction;
        c.seed = seed;
        c.mode = mode;
        c.validate();
        return c;
    }
};

struct ModelFlags {
    std::string kind = "block";
    Index p = 100;
    std::string block_sizes = "3,3,4,5,6,7,7,9,11,13,15,17";
    std::optional<double> gamma;
    double alpha = 1.5;
    std::uint64_t model_seed = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--model", kind, "Population model: block, nested or powerlaw")->capture_default_str();
        cmd->add_option("--p", p, "Dimension (block model: must equal the sum of block sizes)")->capture_default_str();
        cmd->add_option("--block-sizes", block_sizes, "Comma-separated block sizes (block model)")->capture_default_str();
        cmd->add_option("--gamma", gamma, "Correlation intensity [default: 0.3 block, 0.1 nested]");
        cmd->add_option("--alpha", alpha, "Power-law exponent (powerlaw model)")->capture_default_str();
        cmd->add_option("--model-seed", model_seed, "Seed of the random orthogonal basis (powerlaw model)")->capture_default_str();
    }

    ModelSpec spec() const {
        ModelSpec s;
        s.kind = parse_model_kind(kind);
        s.p = p;
        s.block_sizes.clear();
        for (const auto& item : io::split(block_sizes, ',')) {
            if (item.empty()) continue;
            const double v = io::parse_double(item);
            if (v != std::floor(v)) throw InvalidParameter("block size '" + item + "' is not an integer");
            s.block_sizes.push_back(static_cast<Index>(v));
        }
        s.gamma = gamma.value_or(s.kind == ModelKind::nested_hierarchical ? 0.1 : 0.3);
        s.alpha = alpha;
        s.seed = model_seed;
        s.validate();
        return s;
    }
};

void print_table(const MonteCarloReport& r) {
    std::printf("model=%s p=%lld n=%lld m=%lld seed=%llu\n", std::string(to_string(r.model.kind)).c_str(),
                static_cast<long long>(r.p), static_cast<long long>(r.n), static_cast<long long>(r.m),
                static_cast<unsigned long long>(r.seed));
    std::printf("%-10s %14s %12s %14s %12s %8s\n", "estimator", "<F>", "se(F)", "<MV>", "se(MV)", "failures");
    for (const auto& row : r.rows) {
        std::printf("%-10s %14.6f %12.6f %14.6f %12.6f %8lld\n", std::string(to_string(row.estimator)).c_str(), row.mean_f, row.se_f,
                    row.mean_mv, row.se_mv, static_cast<long long>(row.failures));
    }
}

std::string merge_list_csv(const Dendrogram& tree) {
    std::string out = "step,left,right,height,size\n";
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
        const auto& node = tree.nodes[k];
        out += std::to_string(k) + "," + std::to_string(node.left) + "," + std::to_string(node.right) + "," +
               io::format_double(node.height) + "," + std::to_string(node.members.size()) + "\n";
    }
    return out;
}

Matrix correlation_distance(const Matrix& cov) {
    const Matrix c = cov_to_corr(cov).correlation;
    Matrix d = (1.0 - c.array()).matrix();
    d.diagonal().setZero();
    return d.cwiseMax(0.0);
}

void write_diagnostics(const ModelSpec& spec, Index n, std::uint64_t seed, const fs::path& dir) {
    const CovarianceMatrix sigma = build_model(spec);
    const SampleDraw draw = sample_covariance(sigma, n, derive_seed(seed, Domain::evaluation, 0));
    const Vector pop = eigenvalues_sym(sigma.values());
    const Vector smp = eigenvalues_sym(draw.sample.values());
    std::string scree = "rank,population,sample\n";
    for (Index k = 0; k < pop.size(); ++k) {
        scree += std::to_string(k + 1) + "," + io::format_double(pop(k)) + "," + io::format_double(smp(k)) + "\n";
    }
    io::write_atomic(dir / "scree.csv", scree);
    for (const auto& [name, m] : {std::pair<std::string, const Matrix*>{"population", &sigma.values()},
                                  std::pair<std::string, const Matrix*>{"sample", &draw.sample.values()}}) {
        const Matrix d = correlation_distance(*m);
        io::write_atomic(dir / ("dendrogram_" + name + "_single.csv"), merge_list_csv(build_dendrogram(d, Linkage::single)));
        io::write_atomic(dir / ("dendrogram_" + name + "_average.csv"), merge_list_csv(build_dendrogram(d, Linkage::average)));
    }
}

// Flat "key = value" config: each key names a long flag of the subcommand
// (dashes or underscores). Returns the equivalent "--key=value" arguments.
std::vector<std::string> config_arguments(const fs::path& path, CLI::App* cmd) {
    std::vector<std::string> out;
    const std::string text = io::read_file(path);
    std::size_t line_no = 0;
    for (const auto& raw : io::split(text, '\n')) {
        ++line_no;
        std::string line(io::strip_cr(raw));
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line.erase(0, line.find_first_not_of(" \t"));
        line.erase(line.find_last_not_of(" \t") + 1);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value' in " + path.string(), line_no);
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        value.erase(0, value.find_first_not_of(" \t"));
        for (char& c : key) {
            if (c == '_') c = '-';
        }
        if (key == "config" || cmd->get_option_no_throw("--" + key) == nullptr) {
            throw ParseError("unknown config key '" + key + "' for command '" + cmd->get_name() + "'", line_no);
        }
        out.push_back("--" + key + "=" + value);
    }
    return out;
}

int report_error(const std::exception& e, int code) {
    std::cerr << "error: " << e.what() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Covariance estimation, denoising and minimum-variance backtesting"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.get_formatter()->column_width(36);

    std::string config_path;
    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Flat key = value file; flags given on the command line win");
    };
    unsigned threads = 1;

    // simulate
    auto* sim = app.add_subcommand("simulate", "Monte Carlo loss tables for a population model");
    ModelFlags sim_model;
    DenoiserFlags sim_net;
    Index sim_n = 200;
    Index sim_m = 1000;
    std::string sim_estimators = "naive,lp,alca,2s-lp";
    std::uint64_t sim_seed = 0;
    Index sim_train_count = 100;
    std::string sim_out = "simulate_out";
    bool sim_diagnostics = false;
    sim_model.attach(sim);
    sim->add_option("--n", sim_n, "Observations per realization")->capture_default_str();
    sim->add_option("--m", sim_m, "Monte Carlo realizations")->capture_default_str();
    sim->add_option("--estimators", sim_estimators, "naive, lp, cnn, hybrid, alca, 2s-lp, 2s-cnn, 2s-hybrid")->capture_default_str();
    sim->add_option("--seed", sim_seed, "Run seed")->capture_default_str();
    sim->add_option("--train-count", sim_train_count, "Simulated training samples for cnn / hybrid")->capture_default_str();
    sim_net.attach(sim);
    sim->add_option("--threads", threads, "Worker threads for realizations")->capture_default_str();
    sim->add_option("--output-dir", sim_out, "Directory for report.csv, report.json and diagnostics")->capture_default_str();
    sim->add_flag("--diagnostics", sim_diagnostics, "Also write scree data and dendrogram merge lists");
    add_config(sim);

    // clean
    auto* clean = app.add_subcommand("clean", "Clean a price CSV and compute log returns");
    std::string clean_in;
    std::string clean_out = "clean_out";
    CleaningOptions clean_opts;
    std::string exclude_file;
    clean->add_option("--input", clean_in, "Price CSV (date column, one column per symbol)")->required();
    clean->add_option("--output-dir", clean_out, "Directory for prices.csv and returns.csv")->capture_default_str();
    clean->add_option("--missing-threshold", clean_opts.missing_threshold, "Drop symbols missing more than this fraction")->capture_default_str();
    clean->add_option("--volatility-quantile", clean_opts.volatility_quantile, "Drop this top fraction by volatility")->capture_default_str();
    clean->add_option("--exclude-file", exclude_file, "Newline-delimited symbols to drop");
    add_config(clean);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a denoiser on simulated or rolling empirical data");
    ModelFlags tr_model;
    DenoiserFlags tr_net;
    std::string tr_mode = "covariance";
    std::string tr_returns;
    Index tr_n = 200;
    Index tr_count = 100;
    Index tr_window = 182;
    Index tr_stride = 1;
    std::uint64_t tr_seed = 0;
    std::string tr_weights = "denoiser.cdnw";
    std::string tr_loss = "loss.csv";
    tr_model.attach(train_cmd);
    tr_net.attach(train_cmd);
    train_cmd->add_option("--mode", tr_mode, "covariance or eigenvectors")->capture_default_str();
    train_cmd->add_option("--returns", tr_returns, "Returns CSV; when given, train on rolling windows instead of simulation");
    train_cmd->add_option("--n", tr_n, "Observations per simulated sample")->capture_default_str();
    train_cmd->add_option("--count", tr_count, "Training samples")->capture_default_str();
    train_cmd->add_option("--window", tr_window, "Rolling window length (returns mode)")->capture_default_str();
    train_cmd->add_option("--stride", tr_stride, "Rolling window stride (returns mode)")->capture_default_str();
    train_cmd->add_option("--seed", tr_seed, "Run seed")->capture_default_str();
    train_cmd->add_option("--weights-out", tr_weights, "Weights file")->capture_default_str();
    train_cmd->add_option("--loss-out", tr_loss, "Loss curve CSV")->capture_default_str();
    add_config(train_cmd);

    // backtest
    auto* bt = app.add_subcommand("backtest", "Walk-forward MVP+ backtest or a benchmark strategy");
    std::string bt_returns;
    std::string bt_strategy = "walk-forward";
    std::string bt_symbol;
    std::string bt_estimator = "naive";
    std::string bt_split = "2021-11-09";
    std::string bt_return_mode = "simple";
    WalkForwardConfig bt_cfg;
    DenoiserFlags bt_net;
    std::uint64_t bt_seed = 0;
    bool bt_seriation = true;
    std::string bt_out = "backtest_out";
    bt->add_option("--returns", bt_returns, "Returns CSV")->required();
    bt->add_option("--strategy", bt_strategy, "walk-forward, uniform or buy-and-hold")->capture_default_str();
    bt->add_option("--symbol", bt_symbol, "Symbol for buy-and-hold");
    bt->add_option("--estimator", bt_estimator, "Covariance estimator for walk-forward")->capture_default_str();
    bt->add_option("--split-date", bt_split, "First out-of-sample date (YYYY-MM-DD)")->capture_default_str();
    bt->add_option("--t-in", bt_cfg.t_in, "In-sample window (days)")->capture_default_str();
    bt->add_option("--t-out", bt_cfg.t_out, "Out-of-sample holding period (days)")->capture_default_str();
    bt->add_option("--delta-t", bt_cfg.delta_t, "Rebalancing interval (days)")->capture_default_str();
    bt->add_option("--return-mode", bt_return_mode, "simple or log")->capture_default_str();
    bt->add_option("--train-count", bt_cfg.train_window_count, "Training windows per rebalance")->capture_default_str();
    bt->add_option("--train-stride", bt_cfg.train_stride, "Training window stride")->capture_default_str();
    bt->add_option("--pre-history", bt_cfg.pre_history_days, "Days before the in-sample window used for training")->capture_default_str();
    bt->add_option("--seriation", bt_seriation, "Reorder assets by spectral seriation per window")->capture_default_str();
    bt->add_option("--seed", bt_seed, "Run seed")->capture_default_str();
    bt_net.attach(bt);
    bt->add_option("--output-dir", bt_out, "Directory for the report files")->capture_default_str();
    add_config(bt);

    for (CLI::App* cmd : {sim, clean, train_cmd, bt}) {
        for (CLI::Option* opt : cmd->get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }

    // Splice config-file values in front of the command line.
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (!args.empty()) {
            CLI::App* cmd = nullptr;
            for (CLI::App* c : {sim, clean, train_cmd, bt}) {
                if (c->get_name() == args[0]) cmd = c;
            }
            if (cmd != nullptr) {
                std::optional<std::string> path;
                std::vector<std::string> rest{args[0]};
                for (std::size_t i = 1; i < args.size(); ++i) {
                    if (args[i] == "--config" && i + 1 < args.size()) {
                        path = args[++i];
                    } else if (args[i].rfind("--config=", 0) == 0) {
                        path = args[i].substr(9);
                    } else {
                        rest.push_back(args[i]);
                    }
                }
                if (path) {
                    std::vector<std::string> merged{rest[0]};
                    for (auto& a : config_arguments(*path, cmd)) merged.push_back(std::move(a));
                    merged.insert(merged.end(), rest.begin() + 1, rest.end());
                    args = std::move(merged);
                }
            }
        }
    } catch (const std::exception& e) {
        return report_error(e, kExitUsage);
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed()) {
            const ModelSpec spec = sim_model.spec();
            const auto estimators = parse_estimator_list(sim_estimators);
            MonteCarloOptions options;
            options.threads = threads;
            options.training_count = sim_train_count;
            if (std::any_of(estimators.begin(), estimators.end(), needs_training)) {
                options.denoiser = sim_net.config(spec.p, sim_seed, nn::DenoiserMode::covariance);
            }
            const MonteCarloReport report = run_monte_carlo(spec, sim_n, sim_m, estimators, sim_seed, options);
            const fs::path dir(sim_out);
            io::write_atomic(dir / "report.csv", report_csv(report));
            io::write_atomic(dir / "report.json", report_json(report));
            if (sim_diagnostics) write_diagnostics(spec, sim_n, sim_seed, dir);
            print_table(report);
        } else if (clean->parsed()) {
            if (!exclude_file.empty()) clean_opts.exclusions = parse_symbol_list(io::read_file(exclude_file));
            const PricePanel panel = load_prices(clean_in);
            const CleanResult result = clean_panel(panel, clean_opts);
            const ReturnsPanel returns = log_returns(result.panel);
            const fs::path dir(clean_out);
            write_prices(result.panel, dir / "prices.csv");
            io::write_atomic(dir / "returns.csv", format_returns(returns));
            for (const auto& w : result.summary.warnings) std::cerr << "warning: " << w << "\n";
            auto list = [](const std::vector<std::string>& v) {
                std::string s;
                for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
                return s;
            };
            std::printf("symbols in: %lld, kept: %lld, days: %lld\n", static_cast<long long>(panel.symbol_count()),
                        static_cast<long long>(result.panel.symbol_count()), static_cast<long long>(result.panel.date_count()));
            std::printf("dropped missing: %zu %s\n", result.summary.dropped_missing.size(), list(result.summary.dropped_missing).c_str());
            std::printf("dropped leading gap: %zu %s\n", result.summary.dropped_leading_gap.size(),
                        list(result.summary.dropped_leading_gap).c_str());
            std::printf("dropped volatility: %zu %s\n", result.summary.dropped_volatility.size(),
                        list(result.summary.dropped_volatility).c_str());
            std::printf("dropped excluded: %zu %s\n", result.summary.dropped_excluded.size(), list(result.summary.dropped_excluded).c_str());
        } else if (train_cmd->parsed()) {
            const nn::DenoiserMode mode = nn::parse_denoiser_mode(tr_mode);
            nn::TrainingSet set;
            Index p = 0;
            if (!tr_returns.empty()) {
                const ReturnsPanel returns = load_returns(tr_returns);
                p = returns.asset_count();
                set = nn::build_training_set_rolling(returns, tr_window, tr_count, tr_stride, mode);
            } else {
                const ModelSpec spec = tr_model.spec();
                p = spec.p;
                set = nn::build_training_set_simulation(spec, tr_n, tr_count, tr_seed, mode);
            }
            const nn::TrainingResult result = nn::train(tr_net.config(p, tr_seed, mode), set);
            nn::save_weights(result.weights, tr_weights);
            std::string curve = "epoch,train_loss,validation_loss\n";
            for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
                curve += std::to_string(e) + "," + io::format_double(result.train_loss[e]) + "," +
                         (e < result.validation_loss.size() ? io::format_double(result.validation_loss[e]) : std::string()) + "\n";
            }
            io::write_atomic(tr_loss, curve);
            std::printf("trained %lld parameters on %lld samples: loss %.6g -> %.6g\n",
                        static_cast<long long>(result.weights.parameter_count()), static_cast<long long>(set.count()),
                        result.train_loss.front(), result.train_loss.back());
        } else if (bt->parsed()) {
            const ReturnsPanel returns = load_returns(bt_returns);
            bt_cfg.split_date = parse_date(bt_split);
            bt_cfg.estimator = parse_estimator(bt_estimator);
            bt_cfg.return_mode = parse_return_mode(bt_return_mode);
            bt_cfg.seriation_per_window = bt_seriation;
            if (needs_training(bt_cfg.estimator)) {
                bt_cfg.denoiser = bt_net.config(returns.asset_count(), bt_seed, nn::DenoiserMode::covariance);
            }
            BacktestReport report;
            if (bt_strategy == "walk-forward") {
                report = walk_forward(returns, bt_cfg);
            } else if (bt_strategy == "uniform") {
                report = uniform_portfolio(returns, bt_cfg);
            } else if (bt_strategy == "buy-and-hold") {
                if (bt_symbol.empty()) throw InvalidParameter("buy-and-hold needs --symbol");
                report = buy_and_hold(returns, bt_symbol, bt_cfg);
            } else {
                throw InvalidParameter("unknown strategy '" + bt_strategy + "' (expected walk-forward, uniform or buy-and-hold)");
            }
            write_backtest_report(report, bt_out);
            std::printf("%-20s %s\n", "strategy", metrics_csv_header().c_str());
            std::printf("%-20s %s\n", report.strategy.c_str(), metrics_csv_row(report.metrics).c_str());
        }
    } catch (const InvalidParameter& e) {
        return report_error(e, kExitUsage);
    } catch (const ParseError& e) {
        return report_error(e, kExitUsage);
    } catch (const FormatError& e) {
        return report_error(e, kExitUsage);
    } catch (const NumericError& e) {
        return report_error(e, kExitRuntime);
    } catch (const Error& e) {
        return report_error(e, kExitUsage);  // unreadable or unwritable paths
    } catch (const std::exception& e) {
        return report_error(e, kExitRuntime);
    }
    return kExitOk;
}
