// Acceptance report: one PASS/FAIL line per criterion.
//
//   acceptance            run all twelve
//   acceptance 3 7        run a subset
//   acceptance --write-golden PATH   regenerate the walk-forward golden file

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "covden/covden.hpp"

#ifndef COVDEN_GOLDEN_FILE
#define COVDEN_GOLDEN_FILE "tests/golden/walk_forward_weights.csv"
#endif

using namespace covden;

namespace {

constexpr std::uint64_t kSeed = 42;
constexpr Index kRealizations = 200;

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        notes.push_back(std::string(ok ? "ok: " : "FAILED: ") + what);
    }
    void info(const std::string& what) { notes.push_back("ref: " + what); }
};

std::string fmt(const char* pattern, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, a);
    return buf;
}

std::string g(double v) { return fmt("%.6g", v); }

// b exceeds a by more than three combined standard errors.
bool below_3sigma(double mean_a, double se_a, double mean_b, double se_b) {
    return mean_b - mean_a > 3.0 * std::sqrt(se_a * se_a + se_b * se_b);
}

std::string ordering(const char* what, const MonteCarloRow& a, const MonteCarloRow& b, bool frobenius) {
    const double ma = frobenius ? a.mean_f : a.mean_mv;
    const double sa = frobenius ? a.se_f : a.se_mv;
    const double mb = frobenius ? b.mean_f : b.mean_mv;
    const double sb = frobenius ? b.se_f : b.se_mv;
    return std::string(what) + " " + std::string(to_string(a.estimator)) + " " + g(ma) + " (se " + g(sa) + ") < " +
           std::string(to_string(b.estimator)) + " " + g(mb) + " (se " + g(sb) + ") by > 3 combined se";
}

bool ordered(const MonteCarloRow& a, const MonteCarloRow& b, bool frobenius) {
    return frobenius ? below_3sigma(a.mean_f, a.se_f, b.mean_f, b.se_f) : below_3sigma(a.mean_mv, a.se_mv, b.mean_mv, b.se_mv);
}

double analytic_naive_f(const CovarianceMatrix& sigma, Index n) {
    const double tr = sigma.values().trace();
    const double tr2 = sigma.values().squaredNorm();
    return (tr * tr + tr2) / (static_cast<double>(n) * static_cast<double>(sigma.dim()));
}

const std::vector<EstimatorId> kClassical{EstimatorId::naive, EstimatorId::lp, EstimatorId::alca, EstimatorId::two_step_lp};

const MonteCarloReport& model1_report() {
    static const MonteCarloReport r =
        run_monte_carlo(ModelSpec::block(default_block_sizes(), 0.3), 200, kRealizations, kClassical, kSeed);
    return r;
}

const MonteCarloReport& model2_report() {
    static const MonteCarloReport r = run_monte_carlo(ModelSpec::nested(100, 0.1), 200, kRealizations, kClassical, kSeed);
    return r;
}

void reference_rows(Outcome& o, const MonteCarloReport& r, const std::map<EstimatorId, std::pair<double, double>>& published) {
    for (const auto& [id, values] : published) {
        const MonteCarloRow& row = r.row(id);
        o.info(std::string(to_string(id)) + " <F> " + g(row.mean_f) + " vs published " + g(values.first) + ", <MV> " + g(row.mean_mv) +
               " vs published " + g(values.second));
    }
}

Outcome criterion_1() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const MonteCarloReport& r = model1_report();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const MonteCarloRow& naive = r.row(EstimatorId::naive);
    const double published = 0.507937;
    const double analytic = analytic_naive_f(build_block_model(default_block_sizes(), 0.3), 200);
    o.check(std::abs(naive.mean_f - published) <= 0.05 * published,
            "<F>(naive) " + g(naive.mean_f) + " within 5% of published 0.507937 (rel " + g(std::abs(naive.mean_f / published - 1.0)) + ")");
    o.check(std::abs(naive.mean_f - analytic) <= 3.0 * naive.se_f,
            "|<F> - analytic " + g(analytic) + "| = " + g(std::abs(naive.mean_f - analytic)) + " <= 3 se = " + g(3.0 * naive.se_f));
    o.info("model-1 Monte Carlo, 4 estimators, m = 200: " + fmt("%.1f", secs) + " s (target < 120 s)");
    return o;
}

Outcome criterion_2() {
    Outcome o;
    const ModelSpec spec = ModelSpec::power_law(100, 1.5, kSeed);
    const MonteCarloReport r = run_monte_carlo(spec, 200, kRealizations, {EstimatorId::naive, EstimatorId::lp}, kSeed);
    const MonteCarloRow& naive = r.row(EstimatorId::naive);
    const double published = 0.000356;
    const double analytic = analytic_naive_f(build_model(spec), 200);
    o.check(std::abs(naive.mean_f - published) <= 0.05 * published,
            "<F>(naive) " + g(naive.mean_f) + " within 5% of published 0.000356 (rel " + g(std::abs(naive.mean_f / published - 1.0)) + ")");
    o.check(std::abs(naive.mean_f - analytic) <= 3.0 * naive.se_f,
            "|<F> - analytic " + g(analytic) + "| = " + g(std::abs(naive.mean_f - analytic)) + " <= 3 se = " + g(3.0 * naive.se_f));
    o.info("lp <MV> " + g(r.row(EstimatorId::lp).mean_mv) + " vs published 0.000844; naive <MV> " + g(naive.mean_mv));
    return o;
}

Outcome criterion_3() {
    Outcome o;
    const MonteCarloReport& r = model1_report();
    const MonteCarloRow& naive = r.row(EstimatorId::naive);
    const MonteCarloRow& lp = r.row(EstimatorId::lp);
    const double ratio = lp.mean_f / naive.mean_f;
    o.check(ratio < 0.2, "<F>(lp) / <F>(naive) = " + g(ratio) + " < 0.2 (published 0.065429 / 0.507937 = 0.129)");
    o.check(ordered(lp, naive, false), ordering("<MV>", lp, naive, false));
    reference_rows(o, r, {{EstimatorId::naive, {0.507937, 0.486611}}, {EstimatorId::lp, {0.065429, 0.026864}}});
    return o;
}

Outcome criterion_4() {
    Outcome o;
    const MonteCarloReport& r = model1_report();
    const MonteCarloRow& lp = r.row(EstimatorId::lp);
    const MonteCarloRow& two = r.row(EstimatorId::two_step_lp);
    o.check(ordered(two, lp, true), ordering("<F>", two, lp, true));
    o.check(ordered(two, lp, false), ordering("<MV>", two, lp, false));
    reference_rows(o, r, {{EstimatorId::alca, {0.099357, 0.057769}}, {EstimatorId::two_step_lp, {0.056593, 0.017976}}});
    return o;
}

Outcome criterion_5() {
    Outcome o;
    const MonteCarloReport& r = model2_report();
    o.check(ordered(r.row(EstimatorId::lp), r.row(EstimatorId::naive), false),
            ordering("model-2 <MV>", r.row(EstimatorId::lp), r.row(EstimatorId::naive), false));
    reference_rows(o, r, {{EstimatorId::naive, {0.204916, 0.002551}}, {EstimatorId::lp, {0.215718, 0.001520}},
                          {EstimatorId::alca, {0.361030, 0.009575}}, {EstimatorId::two_step_lp, {0.370093, 0.009559}}});

    const auto t0 = std::chrono::steady_clock::now();
    MonteCarloOptions options;
    options.denoiser = nn::DenoiserConfig::desk(30);
    options.training_count = 100;
    const MonteCarloReport desk =
        run_monte_carlo(ModelSpec::block({5, 7, 8, 10}, 0.3), 60, 20, {EstimatorId::naive, EstimatorId::cnn}, kSeed, options);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const MonteCarloRow& naive = desk.row(EstimatorId::naive);
    const MonteCarloRow& cnn = desk.row(EstimatorId::cnn);
    o.check(cnn.failures == 0 && cnn.mean_f < naive.mean_f,
            "desk scale (p = 30, n = 60, blocks 5,7,8,10, net 4 x 16): <F>(cnn) " + g(cnn.mean_f) + " < <F>(naive) " +
                g(naive.mean_f) + " on 20 held-out draws, failures " + std::to_string(cnn.failures));
    o.info("desk-scale training + evaluation " + fmt("%.1f", secs) + " s");
    return o;
}

Outcome criterion_6() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    nn::DenoiserConfig c;
    c.input_size = 4;
    c.num_blocks = 1;
    c.num_filters = 2;
    c.seed = 6;
    nn::DenoiserWeights w = nn::initialize_weights(c);
    RandomStream rng(derive_seed(kSeed, Domain::synthetic, 6));
    for (nn::ConvLayer* l : w.layers()) l->bias = 0.1 * rng.gaussian_matrix(l->bias.size(), 1);
    const Matrix a = rng.gaussian_matrix(4, 6);
    const Matrix x = a * a.transpose() / 6.0 - 0.2 * Matrix::Ones(4, 4);
    const Matrix b = rng.gaussian_matrix(4, 6);
    const Matrix t = b * b.transpose() / 6.0;
    const std::vector<const Matrix*> in{&x};
    const std::vector<const Matrix*> tg{&t};
    nn::DenoiserWeights grad = nn::DenoiserWeights::zeros(c);
    nn::mse_loss(w, in, tg, &grad);

    const double h = 1e-5;
    const char* names[] = {"stem", "block0.conv1", "block0.conv2", "head"};
    auto params = w.layers();
    auto grads = grad.layers();
    for (std::size_t l = 0; l < params.size(); ++l) {
        double worst = 0.0;
        Index count = 0;
        auto probe = [&](double& value, double analytic) {
            const double saved = value;
            value = saved + h;
            const double up = nn::mse_loss(w, in, tg);
            value = saved - h;
            const double down = nn::mse_loss(w, in, tg);
            value = saved;
            const double fd = (up - down) / (2.0 * h);
            worst = std::max(worst, std::abs(analytic - fd) / std::max(std::abs(fd), 1e-3));
            ++count;
        };
        for (Index i = 0; i < params[l]->weight.size(); ++i) probe(params[l]->weight.data()[i], grads[l]->weight.data()[i]);
        for (Index i = 0; i < params[l]->bias.size(); ++i) probe(params[l]->bias(i), grads[l]->bias(i));
        o.check(worst <= 1e-4, std::string(names[l]) + ": " + std::to_string(count) + " parameters, max relative error " + g(worst) +
                                   " <= 1e-4 (denominator max(|fd|, 1e-3))");
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.check(secs < 30.0, "runtime " + fmt("%.3f", secs) + " s < 30 s");
    return o;
}

Outcome criterion_7() {
    Outcome o;
    double worst = std::numeric_limits<double>::infinity();
    for (std::uint64_t k = 0; k < 100; ++k) {
        RandomStream rng(derive_seed(kSeed, Domain::synthetic, 700 + k));
        const Index p = 2 + static_cast<Index>(rng.uniform_int(0, 28));
        const Matrix v = rng.gaussian_matrix(p, p);
        Vector xi = rng.gaussian_matrix(p, 1).cwiseAbs();
        xi(static_cast<Index>(rng.uniform_int(0, static_cast<std::uint64_t>(p - 1)))) = 0.0;
        const Vector ev = eigenvalues_sym(assemble_hybrid(v, xi).values());
        worst = std::min(worst, ev(ev.size() - 1));
    }
    o.check(worst >= -1e-10, "min eigenvalue over 100 assemblies (p in [2, 30], one zero in each spectrum) " + g(worst) + " >= -1e-10");
    return o;
}

Outcome criterion_8() {
    Outcome o;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Vector ev = eigenvalues_sym(build_powerlaw_model(100, 1.5, seed).values());
        for (Index i = 0; i < 100; ++i) worst = std::max(worst, std::abs(ev(i) - std::pow(static_cast<double>(i + 1), -1.5)));
    }
    o.check(worst <= 1e-10, "power law p = 100, alpha = 1.5, 20 seeds: max |lambda_i - i^-1.5| " + g(worst) + " <= 1e-10");

    const double gamma = 0.1;
    const Index p = 100;
    const double expected = gamma * gamma * static_cast<double>(p * (p + 1)) / 2.0;
    const double trace = build_nested_model(p, gamma).values().trace();
    o.check(std::abs(trace - expected) <= 1e-12 * expected,
            "nested trace " + fmt("%.17g", trace) + " vs gamma^2 p (p+1) / 2 = " + fmt("%.17g", expected) + " (rel 1e-12)");

    const Vector block = eigenvalues_sym(build_block_model(default_block_sizes(), 0.3).values());
    const auto above = (block.array() > 1.0 + 1e-9).count();
    o.check(above == static_cast<Index>(default_block_sizes().size()),
            "block model: " + std::to_string(above) + " eigenvalues > 1, k = " + std::to_string(default_block_sizes().size()));
    return o;
}

double qp_variance(const Matrix& s, const Vector& w) { return w.dot(s * w); }

Outcome criterion_9() {
    Outcome o;
    double worst_obj = 0.0;
    double worst_kkt = 0.0;
    for (std::uint64_t k = 0; k < 100; ++k) {
        RandomStream rng(derive_seed(kSeed, Domain::synthetic, 900 + k));
        const Index p = 1 + static_cast<Index>(rng.uniform_int(0, 5));
        const Matrix a = rng.gaussian_matrix(p, p + 2);
        const Vector scale = (rng.gaussian_matrix(p, 1).array().abs() + 0.2).matrix();
        const Matrix s = symmetrize(scale.asDiagonal() * (a * a.transpose() / static_cast<double>(p + 2)) * scale.asDiagonal());
        const QpSolution qp = mvp_plus_solve(s);
        double best = std::numeric_limits<double>::infinity();
        for (unsigned mask = 1; mask < (1u << p); ++mask) {
            std::vector<Index> idx;
            for (Index i = 0; i < p; ++i) {
                if (mask & (1u << i)) idx.push_back(i);
            }
            const auto m = static_cast<Index>(idx.size());
            Matrix sub(m, m);
            for (Index i = 0; i < m; ++i)
                for (Index j = 0; j < m; ++j) sub(i, j) = s(idx[i], idx[j]);
            const Vector x = sub.fullPivLu().solve(Vector::Ones(m));
            if (!(x.sum() > 0.0)) continue;
            const Vector ws = x / x.sum();
            if (ws.minCoeff() < 0.0) continue;
            Vector w = Vector::Zero(p);
            for (Index i = 0; i < m; ++i) w(idx[i]) = ws(i);
            best = std::min(best, qp_variance(s, w));
        }
        worst_obj = std::max(worst_obj, std::abs(qp_variance(s, qp.weights.weights) - best));
        worst_kkt = std::max(worst_kkt, qp.residual);
    }
    o.check(worst_obj <= 1e-8, "100 random PSD (p <= 6): max |objective - enumeration| " + g(worst_obj) + " <= 1e-8");
    o.check(worst_kkt <= 1e-8, "max KKT residual " + g(worst_kkt) + " <= 1e-8");
    return o;
}

Outcome criterion_10() {
    Outcome o;
    double worst_mv = 0.0;
    double worst_f = 0.0;
    for (std::uint64_t k = 0; k < 50; ++k) {
        RandomStream rng(derive_seed(kSeed, Domain::synthetic, 1000 + k));
        const Index p = 2 + static_cast<Index>(rng.uniform_int(0, 48));
        const Matrix a = rng.gaussian_matrix(p, 2 * p);
        const Matrix s = symmetrize(a * a.transpose() / static_cast<double>(2 * p));
        worst_mv = std::max(worst_mv, std::abs(mv_loss(s, s)));
        worst_f = std::max(worst_f, std::abs(frobenius_loss(s, s)));
    }
    o.check(worst_mv <= 1e-12, "50 random PSD: max |MV(S, S)| " + g(worst_mv) + " <= 1e-12");
    o.check(worst_f <= 1e-12, "50 random PSD: max |F(S, S)| " + g(worst_f) + " <= 1e-12");
    double worst_scalar = 0.0;
    for (std::uint64_t k = 0; k < 50; ++k) {
        RandomStream rng(derive_seed(kSeed, Domain::synthetic, 1100 + k));
        const double xi = std::exp(3.0 * rng.gaussian());
        const double sigma = std::exp(3.0 * rng.gaussian());
        worst_scalar = std::max(worst_scalar, std::abs(mv_loss(Matrix::Constant(1, 1, xi), Matrix::Constant(1, 1, sigma))) / xi);
    }
    o.check(worst_scalar <= 1e-12, "p = 1, 50 random pairs: max |MV| / xi " + g(worst_scalar) + " <= 1e-12");
    return o;
}

ReturnsPanel calendar_panel(Index p) {
    const Date start = parse_date("2020-08-02");
    const Date end = parse_date("2025-07-31");
    ReturnsPanel r;
    for (Date d = start; d <= end; d += std::chrono::days(1)) r.dates.push_back(d);
    for (Index i = 0; i < p; ++i) r.symbols.push_back("X" + std::to_string(i));
    RandomStream rng(derive_seed(kSeed, Domain::synthetic, 11));
    const Matrix f = rng.gaussian_matrix(1, static_cast<Index>(r.dates.size()));
    r.returns = 0.02 * rng.gaussian_matrix(p, static_cast<Index>(r.dates.size()));
    for (Index i = 0; i < p; ++i) r.returns.row(i) += (0.002 * static_cast<double>(i + 1)) * f;
    return r;
}

WalkForwardConfig default_config(EstimatorId id) {
    WalkForwardConfig c;
    c.split_date = parse_date("2021-11-09");
    c.estimator = id;
    return c;
}

Outcome criterion_11(const std::string& golden_path) {
    Outcome o;
    const ReturnsPanel r = calendar_panel(10);
    const WalkForwardConfig c = default_config(EstimatorId::two_step_lp);
    const auto rows = rebalance_schedule(r, c);
    o.check(r.day_count() == 1825 && rows.size() == 7,
            std::to_string(r.day_count()) + " days 2020-08-02 .. 2025-07-31, split 2021-11-09: " + std::to_string(rows.size()) +
                " rebalances with t_in = t_out = delta_t = 182 (expected 7)");

    const Index history = c.t_in + c.pre_history_days;
    const nn::TrainingSet set =
        nn::build_training_set_rolling(r.slice(rows.front() - history, rows.front()), c.t_in, 100, 1, nn::DenoiserMode::covariance);
    o.check(set.count() == 100, "rolling training set from 182 + 282 days of history, stride 1: " + std::to_string(set.count()) +
                                    " windows (expected 100)");

    const BacktestReport wf = walk_forward(r, c);
    const BacktestReport uni = uniform_portfolio(r, c);
    const BacktestReport hold = buy_and_hold(r, "X0", c);
    o.check(uni.metrics.turnover == 0.0 && hold.metrics.turnover == 0.0,
            "constant-weight strategies: turnover uniform " + g(uni.metrics.turnover) + ", buy-and-hold " + g(hold.metrics.turnover));
    bool in_range = true;
    for (EstimatorId id : kClassical) {
        const double t = id == EstimatorId::two_step_lp ? wf.metrics.turnover : walk_forward(r, default_config(id)).metrics.turnover;
        in_range = in_range && t >= 0.0 && t <= 2.0;
        o.info(std::string(to_string(id)) + " turnover " + g(t));
    }
    o.check(in_range, "walk-forward turnover within [0, 2] for naive, lp, alca, 2s-lp");

    bool no_look_ahead = true;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        ReturnsPanel changed = r;
        changed.returns.rightCols(r.day_count() - rows[k]).array() += 0.05;
        const BacktestReport b = walk_forward(changed, c);
        for (std::size_t j = 0; j <= k; ++j) no_look_ahead = no_look_ahead && b.weight_history[j].weights == wf.weight_history[j].weights;
    }
    o.check(no_look_ahead, "no look-ahead: perturbing returns from each rebalance date on leaves that and earlier weights bitwise equal");

    const std::string weights = backtest_weights_csv(wf);
    o.check(weights == backtest_weights_csv(walk_forward(r, c)), "two runs produce identical weights files");
    std::string golden;
    try {
        golden = io::read_file(golden_path);
    } catch (const Error&) {
    }
    o.check(!golden.empty() && golden == weights, "weights match golden file " + golden_path);
    return o;
}

Matrix random_ultrametric_correlation(Index p, RandomStream& rng) {
    Matrix c = Matrix::Identity(p, p);
    const std::vector<Index> order = rng.permutation(p);
    // Recursive split; deeper levels get higher correlation.
    std::function<void(Index, Index, double)> split = [&](Index lo, Index hi, double level) {
        if (hi - lo < 2) return;
        const Index mid = lo + 1 + static_cast<Index>(rng.uniform_int(0, static_cast<std::uint64_t>(hi - lo - 2)));
        for (Index a = lo; a < mid; ++a)
            for (Index b = mid; b < hi; ++b) c(order[a], order[b]) = c(order[b], order[a]) = level;
        const double step = (0.95 - level) * 0.5;
        split(lo, mid, level + step * std::abs(rng.gaussian()) / 3.0);
        split(mid, hi, level + step * std::abs(rng.gaussian()) / 3.0);
    };
    split(0, p, 0.3 * rng.gaussian() / 3.0);
    return c;
}

Outcome criterion_12() {
    Outcome o;
    double worst_twice = 0.0;
    double worst_fixed = 0.0;
    for (std::uint64_t k = 0; k < 50; ++k) {
        RandomStream rng(derive_seed(kSeed, Domain::synthetic, 1200 + k));
        const Index p = 2 + static_cast<Index>(rng.uniform_int(0, 38));
        const Matrix a = rng.gaussian_matrix(p, p + 5);
        const CovarianceMatrix s(symmetrize(a * a.transpose() / static_cast<double>(p + 5)), "sample");
        const CovarianceMatrix once = estimate_alca(s);
        worst_twice = std::max(worst_twice, (estimate_alca(once).values() - once.values()).cwiseAbs().maxCoeff());

        const Matrix c = random_ultrametric_correlation(p, rng);
        const Vector var = (rng.gaussian_matrix(p, 1).array().exp()).matrix();
        const CovarianceMatrix u(corr_to_cov(c, var), "sample");
        worst_fixed = std::max(worst_fixed, (estimate_alca(u).values() - u.values()).cwiseAbs().maxCoeff());
    }
    o.check(worst_twice <= 1e-10, "50 random inputs: max |ALCA(ALCA(S)) - ALCA(S)| " + g(worst_twice) + " <= 1e-10");
    o.check(worst_fixed <= 1e-10, "50 random ultrametric inputs: max |ALCA(U) - U| " + g(worst_fixed) + " <= 1e-10");
    return o;
}

const char* title(int k) {
    static const char* titles[] = {"",
                                   "naive Frobenius loss, model 1",
                                   "naive Frobenius loss, model 3",
                                   "LP improvement, model 1",
                                   "two-step LP, model 1",
                                   "model-2 MV ordering and desk-scale CNN",
                                   "neural gradient check",
                                   "hybrid PSD guarantee",
                                   "model identities",
                                   "MVP+ correctness",
                                   "MV / F loss sanity",
                                   "walk-forward bookkeeping",
                                   "ALCA fixed point"};
    return titles[k];
}

}  // namespace

int main(int argc, char** argv) {
    std::string golden = COVDEN_GOLDEN_FILE;
    std::vector<int> selected;
    try {
        for (int i = 1; i < argc; ++i) {
            const std::string arg = argv[i];
            if (arg == "--write-golden" && i + 1 < argc) {
                const BacktestReport wf = walk_forward(calendar_panel(10), default_config(EstimatorId::two_step_lp));
                io::write_atomic(argv[++i], backtest_weights_csv(wf));
                std::cout << "wrote " << argv[i] << "\n";
                return 0;
            }
            if (arg == "--golden" && i + 1 < argc) {
                golden = argv[++i];
                continue;
            }
            const int k = std::stoi(arg);
            if (k < 1 || k > 12) throw InvalidParameter("criterion must be 1 .. 12");
            selected.push_back(k);
        }
    } catch (const std::exception& e) {
        std::cerr << "usage: acceptance [--golden PATH] [criterion ...] | --write-golden PATH (" << e.what() << ")\n";
        return 2;
    }
    if (selected.empty()) {
        for (int k = 1; k <= 12; ++k) selected.push_back(k);
    }

    const std::map<int, std::function<Outcome()>> run{
        {1, criterion_1}, {2, criterion_2},  {3, criterion_3},   {4, criterion_4},
        {5, criterion_5}, {6, criterion_6},  {7, criterion_7},   {8, criterion_8},
        {9, criterion_9}, {10, criterion_10}, {11, [&] { return criterion_11(golden); }}, {12, criterion_12}};

    int failed = 0;
    for (int k : selected) {
        Outcome o;
        try {
            o = run.at(k)();
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << k << ": " << title(k) << "\n";
        for (const auto& n : o.notes) std::cout << "        " << n << "\n";
        std::cout.flush();
    }
    std::cout << (selected.size() - static_cast<std::size_t>(failed)) << "/" << selected.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
