#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "factornet/errors.hpp"
#include "factornet/gls.hpp"
#include "support/oracles.hpp"

using namespace factornet;

TEST_CASE("weighted_loss: unit variances reduce to the SSE") {
    Eigen::VectorXd y(2), yh(2);
    y << 1.0, 2.0;
    yh << 0.0, 0.0;
    ResidualCovariance cov;
    cov.variances = Eigen::VectorXd::Ones(2);
    CHECK(weighted_loss(y, yh, cov) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("weighted_loss: direct quadratic form") {
    Eigen::VectorXd y(2), yh(2);
    y << 1.0, 2.0;
    yh << 0.0, 0.0;
    ResidualCovariance cov;
    cov.variances.resize(2);
    cov.variances << 1.0, 4.0;
    CHECK(weighted_loss(y, yh, cov) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(weighted_loss(y, y, cov) == 0.0);
}

TEST_CASE("weighted_loss rejects nonpositive variances and length mismatch") {
    Eigen::VectorXd y(2), yh(2);
    y << 1, 2;
    yh << 1, 2;
    ResidualCovariance cov;
    cov.variances.resize(2);
    cov.variances << 1.0, 0.0;
    CHECK_THROWS_AS(weighted_loss(y, yh, cov), ValidationError);
    cov.variances = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(weighted_loss(y, yh, cov), ValidationError);
}

TEST_CASE("estimate_residual_covariance: hand-computed values") {
    Eigen::MatrixXd res(3, 2);
    res << 1, 2, 1, 2, 1, 2;
    auto cov = estimate_residual_covariance(res);
    CHECK(cov.variances(0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(cov.variances(1) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(cov.window_length == 3);

    Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(4, 3);
    auto floored = estimate_residual_covariance(zeros);
    for (int i = 0; i < 3; ++i) CHECK(floored.variances(i) == doctest::Approx(1e-8));

    Eigen::MatrixXd two(2, 2);
    two << 1, 0, -1, 0;
    auto c2 = estimate_residual_covariance(two);
    CHECK(c2.variances(0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(c2.variances(1) == doctest::Approx(1e-8));
}

TEST_CASE("estimate_residual_covariance: T < 2 errors") {
    Eigen::MatrixXd res(1, 2);
    res << 1, 2;
    CHECK_THROWS_WITH_AS(estimate_residual_covariance(res), doctest::Contains("insufficient"),
                         ValidationError);
}

TEST_CASE("estimate_residual_covariance: row permutation invariance") {
    Rng rng(8);
    Eigen::MatrixXd res(6, 3);
    for (int t = 0; t < 6; ++t)
        for (int i = 0; i < 3; ++i) res(t, i) = rng.normal();
    auto base = estimate_residual_covariance(res);
    std::vector<int> perm = {5, 2, 0, 4, 1, 3};
    Eigen::MatrixXd shuffled(6, 3);
    for (int t = 0; t < 6; ++t) shuffled.row(t) = res.row(perm[t]);
    auto permuted = estimate_residual_covariance(shuffled);
    CHECK((base.variances - permuted.variances).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("estimate_residual_covariance: scaling residuals by c scales variances by c^2") {
    Rng rng(9);
    Eigen::MatrixXd res(5, 2);
    for (int t = 0; t < 5; ++t)
        for (int i = 0; i < 2; ++i) res(t, i) = rng.normal();
    const double c = 3.7;
    auto base = estimate_residual_covariance(res);
    auto scaled = estimate_residual_covariance((c * res).eval());
    for (int i = 0; i < 2; ++i)
        CHECK(scaled.variances(i) == doctest::Approx(c * c * base.variances(i)).epsilon(1e-12));
}

TEST_CASE("estimate_residual_covariance: centered option subtracts the mean") {
    Eigen::MatrixXd res(3, 1);
    res << 1.0, 1.0, 1.0;
    CovarianceOptions opt;
    opt.centered = true;
    auto cov = estimate_residual_covariance(res, opt);
    CHECK(cov.variances(0) == doctest::Approx(1e-8));  // zero after centering
    auto raw = estimate_residual_covariance(res);
    CHECK(raw.variances(0) == doctest::Approx(1.5));
}

namespace {

TrainConfig quick_config(std::uint64_t seed, int epochs = 300) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.record_loss_trace = false;
    return cfg;
}

}  // namespace

TEST_CASE("fit_two_step: identity-covariance hook reproduces the unweighted fit bit-exactly") {
    FactorPanel panel = gen_het_panel(6, 20, 3, {}, 41);
    Architecture arch;
    arch.hidden = {4};
    TwoStepOptions opt;
    opt.force_identity_first_pass = true;
    auto fit = fit_two_step(panel, arch, quick_config(3), opt);
    for (std::size_t l = 0; l < fit.params.layers.size(); ++l) {
        CHECK(std::memcmp(fit.params.layers[l].weights.data(),
                          fit.params_first_pass.layers[l].weights.data(),
                          sizeof(double) * fit.params.layers[l].weights.size()) == 0);
        CHECK(std::memcmp(fit.params.layers[l].bias.data(),
                          fit.params_first_pass.layers[l].bias.data(),
                          sizeof(double) * fit.params.layers[l].bias.size()) == 0);
    }
}

TEST_CASE("fit_two_step: spiked asset gets the largest variance, smallest weight") {
    HetPanelOptions opts;
    opts.noise = NoiseProfile::spike(0.02, 7, 10.0);
    FactorPanel panel = gen_het_panel(12, 20, 3, opts, 19);
    Architecture arch;  // linear
    auto fit = fit_two_step(panel, arch, quick_config(5));
    Eigen::Index max_idx;
    fit.covariance_refined.variances.maxCoeff(&max_idx);
    CHECK(max_idx == 7);
    Eigen::Index min_w;
    fit.covariance_refined.variances.cwiseInverse().minCoeff(&min_w);
    CHECK(min_w == 7);
}

TEST_CASE("fit_two_step: homoscedastic panel, two passes agree within SGD noise") {
    HetPanelOptions opts;
    opts.noise = NoiseProfile::constant(0.03);
    FactorPanel panel = gen_het_panel(10, 30, 3, opts, 23);
    Architecture arch;  // linear: coefficients comparable directly

    // SGD noise scale: std of first-pass coefficients over reseeded runs
    std::vector<std::vector<double>> coef_runs;
    for (std::uint64_t s = 100; s < 105; ++s) {
        auto f = fit_two_step(panel, arch, quick_config(s));
        std::vector<double> coefs;
        for (int k = 0; k < 3; ++k) coefs.push_back(f.params_first_pass.layers[0].weights(0, k));
        coef_runs.push_back(coefs);
    }
    auto fit = fit_two_step(panel, arch, quick_config(100));
    for (int k = 0; k < 3; ++k) {
        std::vector<double> runs;
        for (const auto& r : coef_runs) runs.push_back(r[static_cast<std::size_t>(k)]);
        const double sd = std::max(oracles::sample_std(runs), 1e-4);
        const double diff = std::abs(fit.params.layers[0].weights(0, k) -
                                     fit.params_first_pass.layers[0].weights(0, k));
        CHECK(diff < 4.0 * sd);
    }
}

TEST_CASE("fit_two_step: step-3 estimates match a direct WLS solve") {
    HetPanelOptions opts;
    opts.noise = NoiseProfile::ramp(0.01, 0.10);
    opts.interaction_coef = 0.0;  // keep the truth linear
    opts.square_coef = 0.0;
    FactorPanel panel = gen_het_panel(12, 25, 3, opts, 51);
    Architecture arch;  // zero hidden layers
    TrainConfig cfg = quick_config(9, 1500);
    cfg.learning_rate = 0.005;
    auto fit = fit_two_step(panel, arch, cfg);

    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    pool_window(panel, &X, &y);
    Eigen::VectorXd w(X.rows());
    for (int t = 0; t < panel.n_dates(); ++t)
        w.segment(static_cast<Eigen::Index>(t) * panel.n_assets(), panel.n_assets()) =
            fit.covariance_first_pass.variances.cwiseInverse();
    auto wls = oracles::wls(X, y, w);
    for (int k = 0; k < 3; ++k)
        CHECK(std::abs(fit.params.layers[0].weights(0, k) - wls.coefficients(k)) < 1e-2);
    CHECK(std::abs(fit.params.layers[0].bias(0) - wls.intercept) < 1e-2);
}

TEST_CASE("return_covariance: constant predictions give exactly the diagonal") {
    FactorPanel panel = gen_het_panel(6, 10, 2, {}, 61);
    Architecture arch;
    auto fit = fit_two_step(panel, arch, quick_config(2, 50));
    // force constant predictions: zero weights, nonzero bias
    fit.params.layers[0].weights.setZero();
    fit.params.layers[0].bias(0) = 0.01;
    Eigen::MatrixXd cov = return_covariance(fit, panel);
    Eigen::MatrixXd expected = Eigen::MatrixXd(fit.covariance_refined.variances.asDiagonal());
    CHECK((cov - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("return_covariance: reproduces brute-force model covariance plus diagonal") {
    FactorPanel panel = gen_het_panel(8, 12, 3, {}, 71);
    Architecture arch;
    arch.hidden = {3};
    auto fit = fit_two_step(panel, arch, quick_config(4, 100));
    Eigen::MatrixXd cov = return_covariance(fit, panel);

    // brute force: sample covariance of fitted vectors over dates
    const int T = panel.n_dates(), N = panel.n_assets();
    Eigen::MatrixXd fitted(T, N);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < N; ++i)
            fitted(t, i) = predict(fit.params, panel.exposures[t].row(i).transpose());
    Eigen::MatrixXd brute = Eigen::MatrixXd::Zero(N, N);
    Eigen::RowVectorXd mean = fitted.colwise().mean();
    for (int t = 0; t < T; ++t)
        brute += (fitted.row(t) - mean).transpose() * (fitted.row(t) - mean);
    brute /= static_cast<double>(T - 1);
    brute += Eigen::MatrixXd(fit.covariance_refined.variances.asDiagonal());
    CHECK((cov - brute).cwiseAbs().maxCoeff() < 1e-12);

    // diagonal dominance: added PSD term keeps diagonal above the floor
    for (int i = 0; i < N; ++i)
        CHECK(cov(i, i) >= fit.covariance_refined.variances(i) - 1e-15);
}

TEST_CASE("gls fit export carries window metadata") {
    FactorPanel panel = gen_het_panel(4, 6, 2, {}, 15);
    Architecture arch;
    auto fit = fit_two_step(panel, arch, quick_config(1, 40));
    std::string text = to_text(fit, panel);
    CHECK(text.find("factornet-gls-fit v1") != std::string::npos);
    CHECK(text.find(panel.dates.front()) != std::string::npos);
    CHECK(text.find("variances_refined") != std::string::npos);
    CHECK(text.find("residuals_unweighted rows 4 cols 6") != std::string::npos);
}
