#include "factornet/gls.hpp"

#include <cmath>
#include <sstream>

#include "factornet/errors.hpp"
#include "factornet/text_io.hpp"

namespace factornet {

double weighted_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat,
                     const ResidualCovariance& cov) {
    if (y.size() != y_hat.size())
        throw ValidationError("weighted_loss: y and y_hat lengths differ");
    if (cov.variances.size() != y.size())
        throw ValidationError("weighted_loss: covariance length does not match residuals");
    if ((cov.variances.array() <= 0.0).any())
        throw ValidationError("weighted_loss: variances must be strictly positive");
    return ((y - y_hat).array().square() / cov.variances.array()).sum();
}

ResidualCovariance estimate_residual_covariance(const Eigen::MatrixXd& residuals,
                                                const CovarianceOptions& options) {
    const Eigen::Index T = residuals.rows();
    if (T < 2) throw ValidationError("insufficient windows: need T >= 2, got " + std::to_string(T));
    ResidualCovariance cov;
    cov.window_length = static_cast<int>(T);
    if (options.centered) {
        Eigen::RowVectorXd mean = residuals.colwise().mean();
        cov.variances =
            (residuals.rowwise() - mean).array().square().colwise().sum().transpose() /
            static_cast<double>(T - 1);
    } else {
        cov.variances =
            residuals.array().square().colwise().sum().transpose() / static_cast<double>(T - 1);
    }
    cov.variances = cov.variances.cwiseMax(options.variance_floor);
    return cov;
}

void pool_window(const FactorPanel& window, Eigen::MatrixXd* X, Eigen::VectorXd* y) {
    const int T = window.n_dates(), N = window.n_assets(), K = window.n_factors();
    X->resize(static_cast<Eigen::Index>(T) * N, K);
    y->resize(static_cast<Eigen::Index>(T) * N);
    for (int t = 0; t < T; ++t) {
        X->middleRows(static_cast<Eigen::Index>(t) * N, N) = window.exposures[t];
        y->segment(static_cast<Eigen::Index>(t) * N, N) = window.returns.row(t).transpose();
    }
}

namespace {

Eigen::MatrixXd residual_matrix(const NetworkParams& params, const FactorPanel& window) {
    const int T = window.n_dates(), N = window.n_assets();
    Eigen::MatrixXd res(T, N);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < N; ++i)
            res(t, i) =
                window.returns(t, i) - predict(params, window.exposures[t].row(i).transpose());
    return res;
}

}  // namespace

GlsFitResult fit_two_step(const FactorPanel& window, const Architecture& arch,
                          const TrainConfig& config, const TwoStepOptions& options) {
    window.validate();
    if (window.n_dates() < 2) throw ValidationError("fit_two_step: window needs T >= 2 dates");
    const int T = window.n_dates(), N = window.n_assets();

    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    pool_window(window, &X, &y);

    GlsFitResult result;

    // step 1: unweighted fit
    TrainResult first = train(X, y, arch, config);
    result.params_first_pass = first.params;
    result.loss_trace_first_pass = std::move(first.loss_trace);
    result.residuals_unweighted = residual_matrix(result.params_first_pass, window);

    // step 2: diagonal covariance of the first-pass residuals
    if (options.force_identity_first_pass) {
        result.covariance_first_pass.variances = Eigen::VectorXd::Ones(N);
        result.covariance_first_pass.window_length = T;
    } else {
        result.covariance_first_pass =
            estimate_residual_covariance(result.residuals_unweighted, options.covariance);
    }

    // step 3: weighted refit, weights 1/sigma_i^2 per asset replicated per
    // date. The weight vector is rescaled to unit mean: the minimizer is
    // unchanged (for lambda = 0 it is a pure rescaling of the objective)
    // and the SGD step size and lambda stay on the step-1 scale.
    Eigen::VectorXd inv_var = result.covariance_first_pass.variances.cwiseInverse();
    Eigen::VectorXd scaled = inv_var / inv_var.mean();
    Eigen::VectorXd sample_weights(static_cast<Eigen::Index>(T) * N);
    for (int t = 0; t < T; ++t)
        sample_weights.segment(static_cast<Eigen::Index>(t) * N, N) = scaled;
    TrainResult refined =
        options.warm_start_refined
            ? train_from(result.params_first_pass, X, y, config, &sample_weights)
            : train(X, y, arch, config, &sample_weights);
    result.params = std::move(refined.params);
    result.loss_trace_refined = std::move(refined.loss_trace);

    // step 4: refined residuals and covariance
    result.residuals_refined = residual_matrix(result.params, window);
    result.covariance_refined =
        estimate_residual_covariance(result.residuals_refined, options.covariance);

    result.first_pass_weighted_mse =
        weighted_mse(result.params_first_pass, X, y, sample_weights);
    result.refined_weighted_mse = weighted_mse(result.params, X, y, sample_weights);
    result.refined_worse_flag = result.refined_weighted_mse > result.first_pass_weighted_mse;
    return result;
}

Eigen::MatrixXd return_covariance(const GlsFitResult& fit, const FactorPanel& window) {
    window.validate();
    const int T = window.n_dates(), N = window.n_assets();
    if (fit.covariance_refined.variances.size() != N)
        throw ValidationError("return_covariance: fit covariance does not match panel width");
    Eigen::MatrixXd fitted(T, N);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < N; ++i)
            fitted(t, i) = predict(fit.params, window.exposures[t].row(i).transpose());
    Eigen::RowVectorXd mean = fitted.colwise().mean();
    Eigen::MatrixXd centered = fitted.rowwise() - mean;
    Eigen::MatrixXd model_cov =
        centered.transpose() * centered / static_cast<double>(T - 1);
    model_cov += Eigen::MatrixXd(fit.covariance_refined.variances.asDiagonal());
    return model_cov;
}

std::string to_text(const GlsFitResult& fit, const FactorPanel& window) {
    std::ostringstream out;
    out << "factornet-gls-fit v1\n";
    out << "window " << window.dates.front() << " " << window.dates.back() << " T "
        << window.n_dates() << " N " << window.n_assets() << "\n";
    auto write_vec = [&](const char* tag, const Eigen::VectorXd& v) {
        out << tag;
        for (Eigen::Index i = 0; i < v.size(); ++i) out << " " << fmt_g17(v(i));
        out << "\n";
    };
    write_vec("variances_first_pass", fit.covariance_first_pass.variances);
    write_vec("variances_refined", fit.covariance_refined.variances);
    auto write_mat = [&](const char* tag, const Eigen::MatrixXd& m) {
        out << tag << " rows " << m.rows() << " cols " << m.cols() << "\n";
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                out << (c ? " " : "") << fmt_g17(m(r, c));
            out << "\n";
        }
    };
    write_mat("residuals_unweighted", fit.residuals_unweighted);
    write_mat("residuals_refined", fit.residuals_refined);
    out << "weighted_mse first_pass " << fmt_g17(fit.first_pass_weighted_mse) << " refined "
        << fmt_g17(fit.refined_weighted_mse) << " flagged " << (fit.refined_worse_flag ? 1 : 0)
        << "\n";
    return out.str();
}

void save_gls_fit(const GlsFitResult& fit, const FactorPanel& window,
                  const std::filesystem::path& path) {
    write_file_atomic(path, to_text(fit, window));
}

}  // namespace factornet
