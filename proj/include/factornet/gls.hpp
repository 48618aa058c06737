#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>

#include "factornet/data.hpp"
#include "factornet/train.hpp"

namespace factornet {

// Diagonal conditional covariance of cross-sectional residuals.
struct ResidualCovariance {
    Eigen::VectorXd variances;  // per asset, strictly positive
    int window_length = 0;      // T used in estimation
};

struct CovarianceOptions {
    // Uncentered second moment, per the estimator's printed form; the
    // centered variant subtracts the per-asset mean residual first.
    bool centered = false;
    double variance_floor = 1e-8;
};

// (y - yhat)' D^-1 (y - yhat) with D = diag(cov.variances)
double weighted_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat,
                     const ResidualCovariance& cov);

// variances_i = (1/(T-1)) sum_t eps_{t,i}^2, floored at variance_floor
ResidualCovariance estimate_residual_covariance(const Eigen::MatrixXd& residuals,
                                                const CovarianceOptions& options = {});

struct TwoStepOptions {
    CovarianceOptions covariance;
    // refit from the step-1 parameters instead of a fresh initialization
    bool warm_start_refined = false;
    // test hook: pretend step 2 returned the identity covariance
    bool force_identity_first_pass = false;
};

struct GlsFitResult {
    NetworkParams params;             // refined fit (step 3)
    NetworkParams params_first_pass;  // unweighted fit (step 1)
    Eigen::MatrixXd residuals_unweighted;  // T x N
    Eigen::MatrixXd residuals_refined;     // T x N
    ResidualCovariance covariance_first_pass;
    ResidualCovariance covariance_refined;
    std::vector<double> loss_trace_first_pass;
    std::vector<double> loss_trace_refined;

    // training weighted MSE under the first-pass covariance, both fits;
    // refined > first_pass flags the fit instead of failing it
    double first_pass_weighted_mse = 0.0;
    double refined_weighted_mse = 0.0;
    bool refined_worse_flag = false;
};

// Steps: (1) unweighted fit over the pooled window, residuals per date;
// (2) diagonal covariance estimate; (3) refit with per-asset weights
// 1/sigma_i^2; (4) refined residuals and covariance.
GlsFitResult fit_two_step(const FactorPanel& window, const Architecture& arch,
                          const TrainConfig& config, const TwoStepOptions& options = {});

// Sample covariance of the fitted value vectors across the window's dates
// plus diag(refined variances).
Eigen::MatrixXd return_covariance(const GlsFitResult& fit, const FactorPanel& window);

// pooled (date-major) design for a panel window
void pool_window(const FactorPanel& window, Eigen::MatrixXd* X, Eigen::VectorXd* y);

std::string to_text(const GlsFitResult& fit, const FactorPanel& window);
void save_gls_fit(const GlsFitResult& fit, const FactorPanel& window,
                  const std::filesystem::path& path);

}  // namespace factornet
