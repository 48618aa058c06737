#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "factornet/network.hpp"

namespace factornet {

// d yhat / dx as a length-K vector: the chained product
// W^(L) D(Z^(L-1)) W^(L-1) ... D(Z^(1)) W^(1), D_ii = f'(Z_i).
// Rejects relu (not differentiable everywhere).
Eigen::VectorXd jacobian(const NetworkParams& params, const Eigen::VectorXd& x);

// Exact input Hessian of the scalar output. Single-hidden-layer networks
// with an identity output use the closed form
//   H_ij = sum_k W2_k f''(Z_k) W1_ki W1_kj;
// deeper networks differentiate the reverse pass along each input
// direction (forward-over-reverse), then the two triangles are averaged
// so H is symmetric to the bit. Requires a C^2 activation.
Eigen::MatrixXd hessian(const NetworkParams& params, const Eigen::VectorXd& x);

// Elementwise box containing every attainable Jacobian value, from the
// signed sums of weight-path products (activation derivative factors all
// lie in [0, 1], so each path term sits between 0 and its weight
// product). lower + upper recovers the plain product of weight matrices.
struct JacobianBounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};
JacobianBounds sensitivity_bounds(const NetworkParams& params);

struct SensitivityReport {
    Eigen::MatrixXd per_input_jacobians;  // n_points x K
    Eigen::VectorXd mean, median, stddev, q01, q99;
    std::vector<int> ranking;  // input indices by |mean| descending, ties by index
};

// Jacobian at every input row with empirical moments and 1%/99% quantiles.
SensitivityReport sensitivity_distribution(const NetworkParams& params,
                                           const Eigen::MatrixXd& inputs);

struct InteractionReport {
    Eigen::MatrixXd pair_scores;   // K x K, mean |H_ij| over inputs
    Eigen::VectorXd own_curvature;  // diagonal, reported separately
    std::vector<std::pair<int, int>> ranking;  // off-diagonal pairs, descending
};

InteractionReport rank_interactions(const NetworkParams& params, const Eigen::MatrixXd& inputs);

struct ImportanceTable {
    std::string method;
    Eigen::VectorXd scores;
    bool signed_scores = false;
    std::vector<int> ranking;  // by |score| descending, ties by index
};

// Garson decomposition of |W1|, |W2| shares; single hidden layer only,
// scores sum to 1.
ImportanceTable garson(const NetworkParams& params);

// Olden connection weights R_j = sum_k W2_k W1_kj (signed); single
// hidden layer only.
ImportanceTable olden(const NetworkParams& params);

struct PartialDependenceResult {
    int feature = 0;
    Eigen::VectorXd grid;
    Eigen::VectorXd averaged_prediction;
};

// Mean prediction over the input rows with one feature pinned to each
// grid value.
PartialDependenceResult partial_dependence(const NetworkParams& params,
                                           const Eigen::MatrixXd& inputs, int feature,
                                           const Eigen::VectorXd& grid);

// 50 equally spaced points between the 1st and 99th percentile
Eigen::VectorXd default_pdp_grid(const Eigen::MatrixXd& inputs, int feature, int n_points = 50);

// CSV exports. Sensitivity rows: label,input,mean,median,std,q01,q99,rank.
std::string sensitivity_csv(const SensitivityReport& report, const std::string& label,
                            const std::vector<std::string>& input_names);
std::string interactions_csv(const InteractionReport& report,
                             const std::vector<std::string>& input_names);
std::string importance_csv(const ImportanceTable& table, const std::string& label,
                           const std::vector<std::string>& input_names);
std::string pdp_csv(const PartialDependenceResult& result, const std::string& feature_name);

}  // namespace factornet
