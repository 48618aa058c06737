#include "factornet/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "factornet/errors.hpp"
#include "factornet/text_io.hpp"

namespace factornet {

namespace {

void require_differentiable(const NetworkParams& params) {
    if (params.has_activation(Activation::relu))
        throw ValidationError("non-differentiable activation; use bounds module");
    params.validate();
}

// empirical quantile with linear interpolation between order statistics
double quantile(std::vector<double> sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = q * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<int> rank_by_abs(const Eigen::VectorXd& values) {
    std::vector<int> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(values(a)) > std::abs(values(b));
    });
    return order;
}

}  // namespace

Eigen::VectorXd jacobian(const NetworkParams& params, const Eigen::VectorXd& x) {
    require_differentiable(params);
    ForwardResult fwd = forward(params, x);
    const auto& layers = params.layers;
    const auto L = layers.size();
    // row vector, accumulated from the output layer down
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
    for (std::size_t l = L; l-- > 0;) {
        const Eigen::VectorXd& z = fwd.state.pre_activations[l];
        Eigen::RowVectorXd scaled(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i)
            scaled(i) = v(i) * activate_deriv(layers[l].activation, z(i));
        v = scaled * layers[l].weights;
    }
    return v.transpose();
}

namespace {

Eigen::MatrixXd hessian_single_hidden(const NetworkParams& params, const Eigen::VectorXd& x) {
    const auto& hidden = params.layers[0];
    const auto& out = params.layers[1];
    const Eigen::VectorXd z = hidden.weights * x + hidden.bias;
    const Eigen::Index K = hidden.in_dim();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(K, K);
    Eigen::MatrixXd outer(K, K);
    for (Eigen::Index k = 0; k < hidden.out_dim(); ++k) {
        const double coef = out.weights(0, k) * activate_deriv2(hidden.activation, z(k));
        if (coef == 0.0) continue;
        // keep the outer product symmetric to the bit before scaling
        outer.noalias() = hidden.weights.row(k).transpose() * hidden.weights.row(k);
        H += coef * outer;
    }
    return H;
}

// one column of the Hessian: directional second derivative along e_j,
// i.e. the tangent of the reverse pass (forward-over-reverse)
Eigen::VectorXd hessian_column(const NetworkParams& params, const LayerState& state,
                               const Eigen::VectorXd& x, Eigen::Index direction) {
    const auto& layers = params.layers;
    const auto L = layers.size();

    // tangent forward pass along e_direction
    std::vector<Eigen::VectorXd> dz(L);
    Eigen::VectorXd da = Eigen::VectorXd::Zero(x.size());
    da(direction) = 1.0;
    for (std::size_t l = 0; l < L; ++l) {
        dz[l] = layers[l].weights * da;
        const Eigen::VectorXd& z = state.pre_activations[l];
        da.resize(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i)
            da(i) = activate_deriv(layers[l].activation, z(i)) * dz[l](i);
    }

    // reverse pass for the gradient, with its tangent alongside
    Eigen::VectorXd s(1), rs(1);
    {
        const double zL = state.pre_activations[L - 1](0);
        s(0) = activate_deriv(layers[L - 1].activation, zL);
        rs(0) = activate_deriv2(layers[L - 1].activation, zL) * dz[L - 1](0);
    }
    for (std::size_t l = L; l-- > 0;) {
        Eigen::VectorXd v = layers[l].weights.transpose() * s;
        Eigen::VectorXd rv = layers[l].weights.transpose() * rs;
        if (l == 0) return rv;
        const Eigen::VectorXd& z = state.pre_activations[l - 1];
        s.resize(v.size());
        rs.resize(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double d1 = activate_deriv(layers[l - 1].activation, z(i));
            const double d2 = activate_deriv2(layers[l - 1].activation, z(i));
            s(i) = d1 * v(i);
            rs(i) = d2 * dz[l - 1](i) * v(i) + d1 * rv(i);
        }
    }
    return Eigen::VectorXd();  // unreachable
}

}  // namespace

Eigen::MatrixXd hessian(const NetworkParams& params, const Eigen::VectorXd& x) {
    require_differentiable(params);
    if (x.size() != params.input_dim())
        throw ValidationError("hessian: input length does not match network");
    const auto L = params.layers.size();
    if (L == 2 && params.layers[1].activation == Activation::identity)
        return hessian_single_hidden(params, x);

    ForwardResult fwd = forward(params, x);
    const Eigen::Index K = params.input_dim();
    Eigen::MatrixXd H(K, K);
    for (Eigen::Index j = 0; j < K; ++j) H.col(j) = hessian_column(params, fwd.state, x, j);
    // exact math gives a symmetric matrix; averaging removes the
    // last-bit asymmetry between independently computed columns
    H = 0.5 * (H + H.transpose()).eval();
    return H;
}

JacobianBounds sensitivity_bounds(const NetworkParams& params) {
    params.validate();
    // running positive/negative path sums: pos - sum over weight paths
    // with positive product, neg - with negative product
    Eigen::MatrixXd pos = params.layers[0].weights.cwiseMax(0.0);
    Eigen::MatrixXd neg = params.layers[0].weights.cwiseMin(0.0);
    for (std::size_t l = 1; l < params.layers.size(); ++l) {
        const Eigen::MatrixXd& W = params.layers[l].weights;
        Eigen::MatrixXd wp = W.cwiseMax(0.0);
        Eigen::MatrixXd wn = W.cwiseMin(0.0);
        Eigen::MatrixXd new_pos = wp * pos + wn * neg;
        Eigen::MatrixXd new_neg = wp * neg + wn * pos;
        pos = std::move(new_pos);
        neg = std::move(new_neg);
    }
    JacobianBounds b;
    b.lower = neg.row(0).transpose();
    b.upper = pos.row(0).transpose();
    return b;
}

SensitivityReport sensitivity_distribution(const NetworkParams& params,
                                           const Eigen::MatrixXd& inputs) {
    if (inputs.rows() < 2)
        throw ValidationError("sensitivity_distribution: need at least 2 input rows");
    const Eigen::Index n = inputs.rows();
    const Eigen::Index K = params.input_dim();
    SensitivityReport report;
    report.per_input_jacobians.resize(n, K);
    for (Eigen::Index i = 0; i < n; ++i)
        report.per_input_jacobians.row(i) = jacobian(params, inputs.row(i).transpose()).transpose();

    report.mean = report.per_input_jacobians.colwise().mean();
    report.median.resize(K);
    report.stddev.resize(K);
    report.q01.resize(K);
    report.q99.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        std::vector<double> col(report.per_input_jacobians.col(k).data(),
                                report.per_input_jacobians.col(k).data() + n);
        std::sort(col.begin(), col.end());
        report.median(k) = quantile(col, 0.5);
        report.q01(k) = quantile(col, 0.01);
        report.q99(k) = quantile(col, 0.99);
        report.stddev(k) = std::sqrt(
            (report.per_input_jacobians.col(k).array() - report.mean(k)).square().sum() /
            static_cast<double>(n - 1));
    }
    report.ranking = rank_by_abs(report.mean);
    return report;
}

InteractionReport rank_interactions(const NetworkParams& params, const Eigen::MatrixXd& inputs) {
    if (inputs.rows() < 1) throw ValidationError("rank_interactions: empty inputs");
    const Eigen::Index K = params.input_dim();
    InteractionReport report;
    report.pair_scores = Eigen::MatrixXd::Zero(K, K);
    for (Eigen::Index i = 0; i < inputs.rows(); ++i)
        report.pair_scores += hessian(params, inputs.row(i).transpose()).cwiseAbs();
    report.pair_scores /= static_cast<double>(inputs.rows());
    report.own_curvature = report.pair_scores.diagonal();

    for (Eigen::Index a = 0; a < K; ++a)
        for (Eigen::Index b = a + 1; b < K; ++b)
            report.ranking.emplace_back(static_cast<int>(a), static_cast<int>(b));
    std::stable_sort(report.ranking.begin(), report.ranking.end(),
                     [&](const std::pair<int, int>& p, const std::pair<int, int>& q) {
                         return report.pair_scores(p.first, p.second) >
                                report.pair_scores(q.first, q.second);
                     });
    return report;
}

namespace {

void require_single_hidden(const NetworkParams& params, const char* op) {
    params.validate();
    if (params.layers.size() != 2)
        throw ValidationError(std::string(op) + " supports exactly one hidden layer, got " +
                              std::to_string(params.hidden_layer_count()));
}

}  // namespace

ImportanceTable garson(const NetworkParams& params) {
    require_single_hidden(params, "garson");
    const Eigen::MatrixXd W1 = params.layers[0].weights.cwiseAbs();
    const Eigen::RowVectorXd W2 = params.layers[1].weights.row(0).cwiseAbs();
    // share of |W2_k| |W1_ki| mass per input, normalized to sum to 1
    Eigen::VectorXd scores = (W2 * W1).transpose();
    const double total = scores.sum();
    if (total > 0.0) scores /= total;
    ImportanceTable table;
    table.method = "garson";
    table.scores = scores;
    table.signed_scores = false;
    table.ranking = rank_by_abs(scores);
    return table;
}

ImportanceTable olden(const NetworkParams& params) {
    require_single_hidden(params, "olden");
    ImportanceTable table;
    table.method = "olden";
    table.scores =
        (params.layers[1].weights.row(0) * params.layers[0].weights).transpose();
    table.signed_scores = true;
    table.ranking = rank_by_abs(table.scores);
    return table;
}

PartialDependenceResult partial_dependence(const NetworkParams& params,
                                           const Eigen::MatrixXd& inputs, int feature,
                                           const Eigen::VectorXd& grid) {
    params.validate();
    if (inputs.rows() == 0) throw ValidationError("partial_dependence: empty inputs");
    if (grid.size() == 0) throw ValidationError("partial_dependence: empty grid");
    if (feature < 0 || feature >= inputs.cols() || inputs.cols() != params.input_dim())
        throw ValidationError("partial_dependence: feature index " + std::to_string(feature) +
                              " out of range");
    PartialDependenceResult result;
    result.feature = feature;
    result.grid = grid;
    result.averaged_prediction.resize(grid.size());
    Eigen::VectorXd x(inputs.cols());
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
            x = inputs.row(i).transpose();
            x(feature) = grid(g);
            acc += predict(params, x);
        }
        result.averaged_prediction(g) = acc / static_cast<double>(inputs.rows());
    }
    return result;
}

Eigen::VectorXd default_pdp_grid(const Eigen::MatrixXd& inputs, int feature, int n_points) {
    if (feature < 0 || feature >= inputs.cols())
        throw ValidationError("default_pdp_grid: feature index out of range");
    if (n_points < 2) throw ValidationError("default_pdp_grid: need at least 2 points");
    std::vector<double> col(inputs.col(feature).data(), inputs.col(feature).data() + inputs.rows());
    std::sort(col.begin(), col.end());
    const double lo = quantile(col, 0.01);
    const double hi = quantile(col, 0.99);
    return Eigen::VectorXd::LinSpaced(n_points, lo, hi);
}

namespace {

std::string input_name(const std::vector<std::string>& names, int k) {
    if (k < static_cast<int>(names.size())) return names[k];
    return "x" + std::to_string(k + 1);
}

}  // namespace

std::string sensitivity_csv(const SensitivityReport& report, const std::string& label,
                            const std::vector<std::string>& input_names) {
    std::ostringstream out;
    out << "label,input,mean,median,std,q01,q99,rank\n";
    std::vector<int> rank_of(report.ranking.size());
    for (std::size_t r = 0; r < report.ranking.size(); ++r) rank_of[report.ranking[r]] = static_cast<int>(r) + 1;
    for (Eigen::Index k = 0; k < report.mean.size(); ++k) {
        out << label << "," << input_name(input_names, static_cast<int>(k)) << ","
            << fmt_g17(report.mean(k)) << "," << fmt_g17(report.median(k)) << ","
            << fmt_g17(report.stddev(k)) << "," << fmt_g17(report.q01(k)) << ","
            << fmt_g17(report.q99(k)) << "," << rank_of[static_cast<std::size_t>(k)] << "\n";
    }
    return out.str();
}

std::string interactions_csv(const InteractionReport& report,
                             const std::vector<std::string>& input_names) {
    std::ostringstream out;
    out << "i,j,score\n";
    for (const auto& [a, b] : report.ranking)
        out << input_name(input_names, a) << "," << input_name(input_names, b) << ","
            << fmt_g17(report.pair_scores(a, b)) << "\n";
    for (Eigen::Index k = 0; k < report.own_curvature.size(); ++k)
        out << input_name(input_names, static_cast<int>(k)) << ","
            << input_name(input_names, static_cast<int>(k)) << ","
            << fmt_g17(report.own_curvature(k)) << "\n";
    return out.str();
}

std::string importance_csv(const ImportanceTable& table, const std::string& label,
                           const std::vector<std::string>& input_names) {
    std::ostringstream out;
    out << "label,method,input,score,rank\n";
    std::vector<int> rank_of(table.ranking.size());
    for (std::size_t r = 0; r < table.ranking.size(); ++r) rank_of[table.ranking[r]] = static_cast<int>(r) + 1;
    for (Eigen::Index k = 0; k < table.scores.size(); ++k)
        out << label << "," << table.method << "," << input_name(input_names, static_cast<int>(k))
            << "," << fmt_g17(table.scores(k)) << "," << rank_of[static_cast<std::size_t>(k)]
            << "\n";
    return out.str();
}

std::string pdp_csv(const PartialDependenceResult& result, const std::string& feature_name) {
    std::ostringstream out;
    out << "feature,grid_value,mean_prediction\n";
    for (Eigen::Index g = 0; g < result.grid.size(); ++g)
        out << feature_name << "," << fmt_g17(result.grid(g)) << ","
            << fmt_g17(result.averaged_prediction(g)) << "\n";
    return out.str();
}

}  // namespace factornet
