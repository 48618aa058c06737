#include "factornet/relu_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "factornet/errors.hpp"
#include "factornet/rng.hpp"
#include "factornet/text_io.hpp"

namespace factornet {

void ReluJacobianSpec::validate(bool partition) const {
    if (coefficients.size() == 0) throw ValidationError("relu spec: no terms");
    if (probabilities.size() != coefficients.size())
        throw ValidationError("relu spec: coefficient/probability length mismatch");
    for (Eigen::Index k = 0; k < probabilities.size(); ++k)
        if (!(probabilities(k) > 0.0) || probabilities(k) > 1.0)
            throw ValidationError("relu spec: probabilities must lie in (0, 1]");
    if (partition && probabilities.sum() > 1.0 + 1e-12)
        throw ValidationError("relu spec: partition probabilities must sum to at most 1");
    if (thresholds && thresholds->size() != coefficients.size())
        throw ValidationError("relu spec: thresholds length mismatch");
}

double relu_jacobian_mean(const ReluJacobianSpec& spec) {
    spec.validate();
    return spec.coefficients.dot(spec.probabilities);
}

double relu_jacobian_variance_paper(const ReluJacobianSpec& spec) {
    spec.validate();
    return (spec.coefficients.array() * spec.probabilities.array() *
            (1.0 - spec.probabilities.array()))
        .sum();
}

double relu_jacobian_variance_true(const ReluJacobianSpec& spec, IndicatorModel model) {
    spec.validate(model == IndicatorModel::interval_partition);
    switch (model) {
        case IndicatorModel::independent_bernoulli:
            return (spec.coefficients.array().square() * spec.probabilities.array() *
                    (1.0 - spec.probabilities.array()))
                .sum();
        case IndicatorModel::interval_partition: {
            const double mu = spec.coefficients.dot(spec.probabilities);
            return (spec.coefficients.array().square() * spec.probabilities.array()).sum() -
                   mu * mu;
        }
    }
    return 0.0;
}

double normal_cdf(double x, const NormalDist& dist) {
    return 0.5 * std::erfc(-(x - dist.mean) / (dist.sd * std::sqrt(2.0)));
}

namespace {

void require_single_hidden_relu(const NetworkParams& params) {
    params.validate();
    if (params.layers.size() != 2 || params.layers[0].activation != Activation::relu)
        throw ValidationError("expected a single hidden relu layer");
    if (params.layers[1].activation != Activation::identity)
        throw ValidationError("expected an identity output layer");
}

}  // namespace

ReluJacobianSpec partition_spec_from_network(const NetworkParams& params,
                                             const NormalDist& input_dist) {
    require_single_hidden_relu(params);
    if (params.input_dim() != 1)
        throw ValidationError("partition spec requires a scalar input");
    const Eigen::VectorXd w1 = params.layers[0].weights.col(0);
    const Eigen::VectorXd b1 = params.layers[0].bias;
    const Eigen::RowVectorXd w2 = params.layers[1].weights.row(0);
    const Eigen::Index n = w1.size();

    std::vector<std::pair<double, double>> units(n);  // (threshold, c_k)
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!(w1(k) > 0.0))
            throw ValidationError(
                "partition spec requires positive first-layer weights (unit " +
                std::to_string(k) + ")");
        units[static_cast<std::size_t>(k)] = {-b1(k) / w1(k), w2(k) * w1(k)};
    }
    std::sort(units.begin(), units.end());

    ReluJacobianSpec spec;
    spec.coefficients.resize(n);
    spec.probabilities.resize(n);
    Eigen::VectorXd thr(n);
    double cumulative = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumulative += units[static_cast<std::size_t>(k)].second;
        spec.coefficients(k) = cumulative;
        thr(k) = units[static_cast<std::size_t>(k)].first;
        const double upper =
            k + 1 < n ? normal_cdf(units[static_cast<std::size_t>(k + 1)].first, input_dist) : 1.0;
        // tied thresholds collapse to zero-probability events; keep the
        // interval alive with a floor so validate() passes
        spec.probabilities(k) =
            std::max(upper - normal_cdf(thr(k), input_dist), std::numeric_limits<double>::min());
    }
    spec.thresholds = thr;
    spec.validate(true);
    return spec;
}

McMoments relu_jacobian_variance_mc(const NetworkParams& params, const NormalDist& input_dist,
                                    std::int64_t n_samples, std::uint64_t seed) {
    require_single_hidden_relu(params);
    if (n_samples < 2) throw ValidationError("relu_jacobian_variance_mc: need n_samples >= 2");
    const Eigen::MatrixXd& W1 = params.layers[0].weights;
    const Eigen::VectorXd& b1 = params.layers[0].bias;
    const Eigen::RowVectorXd w2 = params.layers[1].weights.row(0);
    const Eigen::Index K = params.input_dim();

    Rng rng(seed);
    Eigen::VectorXd x(K);
    double sum = 0.0, sum_sq = 0.0;
    for (std::int64_t s = 0; s < n_samples; ++s) {
        for (Eigen::Index i = 0; i < K; ++i) x(i) = rng.normal(input_dist.mean, input_dist.sd);
        // J w.r.t. the first input through the indicator decomposition
        double j = 0.0;
        for (Eigen::Index k = 0; k < W1.rows(); ++k) {
            const double z = W1.row(k).dot(x) + b1(k);
            if (z > 0.0) j += w2(k) * W1(k, 0);
        }
        sum += j;
        sum_sq += j * j;
    }
    McMoments m;
    const double n = static_cast<double>(n_samples);
    m.mean = sum / n;
    m.variance = (sum_sq - n * m.mean * m.mean) / (n - 1.0);
    return m;
}

TailBound chernoff_upper(double mu, double delta) {
    if (!(mu > 0.0)) throw ValidationError("chernoff_upper: mu must be positive");
    if (!(delta > 0.0)) throw ValidationError("chernoff_upper: delta must be positive");
    TailBound b;
    b.mu = mu;
    b.deviation = delta;
    b.bound_value = std::exp(mu * (delta - (1.0 + delta) * std::log1p(delta)));
    return b;
}

TailBound chernoff_lower(double mu, double gamma) {
    if (!(mu > 0.0)) throw ValidationError("chernoff_lower: mu must be positive");
    if (!(gamma > 0.0) || gamma > 1.0)
        throw ValidationError("chernoff_lower: gamma must lie in (0, 1]");
    TailBound b;
    b.mu = mu;
    b.deviation = gamma;
    b.bound_value = std::exp(mu * (gamma - (1.0 + gamma) * std::log1p(gamma)));
    return b;
}

std::vector<BoundSweepRow> bound_sweep(const std::vector<double>& mu_values,
                                       const std::vector<double>& delta_grid) {
    if (mu_values.empty() || delta_grid.empty())
        throw ValidationError("bound_sweep: grids must be nonempty");
    std::vector<BoundSweepRow> rows;
    rows.reserve(mu_values.size() * delta_grid.size());
    for (double mu : mu_values)
        for (double delta : delta_grid)
            rows.push_back({mu, delta, chernoff_upper(mu, delta).bound_value});
    return rows;
}

std::string bound_sweep_csv(const std::vector<BoundSweepRow>& rows) {
    std::ostringstream out;
    out << "mu,delta,bound\n";
    for (const auto& r : rows)
        out << fmt_g17(r.mu) << "," << fmt_g17(r.delta) << "," << fmt_g17(r.bound) << "\n";
    return out.str();
}

double chernoff_tail_mc(const ReluJacobianSpec& spec, double delta, std::int64_t n_samples,
                        std::uint64_t seed) {
    spec.validate();
    if (n_samples < 1) throw ValidationError("chernoff_tail_mc: need n_samples >= 1");
    if (!(delta > 0.0)) throw ValidationError("chernoff_tail_mc: delta must be positive");
    const double mu = relu_jacobian_mean(spec);
    const double threshold = (1.0 + delta) * mu;
    Rng rng(seed);
    std::int64_t exceed = 0;
    const Eigen::Index n = spec.coefficients.size();
    for (std::int64_t s = 0; s < n_samples; ++s) {
        double j = 0.0;
        for (Eigen::Index k = 0; k < n; ++k)
            if (rng.uniform() < spec.probabilities(k)) j += spec.coefficients(k);
        if (j > threshold) ++exceed;
    }
    return static_cast<double>(exceed) / static_cast<double>(n_samples);
}

std::pair<ReluJacobianSpec, double> normalize_coefficients(const ReluJacobianSpec& spec) {
    spec.validate();
    const double scale = spec.coefficients.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) return {spec, 1.0};
    ReluJacobianSpec out = spec;
    out.coefficients /= scale;
    return {out, scale};
}

}  // namespace factornet
