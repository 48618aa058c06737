#include "factornet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "factornet/errors.hpp"
#include "factornet/rng.hpp"
#include "factornet/text_io.hpp"

namespace factornet {

Dataset gen_linear2(int n, std::uint64_t seed, double noise_sigma) {
    if (n < 1) throw ValidationError("gen_linear2: n must be >= 1");
    Rng rng(seed);
    Dataset d;
    d.X.resize(n, 2);
    d.y.resize(n);
    d.feature_names = {"x1", "x2"};
    for (int i = 0; i < n; ++i) {
        const double x1 = rng.normal();
        const double x2 = rng.normal();
        const double eps = rng.normal();
        d.X(i, 0) = x1;
        d.X(i, 1) = x2;
        d.y(i) = x1 + x2 + noise_sigma * eps;
    }
    return d;
}

Dataset gen_step10(int n, std::uint64_t seed, double noise_half_width) {
    if (n < 1) throw ValidationError("gen_step10: n must be >= 1");
    if (noise_half_width < 0.0) throw ValidationError("gen_step10: noise_half_width must be >= 0");
    Rng rng(seed);
    Dataset d;
    d.X.resize(n, 10);
    d.y.resize(n);
    for (int k = 0; k < 10; ++k) d.feature_names.push_back("x" + std::to_string(k + 1));
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = 0; k < 10; ++k) {
            const double x = rng.uniform();
            d.X(i, k) = x;
            acc += static_cast<double>(k + 1) * x;
        }
        d.y(i) = acc + rng.uniform(-noise_half_width, noise_half_width);
    }
    return d;
}

Dataset gen_friedman(int n, double sigma, std::uint64_t seed) {
    if (n < 1) throw ValidationError("gen_friedman: n must be >= 1");
    if (sigma < 0.0) throw ValidationError("gen_friedman: sigma must be >= 0");
    Rng rng(seed);
    Dataset d;
    d.X.resize(n, 10);
    d.y.resize(n);
    for (int k = 0; k < 10; ++k) d.feature_names.push_back("x" + std::to_string(k + 1));
    constexpr double pi = 3.14159265358979323846;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 10; ++k) d.X(i, k) = rng.uniform();
        d.y(i) = 10.0 * std::sin(pi * d.X(i, 0) * d.X(i, 1)) +
                 20.0 * (d.X(i, 2) - 0.5) * (d.X(i, 2) - 0.5) + 10.0 * d.X(i, 3) +
                 5.0 * d.X(i, 4) + sigma * rng.normal();
    }
    return d;
}

FactorPanel FactorPanel::window(int start, int length) const {
    if (start < 0 || length < 1 || start + length > n_dates())
        throw ValidationError("panel window [" + std::to_string(start) + ", +" +
                              std::to_string(length) + ") out of range for T=" +
                              std::to_string(n_dates()));
    FactorPanel w;
    w.dates.assign(dates.begin() + start, dates.begin() + start + length);
    w.assets = assets;
    w.factor_names = factor_names;
    w.returns = returns.middleRows(start, length);
    w.exposures.assign(exposures.begin() + start, exposures.begin() + start + length);
    return w;
}

void FactorPanel::validate() const {
    const int T = n_dates(), N = n_assets(), K = n_factors();
    if (T == 0 || N == 0 || K == 0) throw ValidationError("panel is empty");
    if (returns.rows() != T || returns.cols() != N)
        throw ValidationError("panel returns must be T x N");
    if (static_cast<int>(exposures.size()) != T)
        throw ValidationError("panel exposures must have one matrix per date");
    for (int t = 0; t < T; ++t) {
        if (exposures[t].rows() != N || exposures[t].cols() != K)
            throw ValidationError("panel exposures at date " + dates[t] + " must be N x K");
        if (!exposures[t].allFinite())
            throw ValidationError("non-finite exposure at date " + dates[t]);
    }
    if (!returns.allFinite()) throw ValidationError("non-finite return in panel");
    if (!std::is_sorted(dates.begin(), dates.end()))
        throw ValidationError("panel dates must be ascending");
}

NoiseProfile NoiseProfile::constant(double sigma) {
    NoiseProfile p;
    p.kind = Kind::constant;
    p.base = p.high = sigma;
    return p;
}

NoiseProfile NoiseProfile::ramp(double lo, double hi) {
    NoiseProfile p;
    p.kind = Kind::ramp;
    p.base = lo;
    p.high = hi;
    return p;
}

NoiseProfile NoiseProfile::spike(double sigma, int asset, double multiplier) {
    NoiseProfile p;
    p.kind = Kind::spike;
    p.base = p.high = sigma;
    p.spike_index = asset;
    p.spike_multiplier = multiplier;
    return p;
}

std::vector<double> NoiseProfile::asset_sigmas(int n_assets) const {
    if (base <= 0.0 || high <= 0.0) throw ValidationError("noise sigmas must be positive");
    std::vector<double> s(n_assets, base);
    switch (kind) {
        case Kind::constant: break;
        case Kind::ramp:
            for (int i = 0; i < n_assets; ++i)
                s[i] = base + (high - base) * (n_assets > 1 ? static_cast<double>(i) /
                                                                  (n_assets - 1)
                                                            : 0.0);
            break;
        case Kind::spike:
            if (spike_index < 0 || spike_index >= n_assets)
                throw ValidationError("spike asset index out of range");
            s[spike_index] *= spike_multiplier;
            break;
    }
    return s;
}

namespace {

// cross-sectional z-score with population std; constant column -> zeros
void standardize_column(Eigen::Ref<Eigen::MatrixXd> m, int col, bool population_std,
                        bool* degenerate) {
    const Eigen::Index n = m.rows();
    const double mean = m.col(col).mean();
    double var = (m.col(col).array() - mean).square().sum() /
                 static_cast<double>(population_std ? n : n - 1);
    if (var <= 0.0) {
        m.col(col).setZero();
        if (degenerate) *degenerate = true;
        return;
    }
    m.col(col) = (m.col(col).array() - mean) / std::sqrt(var);
}

}  // namespace

FactorPanel gen_het_panel(int T, int N, int K, const HetPanelOptions& options,
                          std::uint64_t seed) {
    if (T < 1 || N < 1 || K < 1) throw ValidationError("gen_het_panel: dimensions must be positive");
    Rng rng(seed);
    FactorPanel panel;
    panel.dates = monthly_dates(T);
    for (int i = 0; i < N; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "A%03d", i);
        panel.assets.push_back(buf);
    }
    for (int k = 0; k < K; ++k) panel.factor_names.push_back("f" + std::to_string(k + 1));

    const std::vector<double> sigmas = options.noise.asset_sigmas(N);
    panel.returns.resize(T, N);
    panel.exposures.resize(T);
    for (int t = 0; t < T; ++t) {
        Eigen::MatrixXd B(N, K);
        for (int i = 0; i < N; ++i)
            for (int k = 0; k < K; ++k) B(i, k) = rng.normal();
        for (int k = 0; k < K; ++k) standardize_column(B, k, true, nullptr);
        for (int i = 0; i < N; ++i) {
            double r = options.intercept;
            if (K >= 1) r += options.linear_coef * B(i, 0);
            if (K >= 2) r += options.linear_coef * B(i, 1) + options.interaction_coef * B(i, 0) * B(i, 1);
            if (K >= 3) r += options.square_coef * (B(i, 2) * B(i, 2) - 1.0);
            panel.returns(t, i) = r + sigmas[i] * rng.normal();
        }
        panel.exposures[t] = std::move(B);
    }
    panel.validate();
    return panel;
}

FactorPanel standardize(const FactorPanel& panel, std::vector<std::string>* warnings,
                        bool population_std) {
    FactorPanel out = panel;
    for (int t = 0; t < out.n_dates(); ++t) {
        for (int k = 0; k < out.n_factors(); ++k) {
            bool degenerate = false;
            standardize_column(out.exposures[t], k, population_std, &degenerate);
            if (degenerate && warnings)
                warnings->push_back("factor " + out.factor_names[k] + " constant on date " +
                                    out.dates[t] + "; standardized to zeros");
        }
    }
    return out;
}

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct RawRow {
    std::string date, asset;
    double ret;
    std::vector<double> factors;  // NaN = missing
    bool ret_missing;
};

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

FactorPanel load_panel_csv(const std::filesystem::path& path, double min_coverage,
                           PanelLoadReport* report) {
    const std::string content = read_file(path);
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
    std::vector<std::string> header = split(trim(line), ',');
    if (header.size() < 4 || header[0] != "date" || header[1] != "asset" || header[2] != "ret")
        throw ValidationError(path.string() + ":1: header must be date,asset,ret,<factors...>");
    const int K = static_cast<int>(header.size()) - 3;

    std::vector<RawRow> rows;
    std::set<std::pair<std::string, std::string>> seen;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string ctx = path.string() + ":" + std::to_string(line_no);
        std::vector<std::string> fields = split(line, ',');
        if (fields.size() != header.size())
            throw ValidationError(ctx + ": expected " + std::to_string(header.size()) +
                                  " fields, got " + std::to_string(fields.size()));
        RawRow row;
        row.date = trim(fields[0]);
        row.asset = trim(fields[1]);
        if (row.date.empty() || row.asset.empty())
            throw ValidationError(ctx + ": date and asset must be non-empty");
        if (!seen.insert({row.date, row.asset}).second)
            throw ValidationError(ctx + ": duplicate row for (" + row.date + ", " + row.asset + ")");
        row.ret_missing = trim(fields[2]).empty();
        row.ret = row.ret_missing ? kMissing : parse_double(fields[2], ctx);
        row.factors.resize(K);
        for (int k = 0; k < K; ++k) {
            const std::string f = trim(fields[3 + k]);
            row.factors[k] = f.empty() ? kMissing : parse_double(f, ctx);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError(path.string() + ": no data rows");

    std::vector<std::string> dates;
    for (const auto& r : rows) dates.push_back(r.date);
    std::sort(dates.begin(), dates.end());
    dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
    std::map<std::string, int> date_index;
    for (std::size_t i = 0; i < dates.size(); ++i) date_index[dates[i]] = static_cast<int>(i);

    // assets in first-appearance order so save/load round-trips
    std::vector<std::string> assets;
    std::map<std::string, int> asset_index;
    for (const auto& r : rows)
        if (asset_index.emplace(r.asset, static_cast<int>(assets.size())).second)
            assets.push_back(r.asset);

    const int T = static_cast<int>(dates.size());
    const int n_all = static_cast<int>(assets.size());
    // cells[t][i][0] = ret, [1..K] = factors
    std::vector<Eigen::MatrixXd> cells(T, Eigen::MatrixXd::Constant(n_all, K + 1, kMissing));
    for (const auto& r : rows) {
        const int t = date_index[r.date];
        const int i = asset_index[r.asset];
        cells[t](i, 0) = r.ret;
        for (int k = 0; k < K; ++k) cells[t](i, k + 1) = r.factors[k];
    }

    // coverage = non-missing fraction over all T x (K+1) cells per asset
    std::vector<int> kept;
    PanelLoadReport local;
    PanelLoadReport& rep = report ? *report : local;
    for (int i = 0; i < n_all; ++i) {
        long present = 0;
        for (int t = 0; t < T; ++t)
            for (int k = 0; k <= K; ++k)
                if (!std::isnan(cells[t](i, k))) ++present;
        const double coverage = static_cast<double>(present) / (static_cast<double>(T) * (K + 1));
        if (coverage + 1e-12 >= min_coverage)
            kept.push_back(i);
        else
            rep.dropped_assets.push_back(assets[i]);
    }
    if (kept.empty()) throw ValidationError(path.string() + ": no asset meets min_coverage");

    FactorPanel panel;
    panel.dates = dates;
    for (int i : kept) panel.assets.push_back(assets[i]);
    panel.factor_names.assign(header.begin() + 3, header.end());
    const int N = static_cast<int>(kept.size());
    panel.returns.resize(T, N);
    panel.exposures.assign(T, Eigen::MatrixXd(N, K));

    // forward-fill along dates, then cross-sectional median for what remains
    for (int j = 0; j < N; ++j) {
        const int i = kept[j];
        for (int k = 0; k <= K; ++k) {
            double last = kMissing;
            for (int t = 0; t < T; ++t) {
                if (std::isnan(cells[t](i, k))) {
                    if (!std::isnan(last)) {
                        cells[t](i, k) = last;
                        ++rep.forward_filled;
                    }
                } else {
                    last = cells[t](i, k);
                }
            }
        }
    }
    for (int t = 0; t < T; ++t) {
        for (int k = 0; k <= K; ++k) {
            std::vector<double> present;
            for (int j = 0; j < N; ++j) {
                const double v = cells[t](kept[j], k);
                if (!std::isnan(v)) present.push_back(v);
            }
            const double med = median_of(present);
            for (int j = 0; j < N; ++j) {
                double& v = cells[t](kept[j], k);
                if (std::isnan(v)) {
                    v = med;
                    ++rep.median_filled;
                }
            }
        }
        for (int j = 0; j < N; ++j) {
            panel.returns(t, j) = cells[t](kept[j], 0);
            for (int k = 0; k < K; ++k) panel.exposures[t](j, k) = cells[t](kept[j], k + 1);
        }
    }
    panel.validate();
    return panel;
}

void save_panel_csv(const FactorPanel& panel, const std::filesystem::path& path) {
    panel.validate();
    std::ostringstream out;
    out << "date,asset,ret";
    for (const auto& f : panel.factor_names) out << "," << f;
    out << "\n";
    for (int t = 0; t < panel.n_dates(); ++t)
        for (int i = 0; i < panel.n_assets(); ++i) {
            out << panel.dates[t] << "," << panel.assets[i] << ","
                << fmt_g17(panel.returns(t, i));
            for (int k = 0; k < panel.n_factors(); ++k)
                out << "," << fmt_g17(panel.exposures[t](i, k));
            out << "\n";
        }
    write_file_atomic(path, out.str());
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
    std::vector<std::string> header = split(trim(line), ',');
    if (header.size() < 2 || header[0] != "y")
        throw ValidationError(path.string() + ":1: header must be y,<features...>");
    const int K = static_cast<int>(header.size()) - 1;
    std::vector<std::vector<double>> rows;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string ctx = path.string() + ":" + std::to_string(line_no);
        std::vector<std::string> fields = split(line, ',');
        if (fields.size() != header.size())
            throw ValidationError(ctx + ": expected " + std::to_string(header.size()) +
                                  " fields, got " + std::to_string(fields.size()));
        std::vector<double> row(K + 1);
        for (int k = 0; k <= K; ++k) row[k] = parse_double(fields[k], ctx);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError(path.string() + ": no data rows");
    Dataset d;
    d.feature_names.assign(header.begin() + 1, header.end());
    d.X.resize(static_cast<Eigen::Index>(rows.size()), K);
    d.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d.y(static_cast<Eigen::Index>(i)) = rows[i][0];
        for (int k = 0; k < K; ++k) d.X(static_cast<Eigen::Index>(i), k) = rows[i][k + 1];
    }
    return d;
}

void save_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
    if (data.X.rows() != data.y.size())
        throw ValidationError("dataset rows and targets disagree");
    std::ostringstream out;
    out << "y";
    for (Eigen::Index k = 0; k < data.X.cols(); ++k)
        out << ","
            << (k < static_cast<Eigen::Index>(data.feature_names.size())
                    ? data.feature_names[k]
                    : "x" + std::to_string(k + 1));
    out << "\n";
    for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
        out << fmt_g17(data.y(i));
        for (Eigen::Index k = 0; k < data.X.cols(); ++k) out << "," << fmt_g17(data.X(i, k));
        out << "\n";
    }
    write_file_atomic(path, out.str());
}

std::vector<std::string> monthly_dates(int count, int start_year) {
    std::vector<std::string> dates;
    dates.reserve(count);
    for (int i = 0; i < count; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-01", start_year + i / 12, 1 + i % 12);
        dates.emplace_back(buf);
    }
    return dates;
}

}  // namespace factornet
