#include "nsw/sim_models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

#include "nsw/core_stats.hpp"
#include "nsw/parallel.hpp"
#include "nsw/rng.hpp"

namespace nsw {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return kNaN;
    double sum = 0.0;
    for (const double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

}  // namespace

Model parse_model(std::string_view raw) {
    std::string name(raw);
    for (char& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (name == "I" || name == "1") return Model::I;
    if (name == "II" || name == "2") return Model::II;
    if (name == "III" || name == "3") return Model::III;
    if (name == "IV" || name == "4") return Model::IV;
    throw std::invalid_argument("unknown model '" + std::string(raw) + "' (expected I..IV)");
}

std::string_view model_name(Model m) noexcept {
    switch (m) {
        case Model::I: return "I";
        case Model::II: return "II";
        case Model::III: return "III";
        case Model::IV: return "IV";
    }
    return "?";
}

void ScenarioSpec::validate() const {
    if (p < 1) throw std::invalid_argument("p must be at least 1");
    if (window_W < kMinSampleSize) throw std::invalid_argument("W must be at least 6");
    if (window_W > horizon_n) throw std::invalid_argument("W must not exceed the horizon");
    if (tau >= horizon_n) throw std::invalid_argument("tau must be smaller than the horizon");
    if (!(sparsity_v > 0.0 && sparsity_v <= 1.0)) {
        throw std::invalid_argument("sparsity v must lie in (0, 1]");
    }
    if (!std::isfinite(delta)) throw std::invalid_argument("delta must be finite");
    if (!in_control() && shifted_count() < 1) {
        throw std::invalid_argument("v * p rounds to zero shifted variables");
    }
    if (replications_R < 1) throw std::invalid_argument("R must be at least 1");
}

std::size_t ScenarioSpec::shifted_count() const {
    return static_cast<std::size_t>(std::llround(sparsity_v * static_cast<double>(p)));
}

MetricsSummary summarize(std::span<const RunRecord> runs, const ScenarioSpec& spec) {
    return summarize(runs, spec.tau, spec.in_control());
}

MetricsSummary summarize(std::span<const RunRecord> runs, std::size_t tau, bool in_control) {
    MetricsSummary m;
    m.replications = runs.size();
    std::vector<double> delays;
    std::vector<double> estimates;
    std::vector<double> drvs;
    for (const auto& run : runs) {
        if (!run.alarm_time) continue;
        ++m.signaling_runs;
        delays.push_back(static_cast<double>(*run.alarm_time) - static_cast<double>(tau));
        if (run.change_point_estimate) {
            estimates.push_back(static_cast<double>(*run.change_point_estimate));
        }
        if (run.drv) drvs.push_back(*run.drv);
    }
    m.dr = runs.empty() ? kNaN
                        : static_cast<double>(m.signaling_runs) / static_cast<double>(runs.size());
    m.ced = mean_of(delays);
    m.cpe = mean_of(estimates);
    m.drv = mean_of(drvs);
    m.fap = in_control ? m.dr : kNaN;
    return m;
}

ScenarioGenerator::ScenarioGenerator(ScenarioSpec spec, ModelParams params)
    : spec_(spec), params_(std::move(params)), mean_shift_(spec.p, 0.0) {
    spec_.validate();
    if (spec_.model == Model::II && params_.lambda_sequence.empty()) {
        throw std::invalid_argument("Model II needs a non-empty lambda sequence");
    }
    if (spec_.model == Model::IV && params_.t_dof < 1) {
        throw std::invalid_argument("t degrees of freedom must be at least 1");
    }
    if (!spec_.in_control()) {
        std::fill_n(mean_shift_.begin(), std::min(spec_.shifted_count(), spec_.p), spec_.delta);
    }
    if (spec_.model == Model::III || spec_.model == Model::IV) {
        const auto p = static_cast<Eigen::Index>(spec_.p);
        Eigen::MatrixXd sigma(p, p);
        for (Eigen::Index l = 0; l < p; ++l) {
            for (Eigen::Index m = 0; m < p; ++m) {
                sigma(l, m) = std::pow(params_.corr_base, static_cast<double>(std::abs(l - m)));
            }
        }
        const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success) {
            throw std::invalid_argument("scale matrix is not positive definite");
        }
        scale_factor_ = llt.matrixL();
    }
}

ObservationMatrix ScenarioGenerator::generate(std::uint64_t run_seed) const {
    const std::size_t n = spec_.horizon_n;
    const std::size_t p = spec_.p;
    Rng rng(run_seed);
    std::normal_distribution<double> normal;
    std::chi_squared_distribution<double> chi2(static_cast<double>(params_.t_dof));
    std::vector<double> data(n * p);
    for (double& v : data) v = normal(rng);
    if (spec_.in_control()) return {n, p, std::move(data)};

    Eigen::VectorXd z(static_cast<Eigen::Index>(p));
    for (std::size_t i = spec_.tau; i < n; ++i) {
        double* row = data.data() + i * p;
        switch (spec_.model) {
            case Model::I:
                break;
            case Model::II: {
                const std::size_t t = i - spec_.tau;  // post-change index, 0-based
                const double lambda =
                    params_.lambda_sequence[t % params_.lambda_sequence.size()];
                const double sd = std::sqrt(lambda);
                for (std::size_t r = 0; r < p; ++r) row[r] *= sd;
                break;
            }
            case Model::III:
            case Model::IV: {
                z = Eigen::Map<const Eigen::VectorXd>(row, static_cast<Eigen::Index>(p));
                Eigen::Map<Eigen::VectorXd> out(row, static_cast<Eigen::Index>(p));
                out.noalias() = scale_factor_.triangularView<Eigen::Lower>() * z;
                if (spec_.model == Model::IV) {
                    out *= std::sqrt(static_cast<double>(params_.t_dof) / chi2(rng));
                }
                break;
            }
        }
        for (std::size_t r = 0; r < p; ++r) row[r] += mean_shift_[r];
    }
    return {n, p, std::move(data)};
}

ObservationMatrix generate_run(const ScenarioSpec& spec, const ModelParams& params,
                               std::uint64_t run_seed) {
    return ScenarioGenerator(spec, params).generate(run_seed);
}

std::uint64_t replication_seed(const ScenarioSpec& spec, std::size_t j) {
    return substream_seed(spec.seed, j);
}

double drv(const SignalReport& report, const ScenarioSpec& spec) {
    const std::size_t shifted = spec.shifted_count();
    if (shifted == 0) throw std::invalid_argument("DRV needs at least one shifted variable");
    const auto hits = std::count_if(report.suspicious_variables.begin(),
                                    report.suspicious_variables.end(),
                                    [shifted](std::size_t r) { return r < shifted; });
    return static_cast<double>(hits) / static_cast<double>(shifted);
}

MetricsSummary run_scenario(const ScenarioSpec& spec, const ModelParams& params,
                            const MonitorConfig& cfg, std::size_t threads) {
    if (cfg.p != spec.p || cfg.window_W != spec.window_W) {
        throw std::invalid_argument("monitor config does not match the scenario's p and W");
    }
    MonitorConfig run_cfg = cfg;
    run_cfg.horizon_n = spec.horizon_n;
    run_cfg.continue_after_signal = false;
    run_cfg.validate();
    const ScenarioGenerator generator(spec, params);

    std::vector<RunRecord> runs(spec.replications_R);
    parallel_for(runs.size(), threads, [&](std::size_t j) {
        const ObservationMatrix stream = generator.generate(replication_seed(spec, j));
        const MonitorOutcome outcome = monitor_stream(stream.view(), run_cfg);
        if (!outcome.signal) return;
        RunRecord& rec = runs[j];
        rec.alarm_time = outcome.signal->alarm_time_n;
        rec.change_point_estimate = outcome.signal->change_point_estimate;
        if (!spec.in_control()) rec.drv = drv(*outcome.signal, spec);
    });
    return summarize(runs, spec);
}

ControlLimit calibrate_standard_normal(std::size_t p, const LimitConfig& cfg, LimitCache* cache,
                                       std::size_t pool_size, std::size_t threads) {
    cfg.validate();
    const ObservationMatrix pool =
        standard_normal_sample(pool_size, p, substream_seed(cfg.seed, 0x5eed));
    const std::string fp = fingerprint(pool.view());
    if (cache != nullptr) {
        if (auto hit = cache->find(p, cfg, fp)) return *hit;
    }
    ControlLimit limit = bootstrap_control_limit(pool.view(), cfg, threads);
    if (cache != nullptr) cache->put(limit);
    return limit;
}

std::vector<double> sample_acf(std::span<const double> series, std::size_t max_lag) {
    const std::size_t m = series.size();
    if (max_lag >= m) throw std::invalid_argument("max_lag must be smaller than the series length");
    double mean = 0.0;
    for (const double x : series) mean += x;
    mean /= static_cast<double>(m);
    double denom = 0.0;
    for (const double x : series) denom += (x - mean) * (x - mean);
    if (denom == 0.0) throw std::invalid_argument("autocorrelation of a constant series");
    std::vector<double> out(max_lag);
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double num = 0.0;
        for (std::size_t t = 0; t + lag < m; ++t) num += (series[t] - mean) * (series[t + lag] - mean);
        out[lag - 1] = num / denom;
    }
    return out;
}

std::vector<double> chart_series(MatrixView stream, std::size_t window_W, std::size_t step_s) {
    if (step_s < 1) throw std::invalid_argument("step s must be at least 1");
    std::vector<double> out;
    for (std::size_t n = window_W; n <= stream.rows(); n += step_s) {
        out.push_back(
            window_chart_statistic(stream.rows_slice(n - window_W, window_W), window_W, n).value);
    }
    return out;
}

std::vector<double> chart_acf(std::size_t p, std::size_t window_W, std::size_t step_s,
                              std::size_t chart_points, std::size_t max_lag, std::uint64_t seed) {
    constexpr std::size_t kMinPoints = 30;
    if (chart_points < kMinPoints) {
        throw std::invalid_argument("autocorrelation needs at least 30 chart points");
    }
    if (step_s < 1) throw std::invalid_argument("step s must be at least 1");
    const std::size_t length = window_W + (chart_points - 1) * step_s;
    const ObservationMatrix stream = standard_normal_sample(length, p, seed);
    return sample_acf(chart_series(stream.view(), window_W, step_s), max_lag);
}

}  // namespace nsw
