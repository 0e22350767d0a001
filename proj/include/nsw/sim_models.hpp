#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nsw/control_limits.hpp"
#include "nsw/monitor.hpp"
#include "nsw/observation_matrix.hpp"

namespace nsw {

/// Post-change data-generating models. Rows up to tau are always N_p(0, I).
///  I   N(mu1, I)                    mean shift only
///  II  N(mu1, lambda_t I)           time-varying variance
///  III N(mu1, Sigma1)               correlated, sigma_lm = rho^|l-m|
///  IV  t_30(mu1, Sigma1)            heavy tails, Sigma1 is the scale matrix
enum class Model { I, II, III, IV };

[[nodiscard]] Model parse_model(std::string_view name);
[[nodiscard]] std::string_view model_name(Model m) noexcept;

struct ScenarioSpec {
    Model model = Model::I;
    std::size_t p = 100;
    std::size_t window_W = 40;
    std::size_t tau = 25;
    double delta = 0.0;       ///< 0 encodes an in-control run
    double sparsity_v = 0.1;  ///< fraction of shifted variables
    std::size_t horizon_n = 100;
    std::size_t replications_R = 1000;
    std::uint64_t seed = 1;

    void validate() const;
    /// round(v * p): the first this-many variables carry the shift.
    [[nodiscard]] std::size_t shifted_count() const;
    [[nodiscard]] bool in_control() const noexcept { return delta == 0.0; }
};

struct ModelParams {
    std::vector<double> lambda_sequence{0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 0.9, 0.8, 0.7, 0.6};
    double corr_base = 0.995;
    std::size_t t_dof = 30;
};

/// Monte-Carlo summary. Fields that are undefined for a scenario are NaN:
/// ced/cpe/drv without signaling runs, fap for out-of-control scenarios,
/// cpe/drv for charts without a diagnosis.
struct MetricsSummary {
    double dr = 0.0;
    double ced = 0.0;
    double fap = 0.0;
    double cpe = 0.0;
    double drv = 0.0;
    std::size_t replications = 0;
    std::size_t signaling_runs = 0;
};

/// Outcome of one monitored run, as consumed by summarize().
struct RunRecord {
    std::optional<std::size_t> alarm_time;
    std::optional<std::size_t> change_point_estimate;
    std::optional<double> drv;
};

[[nodiscard]] MetricsSummary summarize(std::span<const RunRecord> runs, std::size_t tau,
                                       bool in_control);
[[nodiscard]] MetricsSummary summarize(std::span<const RunRecord> runs, const ScenarioSpec& spec);

/// Draws runs for one scenario. The scale factorization is computed once.
class ScenarioGenerator {
public:
    ScenarioGenerator(ScenarioSpec spec, ModelParams params);

    /// horizon_n x p run, deterministic in run_seed.
    [[nodiscard]] ObservationMatrix generate(std::uint64_t run_seed) const;

    [[nodiscard]] const ScenarioSpec& spec() const noexcept { return spec_; }

private:
    ScenarioSpec spec_;
    ModelParams params_;
    std::vector<double> mean_shift_;
    Eigen::MatrixXd scale_factor_;  // lower Cholesky factor of Sigma1 (Models III/IV)
};

[[nodiscard]] ObservationMatrix generate_run(const ScenarioSpec& spec, const ModelParams& params,
                                             std::uint64_t run_seed);

/// Seed of replication j of a scenario.
[[nodiscard]] std::uint64_t replication_seed(const ScenarioSpec& spec, std::size_t j);

/// Fraction of the truly shifted variables (the first round(v p)) that the
/// diagnosis flagged.
[[nodiscard]] double drv(const SignalReport& report, const ScenarioSpec& spec);

/// R replications of the moving-window chart, each stopped at the first
/// signal or the horizon. Parallel runs reproduce the sequential result.
[[nodiscard]] MetricsSummary run_scenario(const ScenarioSpec& spec, const ModelParams& params,
                                          const MonitorConfig& cfg, std::size_t threads = 0);

/// Limit calibrated on a pool of `pool_size` IC standard-normal rows drawn
/// from cfg.seed. With a cache, a stored record for the same key is reused
/// and a new one is stored.
[[nodiscard]] ControlLimit calibrate_standard_normal(std::size_t p, const LimitConfig& cfg,
                                                     LimitCache* cache = nullptr,
                                                     std::size_t pool_size = kDefaultReferencePool,
                                                     std::size_t threads = 0);

/// Sample autocorrelation at lags 1..max_lag (biased estimator, mean removed).
/// Throws std::invalid_argument if max_lag >= series length or the series is
/// constant.
[[nodiscard]] std::vector<double> sample_acf(std::span<const double> series, std::size_t max_lag);

/// U at every window completion time of `stream` (no stopping).
[[nodiscard]] std::vector<double> chart_series(MatrixView stream, std::size_t window_W,
                                               std::size_t step_s);

/// Autocorrelation of U on an IC N_p(0, I) stream long enough for
/// `chart_points` evaluations. Throws std::invalid_argument below 30 points.
[[nodiscard]] std::vector<double> chart_acf(std::size_t p, std::size_t window_W, std::size_t step_s,
                                            std::size_t chart_points, std::size_t max_lag,
                                            std::uint64_t seed);

}  // namespace nsw
