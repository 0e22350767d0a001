#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsw/control_limits.hpp"
#include "nsw/core_stats.hpp"
#include "nsw/observation_matrix.hpp"

namespace nsw {

struct MonitorConfig {
    std::size_t p = 0;
    std::size_t window_W = 40;
    std::size_t step_s = 5;
    ControlLimit limit;
    std::optional<std::size_t> horizon_n;
    /// Keep evaluating after the first signal (autocorrelation studies).
    bool continue_after_signal = false;

    /// Throws std::invalid_argument unless W >= 6, s >= 1 and the limit was
    /// calibrated for the same window size.
    void validate() const;

    /// Config around a calibrated limit, taking p, W and s from it.
    static MonitorConfig from_limit(const ControlLimit& limit);
};

/// Post-signal diagnosis. Variable indices are 0-based.
struct SignalReport {
    std::size_t alarm_time_n = 0;
    double statistic_value = 0.0;
    std::size_t change_point_estimate = 0;
    std::vector<std::size_t> suspicious_variables;  ///< ascending

    friend bool operator==(const SignalReport&, const SignalReport&) = default;
};

/// True iff time n (1-based count of observations seen) is a window
/// completion time W, W + s, W + 2s, ...
[[nodiscard]] bool is_evaluation_time(std::size_t n, std::size_t window_W, std::size_t step_s);

/// Strict exceedance of the control limit.
[[nodiscard]] bool check_signal(const ChartPoint& cp, const MonitorConfig& cfg);

/// Change-point estimate plus every variable whose split statistic at the
/// maximizing split k* of `window` exceeds h. The argmax variable is always
/// included. Throws std::logic_error if cp does not signal.
[[nodiscard]] SignalReport diagnose(MatrixView window, const ChartPoint& cp,
                                    const MonitorConfig& cfg);

/// Online moving-window chart. Single writer: feed observations in order.
class Monitor {
public:
    explicit Monitor(MonitorConfig cfg);

    /// Appends x. At an evaluation time returns the chart point of the last W
    /// observations; otherwise nothing. A signaling point is diagnosed and,
    /// unless continue_after_signal is set, stops the monitor.
    /// Throws std::invalid_argument (state unchanged) on a wrong length or a
    /// non-finite entry, std::logic_error once stopped.
    std::optional<ChartPoint> observe(std::span<const double> x);

    [[nodiscard]] std::size_t time() const noexcept { return time_; }
    [[nodiscard]] bool stopped() const noexcept { return stopped_; }
    [[nodiscard]] const MonitorConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const std::vector<ChartPoint>& history() const noexcept { return history_; }
    /// First signal, if any.
    [[nodiscard]] const std::optional<SignalReport>& signal() const noexcept { return signal_; }
    /// Buffered observations (at most W) in arrival order.
    [[nodiscard]] ObservationMatrix window() const;

private:
    MonitorConfig cfg_;
    std::vector<double> ring_;  // W rows, slot (t mod W) holds observation t
    std::size_t time_ = 0;
    bool stopped_ = false;
    std::vector<ChartPoint> history_;
    std::optional<SignalReport> signal_;
};

struct MonitorOutcome {
    std::vector<ChartPoint> points;
    std::optional<SignalReport> signal;
};

/// Offline equivalent of streaming every row of `stream` through a Monitor,
/// evaluating windows in place. Stops at the horizon if one is set.
[[nodiscard]] MonitorOutcome monitor_stream(MatrixView stream, const MonitorConfig& cfg);

/// One line-delimited JSON record for a chart point. Signal fields are added
/// when `report` is given; variables are written 1-based.
[[nodiscard]] std::string chart_record(const ChartPoint& cp, double h, bool signal,
                                       const SignalReport* report, bool with_variables);

}  // namespace nsw
