#include "nsw/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace nsw {

void MonitorConfig::validate() const {
    if (window_W < kMinSampleSize) throw std::invalid_argument("W must be at least 6");
    if (step_s < 1) throw std::invalid_argument("step s must be at least 1");
    if (p < 1) throw std::invalid_argument("p must be at least 1");
    if (limit.config.window_W != window_W) {
        throw std::invalid_argument("control limit was calibrated for W=" +
                                    std::to_string(limit.config.window_W) + ", monitor uses W=" +
                                    std::to_string(window_W));
    }
}

MonitorConfig MonitorConfig::from_limit(const ControlLimit& limit) {
    MonitorConfig cfg;
    cfg.p = limit.p;
    cfg.window_W = limit.config.window_W;
    cfg.step_s = limit.config.step_s;
    cfg.limit = limit;
    return cfg;
}

bool is_evaluation_time(std::size_t n, std::size_t window_W, std::size_t step_s) {
    return n >= window_W && (n - window_W) % step_s == 0;
}

bool check_signal(const ChartPoint& cp, const MonitorConfig& cfg) {
    return cp.value > cfg.limit.h;
}

SignalReport diagnose(MatrixView window, const ChartPoint& cp, const MonitorConfig& cfg) {
    if (!check_signal(cp, cfg)) {
        throw std::logic_error("diagnose called on a chart point that does not signal");
    }
    if (window.rows() != cfg.window_W) {
        throw std::invalid_argument("diagnosis window has the wrong number of rows");
    }
    SignalReport report;
    report.alarm_time_n = cp.time_index_n;
    report.statistic_value = cp.value;
    report.change_point_estimate = change_point_estimate(cp, cfg.window_W);
    const auto per_variable = per_variable_split_statistics(window, cp.best_split.split_k);
    for (std::size_t r = 0; r < per_variable.size(); ++r) {
        if (per_variable[r] > cfg.limit.h || r == cp.best_split.argmax_variable) {
            report.suspicious_variables.push_back(r);
        }
    }
    return report;
}

Monitor::Monitor(MonitorConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    ring_.assign(cfg_.window_W * cfg_.p, 0.0);
}

std::optional<ChartPoint> Monitor::observe(std::span<const double> x) {
    if (stopped_) throw std::logic_error("monitor stopped after a signal");
    if (x.size() != cfg_.p) {
        throw std::invalid_argument("observation has " + std::to_string(x.size()) +
                                    " entries, expected " + std::to_string(cfg_.p));
    }
    if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) {
        throw std::invalid_argument("observation has a non-finite entry");
    }
    const std::size_t slot = time_ % cfg_.window_W;
    std::copy(x.begin(), x.end(), ring_.begin() + static_cast<std::ptrdiff_t>(slot * cfg_.p));
    ++time_;
    if (cfg_.horizon_n && time_ >= *cfg_.horizon_n) stopped_ = true;
    if (!is_evaluation_time(time_, cfg_.window_W, cfg_.step_s)) return std::nullopt;

    const ObservationMatrix current = window();
    const ChartPoint cp = window_chart_statistic(current.view(), cfg_.window_W, time_);
    history_.push_back(cp);
    if (check_signal(cp, cfg_)) {
        if (!signal_) signal_ = diagnose(current.view(), cp, cfg_);
        if (!cfg_.continue_after_signal) stopped_ = true;
    }
    return cp;
}

ObservationMatrix Monitor::window() const {
    const std::size_t count = std::min(time_, cfg_.window_W);
    ObservationMatrix out(count, cfg_.p);
    for (std::size_t j = 0; j < count; ++j) {
        const std::size_t t = time_ - count + j;
        const std::size_t slot = t % cfg_.window_W;
        std::copy_n(ring_.begin() + static_cast<std::ptrdiff_t>(slot * cfg_.p), cfg_.p,
                    out.row(j).begin());
    }
    return out;
}

MonitorOutcome monitor_stream(MatrixView stream, const MonitorConfig& cfg) {
    cfg.validate();
    if (stream.cols() != cfg.p) {
        throw std::invalid_argument("stream has " + std::to_string(stream.cols()) +
                                    " variables, monitor expects " + std::to_string(cfg.p));
    }
    std::size_t last = stream.rows();
    if (cfg.horizon_n) last = std::min(last, *cfg.horizon_n);
    MonitorOutcome out;
    for (std::size_t n = cfg.window_W; n <= last; n += cfg.step_s) {
        const MatrixView window = stream.rows_slice(n - cfg.window_W, cfg.window_W);
        const ChartPoint cp = window_chart_statistic(window, cfg.window_W, n);
        out.points.push_back(cp);
        if (check_signal(cp, cfg)) {
            if (!out.signal) out.signal = diagnose(window, cp, cfg);
            if (!cfg.continue_after_signal) break;
        }
    }
    return out;
}

std::string chart_record(const ChartPoint& cp, double h, bool signal, const SignalReport* report,
                         bool with_variables) {
    nlohmann::ordered_json rec;
    rec["time"] = cp.time_index_n;
    rec["value"] = cp.value;
    rec["h"] = h;
    rec["signal"] = signal;
    rec["split"] = cp.best_split.split_k;
    rec["argmax_variable"] = cp.best_split.argmax_variable + 1;
    if (report != nullptr) {
        rec["change_point"] = report->change_point_estimate;
        if (with_variables) {
            auto vars = nlohmann::ordered_json::array();
            for (const auto r : report->suspicious_variables) vars.push_back(r + 1);
            rec["suspicious_variables"] = std::move(vars);
        }
    }
    return rec.dump();
}

}  // namespace nsw
