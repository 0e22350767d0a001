#include "nsw/dfewma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "nsw/control_limits.hpp"
#include "nsw/parallel.hpp"
#include "nsw/rng.hpp"

namespace nsw {

namespace {

double centering_term(const DfewmaConfig& cfg, double pooled_size) {
    const double per_rank = (pooled_size + 1.0) / 2.0;
    return cfg.centering == RankCentering::kWindowSum
               ? static_cast<double>(cfg.window_W) * per_rank
               : per_rank;
}

double scale_term(const DfewmaConfig& cfg, double pooled_size) {
    const auto w = static_cast<double>(cfg.window_W);
    return std::sqrt(w * (pooled_size + 1.0) * (pooled_size - w) / 12.0);
}

std::vector<double> ewma_weights(const DfewmaConfig& cfg) {
    std::vector<double> w(cfg.window_W);
    double current = 1.0;
    for (auto& x : w) {
        x = current;
        current *= 1.0 - cfg.lambda;
    }
    return w;
}

}  // namespace

void DfewmaConfig::validate() const {
    if (m0 < 1) throw std::invalid_argument("reference size m0 must be at least 1");
    if (window_W < 1) throw std::invalid_argument("W must be at least 1");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in (0, 1]");
    if (p < 1) throw std::invalid_argument("p must be at least 1");
}

RankTable rank_table(MatrixView reference, MatrixView stream_prefix) {
    if (reference.cols() != stream_prefix.cols()) {
        throw std::invalid_argument("reference and stream have different variable counts");
    }
    RankTable table{stream_prefix.rows(), stream_prefix.cols(),
                    std::vector<double>(stream_prefix.rows() * stream_prefix.cols())};
    std::vector<double> pooled;
    for (std::size_t r = 0; r < table.cols; ++r) {
        pooled.clear();
        for (std::size_t i = 0; i < reference.rows(); ++i) pooled.push_back(reference(i, r));
        for (std::size_t i = 0; i < stream_prefix.rows(); ++i) pooled.push_back(stream_prefix(i, r));
        std::sort(pooled.begin(), pooled.end());
        for (std::size_t i = 0; i < stream_prefix.rows(); ++i) {
            const double v = stream_prefix(i, r);
            const auto lo = std::lower_bound(pooled.begin(), pooled.end(), v);
            const auto hi = std::upper_bound(lo, pooled.end(), v);
            const auto less = static_cast<double>(lo - pooled.begin());
            const auto equal = static_cast<double>(hi - lo);
            table.ranks[i * table.cols + r] = less + (equal + 1.0) / 2.0;
        }
    }
    return table;
}

double dfewma_statistic(MatrixView reference, MatrixView stream_prefix, const DfewmaConfig& cfg) {
    cfg.validate();
    const std::size_t n = stream_prefix.rows();
    if (n < cfg.window_W) {
        throw std::invalid_argument("DFEWMA needs n >= W, got n=" + std::to_string(n));
    }
    if (stream_prefix.cols() != cfg.p || reference.cols() != cfg.p) {
        throw std::invalid_argument("DFEWMA inputs do not have p columns");
    }
    const RankTable ranks = rank_table(reference, stream_prefix);
    const auto pooled = static_cast<double>(reference.rows() + n);
    const double center = centering_term(cfg, pooled);
    const double scale = scale_term(cfg, pooled);
    const auto weights = ewma_weights(cfg);
    double total = 0.0;
    for (std::size_t r = 0; r < cfg.p; ++r) {
        double t = 0.0;
        for (std::size_t i = n - cfg.window_W; i < n; ++i) {
            t += weights[n - 1 - i] * (ranks(i, r) - center) / scale;
        }
        total += t * t;
    }
    return total;
}

DfewmaTracker::DfewmaTracker(MatrixView reference, const DfewmaConfig& cfg,
                             std::size_t capacity_hint)
    : cfg_(cfg),
      m0_(reference.rows()),
      sorted_(cfg.p),
      window_values_(cfg.window_W * cfg.p, 0.0),
      window_ranks_(cfg.window_W * cfg.p, 0.0),
      weights_(ewma_weights(cfg)) {
    cfg_.validate();
    if (reference.cols() != cfg_.p) {
        throw std::invalid_argument("reference does not have p columns");
    }
    for (std::size_t r = 0; r < cfg_.p; ++r) {
        auto& col = sorted_[r];
        col.reserve(m0_ + capacity_hint);
        for (std::size_t i = 0; i < m0_; ++i) col.push_back(reference(i, r));
        std::sort(col.begin(), col.end());
    }
}

std::optional<double> DfewmaTracker::observe(std::span<const double> x) {
    if (x.size() != cfg_.p) throw std::invalid_argument("observation does not have p entries");
    const std::size_t w = cfg_.window_W;
    const std::size_t live = std::min(time_, w);
    const std::size_t slot = time_ % w;
    for (std::size_t r = 0; r < cfg_.p; ++r) {
        const double v = x[r];
        for (std::size_t age = 0; age < live; ++age) {
            const std::size_t s = (time_ - 1 - age) % w;
            const double old = window_values_[s * cfg_.p + r];
            if (v < old) {
                window_ranks_[s * cfg_.p + r] += 1.0;
            } else if (v == old) {
                window_ranks_[s * cfg_.p + r] += 0.5;
            }
        }
        auto& col = sorted_[r];
        const auto lo = std::lower_bound(col.begin(), col.end(), v);
        const auto hi = std::upper_bound(lo, col.end(), v);
        const auto less = static_cast<double>(lo - col.begin());
        const auto equal = static_cast<double>(hi - lo);
        col.insert(hi, v);
        window_values_[slot * cfg_.p + r] = v;
        window_ranks_[slot * cfg_.p + r] = less + 1.0 + equal / 2.0;
    }
    ++time_;
    if (time_ < w) return std::nullopt;

    const auto pooled = static_cast<double>(m0_ + time_);
    const double center = centering_term(cfg_, pooled);
    const double scale = scale_term(cfg_, pooled);
    std::vector<double> per_variable(cfg_.p, 0.0);
    for (std::size_t age = 0; age < w; ++age) {
        const std::size_t s = (time_ - 1 - age) % w;
        const double weight = weights_[age] / scale;
        const double* ranks = window_ranks_.data() + s * cfg_.p;
        for (std::size_t r = 0; r < cfg_.p; ++r) per_variable[r] += weight * (ranks[r] - center);
    }
    double total = 0.0;
    for (const double t : per_variable) total += t * t;
    return total;
}

std::optional<DfewmaAlarm> dfewma_monitor(MatrixView reference, MatrixView stream,
                                          const DfewmaConfig& cfg) {
    DfewmaTracker tracker(reference, cfg, stream.rows());
    for (std::size_t i = 0; i < stream.rows(); ++i) {
        const auto t = tracker.observe(stream.row(i));
        if (t && *t > cfg.limit_h) return DfewmaAlarm{i + 1, *t};
    }
    return std::nullopt;
}

std::vector<double> dfewma_null_maxima(const DfewmaConfig& cfg, std::size_t horizon_n,
                                       std::size_t runs, std::uint64_t seed,
                                       std::size_t threads) {
    cfg.validate();
    if (horizon_n < cfg.window_W) throw std::invalid_argument("horizon shorter than W");
    std::vector<double> maxima(runs);
    parallel_for(runs, threads, [&](std::size_t j) {
        const std::uint64_t run_seed = substream_seed(seed, j);
        const ObservationMatrix reference = standard_normal_sample(cfg.m0, cfg.p, run_seed);
        const ObservationMatrix stream =
            standard_normal_sample(horizon_n, cfg.p, substream_seed(run_seed, 1));
        DfewmaTracker tracker(reference.view(), cfg, horizon_n);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < horizon_n; ++i) {
            if (const auto t = tracker.observe(stream.row(i))) best = std::max(best, *t);
        }
        maxima[j] = best;
    });
    return maxima;
}

double calibrate_dfewma_limit(const DfewmaConfig& cfg, std::size_t horizon_n, std::size_t runs,
                              std::uint64_t seed, std::size_t threads) {
    if (!(cfg.fap_alpha > 0.0 && cfg.fap_alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0, 1)");
    }
    return empirical_quantile(dfewma_null_maxima(cfg, horizon_n, runs, seed, threads),
                              1.0 - cfg.fap_alpha);
}

MetricsSummary run_dfewma_scenario(const ScenarioSpec& spec, const ModelParams& params,
                                   const DfewmaConfig& cfg, std::size_t threads) {
    if (cfg.p != spec.p) throw std::invalid_argument("DFEWMA config does not match the scenario p");
    const ScenarioGenerator generator(spec, params);
    std::vector<RunRecord> runs(spec.replications_R);
    parallel_for(runs.size(), threads, [&](std::size_t j) {
        const std::uint64_t run_seed = replication_seed(spec, j);
        const ObservationMatrix stream = generator.generate(run_seed);
        const ObservationMatrix reference =
            standard_normal_sample(cfg.m0, cfg.p, substream_seed(run_seed, 0xdf));
        if (const auto alarm = dfewma_monitor(reference.view(), stream.view(), cfg)) {
            runs[j].alarm_time = alarm->alarm_time_n;
        }
    });
    MetricsSummary m = summarize(runs, spec);
    m.cpe = std::numeric_limits<double>::quiet_NaN();
    m.drv = std::numeric_limits<double>::quiet_NaN();
    return m;
}

}  // namespace nsw
