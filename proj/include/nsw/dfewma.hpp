#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "nsw/observation_matrix.hpp"
#include "nsw/sim_models.hpp"

namespace nsw {

/// Centering applied to each rank inside the weighted window sum.
enum class RankCentering {
    /// (m0 + n + 1) / 2, the mean of a single rank.
    kPerRank,
    /// W (m0 + n + 1) / 2, the mean of a window rank sum, subtracted from every
    /// rank. Every term is then strongly negative, so upward shifts shrink T_n
    /// and the upper-sided chart cannot detect them; kept for comparison.
    kWindowSum,
};

/// Distribution-free EWMA comparator chart over column-wise ranks against a
/// reference sample of m0 in-control observations.
struct DfewmaConfig {
    std::size_t m0 = 100;
    std::size_t window_W = 20;
    double lambda = 0.1;
    std::size_t p = 0;
    double fap_alpha = 0.01;
    double limit_h = 0.0;
    RankCentering centering = RankCentering::kPerRank;

    void validate() const;
};

/// Ranks of the stream rows among the pooled reference and stream values,
/// column by column. Ties get average ranks. Entry (i, r) is the rank of
/// stream row i in column r, 1 <= rank <= m0 + n.
struct RankTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> ranks;

    [[nodiscard]] double operator()(std::size_t i, std::size_t r) const noexcept {
        return ranks[i * cols + r];
    }
};

[[nodiscard]] RankTable rank_table(MatrixView reference, MatrixView stream_prefix);

/// T_n(W, lambda) = sum_r T_{n,r}^2 evaluated from scratch at n =
/// stream_prefix.rows(). Throws std::invalid_argument if n < W or the column
/// counts disagree.
[[nodiscard]] double dfewma_statistic(MatrixView reference, MatrixView stream_prefix,
                                      const DfewmaConfig& cfg);

/// Incremental evaluation of T_n as observations arrive. Keeps every column
/// sorted and updates the ranks of the current window in O(W + log N) per
/// column and step.
class DfewmaTracker {
public:
    DfewmaTracker(MatrixView reference, const DfewmaConfig& cfg, std::size_t capacity_hint = 0);

    /// Adds X_n and returns T_n once n >= W.
    std::optional<double> observe(std::span<const double> x);

    [[nodiscard]] std::size_t time() const noexcept { return time_; }

private:
    DfewmaConfig cfg_;
    std::size_t m0_;
    std::size_t time_ = 0;
    std::vector<std::vector<double>> sorted_;  // per column, all values so far
    std::vector<double> window_values_;        // ring of W rows
    std::vector<double> window_ranks_;         // ring of W rows
    std::vector<double> weights_;              // weights_[j] = (1 - lambda)^j
};

struct DfewmaAlarm {
    std::size_t alarm_time_n = 0;
    double statistic_value = 0.0;
};

/// First n in [W, stream rows] with T_n > limit_h.
[[nodiscard]] std::optional<DfewmaAlarm> dfewma_monitor(MatrixView reference, MatrixView stream,
                                                        const DfewmaConfig& cfg);

/// Max of T_n over n in [W, horizon] on `runs` in-control streams with fresh
/// N(0, I) references; the chart is distribution-free, so the IC law is
/// immaterial.
[[nodiscard]] std::vector<double> dfewma_null_maxima(const DfewmaConfig& cfg,
                                                     std::size_t horizon_n, std::size_t runs,
                                                     std::uint64_t seed, std::size_t threads = 0);

/// (1 - alpha) empirical quantile of dfewma_null_maxima: a limit whose FAP over
/// the horizon is alpha.
[[nodiscard]] double calibrate_dfewma_limit(const DfewmaConfig& cfg, std::size_t horizon_n,
                                            std::size_t runs, std::uint64_t seed,
                                            std::size_t threads = 0);

/// Table-style comparison runs: each replication draws an m0-row IC
/// reference and a scenario run, then monitors to the first signal.
/// cpe and drv are NaN (the chart has no diagnosis).
[[nodiscard]] MetricsSummary run_dfewma_scenario(const ScenarioSpec& spec,
                                                 const ModelParams& params,
                                                 const DfewmaConfig& cfg,
                                                 std::size_t threads = 0);

}  // namespace nsw
