#pragma once

#include <cstddef>
#include <vector>

#include "nsw/observation_matrix.hpp"

namespace nsw {

/// Smallest number of observations on either side of a split.
inline constexpr std::size_t kMinSideSize = 3;
/// Smallest sample (or window) the charting statistic is defined for.
inline constexpr std::size_t kMinSampleSize = 2 * kMinSideSize;

/// Two-sample statistic at one split: the largest standardized mean
/// difference over all variables between rows [0, split_k) and [split_k, n).
struct SplitStatistic {
    std::size_t split_k = 0;          ///< size of the pre-split sample
    double value = 0.0;               ///< >= 0
    std::size_t argmax_variable = 0;  ///< 0-based column attaining the max

    friend bool operator==(const SplitStatistic&, const SplitStatistic&) = default;
};

/// Charting statistic U at time index n: the maximum of SplitStatistic over
/// all admissible splits of the sample or window ending at n.
struct ChartPoint {
    std::size_t time_index_n = 0;
    double value = 0.0;
    SplitStatistic best_split;

    friend bool operator==(const ChartPoint&, const ChartPoint&) = default;
};

/// Per-column prefix sums with Neumaier compensation. Row k of the table holds
/// the sums of rows [0, k) of the source, so any contiguous range mean is O(p).
class ColumnPrefixSums {
public:
    explicit ColumnPrefixSums(MatrixView x);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

    /// Sum of column r over rows [0, k).
    [[nodiscard]] double prefix(std::size_t k, std::size_t r) const noexcept {
        return sums_[k * cols_ + r];
    }

    /// Column means over rows [begin, end). Throws std::invalid_argument on an
    /// empty or out-of-range interval.
    [[nodiscard]] std::vector<double> means(std::size_t begin, std::size_t end) const;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> sums_;
};

/// Column means over rows [begin, end) of x.
[[nodiscard]] std::vector<double> column_means(MatrixView x, std::size_t begin, std::size_t end);

/// sqrt(k (n - k) / n) * |mean(rows < k) - mean(rows >= k)| for every column.
/// Requires kMinSideSize <= k <= n - kMinSideSize.
[[nodiscard]] std::vector<double> per_variable_split_statistics(MatrixView x, std::size_t k);

/// Max over columns of per_variable_split_statistics. Ties go to the smallest
/// column. Throws std::invalid_argument if k is not an admissible split.
[[nodiscard]] SplitStatistic split_statistic(MatrixView x, std::size_t k);

/// U over the whole sample: max over k in [3, n - 3] of split_statistic.
/// Ties go to the smallest k. time_index_n is set to n.
/// Throws std::invalid_argument if n < 6.
[[nodiscard]] ChartPoint full_sample_chart_statistic(MatrixView x);

/// U for a moving window of exactly `window_size` rows ending at time
/// `time_index_n`. Throws std::invalid_argument on a row-count mismatch or a
/// window smaller than 6.
[[nodiscard]] ChartPoint window_chart_statistic(MatrixView window, std::size_t window_size,
                                                std::size_t time_index_n);

/// tau_hat = n - W + k*. For a full-sample point pass W = n, which gives k.
[[nodiscard]] std::size_t change_point_estimate(const ChartPoint& cp, std::size_t window_size);

}  // namespace nsw
