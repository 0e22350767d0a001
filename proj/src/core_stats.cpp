#include "nsw/core_stats.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nsw {

namespace {

void require_admissible_split(std::size_t n, std::size_t k) {
    if (n < kMinSampleSize || k < kMinSideSize || k > n - kMinSideSize) {
        throw std::invalid_argument("split k=" + std::to_string(k) +
                                    " is not admissible for n=" + std::to_string(n) +
                                    " (need 3 <= k <= n - 3)");
    }
}

// Standardized mean difference at split k, column r, from prefix sums.
double split_value(const ColumnPrefixSums& sums, std::size_t n, std::size_t k, std::size_t r,
                   double scale) {
    const double left = sums.prefix(k, r);
    const double total = sums.prefix(n, r);
    const double left_mean = left / static_cast<double>(k);
    const double right_mean = (total - left) / static_cast<double>(n - k);
    return scale * std::abs(left_mean - right_mean);
}

double split_scale(std::size_t n, std::size_t k) {
    const auto nd = static_cast<double>(n);
    const auto kd = static_cast<double>(k);
    return std::sqrt(kd * (nd - kd) / nd);
}

SplitStatistic best_over_variables(const ColumnPrefixSums& sums, std::size_t n, std::size_t k) {
    const double scale = split_scale(n, k);
    SplitStatistic best{k, -1.0, 0};
    for (std::size_t r = 0; r < sums.cols(); ++r) {
        const double v = split_value(sums, n, k, r, scale);
        if (v > best.value) {
            best.value = v;
            best.argmax_variable = r;
        }
    }
    return best;
}

ChartPoint chart_point(MatrixView x, std::size_t time_index_n) {
    const std::size_t n = x.rows();
    if (x.cols() == 0) throw std::invalid_argument("sample has no variables");
    const ColumnPrefixSums sums(x);
    ChartPoint cp{time_index_n, -1.0, {}};
    for (std::size_t k = kMinSideSize; k + kMinSideSize <= n; ++k) {
        const SplitStatistic s = best_over_variables(sums, n, k);
        if (s.value > cp.value) {
            cp.value = s.value;
            cp.best_split = s;
        }
    }
    return cp;
}

}  // namespace

ColumnPrefixSums::ColumnPrefixSums(MatrixView x)
    : rows_(x.rows()), cols_(x.cols()), sums_((x.rows() + 1) * x.cols(), 0.0) {
    std::vector<double> running(cols_, 0.0);
    std::vector<double> compensation(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        const auto row = x.row(i);
        double* out = sums_.data() + (i + 1) * cols_;
        for (std::size_t r = 0; r < cols_; ++r) {
            const double v = row[r];
            const double t = running[r] + v;
            if (std::abs(running[r]) >= std::abs(v)) {
                compensation[r] += (running[r] - t) + v;
            } else {
                compensation[r] += (v - t) + running[r];
            }
            running[r] = t;
            out[r] = t + compensation[r];
        }
    }
}

std::vector<double> ColumnPrefixSums::means(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > rows_) {
        throw std::invalid_argument("row range [" + std::to_string(begin) + ", " +
                                    std::to_string(end) + ") is empty or exceeds " +
                                    std::to_string(rows_) + " rows");
    }
    const auto count = static_cast<double>(end - begin);
    std::vector<double> out(cols_);
    for (std::size_t r = 0; r < cols_; ++r) {
        out[r] = (prefix(end, r) - prefix(begin, r)) / count;
    }
    return out;
}

std::vector<double> column_means(MatrixView x, std::size_t begin, std::size_t end) {
    return ColumnPrefixSums(x).means(begin, end);
}

std::vector<double> per_variable_split_statistics(MatrixView x, std::size_t k) {
    const std::size_t n = x.rows();
    require_admissible_split(n, k);
    const ColumnPrefixSums sums(x);
    const double scale = split_scale(n, k);
    std::vector<double> out(x.cols());
    for (std::size_t r = 0; r < x.cols(); ++r) out[r] = split_value(sums, n, k, r, scale);
    return out;
}

SplitStatistic split_statistic(MatrixView x, std::size_t k) {
    require_admissible_split(x.rows(), k);
    if (x.cols() == 0) throw std::invalid_argument("sample has no variables");
    return best_over_variables(ColumnPrefixSums(x), x.rows(), k);
}

ChartPoint full_sample_chart_statistic(MatrixView x) {
    if (x.rows() < kMinSampleSize) {
        throw std::invalid_argument("insufficient sample: need at least 6 observations, got " +
                                    std::to_string(x.rows()));
    }
    return chart_point(x, x.rows());
}

ChartPoint window_chart_statistic(MatrixView window, std::size_t window_size,
                                  std::size_t time_index_n) {
    if (window_size < kMinSampleSize) {
        throw std::invalid_argument("window size must be at least 6, got " +
                                    std::to_string(window_size));
    }
    if (window.rows() != window_size) {
        throw std::invalid_argument("window has " + std::to_string(window.rows()) +
                                    " rows, expected " + std::to_string(window_size));
    }
    if (time_index_n < window_size) {
        throw std::invalid_argument("time index precedes the end of the first window");
    }
    return chart_point(window, time_index_n);
}

std::size_t change_point_estimate(const ChartPoint& cp, std::size_t window_size) {
    if (cp.time_index_n < window_size) {
        throw std::invalid_argument("time index smaller than window size");
    }
    return cp.time_index_n - window_size + cp.best_split.split_k;
}

}  // namespace nsw
