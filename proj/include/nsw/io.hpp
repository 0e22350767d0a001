#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nsw/monitor.hpp"
#include "nsw/observation_matrix.hpp"
#include "nsw/sim_models.hpp"

namespace nsw {

/// Numeric table as read from disk. Missing entries are NaN.
struct RawTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::vector<std::string> header;  ///< empty when the file had none

    [[nodiscard]] double operator()(std::size_t i, std::size_t r) const noexcept {
        return values[i * cols + r];
    }
};

/// Parses delimited text. Fields are split on commas when the first data line
/// has one, otherwise on runs of blanks. A first row with any non-numeric
/// field is taken as a header. Empty fields and "NaN" are missing values.
/// Throws std::runtime_error on ragged rows or unparseable fields.
[[nodiscard]] RawTable parse_table(const std::string& text);
[[nodiscard]] RawTable read_table(const std::filesystem::path& path);

/// Throws std::invalid_argument if any entry is missing.
[[nodiscard]] ObservationMatrix to_observations(const RawTable& table);

/// Comma-separated, 17 significant digits, optional header row.
[[nodiscard]] std::string to_csv(const ObservationMatrix& x,
                                 const std::vector<std::string>& header = {});
void write_csv(const std::filesystem::path& path, const ObservationMatrix& x,
               const std::vector<std::string>& header = {});

/// Quantile of a sorted sample with linear interpolation between order
/// statistics: position (m - 1) q, 0-based.
[[nodiscard]] double linear_quantile(const std::vector<double>& sorted, double q);

struct PreprocessReport {
    std::size_t original_columns = 0;
    std::vector<std::size_t> removed_constant_columns;  ///< 0-based, original numbering
    std::vector<std::size_t> removed_zero_std_columns;  ///< constant after cleaning
    std::vector<std::size_t> retained_columns;          ///< original indices, in order
    std::vector<std::size_t> outliers_replaced;         ///< per retained column, IC sample
    std::vector<std::size_t> missing_imputed_ic;        ///< per retained column
    std::vector<std::size_t> missing_imputed_oc;        ///< per retained column
    std::vector<double> ic_means;                       ///< per retained column
    std::vector<double> ic_stds;                        ///< per retained column
    double fence_multiplier = 1.5;

    /// True when the pass changed nothing structural: no columns removed, no
    /// outliers replaced, no values imputed.
    [[nodiscard]] bool stable() const;
    [[nodiscard]] std::string to_json() const;
};

struct PreprocessResult {
    ObservationMatrix ic;
    ObservationMatrix oc;
    PreprocessReport report;
};

/// Cleaning of an IC/OC pair of raw samples:
///  1. drop columns constant over the observed IC values;
///  2. IC values outside [Q1 - k IQR, Q3 + k IQR] become the IC column median;
///  3. missing values in both samples become the IC column median;
///  4. both samples are standardized with the IC mean and sample standard
///     deviation after steps 2-3; columns whose std is then zero are dropped.
/// Throws std::invalid_argument when the column counts differ.
[[nodiscard]] PreprocessResult preprocess_secom(const RawTable& ic, const RawTable& oc,
                                                double fence_multiplier = 1.5);

/// Replay of a case study: every replication builds a stream of tau rows
/// drawn with replacement from the IC pool followed by rows drawn with
/// replacement from the OC pool up to cfg.horizon_n, then monitors it to the
/// first signal. Reports DR, CED and CPE (drv stays NaN).
[[nodiscard]] MetricsSummary replay_case(const ObservationMatrix& ic, const ObservationMatrix& oc,
                                         std::size_t tau, const MonitorConfig& cfg,
                                         std::size_t replications, std::uint64_t seed,
                                         std::size_t threads = 0);

/// CSV header and row for a metric table line.
[[nodiscard]] std::string metrics_csv_header();
[[nodiscard]] std::string metrics_csv_row(const ScenarioSpec& spec, const MetricsSummary& m);

}  // namespace nsw
