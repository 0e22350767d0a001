#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsw/observation_matrix.hpp"

namespace nsw {

/// Inputs of the bootstrap calibration.
struct LimitConfig {
    double fap_alpha = 0.01;     ///< target false-alarm probability over the horizon
    std::size_t bootstrap_B = 10000;
    std::size_t horizon_n = 100;  ///< monitoring interval length
    std::size_t window_W = 40;
    std::size_t step_s = 5;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument unless 0 < alpha < 1, B >= 1,
    /// 6 <= W <= n and s >= 1.
    void validate() const;

    friend bool operator==(const LimitConfig&, const LimitConfig&) = default;
};

struct ControlLimit {
    double h = 0.0;
    std::size_t p = 0;
    LimitConfig config;
    double quantile_level = 0.0;     ///< (1 - alpha)^Q
    std::string source_fingerprint;  ///< digest of the reference sample
    bool degenerate = false;         ///< every bootstrap statistic was 0

    friend bool operator==(const ControlLimit&, const ControlLimit&) = default;
};

/// Q = 1 / (floor((n - W) / s) + 1): the reciprocal of the number of window
/// evaluations in a horizon of n observations.
[[nodiscard]] double quantile_exponent(std::size_t n, std::size_t window_W, std::size_t step_s);

/// (1 - alpha)^Q.
[[nodiscard]] double quantile_level(double alpha, std::size_t n, std::size_t window_W,
                                    std::size_t step_s);

/// Lowest order statistic whose empirical CDF reaches `level`: sorts ascending
/// and returns the value at 1-based position ceil(level * B), clamped to [1, B].
/// Throws std::invalid_argument on an empty sample or level outside (0, 1].
[[nodiscard]] double empirical_quantile(std::vector<double> values, double level);

/// Charting statistic of B windows, each made of W rows drawn with replacement
/// from `reference`. Replicate b draws its rows with
/// std::uniform_int_distribution<std::size_t>(0, rows - 1) on make_rng(seed, b),
/// so the output is identical for any thread count.
[[nodiscard]] std::vector<double> bootstrap_statistics(MatrixView reference, std::size_t window_W,
                                                       std::size_t bootstrap_B, std::uint64_t seed,
                                                       std::size_t threads = 0);

/// Bootstrap calibration of h(p, W) for a target FAP. Throws
/// std::invalid_argument on an empty reference or an invalid config.
[[nodiscard]] ControlLimit bootstrap_control_limit(MatrixView reference, const LimitConfig& cfg,
                                                   std::size_t threads = 0);

/// FNV-1a 64 digest of the matrix shape and the bit patterns of its entries.
[[nodiscard]] std::string fingerprint(MatrixView x);

/// Pool size used when a simulation supplies its own IC reference.
inline constexpr std::size_t kDefaultReferencePool = 1000;

/// `rows` independent N_p(0, I) observations.
[[nodiscard]] ObservationMatrix standard_normal_sample(std::size_t rows, std::size_t p,
                                                       std::uint64_t seed);

/// Plain-text store of calibrated limits, one "[limit]" block of
/// `key = value` lines per record.
class LimitCache {
public:
    LimitCache() = default;

    /// Missing file yields an empty cache; malformed content throws
    /// std::runtime_error.
    static LimitCache load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    [[nodiscard]] static LimitCache parse(const std::string& text);
    [[nodiscard]] std::string serialize() const;

    /// Exact match on (p, W, s, n, alpha, B, seed, fingerprint).
    [[nodiscard]] std::optional<ControlLimit> find(std::size_t p, const LimitConfig& cfg,
                                                   const std::string& fingerprint) const;

    /// Records with matching p, W and s regardless of the other keys.
    [[nodiscard]] std::vector<ControlLimit> select(std::size_t p, std::size_t window_W,
                                                   std::size_t step_s) const;

    /// Replaces a record with the same key or appends.
    void put(const ControlLimit& limit);

    [[nodiscard]] std::span<const ControlLimit> records() const noexcept { return records_; }

private:
    std::vector<ControlLimit> records_;
};

/// Cache file under $NSW_CACHE_DIR, if that variable is set.
[[nodiscard]] std::optional<std::filesystem::path> default_cache_path();

}  // namespace nsw
