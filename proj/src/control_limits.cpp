#include "nsw/control_limits.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "nsw/core_stats.hpp"
#include "nsw/parallel.hpp"
#include "nsw/rng.hpp"
#include "nsw/text.hpp"

namespace nsw {

void LimitConfig::validate() const {
    if (!(fap_alpha > 0.0 && fap_alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0, 1)");
    }
    if (bootstrap_B < 1) throw std::invalid_argument("B must be at least 1");
    if (window_W < kMinSampleSize) throw std::invalid_argument("W must be at least 6");
    if (window_W > horizon_n) throw std::invalid_argument("W must not exceed the horizon n");
    if (step_s < 1) throw std::invalid_argument("step s must be at least 1");
}

double quantile_exponent(std::size_t n, std::size_t window_W, std::size_t step_s) {
    if (window_W > n || step_s == 0) {
        throw std::invalid_argument("quantile exponent needs W <= n and s >= 1");
    }
    const std::size_t evaluations = (n - window_W) / step_s + 1;
    return 1.0 / static_cast<double>(evaluations);
}

double quantile_level(double alpha, std::size_t n, std::size_t window_W, std::size_t step_s) {
    return std::pow(1.0 - alpha, quantile_exponent(n, window_W, step_s));
}

double empirical_quantile(std::vector<double> values, double level) {
    if (values.empty()) throw std::invalid_argument("empirical quantile of an empty sample");
    if (!(level > 0.0 && level <= 1.0)) throw std::invalid_argument("level must lie in (0, 1]");
    std::sort(values.begin(), values.end());
    const auto count = static_cast<double>(values.size());
    // The 1e-9 slack keeps products such as 0.99 * 100 from rounding up a rank.
    auto rank = static_cast<std::size_t>(std::ceil(level * count - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

std::vector<double> bootstrap_statistics(MatrixView reference, std::size_t window_W,
                                         std::size_t bootstrap_B, std::uint64_t seed,
                                         std::size_t threads) {
    if (reference.rows() < 1) throw std::invalid_argument("reference sample has no rows");
    const std::size_t p = reference.cols();
    std::vector<double> out(bootstrap_B);
    parallel_for(bootstrap_B, threads, [&](std::size_t b) {
        Rng rng = make_rng(seed, b);
        std::uniform_int_distribution<std::size_t> pick(0, reference.rows() - 1);
        std::vector<double> window(window_W * p);
        for (std::size_t i = 0; i < window_W; ++i) {
            const auto src = reference.row(pick(rng));
            std::copy(src.begin(), src.end(), window.begin() + static_cast<std::ptrdiff_t>(i * p));
        }
        out[b] = window_chart_statistic(MatrixView(window.data(), window_W, p), window_W, window_W)
                     .value;
    });
    return out;
}

ControlLimit bootstrap_control_limit(MatrixView reference, const LimitConfig& cfg,
                                     std::size_t threads) {
    cfg.validate();
    if (reference.rows() < 1) throw std::invalid_argument("reference sample has no rows");
    if (reference.cols() < 1) throw std::invalid_argument("reference sample has no variables");
    const auto stats =
        bootstrap_statistics(reference, cfg.window_W, cfg.bootstrap_B, cfg.seed, threads);
    ControlLimit limit;
    limit.p = reference.cols();
    limit.config = cfg;
    limit.quantile_level = quantile_level(cfg.fap_alpha, cfg.horizon_n, cfg.window_W, cfg.step_s);
    limit.h = empirical_quantile(stats, limit.quantile_level);
    limit.source_fingerprint = fingerprint(reference);
    limit.degenerate = *std::max_element(stats.begin(), stats.end()) == 0.0;
    return limit;
}

std::string fingerprint(MatrixView x) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    auto feed = [&hash](std::uint64_t word) {
        for (int byte = 0; byte < 8; ++byte) {
            hash ^= (word >> (8 * byte)) & 0xffU;
            hash *= 0x100000001b3ULL;
        }
    };
    feed(x.rows());
    feed(x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (const double v : x.row(i)) feed(std::bit_cast<std::uint64_t>(v));
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << hash;
    return os.str();
}

ObservationMatrix standard_normal_sample(std::size_t rows, std::size_t p, std::uint64_t seed) {
    Rng rng(substream_seed(seed, 0));
    std::normal_distribution<double> normal;
    std::vector<double> data(rows * p);
    for (double& v : data) v = normal(rng);
    return {rows, p, std::move(data)};
}

// ---------------------------------------------------------------------------
// LimitCache

namespace {

bool same_key(const ControlLimit& a, std::size_t p, const LimitConfig& cfg,
              const std::string& fp) {
    return a.p == p && a.config == cfg && a.source_fingerprint == fp;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != value.size()) {
        throw std::runtime_error("limit cache: bad integer for '" + key + "': " + value);
    }
    return static_cast<std::size_t>(v);
}

double parse_double(const std::string& key, const std::string& value) {
    const auto v = parse_real(value);
    if (!v) throw std::runtime_error("limit cache: bad number for '" + key + "': " + value);
    return *v;
}

}  // namespace

LimitCache LimitCache::parse(const std::string& text) {
    LimitCache cache;
    std::istringstream in(text);
    std::string line;
    std::optional<ControlLimit> current;
    unsigned seen = 0;
    constexpr unsigned kAllKeys = (1U << 11) - 1;
    auto flush = [&] {
        if (!current) return;
        if (seen != kAllKeys) throw std::runtime_error("limit cache: incomplete record");
        cache.records_.push_back(*current);
        current.reset();
    };
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (t == "[limit]") {
            flush();
            current.emplace();
            seen = 0;
            continue;
        }
        const auto eq = t.find('=');
        if (!current || eq == std::string_view::npos) {
            throw std::runtime_error("limit cache: unexpected line " + std::to_string(line_no));
        }
        const std::string key(trim(t.substr(0, eq)));
        const std::string value(trim(t.substr(eq + 1)));
        ControlLimit& c = *current;
        if (key == "p") { c.p = parse_count(key, value); seen |= 1U << 0; }
        else if (key == "W") { c.config.window_W = parse_count(key, value); seen |= 1U << 1; }
        else if (key == "s") { c.config.step_s = parse_count(key, value); seen |= 1U << 2; }
        else if (key == "n") { c.config.horizon_n = parse_count(key, value); seen |= 1U << 3; }
        else if (key == "alpha") { c.config.fap_alpha = parse_double(key, value); seen |= 1U << 4; }
        else if (key == "B") { c.config.bootstrap_B = parse_count(key, value); seen |= 1U << 5; }
        else if (key == "seed") { c.config.seed = parse_count(key, value); seen |= 1U << 6; }
        else if (key == "fingerprint") { c.source_fingerprint = value; seen |= 1U << 7; }
        else if (key == "quantile_level") { c.quantile_level = parse_double(key, value); seen |= 1U << 8; }
        else if (key == "h") { c.h = parse_double(key, value); seen |= 1U << 9; }
        else if (key == "degenerate") {
            if (value != "true" && value != "false") {
                throw std::runtime_error("limit cache: bad boolean for 'degenerate': " + value);
            }
            c.degenerate = value == "true";
            seen |= 1U << 10;
        } else {
            throw std::runtime_error("limit cache: unknown key '" + key + "'");
        }
    }
    flush();
    return cache;
}

std::string LimitCache::serialize() const {
    std::ostringstream os;
    for (const auto& c : records_) {
        os << "[limit]\n"
           << "p = " << c.p << '\n'
           << "W = " << c.config.window_W << '\n'
           << "s = " << c.config.step_s << '\n'
           << "n = " << c.config.horizon_n << '\n'
           << "alpha = " << format_real(c.config.fap_alpha) << '\n'
           << "B = " << c.config.bootstrap_B << '\n'
           << "seed = " << c.config.seed << '\n'
           << "fingerprint = " << c.source_fingerprint << '\n'
           << "quantile_level = " << format_real(c.quantile_level) << '\n'
           << "h = " << format_real(c.h) << '\n'
           << "degenerate = " << (c.degenerate ? "true" : "false") << "\n\n";
    }
    return os.str();
}

LimitCache LimitCache::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        if (!std::filesystem::exists(path)) return {};
        throw std::runtime_error("cannot read limit cache " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void LimitCache::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write limit cache " + path.string());
    out << serialize();
}

std::optional<ControlLimit> LimitCache::find(std::size_t p, const LimitConfig& cfg,
                                             const std::string& fp) const {
    for (const auto& c : records_) {
        if (same_key(c, p, cfg, fp)) return c;
    }
    return std::nullopt;
}

std::vector<ControlLimit> LimitCache::select(std::size_t p, std::size_t window_W,
                                             std::size_t step_s) const {
    std::vector<ControlLimit> out;
    for (const auto& c : records_) {
        if (c.p == p && c.config.window_W == window_W && c.config.step_s == step_s) {
            out.push_back(c);
        }
    }
    return out;
}

void LimitCache::put(const ControlLimit& limit) {
    for (auto& c : records_) {
        if (same_key(c, limit.p, limit.config, limit.source_fingerprint)) {
            c = limit;
            return;
        }
    }
    records_.push_back(limit);
}

std::optional<std::filesystem::path> default_cache_path() {
    const char* dir = std::getenv("NSW_CACHE_DIR");
    if (dir == nullptr || *dir == '\0') return std::nullopt;
    return std::filesystem::path(dir) / "limits.txt";
}

}  // namespace nsw
