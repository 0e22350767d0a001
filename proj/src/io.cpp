#include "nsw/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nsw/parallel.hpp"
#include "nsw/rng.hpp"
#include "nsw/text.hpp"

namespace nsw {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> split_fields(std::string_view line, bool comma) {
    std::vector<std::string_view> out;
    if (comma) {
        std::size_t start = 0;
        while (true) {
            const auto pos = line.find(',', start);
            out.push_back(trim(line.substr(start, pos - start)));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        return out;
    }
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string strip_quotes(std::string_view s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
}

}  // namespace

RawTable parse_table(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) lines.push_back(line);
    }
    RawTable table;
    if (lines.empty()) return table;
    const bool comma = lines.front().find(',') != std::string::npos;

    std::size_t first_data = 0;
    {
        const auto fields = split_fields(lines.front(), comma);
        const bool is_header = std::any_of(fields.begin(), fields.end(), [](std::string_view f) {
            return !f.empty() && !parse_real(f).has_value();
        });
        if (is_header) {
            for (const auto f : fields) table.header.push_back(strip_quotes(f));
            table.cols = fields.size();
            first_data = 1;
        }
    }
    for (std::size_t l = first_data; l < lines.size(); ++l) {
        const auto fields = split_fields(lines[l], comma);
        if (table.cols == 0) table.cols = fields.size();
        if (fields.size() != table.cols) {
            throw std::runtime_error("line " + std::to_string(l + 1) + " has " +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(table.cols));
        }
        for (const auto f : fields) {
            if (f.empty()) {
                table.values.push_back(kMissing);
                continue;
            }
            const auto v = parse_real(f);
            if (!v) {
                throw std::runtime_error("line " + std::to_string(l + 1) + ": not a number: '" +
                                         std::string(f) + "'");
            }
            table.values.push_back(*v);
        }
        ++table.rows;
    }
    return table;
}

RawTable read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_table(buf.str());
}

ObservationMatrix to_observations(const RawTable& table) {
    for (std::size_t k = 0; k < table.values.size(); ++k) {
        if (std::isnan(table.values[k])) {
            throw std::invalid_argument("missing value at row " + std::to_string(k / table.cols + 1) +
                                        ", column " + std::to_string(k % table.cols + 1) +
                                        "; run preprocessing first");
        }
    }
    return {table.rows, table.cols, table.values};
}

std::string to_csv(const ObservationMatrix& x, const std::vector<std::string>& header) {
    std::string out;
    if (!header.empty()) {
        for (std::size_t r = 0; r < header.size(); ++r) {
            if (r > 0) out += ',';
            out += header[r];
        }
        out += '\n';
    }
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto row = x.row(i);
        for (std::size_t r = 0; r < row.size(); ++r) {
            if (r > 0) out += ',';
            out += format_real(row[r]);
        }
        out += '\n';
    }
    return out;
}

void write_csv(const std::filesystem::path& path, const ObservationMatrix& x,
               const std::vector<std::string>& header) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_csv(x, header);
}

double linear_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

bool PreprocessReport::stable() const {
    auto all_zero = [](const std::vector<std::size_t>& v) {
        return std::all_of(v.begin(), v.end(), [](std::size_t c) { return c == 0; });
    };
    return removed_constant_columns.empty() && removed_zero_std_columns.empty() &&
           all_zero(outliers_replaced) && all_zero(missing_imputed_ic) &&
           all_zero(missing_imputed_oc);
}

std::string PreprocessReport::to_json() const {
    auto one_based = [](const std::vector<std::size_t>& v) {
        std::vector<std::size_t> out(v);
        for (auto& x : out) ++x;
        return out;
    };
    nlohmann::ordered_json j;
    j["original_columns"] = original_columns;
    j["retained_count"] = retained_columns.size();
    j["fence_multiplier"] = fence_multiplier;
    j["removed_constant_columns"] = one_based(removed_constant_columns);
    j["removed_zero_std_columns"] = one_based(removed_zero_std_columns);
    j["retained_columns"] = one_based(retained_columns);
    j["outliers_replaced"] = outliers_replaced;
    j["missing_imputed_ic"] = missing_imputed_ic;
    j["missing_imputed_oc"] = missing_imputed_oc;
    j["ic_means"] = ic_means;
    j["ic_stds"] = ic_stds;
    j["stable"] = stable();
    return j.dump(2);
}

PreprocessResult preprocess_secom(const RawTable& ic, const RawTable& oc,
                                  double fence_multiplier) {
    if (ic.cols != oc.cols) {
        throw std::invalid_argument("IC sample has " + std::to_string(ic.cols) +
                                    " columns but OC sample has " + std::to_string(oc.cols));
    }
    if (ic.rows < 2) throw std::invalid_argument("IC sample needs at least 2 rows");

    PreprocessReport report;
    report.original_columns = ic.cols;
    report.fence_multiplier = fence_multiplier;

    struct CleanColumn {
        std::vector<double> ic;
        std::vector<double> oc;
    };
    std::vector<CleanColumn> kept;
    std::vector<double> observed;
    for (std::size_t r = 0; r < ic.cols; ++r) {
        observed.clear();
        for (std::size_t i = 0; i < ic.rows; ++i) {
            if (!std::isnan(ic(i, r))) observed.push_back(ic(i, r));
        }
        std::sort(observed.begin(), observed.end());
        if (observed.empty() || observed.front() == observed.back()) {
            report.removed_constant_columns.push_back(r);
            continue;
        }
        const double q1 = linear_quantile(observed, 0.25);
        const double median = linear_quantile(observed, 0.5);
        const double q3 = linear_quantile(observed, 0.75);
        const double iqr = q3 - q1;
        const double lower = q1 - fence_multiplier * iqr;
        const double upper = q3 + fence_multiplier * iqr;

        CleanColumn col{std::vector<double>(ic.rows), std::vector<double>(oc.rows)};
        std::size_t outliers = 0;
        std::size_t missing_ic = 0;
        std::size_t missing_oc = 0;
        for (std::size_t i = 0; i < ic.rows; ++i) {
            double v = ic(i, r);
            if (std::isnan(v)) {
                v = median;
                ++missing_ic;
            } else if (v < lower || v > upper) {
                v = median;
                ++outliers;
            }
            col.ic[i] = v;
        }
        for (std::size_t i = 0; i < oc.rows; ++i) {
            double v = oc(i, r);
            if (std::isnan(v)) {
                v = median;
                ++missing_oc;
            }
            col.oc[i] = v;
        }

        double mean = 0.0;
        for (const double v : col.ic) mean += v;
        mean /= static_cast<double>(ic.rows);
        double ss = 0.0;
        for (const double v : col.ic) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(ic.rows - 1));
        if (!(sd > 0.0)) {
            report.removed_zero_std_columns.push_back(r);
            continue;
        }
        for (double& v : col.ic) v = (v - mean) / sd;
        for (double& v : col.oc) v = (v - mean) / sd;

        report.retained_columns.push_back(r);
        report.outliers_replaced.push_back(outliers);
        report.missing_imputed_ic.push_back(missing_ic);
        report.missing_imputed_oc.push_back(missing_oc);
        report.ic_means.push_back(mean);
        report.ic_stds.push_back(sd);
        kept.push_back(std::move(col));
    }

    const std::size_t p = kept.size();
    std::vector<double> ic_data(ic.rows * p);
    std::vector<double> oc_data(oc.rows * p);
    for (std::size_t c = 0; c < p; ++c) {
        for (std::size_t i = 0; i < ic.rows; ++i) ic_data[i * p + c] = kept[c].ic[i];
        for (std::size_t i = 0; i < oc.rows; ++i) oc_data[i * p + c] = kept[c].oc[i];
    }
    return {ObservationMatrix(ic.rows, p, std::move(ic_data)),
            ObservationMatrix(oc.rows, p, std::move(oc_data)), std::move(report)};
}

MetricsSummary replay_case(const ObservationMatrix& ic, const ObservationMatrix& oc,
                           std::size_t tau, const MonitorConfig& cfg, std::size_t replications,
                           std::uint64_t seed, std::size_t threads) {
    if (!cfg.horizon_n) throw std::invalid_argument("replay needs a monitoring horizon");
    const std::size_t horizon = *cfg.horizon_n;
    if (tau >= horizon) throw std::invalid_argument("tau must be smaller than the horizon");
    if (ic.cols() != cfg.p || oc.cols() != cfg.p) {
        throw std::invalid_argument("replay pools do not have p columns");
    }
    if ((tau > 0 && ic.empty()) || oc.empty()) throw std::invalid_argument("empty replay pool");
    MonitorConfig run_cfg = cfg;
    run_cfg.continue_after_signal = false;
    run_cfg.validate();

    std::vector<RunRecord> runs(replications);
    parallel_for(replications, threads, [&](std::size_t j) {
        Rng rng = make_rng(seed, j);
        std::uniform_int_distribution<std::size_t> pick_ic(0, ic.empty() ? 0 : ic.rows() - 1);
        std::uniform_int_distribution<std::size_t> pick_oc(0, oc.rows() - 1);
        ObservationMatrix stream(horizon, cfg.p);
        for (std::size_t i = 0; i < horizon; ++i) {
            const auto src = i < tau ? ic.row(pick_ic(rng)) : oc.row(pick_oc(rng));
            std::copy(src.begin(), src.end(), stream.row(i).begin());
        }
        const MonitorOutcome outcome = monitor_stream(stream.view(), run_cfg);
        if (outcome.signal) {
            runs[j].alarm_time = outcome.signal->alarm_time_n;
            runs[j].change_point_estimate = outcome.signal->change_point_estimate;
        }
    });
    return summarize(runs, tau, false);
}

std::string metrics_csv_header() {
    return "model,p,W,tau,delta,v,DR,CED,CPE,DRV,FAP,R,seed";
}

std::string metrics_csv_row(const ScenarioSpec& spec, const MetricsSummary& m) {
    std::ostringstream os;
    os << model_name(spec.model) << ',' << spec.p << ',' << spec.window_W << ',' << spec.tau << ','
       << format_real(spec.delta) << ',' << format_real(spec.sparsity_v) << ',' << format_real(m.dr)
       << ',' << format_real(m.ced) << ',' << format_real(m.cpe) << ',' << format_real(m.drv) << ','
       << format_real(m.fap) << ',' << m.replications << ',' << spec.seed;
    return os.str();
}

}  // namespace nsw
