#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "nsw/control_limits.hpp"
#include "nsw/dfewma.hpp"
#include "nsw/io.hpp"
#include "nsw/monitor.hpp"
#include "nsw/sim_models.hpp"
#include "nsw/text.hpp"

namespace nsw::cli {

namespace {

namespace fs = std::filesystem;

struct LimitArgs {
    std::size_t p = 0;
    std::size_t W = 40;
    std::size_t s = 5;
    std::size_t n = 100;
    double alpha = 0.01;
    std::size_t B = 10000;
    std::uint64_t seed = 1;
    std::size_t pool = kDefaultReferencePool;
    std::string reference;
    std::string cache;
    std::size_t threads = 0;
};

struct MonitorArgs {
    std::string input;
    std::string limit_cache;
    std::size_t W = 40;
    std::size_t s = 5;
    bool diagnose = false;
    bool keep_going = false;
};

struct SimulateArgs {
    std::string grid;
    std::string scheme = "nsw";
    std::string out;
    double alpha = 0.01;
    std::size_t B = 10000;
    std::size_t s = 5;
    std::uint64_t limit_seed = 1;
    std::string cache;
    std::size_t threads = 0;
    std::size_t m0 = 100;
    double lambda = 0.1;
    std::string centering = "per-rank";
    std::size_t calibration_runs = 2000;
};

struct PreprocessArgs {
    std::string ic;
    std::string oc;
    std::string data;
    std::string labels;
    std::string out_dir;
    double fence = 1.5;
};

struct AcfArgs {
    std::size_t p = 100;
    std::size_t W = 20;
    std::size_t s = 5;
    std::size_t lags = 10;
    std::size_t points = 500;
    std::uint64_t seed = 1;
    std::string out;
};

struct ReplayArgs {
    std::string ic;
    std::string oc;
    std::size_t tau = 25;
    std::size_t W = 20;
    std::size_t s = 5;
    std::size_t n = 100;
    double alpha = 0.01;
    std::size_t B = 10000;
    std::size_t R = 1000;
    std::uint64_t seed = 1;
    std::size_t threads = 0;
};

std::optional<fs::path> cache_path(const std::string& flag) {
    if (!flag.empty()) return fs::path(flag);
    return default_cache_path();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

int cmd_limits(const LimitArgs& a, std::ostream& out, std::ostream& err) {
    LimitConfig cfg{a.alpha, a.B, a.n, a.W, a.s, a.seed};
    cfg.validate();
    const auto path = cache_path(a.cache);
    LimitCache cache = path ? LimitCache::load(*path) : LimitCache{};

    ControlLimit limit;
    if (!a.reference.empty()) {
        const ObservationMatrix reference = to_observations(read_table(a.reference));
        if (a.p != 0 && reference.cols() != a.p) {
            throw std::invalid_argument("--p does not match the reference file's column count");
        }
        const std::string fp = fingerprint(reference.view());
        if (auto hit = cache.find(reference.cols(), cfg, fp)) {
            limit = *hit;
        } else {
            limit = bootstrap_control_limit(reference.view(), cfg, a.threads);
            cache.put(limit);
        }
    } else {
        if (a.p == 0) throw std::invalid_argument("--p is required without --reference");
        limit = calibrate_standard_normal(a.p, cfg, &cache, a.pool, a.threads);
    }
    if (limit.degenerate) {
        err << "warning: every bootstrap statistic is 0; the chart signals on any variation\n";
    }
    if (path) cache.save(*path);
    LimitCache single;
    single.put(limit);
    out << single.serialize();
    return 0;
}

int cmd_monitor(const MonitorArgs& a, std::ostream& out) {
    const ObservationMatrix stream = to_observations(read_table(a.input));
    const LimitCache cache = LimitCache::load(a.limit_cache);
    const auto matches = cache.select(stream.cols(), a.W, a.s);
    if (matches.empty()) {
        throw std::invalid_argument("no cached limit for p=" + std::to_string(stream.cols()) +
                                    ", W=" + std::to_string(a.W) + ", s=" + std::to_string(a.s));
    }
    if (matches.size() > 1) {
        throw std::invalid_argument("limit cache holds several limits for p=" +
                                    std::to_string(stream.cols()) + ", W=" + std::to_string(a.W) +
                                    ", s=" + std::to_string(a.s));
    }
    MonitorConfig cfg = MonitorConfig::from_limit(matches.front());
    cfg.continue_after_signal = a.keep_going;
    Monitor monitor(cfg);
    for (std::size_t i = 0; i < stream.rows() && !monitor.stopped(); ++i) {
        const auto had_signal = monitor.signal().has_value();
        const auto cp = monitor.observe(stream.row(i));
        if (!cp) continue;
        const bool signal = check_signal(*cp, cfg);
        const SignalReport* report = nullptr;
        SignalReport local;
        if (signal) {
            if (!had_signal) {
                report = &*monitor.signal();
            } else {
                local = diagnose(monitor.window().view(), *cp, cfg);
                report = &local;
            }
        }
        out << chart_record(*cp, cfg.limit.h, signal, report, a.diagnose) << '\n';
    }
    return 0;
}

std::vector<ScenarioSpec> read_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read grid " + path);
    std::string line;
    std::vector<std::string> header;
    std::vector<ScenarioSpec> specs;
    std::size_t line_no = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> f;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) f.emplace_back(trim(item));
        return f;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || trim(line).front() == '#') continue;
        const auto fields = split(line);
        if (header.empty()) {
            header = fields;
            for (const char* required : {"model", "p", "W", "tau", "delta", "v"}) {
                if (std::find(header.begin(), header.end(), required) == header.end()) {
                    throw std::runtime_error(std::string("grid is missing column '") + required + "'");
                }
            }
            continue;
        }
        if (fields.size() != header.size()) {
            throw std::runtime_error("grid line " + std::to_string(line_no) + " has " +
                                     std::to_string(fields.size()) + " fields");
        }
        ScenarioSpec spec;
        spec.replications_R = 1000;
        for (std::size_t c = 0; c < header.size(); ++c) {
            const std::string& key = header[c];
            const std::string& value = fields[c];
            auto number = [&] {
                const auto v = parse_real(value);
                if (!v) {
                    throw std::runtime_error("grid line " + std::to_string(line_no) + ": bad " +
                                             key + " '" + value + "'");
                }
                return *v;
            };
            auto count = [&] {
                const double v = number();
                if (v < 0 || v != static_cast<double>(static_cast<std::uint64_t>(v))) {
                    throw std::runtime_error("grid line " + std::to_string(line_no) + ": " + key +
                                             " must be a non-negative integer");
                }
                return static_cast<std::uint64_t>(v);
            };
            if (key == "model") spec.model = parse_model(value);
            else if (key == "p") spec.p = count();
            else if (key == "W") spec.window_W = count();
            else if (key == "tau") spec.tau = count();
            else if (key == "delta") spec.delta = number();
            else if (key == "v") spec.sparsity_v = number();
            else if (key == "n") spec.horizon_n = count();
            else if (key == "R") spec.replications_R = count();
            else if (key == "seed") spec.seed = count();
            else throw std::runtime_error("grid has unknown column '" + key + "'");
        }
        spec.validate();
        specs.push_back(spec);
    }
    return specs;
}

RankCentering parse_centering(const std::string& name) {
    if (name == "window-sum") return RankCentering::kWindowSum;
    if (name == "per-rank") return RankCentering::kPerRank;
    throw std::invalid_argument("unknown centering '" + name + "'");
}

int cmd_simulate(const SimulateArgs& a, std::ostream& err) {
    const auto specs = read_grid(a.grid);
    const ModelParams params;
    std::ostringstream table;
    table << metrics_csv_header() << '\n';

    if (a.scheme == "nsw") {
        const auto path = cache_path(a.cache);
        LimitCache cache = path ? LimitCache::load(*path) : LimitCache{};
        for (const auto& spec : specs) {
            const LimitConfig lcfg{a.alpha, a.B, spec.horizon_n, spec.window_W, a.s, a.limit_seed};
            const ControlLimit limit = calibrate_standard_normal(spec.p, lcfg, &cache,
                                                                 kDefaultReferencePool, a.threads);
            const MetricsSummary m =
                run_scenario(spec, params, MonitorConfig::from_limit(limit), a.threads);
            table << metrics_csv_row(spec, m) << '\n';
            err << metrics_csv_row(spec, m) << "  (h=" << format_real(limit.h) << ")\n";
        }
        if (path) cache.save(*path);
    } else if (a.scheme == "dfewma") {
        std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> limits;
        for (const auto& spec : specs) {
            DfewmaConfig cfg;
            cfg.m0 = a.m0;
            cfg.window_W = spec.window_W;
            cfg.lambda = a.lambda;
            cfg.p = spec.p;
            cfg.fap_alpha = a.alpha;
            cfg.centering = parse_centering(a.centering);
            const auto key = std::make_tuple(spec.p, spec.window_W, spec.horizon_n);
            auto it = limits.find(key);
            if (it == limits.end()) {
                const double h = calibrate_dfewma_limit(cfg, spec.horizon_n, a.calibration_runs,
                                                        a.limit_seed, a.threads);
                it = limits.emplace(key, h).first;
            }
            cfg.limit_h = it->second;
            const MetricsSummary m = run_dfewma_scenario(spec, params, cfg, a.threads);
            table << metrics_csv_row(spec, m) << '\n';
            err << metrics_csv_row(spec, m) << "  (h=" << format_real(cfg.limit_h) << ")\n";
        }
    } else {
        throw std::invalid_argument("unknown scheme '" + a.scheme + "' (expected nsw or dfewma)");
    }
    write_text(a.out, table.str());
    return 0;
}

std::pair<RawTable, RawTable> split_by_labels(const RawTable& data, const RawTable& labels) {
    if (labels.rows != data.rows || labels.cols < 1) {
        throw std::invalid_argument("label file must have one row per data row");
    }
    RawTable ic{0, data.cols, {}, data.header};
    RawTable oc{0, data.cols, {}, data.header};
    for (std::size_t i = 0; i < data.rows; ++i) {
        RawTable& dst = labels(i, 0) < 0 ? ic : oc;
        dst.values.insert(dst.values.end(), data.values.begin() + static_cast<std::ptrdiff_t>(i * data.cols),
                          data.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * data.cols));
        ++dst.rows;
    }
    return {std::move(ic), std::move(oc)};
}

RawTable read_labels(const std::string& path) {
    // Label files may carry a quoted timestamp after the label; keep the first field.
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    RawTable t{0, 1, {}, {}};
    std::string line;
    while (std::getline(in, line)) {
        const auto tl = trim(line);
        if (tl.empty()) continue;
        const auto end = tl.find_first_of(" \t,");
        const auto v = parse_real(tl.substr(0, end));
        if (!v) throw std::runtime_error("bad label line: " + line);
        t.values.push_back(*v);
        ++t.rows;
    }
    return t;
}

int cmd_preprocess(const PreprocessArgs& a, std::ostream& out) {
    RawTable ic;
    RawTable oc;
    if (!a.data.empty()) {
        if (a.labels.empty()) throw std::invalid_argument("--data needs --labels");
        std::tie(ic, oc) = split_by_labels(read_table(a.data), read_labels(a.labels));
    } else {
        if (a.ic.empty() || a.oc.empty()) {
            throw std::invalid_argument("give --ic and --oc, or --data and --labels");
        }
        ic = read_table(a.ic);
        oc = read_table(a.oc);
    }
    const PreprocessResult result = preprocess_secom(ic, oc, a.fence);
    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    std::vector<std::string> header;
    if (!ic.header.empty()) {
        for (const auto r : result.report.retained_columns) header.push_back(ic.header[r]);
    }
    write_csv(dir / "ic_clean.csv", result.ic, header);
    write_csv(dir / "oc_clean.csv", result.oc, header);
    write_text((dir / "report.json").string(), result.report.to_json() + "\n");
    out << "retained " << result.report.retained_columns.size() << " of "
        << result.report.original_columns << " columns\n";
    return 0;
}

int cmd_acf(const AcfArgs& a, std::ostream& out) {
    const auto acf = chart_acf(a.p, a.W, a.s, a.points, a.lags, a.seed);
    std::ostringstream os;
    os << "lag,acf\n";
    for (std::size_t k = 0; k < acf.size(); ++k) os << k + 1 << ',' << format_real(acf[k]) << '\n';
    if (a.out.empty()) {
        out << os.str();
    } else {
        write_text(a.out, os.str());
    }
    return 0;
}

int cmd_replay(const ReplayArgs& a, std::ostream& out) {
    const ObservationMatrix ic = to_observations(read_table(a.ic));
    const ObservationMatrix oc = to_observations(read_table(a.oc));
    const LimitConfig lcfg{a.alpha, a.B, a.n, a.W, a.s, a.seed};
    const ControlLimit limit = bootstrap_control_limit(ic.view(), lcfg, a.threads);
    MonitorConfig cfg = MonitorConfig::from_limit(limit);
    cfg.horizon_n = a.n;
    const MetricsSummary m = replay_case(ic, oc, a.tau, cfg, a.R, a.seed, a.threads);
    out << "W,tau,h,DR,CED,CPE,R\n"
        << a.W << ',' << a.tau << ',' << format_real(limit.h) << ',' << format_real(m.dr) << ','
        << format_real(m.ced) << ',' << format_real(m.cpe) << ',' << m.replications << '\n';
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Moving-window change-point chart for sparse mean shifts", "nsw"};
    app.require_subcommand(1);

    LimitArgs limits;
    auto* limits_cmd = app.add_subcommand("limits", "Bootstrap-calibrate a control limit");
    limits_cmd->add_option("--p", limits.p, "Dimension (ignored with --reference)");
    limits_cmd->add_option("--W", limits.W, "Window size")->required();
    limits_cmd->add_option("--s", limits.s, "Step size")->required();
    limits_cmd->add_option("--n", limits.n, "Monitoring horizon")->required();
    limits_cmd->add_option("--alpha", limits.alpha, "Target false-alarm probability")->required();
    limits_cmd->add_option("--B", limits.B, "Bootstrap samples")->required();
    limits_cmd->add_option("--seed", limits.seed, "Master seed")->required();
    limits_cmd->add_option("--reference", limits.reference, "IC reference CSV");
    limits_cmd->add_option("--pool", limits.pool, "Size of the simulated N(0, I) pool");
    limits_cmd->add_option("--cache", limits.cache, "Limit cache file (default $NSW_CACHE_DIR/limits.txt)");
    limits_cmd->add_option("--threads", limits.threads, "Worker threads (0 = all cores)");

    MonitorArgs monitor;
    auto* monitor_cmd = app.add_subcommand("monitor", "Stream a CSV through the chart");
    monitor_cmd->add_option("--input", monitor.input, "Observations CSV")->required();
    monitor_cmd->add_option("--limit-cache", monitor.limit_cache, "Limit cache file")->required();
    monitor_cmd->add_option("--W", monitor.W, "Window size")->required();
    monitor_cmd->add_option("--s", monitor.s, "Step size")->required();
    monitor_cmd->add_flag("--diagnose", monitor.diagnose, "List suspicious variables on a signal");
    monitor_cmd->add_flag("--continue", monitor.keep_going, "Keep monitoring after a signal");

    SimulateArgs simulate;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run a scenario grid");
    simulate_cmd->add_option("--grid", simulate.grid, "Grid CSV")->required();
    simulate_cmd->add_option("--scheme", simulate.scheme, "nsw or dfewma")
        ->check(CLI::IsMember({"nsw", "dfewma"}));
    simulate_cmd->add_option("--out", simulate.out, "Output CSV")->required();
    simulate_cmd->add_option("--alpha", simulate.alpha, "Target false-alarm probability");
    simulate_cmd->add_option("--B", simulate.B, "Bootstrap samples");
    simulate_cmd->add_option("--s", simulate.s, "Step size");
    simulate_cmd->add_option("--limit-seed", simulate.limit_seed, "Seed of limit calibration");
    simulate_cmd->add_option("--cache", simulate.cache, "Limit cache file");
    simulate_cmd->add_option("--threads", simulate.threads, "Worker threads (0 = all cores)");
    simulate_cmd->add_option("--m0", simulate.m0, "DFEWMA reference size");
    simulate_cmd->add_option("--lambda", simulate.lambda, "DFEWMA smoothing");
    simulate_cmd->add_option("--centering", simulate.centering, "DFEWMA rank centering")
        ->check(CLI::IsMember({"window-sum", "per-rank"}));
    simulate_cmd->add_option("--calibration-runs", simulate.calibration_runs,
                             "DFEWMA null runs for the limit");

    PreprocessArgs preprocess;
    auto* preprocess_cmd = app.add_subcommand("preprocess", "Clean an IC/OC sample pair");
    preprocess_cmd->add_option("--ic", preprocess.ic, "IC sample CSV");
    preprocess_cmd->add_option("--oc", preprocess.oc, "OC sample CSV");
    preprocess_cmd->add_option("--data", preprocess.data, "Combined data file");
    preprocess_cmd->add_option("--labels", preprocess.labels, "Labels (-1 = IC, 1 = OC)");
    preprocess_cmd->add_option("--out-dir", preprocess.out_dir, "Output directory")->required();
    preprocess_cmd->add_option("--fence", preprocess.fence, "Tukey fence multiplier");

    AcfArgs acf;
    auto* acf_cmd = app.add_subcommand("acf", "Autocorrelation of the IC charting statistic");
    acf_cmd->add_option("--W", acf.W, "Window size")->required();
    acf_cmd->add_option("--s", acf.s, "Step size")->required();
    acf_cmd->add_option("--lags", acf.lags, "Largest lag")->required();
    acf_cmd->add_option("--out", acf.out, "Output CSV (stdout if omitted)");
    acf_cmd->add_option("--p", acf.p, "Dimension");
    acf_cmd->add_option("--points", acf.points, "Chart points");
    acf_cmd->add_option("--seed", acf.seed, "Seed");

    ReplayArgs replay;
    auto* replay_cmd = app.add_subcommand("replay", "Replay IC/OC pools as monitored streams");
    replay_cmd->add_option("--ic", replay.ic, "Preprocessed IC CSV")->required();
    replay_cmd->add_option("--oc", replay.oc, "Preprocessed OC CSV")->required();
    replay_cmd->add_option("--tau", replay.tau, "Change point");
    replay_cmd->add_option("--W", replay.W, "Window size");
    replay_cmd->add_option("--s", replay.s, "Step size");
    replay_cmd->add_option("--n", replay.n, "Horizon");
    replay_cmd->add_option("--alpha", replay.alpha, "Target false-alarm probability");
    replay_cmd->add_option("--B", replay.B, "Bootstrap samples");
    replay_cmd->add_option("--R", replay.R, "Replications");
    replay_cmd->add_option("--seed", replay.seed, "Seed");
    replay_cmd->add_option("--threads", replay.threads, "Worker threads (0 = all cores)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*limits_cmd) return cmd_limits(limits, out, err);
        if (*monitor_cmd) return cmd_monitor(monitor, out);
        if (*simulate_cmd) return cmd_simulate(simulate, err);
        if (*preprocess_cmd) return cmd_preprocess(preprocess, out);
        if (*acf_cmd) return cmd_acf(acf, out);
        if (*replay_cmd) return cmd_replay(replay, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace nsw::cli
