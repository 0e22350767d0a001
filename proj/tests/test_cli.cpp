#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "nsw/io.hpp"
#include "nsw/sim_models.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = nsw::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> result;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) result.push_back(line);
    return result;
}

class TempDir {
public:
    TempDir() : path_(fs::temp_directory_path() / ("nsw_cli_" + std::to_string(counter_++))) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] std::string operator/(const std::string& name) const {
        return (path_ / name).string();
    }

private:
    static inline int counter_ = 0;
    fs::path path_;
};

std::vector<std::string> limit_args(const std::string& cache) {
    return {"limits", "--p", "5", "--W", "10", "--s", "5", "--n", "60", "--alpha", "0.01",
            "--B", "500", "--seed", "3", "--pool", "200", "--cache", cache};
}

}  // namespace

TEST_CASE("limits is deterministic and fills the cache") {
    TempDir dir;
    const auto cache = dir / "limits.txt";
    const auto a = run(limit_args(cache));
    REQUIRE(a.code == 0);
    const auto b = run(limit_args(dir / "other.txt"));
    CHECK(a.out == b.out);
    const auto parsed = nsw::LimitCache::parse(a.out);
    REQUIRE(parsed.records().size() == 1);
    CHECK(parsed.records()[0].p == 5);
    CHECK(parsed.records()[0].h > 0.0);
    CHECK(nsw::LimitCache::load(cache).records().size() == 1);
    // a second call hits the cache and leaves it unchanged
    CHECK(run(limit_args(cache)).out == a.out);
    CHECK(nsw::LimitCache::load(cache).records().size() == 1);

    nsw::LimitConfig cfg{0.01, 500, 60, 10, 5, 3};
    CHECK(parsed.records()[0] == nsw::calibrate_standard_normal(5, cfg, nullptr, 200));
}

TEST_CASE("limits from a reference file") {
    TempDir dir;
    const auto ref = nsw::standard_normal_sample(100, 3, 1);
    nsw::write_csv(dir / "ref.csv", ref);
    const auto r = run({"limits", "--W", "10", "--s", "5", "--n", "50", "--alpha", "0.05", "--B",
                        "300", "--seed", "1", "--reference", dir / "ref.csv", "--cache",
                        dir / "c.txt"});
    REQUIRE(r.code == 0);
    const auto limit = nsw::LimitCache::parse(r.out).records()[0];
    const nsw::LimitConfig cfg{0.05, 300, 50, 10, 5, 1};
    CHECK(limit == nsw::bootstrap_control_limit(ref.view(), cfg));

    nsw::write_csv(dir / "zero.csv", nsw::ObservationMatrix(30, 2));
    const auto z = run({"limits", "--W", "10", "--s", "5", "--n", "50", "--alpha", "0.05", "--B",
                        "50", "--seed", "1", "--reference", dir / "zero.csv", "--cache",
                        dir / "c.txt"});
    CHECK(z.code == 0);
    CHECK(z.err.find("warning") != std::string::npos);

    const auto mismatch = run({"limits", "--p", "4", "--W", "10", "--s", "5", "--n", "50",
                               "--alpha", "0.05", "--B", "50", "--seed", "1", "--reference",
                               dir / "ref.csv"});
    CHECK(mismatch.code != 0);
}

TEST_CASE("monitor reproduces the simulated signal") {
    TempDir dir;
    const auto cache = dir / "limits.txt";
    REQUIRE(run({"limits", "--p", "20", "--W", "20", "--s", "5", "--n", "100", "--alpha", "0.01",
                 "--B", "2000", "--seed", "1", "--cache", cache})
                .code == 0);

    nsw::ScenarioSpec spec;
    spec.p = 20;
    spec.window_W = 20;
    spec.tau = 50;
    spec.delta = 2.0;
    spec.sparsity_v = 0.1;
    spec.replications_R = 1;
    spec.seed = 4;
    const auto stream = nsw::generate_run(spec, {}, nsw::replication_seed(spec, 0));
    nsw::write_csv(dir / "stream.csv", stream);

    const auto limit = nsw::LimitCache::load(cache).records()[0];
    const auto expected = nsw::monitor_stream(stream.view(), nsw::MonitorConfig::from_limit(limit));

    const auto r = run({"monitor", "--input", dir / "stream.csv", "--limit-cache", cache, "--W",
                        "20", "--s", "5", "--diagnose"});
    REQUIRE(r.code == 0);
    const auto records = lines(r.out);
    REQUIRE(records.size() == expected.points.size());
    const auto last = nlohmann::json::parse(records.back());
    if (expected.signal) {
        CHECK(last["signal"] == true);
        CHECK(last["time"] == expected.signal->alarm_time_n);
        CHECK(last["change_point"] == expected.signal->change_point_estimate);
        std::vector<std::size_t> one_based;
        for (const auto v : expected.signal->suspicious_variables) one_based.push_back(v + 1);
        CHECK(last["suspicious_variables"].get<std::vector<std::size_t>>() == one_based);
    } else {
        CHECK(last["signal"] == false);
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto rec = nlohmann::json::parse(records[i]);
        CHECK(rec["time"] == expected.points[i].time_index_n);
        CHECK(rec["value"].get<double>() == expected.points[i].value);
    }

    const auto run_summary = nsw::run_scenario(spec, {}, nsw::MonitorConfig::from_limit(limit), 1);
    CHECK(run_summary.dr == (expected.signal && expected.signal->alarm_time_n > 50 ? 1.0 : 0.0));

    const auto keep_going = run({"monitor", "--input", dir / "stream.csv", "--limit-cache", cache,
                                 "--W", "20", "--s", "5", "--continue"});
    CHECK(lines(keep_going.out).size() == 17);

    const auto missing = run({"monitor", "--input", dir / "stream.csv", "--limit-cache", cache,
                              "--W", "40", "--s", "5"});
    CHECK(missing.code != 0);
    CHECK(missing.err.find("no cached limit") != std::string::npos);
}

TEST_CASE("simulate a one-cell grid") {
    TempDir dir;
    spit(dir / "grid.csv", "model,p,W,tau,delta,v,R,seed\nI,20,40,50,2,0.1,200,1\n");
    const std::vector<std::string> args{"simulate", "--grid", dir / "grid.csv", "--out",
                                        dir / "out.csv", "--B", "10000", "--cache",
                                        dir / "limits.txt"};
    REQUIRE(run(args).code == 0);
    const auto first = slurp(dir / "out.csv");
    const auto rows = lines(first);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == nsw::metrics_csv_header());
    const auto split = [](const std::string& line) {
        std::vector<std::string> fields;
        std::istringstream in(line);
        std::string f;
        while (std::getline(in, f, ',')) fields.push_back(f);
        return fields;
    };
    const auto header = split(rows[0]);
    const auto values = split(rows[1]);
    REQUIRE(values.size() == header.size());
    CHECK(values[0] == "I");
    const auto col = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        REQUIRE(it != header.end());
        return std::stod(values[static_cast<std::size_t>(it - header.begin())]);
    };
    CHECK(col("DR") >= 0.95);
    CHECK(col("CED") > 5.0);
    CHECK(col("CED") < 10.0);

    // byte-identical rerun, with or without the cached limit
    REQUIRE(run(args).code == 0);
    CHECK(slurp(dir / "out.csv") == first);

    spit(dir / "bad.csv", "model,p,W,tau,delta\nI,20,40,50,2\n");
    CHECK(run({"simulate", "--grid", dir / "bad.csv", "--out", dir / "o.csv"}).code != 0);
}

TEST_CASE("simulate the comparator") {
    TempDir dir;
    spit(dir / "grid.csv", "model,p,W,tau,delta,v,n,R\nI,5,10,30,2,0.2,60,50\n");
    const auto r = run({"simulate", "--grid", dir / "grid.csv", "--scheme", "dfewma", "--out",
                        dir / "out.csv", "--m0", "50", "--calibration-runs", "200"});
    REQUIRE(r.code == 0);
    const auto rows = lines(slurp(dir / "out.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].rfind("I,5,10,30,2,", 0) == 0);
}

TEST_CASE("preprocess and replay") {
    TempDir dir;
    spit(dir / "ic.csv", "a,b,c\n1,5,0.1\n2,5,0.3\n,5,0.2\n3,5,9\n2,5,0.25\n1.5,5,0.15\n");
    spit(dir / "oc.csv", "a,b,c\n4,5,\n5,5,0.2\n");
    const auto r = run({"preprocess", "--ic", dir / "ic.csv", "--oc", dir / "oc.csv", "--out-dir",
                        dir / "clean"});
    REQUIRE(r.code == 0);
    const auto report = nlohmann::json::parse(slurp(dir / "clean/report.json"));
    CHECK(report["retained_count"] == 2);
    CHECK(report["removed_constant_columns"] == nlohmann::json::array({2}));
    const auto ic = nsw::to_observations(nsw::read_table(dir / "clean/ic_clean.csv"));
    CHECK(ic.rows() == 6);
    CHECK(ic.cols() == 2);

    spit(dir / "labels.txt", "-1 0\n-1 0\n-1 0\n-1 0\n-1 0\n-1 0\n1 0\n1 0\n");
    spit(dir / "data.txt",
         "1 5 0.1\n2 5 0.3\nNaN 5 0.2\n3 5 9\n2 5 0.25\n1.5 5 0.15\n4 5 NaN\n5 5 0.2\n");
    REQUIRE(run({"preprocess", "--data", dir / "data.txt", "--labels", dir / "labels.txt",
                 "--out-dir", dir / "joint"})
                .code == 0);
    // same numbers; the header-less input yields header-less output
    CHECK(nsw::to_observations(nsw::read_table(dir / "joint/ic_clean.csv")) == ic);
    CHECK(nsw::to_observations(nsw::read_table(dir / "joint/oc_clean.csv")) ==
          nsw::to_observations(nsw::read_table(dir / "clean/oc_clean.csv")));

    spit(dir / "wide.csv", "1,2,3,4\n5,6,7,8\n");
    CHECK(run({"preprocess", "--ic", dir / "ic.csv", "--oc", dir / "wide.csv", "--out-dir",
               dir / "x"})
              .code != 0);

    nsw::write_csv(dir / "pool_ic.csv", nsw::standard_normal_sample(200, 3, 1));
    auto oc_pool = nsw::standard_normal_sample(100, 3, 2);
    for (std::size_t i = 0; i < oc_pool.rows(); ++i) oc_pool(i, 0) += 10.0;
    nsw::write_csv(dir / "pool_oc.csv", oc_pool);
    const auto replay = run({"replay", "--ic", dir / "pool_ic.csv", "--oc", dir / "pool_oc.csv",
                             "--tau", "25", "--W", "20", "--B", "1000", "--R", "50"});
    REQUIRE(replay.code == 0);
    const auto table = nsw::parse_table(replay.out);
    CHECK(table(0, 3) == 1.0);  // DR
    CHECK(table(0, 4) == 5.0);  // CED
}

TEST_CASE("acf") {
    TempDir dir;
    const auto r = run({"acf", "--W", "10", "--s", "5", "--lags", "3", "--p", "5", "--points",
                        "100", "--out", dir / "acf.csv"});
    REQUIRE(r.code == 0);
    const auto table = nsw::parse_table(slurp(dir / "acf.csv"));
    CHECK(table.header == std::vector<std::string>{"lag", "acf"});
    CHECK(table.rows == 3);
    const auto again = run({"acf", "--W", "10", "--s", "5", "--lags", "3", "--p", "5", "--points",
                            "100"});
    CHECK(again.out == slurp(dir / "acf.csv"));
    CHECK(run({"acf", "--W", "10", "--s", "5", "--lags", "3", "--points", "10"}).code != 0);
}

TEST_CASE("usage errors") {
    CHECK(run({}).code != 0);
    CHECK(run({"limits", "--bogus", "1"}).code != 0);
    CHECK(run({"limits", "--W", "10"}).code != 0);
    CHECK(run({"monitor", "--input", "/nonexistent.csv", "--limit-cache", "/nonexistent.txt",
               "--W", "10", "--s", "5"})
              .code != 0);
    CHECK(run({"simulate", "--grid", "/nonexistent.csv", "--out", "/tmp/x.csv", "--scheme", "cusum"})
              .code != 0);
}
