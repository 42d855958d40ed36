#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "trustgame/cli.hpp"
#include "trustgame/csv.hpp"

namespace fs = std::filesystem;
using trustgame::cli::run;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("trustgame_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

const std::vector<std::string> kSmallSim{"simulate", "--N", "500", "--K", "2", "--a", "0.3", "--r", "0.001",
                                         "--burn-in", "5", "--sweeps", "40", "--seed", "9"};

std::vector<std::string> with_out(std::vector<std::string> args, const fs::path& dir) {
    args.push_back("--out-dir");
    args.push_back(dir.string());
    return args;
}

}  // namespace

TEST_CASE("simulate writes its two tables") {
    const auto dir = scratch("sim");
    const auto r = invoke(with_out(kSmallSim, dir));
    REQUIRE(r.code == 0);
    CHECK(first_line(dir / "timeseries.csv") == "sweep,mean_w");
    CHECK(first_line(dir / "degree_hist.csv") == "k,count,n_snapshots");
    const auto ts = trustgame::csv::read(dir / "timeseries.csv");
    CHECK(ts.rows.size() == 40);
    CHECK(ts.rows.front()[ts.column("sweep")] == "6");
}

TEST_CASE("simulate is byte-identical across reruns") {
    const auto d1 = scratch("det1"), d2 = scratch("det2");
    REQUIRE(invoke(with_out(kSmallSim, d1)).code == 0);
    REQUIRE(invoke(with_out(kSmallSim, d2)).code == 0);
    CHECK(slurp(d1 / "timeseries.csv") == slurp(d2 / "timeseries.csv"));
    CHECK(slurp(d1 / "degree_hist.csv") == slurp(d2 / "degree_hist.csv"));
}

TEST_CASE("sweep output does not depend on --workers") {
    const std::vector<std::string> base{"sweep", "--N", "400", "--K", "1,2", "--a", "0.1,0.7", "--replicates", "2",
                                        "--burn-in", "3", "--sweeps", "20"};
    const auto d1 = scratch("sw1"), d4 = scratch("sw4");
    auto a1 = with_out(base, d1);
    a1.insert(a1.end(), {"--workers", "1"});
    auto a4 = with_out(base, d4);
    a4.insert(a4.end(), {"--workers", "4"});
    REQUIRE(invoke(a1).code == 0);
    REQUIRE(invoke(a4).code == 0);
    CHECK(first_line(d1 / "sweep.csv") == "K,a,seed,mean_w,var_w");
    CHECK(slurp(d1 / "sweep.csv") == slurp(d4 / "sweep.csv"));
    CHECK(trustgame::csv::read(d1 / "sweep.csv").rows.size() == 8);
}

TEST_CASE("critical-a writes one row per K") {
    const auto dir = scratch("crit");
    REQUIRE(invoke(with_out({"critical-a", "--K", "1,3", "--tol", "1e-5"}, dir)).code == 0);
    const auto t = trustgame::csv::read(dir / "critical_a.csv");
    REQUIRE(t.rows.size() == 2);
    const double a1 = std::stod(t.rows[0][t.column("a_c")]);
    CHECK(a1 > 0.0);
    CHECK(a1 < 1.0);
}

TEST_CASE("master-eq writes the trajectory and snapshots") {
    const auto dir = scratch("me");
    REQUIRE(invoke(with_out({"master-eq", "--K", "1", "--a", "0.4", "--Nw", "8", "--T", "5", "--snapshots", "0,5"},
                            dir))
                .code == 0);
    CHECK(first_line(dir / "master_traj.csv") == "t,mean_w");
    CHECK(first_line(dir / "P_t0.csv") == "k,w,P");
    CHECK(fs::exists(dir / "P_t5.csv"));
}

TEST_CASE("analyze consumes simulate output") {
    const auto dir = scratch("an");
    auto sim = kSmallSim;
    sim[12] = "2000";  // --sweeps
    REQUIRE(invoke(with_out(sim, dir)).code == 0);
    const auto r = invoke({"analyze", "--in-dir", dir.string(), "--out-dir", dir.string(), "--segment-length", "256",
                           "--low-band", "0.005,0.05", "--k-min", "3"});
    INFO(r.err);
    // a short run may not have enough tail support; spectra must still be written
    CHECK(fs::exists(dir / "spectrum.csv"));
    CHECK(first_line(dir / "spectrum.csv") == "f,power");
    if (r.code == 0) CHECK(first_line(dir / "fit.csv") == "quantity,value");
}

TEST_CASE("validation errors exit 1 and name the flag") {
    auto r = invoke({"simulate", "--K", "0", "--N", "10"});
    CHECK(r.code == 1);
    CHECK(r.err.find("--K") != std::string::npos);
    CHECK(r.err.rfind("error: ", 0) == 0);

    r = invoke({"simulate", "--a", "1.5"});
    CHECK(r.code == 1);
    CHECK(r.err.find("--a") != std::string::npos);

    r = invoke({"simulate", "--init", "half"});
    CHECK(r.code == 1);
    CHECK(r.err.find("--init") != std::string::npos);

    CHECK(invoke({"critical-a", "--K", "1", "--tol", "-1"}).code == 1);
    CHECK(invoke({"master-eq", "--dt", "0"}).code == 1);
    CHECK(invoke({"bogus"}).code == 1);
}

TEST_CASE("config files are merged and the command line wins") {
    const auto dir = scratch("cfg");
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "run.cfg");
        cfg << "# small run\nN = 300\nK = 2\nsweeps = 7\nburn-in = 1\nseed = 4\n";
    }
    REQUIRE(invoke({"simulate", "--config", (dir / "run.cfg").string(), "--sweeps", "3", "--out-dir",
                    (dir / "o").string()})
                .code == 0);
    CHECK(trustgame::csv::read(dir / "o" / "timeseries.csv").rows.size() == 3);

    {
        std::ofstream cfg(dir / "bad.cfg");
        cfg << "colour = blue\n";
    }
    const auto r = invoke({"simulate", "--config", (dir / "bad.cfg").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("colour") != std::string::npos);
}
