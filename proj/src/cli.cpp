#include "trustgame/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "trustgame/analysis.hpp"
#include "trustgame/csv.hpp"
#include "trustgame/engine.hpp"
#include "trustgame/error.hpp"
#include "trustgame/master_eq.hpp"
#include "trustgame/stability.hpp"

namespace trustgame::cli {

namespace fs = std::filesystem;

namespace {

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Parses a flat `key = value` file. Blank lines and lines starting with
/// '#' are skipped.
std::vector<std::pair<std::string, std::string>> read_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(fmt::format("cannot open config file {}", path.string()));
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    for (int line_no = 1; std::getline(in, line); ++line_no) {
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError(fmt::format("{}:{}: expected 'key = value'", path.string(), line_no));
        out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return out;
}

struct SimFlags {
    SimParams p;
    std::string init = "uniform";
};

void add_sim_flags(CLI::App* sub, SimFlags& f, bool single_K_a) {
    sub->add_option("--N", f.p.N, "number of agents")->capture_default_str();
    if (single_K_a) {
        sub->add_option("--K", f.p.K, "rewarders per donator")->capture_default_str();
        sub->add_option("--a", f.p.a, "rewarder-update probability")->capture_default_str();
    }
    sub->add_option("--r", f.p.r, "noise probability per elementary update")->capture_default_str();
    sub->add_option("--seed", f.p.seed, "random seed")->capture_default_str();
    sub->add_option("--sweeps", f.p.measure_sweeps, "measured sweeps (1 sweep = N updates)")->capture_default_str();
    sub->add_option("--burn-in", f.p.burn_in_sweeps, "sweeps discarded before measuring")->capture_default_str();
    sub->add_option("--record-every", f.p.record_every_sweeps, "sweeps between recorded samples")
        ->capture_default_str();
    sub->add_option("--init", f.init, "initial w: uniform | ones")->capture_default_str();
}

void finish_sim_flags(SimFlags& f) {
    if (f.init == "uniform")
        f.p.init = InitialCondition::uniform;
    else if (f.init == "ones")
        f.p.init = InitialCondition::all_ones;
    else
        throw ValidationError(fmt::format("--init must be 'uniform' or 'ones' (got '{}')", f.init));
    try {
        f.p.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("--") + e.what());
    }
}

void write_timeseries(const fs::path& path, const TimeSeries& ts) {
    std::vector<std::string> rows;
    rows.reserve(ts.values.size());
    for (std::size_t n = 0; n < ts.values.size(); ++n) {
        const std::int64_t sweep = ts.start_sweep + static_cast<std::int64_t>(n + 1) * ts.sample_period_sweeps;
        rows.push_back(fmt::format("{},{}", sweep, csv::real(ts.values[n])));
    }
    csv::write(path, "sweep,mean_w", rows);
}

void write_degree_hist(const fs::path& path, const DegreeHistogram& h) {
    std::vector<std::string> rows;
    for (std::size_t k = 0; k < h.counts.size(); ++k)
        rows.push_back(fmt::format("{},{},{}", k, h.counts[k], h.n_snapshots));
    csv::write(path, "k,count,n_snapshots", rows);
}

double parse_real(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(fmt::format("{}: not a number: '{}'", what, s));
    }
}

std::string format_time_tag(double t) { return fmt::format("{}", t); }

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Agent-based simulator and numerical toolkit for the donator/rewarder trust game", "trustgame"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::string config_path;
    std::string out_dir = ".";
    bool progress = false;

    // simulate
    SimFlags sim;
    auto* simulate = app.add_subcommand("simulate", "one run -> timeseries.csv, degree_hist.csv");
    add_sim_flags(simulate, sim, true);

    // sweep
    SimFlags sw;
    sw.p.measure_sweeps = 10000;
    std::vector<std::int64_t> sweep_K{1};
    std::vector<double> sweep_a{0.1};
    std::int64_t replicates = 1;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    auto* sweep_cmd = app.add_subcommand("sweep", "grid of runs -> sweep.csv");
    add_sim_flags(sweep_cmd, sw, false);
    sweep_cmd->add_option("--K", sweep_K, "comma-separated K values")->delimiter(',');
    sweep_cmd->add_option("--a", sweep_a, "comma-separated a values")->delimiter(',');
    sweep_cmd->add_option("--replicates", replicates, "independent seeds per (K, a)")->capture_default_str();
    sweep_cmd->add_option("--workers", workers, "parallel runs (default: hardware threads)");

    // critical-a
    std::vector<std::int64_t> crit_K{1};
    double crit_tol = 1e-6;
    auto* critical = app.add_subcommand("critical-a", "critical update rate -> critical_a.csv");
    critical->add_option("--K", crit_K, "comma-separated K values")->delimiter(',');
    critical->add_option("--tol", crit_tol, "bisection tolerance")->capture_default_str();

    // master-eq
    std::int64_t me_K = 1, me_Nw = 64, me_kmax = 0;
    double me_a = 0.7, me_dt = 0.1, me_T = 1000.0, me_sample = 1.0, me_eps = 1e-6, me_mutation = 0.0;
    std::string me_init = "uniform";
    std::int64_t me_resident = -1, me_invader = 0;
    std::vector<double> me_snapshots;
    auto* master = app.add_subcommand("master-eq", "integrate P(k,w) -> master_traj.csv, P_t<t>.csv");
    master->add_option("--K", me_K, "mean in-degree")->capture_default_str();
    master->add_option("--a", me_a, "rewarder-update probability")->capture_default_str();
    master->add_option("--Nw", me_Nw, "number of w values")->capture_default_str();
    master->add_option("--k-max", me_kmax, "in-degree truncation (default K + 12 sqrt(K) + 40)");
    master->add_option("--dt", me_dt, "time step")->capture_default_str();
    master->add_option("--T", me_T, "integration horizon")->capture_default_str();
    master->add_option("--sample-every", me_sample, "spacing of <w> samples")->capture_default_str();
    master->add_option("--snapshots", me_snapshots, "comma-separated snapshot times")->delimiter(',');
    master->add_option("--init", me_init, "uniform | perturbed")->capture_default_str();
    master->add_option("--resident", me_resident, "resident w column for --init perturbed (default: top)");
    master->add_option("--invader", me_invader, "invader w column for --init perturbed")->capture_default_str();
    master->add_option("--eps", me_eps, "invader mass for --init perturbed")->capture_default_str();
    master->add_option("--mutation", me_mutation, "optional mutation rate (0 = verbatim equations)")
        ->capture_default_str();

    // analyze
    std::string in_dir = ".";
    std::string ts_path, hist_path;
    std::int64_t segment_length = 0;
    std::int64_t k_min_override = 0;
    std::vector<double> low_band, high_band;
    auto* analyze = app.add_subcommand("analyze", "timeseries.csv (+ degree_hist.csv) -> spectrum.csv, fit.csv");
    analyze->add_option("--in-dir", in_dir, "directory holding timeseries.csv and degree_hist.csv")
        ->capture_default_str();
    analyze->add_option("--timeseries", ts_path, "explicit timeseries.csv path");
    analyze->add_option("--degree-hist", hist_path, "explicit degree_hist.csv path");
    analyze->add_option("--segment-length", segment_length, "Welch segment length (power of two, default 4096)");
    analyze->add_option("--k-min", k_min_override, "tail fit lower cutoff (default: CCDF 10x Poisson rule)");
    analyze->add_option("--low-band", low_band, "f_min,f_max of the low-frequency fit band")->delimiter(',')->expected(2);
    analyze->add_option("--high-band", high_band, "f_min,f_max of the high-frequency fit band")
        ->delimiter(',')
        ->expected(2);

    for (auto* sub : {simulate, sweep_cmd, critical, master, analyze}) {
        sub->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
        sub->add_option("--config", config_path, "flat 'key = value' file; flags given on the command line win");
        sub->add_flag("--progress", progress, "plain-text progress counter on standard error");
    }

    try {
        // Merge the config file: its keys become flags unless the command line already has them.
        std::vector<std::string> args = raw_args;
        if (!args.empty()) {
            CLI::App* sub = nullptr;
            for (auto* s : app.get_subcommands({})) {
                if (s->get_name() == args.front()) sub = s;
            }
            const auto it = std::find(args.begin(), args.end(), "--config");
            if (sub != nullptr && it != args.end() && std::next(it) != args.end()) {
                std::set<std::string> given;
                for (const auto& a : args)
                    if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));
                for (const auto& [key, value] : read_config(*std::next(it))) {
                    const std::string flag = "--" + key;
                    if (key == "config" || sub->get_option_no_throw(flag) == nullptr)
                        throw ValidationError(fmt::format("unknown config key '{}'", key));
                    if (given.count(flag)) continue;
                    args.push_back(flag);
                    args.push_back(value);
                }
            }
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << one_line(e.what()) << '\n';
        return kValidation;
    } catch (const ValidationError& e) {
        err << "error: " << one_line(e.what()) << '\n';
        return kValidation;
    }

    const fs::path dir(out_dir);
    try {
        if (*simulate) {
            finish_sim_flags(sim);
            SweepCallback cb;
            if (progress)
                cb = [&err](std::int64_t done, std::int64_t total) {
                    if (done % 100 == 0 || done == total) err << "sweep " << done << '/' << total << '\n';
                };
            const RunResult res = trustgame::run(sim.p, cb);
            write_timeseries(dir / "timeseries.csv", res.series);
            write_degree_hist(dir / "degree_hist.csv", res.degrees);
            out << fmt::format("mean_w={} var_w={}\n", csv::real(res.mean_w), csv::real(res.variance_w));
        } else if (*sweep_cmd) {
            finish_sim_flags(sw);
            if (sweep_K.empty() || sweep_a.empty()) throw ValidationError("--K and --a need at least one value");
            for (const auto K : sweep_K) {
                SimParams probe = sw.p;
                probe.K = K;
                try {
                    probe.validate();
                } catch (const ValidationError& e) {
                    throw ValidationError(std::string("--") + e.what());
                }
            }
            for (const double a : sweep_a)
                if (!(a >= 0.0 && a <= 1.0)) throw ValidationError(fmt::format("--a must lie in [0,1] (got {})", a));
            if (replicates < 1) throw ValidationError("--replicates must be >= 1");
            if (workers < 1) throw ValidationError("--workers must be >= 1");
            std::function<void(std::size_t, std::size_t)> cb;
            if (progress) cb = [&err](std::size_t done, std::size_t total) { err << "cell " << done << '/' << total << '\n'; };
            const auto rows = trustgame::sweep(sw.p, sweep_K, sweep_a, replicates, workers, cb);
            std::vector<std::string> lines;
            bool failed = false;
            for (const auto& row : rows) {
                if (!row.ok()) {
                    failed = true;
                    err << fmt::format("error: cell K={} a={} seed={}: {}\n", row.K, csv::real(row.a), row.seed,
                                       one_line(row.error));
                    lines.push_back(fmt::format("{},{},{},nan,nan", row.K, csv::real(row.a), row.seed));
                } else {
                    lines.push_back(fmt::format("{},{},{},{},{}", row.K, csv::real(row.a), row.seed,
                                                csv::real(row.mean_w), csv::real(row.variance_w)));
                }
            }
            csv::write(dir / "sweep.csv", "K,a,seed,mean_w,var_w", lines);
            if (failed) return kRuntime;
        } else if (*critical) {
            if (crit_K.empty()) throw ValidationError("--K needs at least one value");
            for (const auto K : crit_K)
                if (K < 1) throw ValidationError(fmt::format("--K must be >= 1 (got {})", K));
            if (!(crit_tol > 0.0)) throw ValidationError(fmt::format("--tol must be > 0 (got {})", crit_tol));
            std::vector<std::string> lines;
            for (const auto K : crit_K) {
                const auto cp = stability::find_critical_a(K, crit_tol);
                lines.push_back(fmt::format("{},{},{},{}", cp.K, csv::real(cp.a_c), cp.k_max, csv::real(cp.tol)));
                if (progress) err << "K=" << K << " done\n";
            }
            csv::write(dir / "critical_a.csv", "K,a_c,k_max,tol", lines);
        } else if (*master) {
            if (me_K < 1) throw ValidationError(fmt::format("--K must be >= 1 (got {})", me_K));
            if (me_Nw < 2) throw ValidationError(fmt::format("--Nw must be >= 2 (got {})", me_Nw));
            if (!(me_a >= 0.0 && me_a <= 1.0)) throw ValidationError(fmt::format("--a must lie in [0,1] (got {})", me_a));
            if (!(me_dt > 0.0)) throw ValidationError(fmt::format("--dt must be > 0 (got {})", me_dt));
            if (!(me_T >= 0.0)) throw ValidationError(fmt::format("--T must be >= 0 (got {})", me_T));
            if (!(me_sample > 0.0)) throw ValidationError("--sample-every must be > 0");
            if (!(me_mutation >= 0.0)) throw ValidationError("--mutation must be >= 0");
            const std::int64_t k_max = me_kmax > 0 ? me_kmax : master_eq::default_k_max(me_K);
            if (k_max < me_K) throw ValidationError(fmt::format("--k-max must be >= K (got {})", k_max));

            master_eq::DistributionGrid start;
            if (me_init == "uniform") {
                start = master_eq::uniform_poisson(me_K, k_max, me_Nw);
            } else if (me_init == "perturbed") {
                const std::int64_t resident = me_resident >= 0 ? me_resident : me_Nw - 1;
                if (resident >= me_Nw) throw ValidationError("--resident outside 0..Nw-1");
                if (me_invader < 0 || me_invader >= me_Nw || me_invader == resident)
                    throw ValidationError("--invader must be a column in 0..Nw-1 other than the resident");
                if (!(me_eps > 0.0 && me_eps < 1.0)) throw ValidationError("--eps must lie in (0,1)");
                start = master_eq::perturbed_resident(me_K, k_max, me_Nw, resident, me_invader, me_eps);
            } else {
                throw ValidationError(fmt::format("--init must be 'uniform' or 'perturbed' (got '{}')", me_init));
            }

            master_eq::IntegrateOptions opt;
            opt.a = me_a;
            opt.dt = me_dt;
            opt.T = me_T;
            opt.sample_every = me_sample;
            opt.snapshot_times = me_snapshots;
            opt.mutation = me_mutation;
            const auto traj = master_eq::integrate(start, opt);

            std::vector<std::string> lines;
            for (std::size_t n = 0; n < traj.t.size(); ++n)
                lines.push_back(fmt::format("{},{}", csv::real(traj.t[n]), csv::real(traj.mean_w[n])));
            csv::write(dir / "master_traj.csv", "t,mean_w", lines);
            for (const auto& snap : traj.snapshots)
                master_eq::write_grid_csv(dir / fmt::format("P_t{}.csv", format_time_tag(snap.t)), snap.grid);
            out << fmt::format("steps={} dt_internal={} max_clipped={}\n", traj.steps, csv::real(traj.dt_used),
                               csv::real(traj.max_clipped));
        } else if (*analyze) {
            const fs::path ts_file = ts_path.empty() ? fs::path(in_dir) / "timeseries.csv" : fs::path(ts_path);
            const auto table = csv::read(ts_file);
            const auto c_sweep = table.column("sweep");
            const auto c_w = table.column("mean_w");
            std::vector<double> series;
            std::vector<double> sweeps;
            for (const auto& row : table.rows) {
                sweeps.push_back(parse_real(row[c_sweep], ts_file.string()));
                series.push_back(parse_real(row[c_w], ts_file.string()));
            }
            if (series.size() < 4) throw ValidationError(fmt::format("{}: too few samples", ts_file.string()));
            const double period = sweeps[1] - sweeps[0];
            if (!(period > 0.0)) throw ValidationError(fmt::format("{}: sweep column not increasing", ts_file.string()));

            std::int64_t seg = segment_length;
            if (seg == 0) {
                seg = 4096;
                while (seg > 2 && 2 * seg > static_cast<std::int64_t>(series.size())) seg /= 2;
            }
            const auto spec = analysis::psd(series, seg, period);
            std::vector<std::string> lines;
            for (std::size_t b = 0; b < spec.frequencies.size(); ++b)
                lines.push_back(fmt::format("{},{}", csv::real(spec.frequencies[b]), csv::real(spec.power[b])));
            csv::write(dir / "spectrum.csv", "f,power", lines);

            const double length = static_cast<double>(series.size()) * period;
            const auto low = low_band.size() == 2 ? analysis::FitBand{low_band[0], low_band[1]}
                                                  : analysis::default_low_band(length);
            const auto high = high_band.size() == 2 ? analysis::FitBand{high_band[0], high_band[1]}
                                                    : analysis::default_high_band();
            auto slope_or_nan = [&](const analysis::FitBand& band, const char* name) {
                try {
                    return analysis::loglog_slope(spec, band.f_min, band.f_max);
                } catch (const ValidationError& e) {
                    err << "warning: " << name << ": " << one_line(e.what()) << '\n';
                    return std::nan("");
                }
            };
            std::vector<std::string> fit;
            fit.push_back("alpha_low," + csv::real(slope_or_nan(low, "alpha_low")));
            fit.push_back("alpha_high," + csv::real(slope_or_nan(high, "alpha_high")));

            const fs::path hist_file = hist_path.empty() ? fs::path(in_dir) / "degree_hist.csv" : fs::path(hist_path);
            double tail = std::nan("");
            std::int64_t k_min = -1;
            std::string method = "none";
            if (fs::exists(hist_file)) {
                const auto h = csv::read(hist_file);
                const auto c_k = h.column("k");
                const auto c_count = h.column("count");
                std::vector<std::int64_t> counts;
                for (const auto& row : h.rows) {
                    const auto k = static_cast<std::int64_t>(parse_real(row[c_k], hist_file.string()));
                    const auto c = static_cast<std::int64_t>(parse_real(row[c_count], hist_file.string()));
                    if (k < 0 || c < 0) throw ValidationError(fmt::format("{}: negative k or count", hist_file.string()));
                    if (static_cast<std::size_t>(k) >= counts.size()) counts.resize(static_cast<std::size_t>(k) + 1, 0);
                    counts[static_cast<std::size_t>(k)] += c;
                }
                double total = 0.0, edges = 0.0;
                for (std::size_t k = 0; k < counts.size(); ++k) {
                    total += static_cast<double>(counts[k]);
                    edges += static_cast<double>(k) * static_cast<double>(counts[k]);
                }
                const double mean_k = total > 0.0 ? edges / total : 0.0;
                k_min = k_min_override > 0 ? k_min_override : analysis::select_tail_kmin(counts, mean_k);
                if (k_min > 0) {
                    try {
                        const auto tf = analysis::powerlaw_tail_exponent(counts, k_min);
                        tail = tf.exponent;
                        method = tf.method;
                    } catch (const ValidationError& e) {
                        err << "warning: tail_exponent: " << one_line(e.what()) << '\n';
                    }
                } else {
                    err << "warning: tail_exponent: no k where the CCDF exceeds 10x Poisson\n";
                }
            }
            fit.push_back("tail_exponent," + csv::real(tail));
            fit.push_back(fmt::format("k_min,{}", k_min));
            fit.push_back("tail_method," + method);
            fit.push_back("segment_length," + std::to_string(seg));
            csv::write(dir / "fit.csv", "quantity,value", fit);
        }
    } catch (const ValidationError& e) {
        err << "error: " << one_line(e.what()) << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err << "error: " << one_line(e.what()) << '\n';
        return kRuntime;
    }
    return kOk;
}

}  // namespace trustgame::cli
