// Command-line front end: simulation, closed-form analysis, policy
// selection, trade-off sweeps, and the online trace-driven loop. All seeded
// subcommands are byte-deterministic on stdout.
//
// Exit codes: 0 success, 1 ran but the QoS constraint is not met,
// 2 configuration/usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sleepsim/analytic.hpp"
#include "sleepsim/policy_manager.hpp"
#include "sleepsim/predictor.hpp"
#include "sleepsim/runtime_engine.hpp"
#include "sleepsim/serialize.hpp"
#include "sleepsim/sim_core.hpp"
#include "sleepsim/workload.hpp"

namespace {

using namespace sleepsim;

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitConfig = 2;

struct GlobalOpts {
    std::string power_table_path;
    std::string format = "json";
    unsigned jobs = 1;
    bool strict_latency = false;
};

PowerTable load_table(const GlobalOpts& g) {
    std::string path = g.power_table_path;
    if (path.empty()) {
        if (const char* env = std::getenv("SLEEPSIM_POWER_TABLE")) path = env;
    }
    PowerTable table = path.empty() ? PowerTable::builtin_default() : PowerTable::load_file(path);
    if (g.strict_latency) {
        table.sleep_catalog(1.0, LatencyCheck::Strict); // throws on out-of-range latencies
    } else {
        std::vector<std::string> warnings;
        table.sleep_catalog(1.0, LatencyCheck::Warn, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    }
    return table;
}

std::string canon_state_label(std::string_view s) {
    if (s == "C0i" || s == "C0iS0i") return "C0iS0i";
    if (s == "C1" || s == "C1S0i") return "C1S0i";
    if (s == "C3" || s == "C3S0i") return "C3S0i";
    if (s == "C6" || s == "C6S0i") return "C6S0i";
    if (s == "C6S3") return "C6S3";
    throw ConfigError("unknown sleep state '" + std::string(s) + "'");
}

Distribution parse_distribution(std::string_view spec, bool use_demands) {
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) throw ConfigError("bad distribution '" + std::string(spec) + "'");
    const auto kind = spec.substr(0, colon);
    const auto rest = spec.substr(colon + 1);
    if (kind == "exp") return Distribution::exponential_rate(parse_double(rest));
    if (kind == "expmean") return Distribution::exponential_mean(parse_double(rest));
    if (kind == "logn") {
        const auto parts = split(rest, ',');
        if (parts.size() != 2) throw ConfigError("lognormal needs 'logn:MEAN,CV'");
        return Distribution::lognormal(parse_double(parts[0]), parse_double(parts[1]));
    }
    if (kind == "emp") {
        const JobStream log = load_job_log(std::string(rest));
        if (log.empty()) throw ConfigError("empty job log '" + std::string(rest) + "'");
        std::vector<double> values;
        values.reserve(log.size());
        if (use_demands) {
            for (const auto& j : log.jobs) values.push_back(j.demand_s);
        } else {
            double prev = 0.0;
            for (const auto& j : log.jobs) {
                values.push_back(j.arrival_s - prev);
                prev = j.arrival_s;
            }
        }
        return Distribution::empirical(std::move(values));
    }
    throw ConfigError("unknown distribution kind '" + std::string(kind) + "'");
}

struct WorkloadOpts {
    std::string preset;
    std::string arrival;
    std::string service;
    double beta = 1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--preset", preset, "workload preset: dns | mail | google");
        cmd->add_option("--arrival", arrival, "inter-arrival spec: exp:RATE | expmean:S | logn:MEAN,CV | emp:FILE");
        cmd->add_option("--service", service, "service-demand spec, same forms as --arrival");
        cmd->add_option("--beta", beta, "CPU-bound fraction of service demand")->check(CLI::Range(0.0, 1.0));
    }

    std::pair<ArrivalSpec, ServiceSpec> resolve() const {
        ArrivalSpec arr = ArrivalSpec::exponential_mean(1.1);
        ServiceSpec svc = ServiceSpec::exponential_mean(0.194);
        if (!preset.empty()) {
            if (preset == "dns") {
                arr = ArrivalSpec::exponential_mean(1.1);
                svc = ServiceSpec::exponential_mean(0.194);
            } else if (preset == "mail") {
                arr = ArrivalSpec::lognormal(0.206, 1.9);
                svc = ServiceSpec::lognormal(0.092, 3.6);
            } else if (preset == "google") {
                arr = ArrivalSpec::exponential_mean(319e-6);
                svc = ServiceSpec::exponential_mean(4.2e-3);
            } else {
                throw ConfigError("unknown preset '" + preset + "'");
            }
        }
        if (!arrival.empty()) arr = ArrivalSpec{parse_distribution(arrival, false)};
        if (!service.empty()) svc.demand = parse_distribution(service, true);
        svc.cpu_bound_fraction = beta;
        return {arr, svc};
    }
};

/// "none", "C6S3", or comma-separated "LABEL@DELAY" entries, shallow first.
SleepSequence parse_sleep_spec(std::string_view spec, const PowerTable& table, double f) {
    if (spec.empty() || spec == "none") return SleepSequence{};
    const SleepCatalog cat = table.sleep_catalog(f);
    std::vector<SleepState> states;
    for (const auto entry : split(spec, ',')) {
        const auto at = entry.find('@');
        const auto label = canon_state_label(trim(entry.substr(0, at)));
        SleepState s = cat.at(label);
        s.entry_delay_s = at == std::string_view::npos ? 0.0 : parse_double(trim(entry.substr(at + 1)));
        states.push_back(std::move(s));
    }
    return SleepSequence(std::move(states));
}

UtilizationTrace resolve_trace(const std::string& trace_path, const std::string& synth) {
    if (!trace_path.empty() && !synth.empty()) throw ConfigError("give either --trace or --synth");
    if (!trace_path.empty()) return load_trace(trace_path);
    if (!synth.empty()) return synth_trace(parse_synth_spec(synth));
    throw ConfigError("a trace is required: --trace FILE or --synth SPEC");
}

PolicyGrid build_grid(const std::string& sleep_set, double rho, double mean_idle_gap, double beta,
                      double f_step) {
    if (sleep_set.empty() || sleep_set == "standard") {
        return PolicyGrid::standard(rho, mean_idle_gap, beta, f_step);
    }
    if (sleep_set == "singletons") return PolicyGrid::singletons(rho, beta, f_step);
    if (sleep_set == "none") return PolicyGrid::dvfs_only(rho, beta, f_step);
    return PolicyGrid::single_state(rho, canon_state_label(sleep_set), beta, f_step);
}

void emit(std::ostream& out, const std::string& format, const nlohmann::json& j,
          const std::string& csv_header, const std::string& csv_rows) {
    if (format == "json") {
        out << j.dump(2) << '\n';
    } else {
        out << csv_header << '\n' << csv_rows;
    }
}

int cmd_simulate(const GlobalOpts& g, const WorkloadOpts& wl, double freq,
                 const std::string& sleep_spec, std::size_t n, std::uint64_t seed,
                 std::optional<double> rho) {
    const PowerTable table = load_table(g);
    const auto [arr, svc] = wl.resolve();
    JobStream stream = generate(arr, svc, n, seed);
    if (rho) stream = rescale_to_utilization(stream, *rho);
    Policy policy{freq, parse_sleep_spec(sleep_spec, table, freq)};
    const SimResult result = simulate(policy, stream, table, svc.cpu_bound_fraction);
    if (result.stability_warning) {
        std::cerr << "warning: effective utilization >= 1, the queue is unstable\n";
    }
    emit(std::cout, g.format, sim_result_json(policy, result), sim_result_csv_header(),
         sim_result_csv_row(policy, result) + "\n");
    return kExitOk;
}

int cmd_analyze(const GlobalOpts& g, double lambda, double mu, double freq,
                const std::string& sleep_spec, std::optional<double> deadline) {
    const PowerTable table = load_table(g);
    analytic::MM1SleepParams params;
    params.lambda = lambda;
    params.mu = mu;
    params.f = freq;
    params.states = parse_sleep_spec(sleep_spec, table, freq);
    params.p_active = table.active_power(freq);
    const auto report = analytic::evaluate(params, deadline);
    const auto j = analytic_report_json(report);
    if (g.format == "json") {
        std::cout << j.dump(2) << '\n';
    } else {
        std::string header = "L,E_D,E_D2,E_R,E_P";
        std::string row = format_double(report.cycle_length) + ',' + format_double(report.setup_mean) +
                          ',' + format_double(report.setup_second_moment) + ',' +
                          format_double(report.mean_response_s) + ',' +
                          format_double(report.mean_power_w);
        if (report.tail) {
            header += ",tail";
            row += ',' + format_double(*report.tail);
        }
        std::cout << header << '\n' << row << '\n';
    }
    return kExitOk;
}

int cmd_frontier(const GlobalOpts& g, const WorkloadOpts& wl, std::size_t n, std::uint64_t seed,
                 double rho, const std::string& sleep_set, double f_step, const std::string& out_path) {
    const PowerTable table = load_table(g);
    const auto [arr, svc] = wl.resolve();
    JobStream stream = generate(arr, svc, n, seed);
    stream = rescale_to_utilization(stream, rho);
    const PolicyGrid grid =
        build_grid(sleep_set, rho, stream.mean_gap(), svc.cpu_bound_fraction, f_step);
    const auto points = frontier(grid, stream, table, g.jobs);
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty() && out_path != "-") {
        file.open(out_path);
        if (!file) throw ConfigError("cannot write '" + out_path + "'");
        out = &file;
    }
    *out << frontier_csv_header() << '\n';
    for (const auto& p : points) *out << frontier_csv_row(p) << '\n';
    return kExitOk;
}

int cmd_select(const GlobalOpts& g, const WorkloadOpts& wl, std::size_t n, std::uint64_t seed,
               double rho, double rho_b, const std::string& qos_mode, const std::string& budget,
               std::optional<double> deadline, double max_violation, const std::string& sleep_set,
               double f_step) {
    const PowerTable table = load_table(g);
    const auto [arr, svc] = wl.resolve();
    JobStream stream = generate(arr, svc, n, seed);
    stream = rescale_to_utilization(stream, rho);

    QoSConstraint qos = QoSConstraint::mean_budget(rho_b);
    if (qos_mode == "tail") {
        const double d = deadline ? *deadline
                                  : baseline_budget(rho_b, svc.rate(), QoSConstraint::Mode::Tail,
                                                    table, n, seed)
                                        .deadline_s;
        qos = QoSConstraint::tail(rho_b, d, max_violation);
    } else if (qos_mode != "mean") {
        throw ConfigError("--qos must be 'mean' or 'tail'");
    }
    if (!budget.empty()) {
        if (budget == "inf") {
            qos.budget = std::numeric_limits<double>::infinity();
        } else {
            qos.budget = parse_double(budget);
        }
    }

    const PolicyGrid grid =
        build_grid(sleep_set, rho, stream.mean_gap(), svc.cpu_bound_fraction, f_step);
    const PolicyChoice choice = select(grid, stream, table, qos, g.jobs);
    emit(std::cout, g.format, policy_choice_json(choice),
         sim_result_csv_header() + ",feasible,margin",
         sim_result_csv_row(choice.policy, choice.predicted) + ',' +
             (choice.feasible ? "1" : "0") + ',' + format_double(choice.margin) + "\n");
    return choice.feasible ? kExitOk : kExitInfeasible;
}

EpochConfig make_epoch_config(int T, double alpha, const std::string& predictor, double rho_b,
                              double f_step, double beta, std::size_t eval_jobs, unsigned jobs) {
    EpochConfig cfg;
    cfg.epoch_minutes = T;
    cfg.alpha = alpha;
    cfg.predictor = predictor_choice_from(predictor);
    cfg.qos = QoSConstraint::mean_budget(rho_b);
    cfg.f_step = f_step;
    cfg.beta = beta;
    cfg.eval_jobs = eval_jobs;
    cfg.parallelism = jobs;
    return cfg;
}

int cmd_run_trace(const GlobalOpts& g, const WorkloadOpts& wl, const std::string& trace_path,
                  const std::string& synth, int T, double alpha, const std::string& predictor,
                  double rho_b, const std::string& strategy, double f_step, std::size_t eval_jobs,
                  std::uint64_t seed) {
    const PowerTable table = load_table(g);
    const auto [arr, svc] = wl.resolve();
    const UtilizationTrace trace = resolve_trace(trace_path, synth);
    const EpochConfig cfg =
        make_epoch_config(T, alpha, predictor, rho_b, f_step, wl.beta, eval_jobs, g.jobs);
    const RunSummary summary = run(trace, arr, svc, cfg, StrategyId::parse(strategy), seed, table);

    if (g.format == "json") {
        nlohmann::json j = run_summary_json(summary);
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << epoch_csv_header() << '\n';
        for (const auto& rep : summary.epochs) std::cout << epoch_csv_row(rep) << '\n';
    }
    return summary.meets_budget ? kExitOk : kExitInfeasible;
}

int cmd_compare(const GlobalOpts& g, const WorkloadOpts& wl, const std::string& trace_path,
                const std::string& synth, int T, double alpha, const std::string& predictor,
                double rho_b, const std::string& strategies_csv, double f_step,
                std::size_t eval_jobs, std::uint64_t seed) {
    const PowerTable table = load_table(g);
    const auto [arr, svc] = wl.resolve();
    const UtilizationTrace trace = resolve_trace(trace_path, synth);
    const EpochConfig cfg =
        make_epoch_config(T, alpha, predictor, rho_b, f_step, wl.beta, eval_jobs, g.jobs);
    std::vector<StrategyId> strategies;
    for (const auto tok : split(strategies_csv, ',')) strategies.push_back(StrategyId::parse(trim(tok)));
    if (strategies.empty()) throw ConfigError("--strategies must list at least one strategy");
    const ComparisonReport report = compare(trace, arr, svc, cfg, strategies, seed, table);

    if (g.format == "json") {
        std::cout << comparison_json(report).dump(2) << '\n';
    } else {
        std::cout << "strategy,mean_power_w,norm_mean_response,meets_budget\n";
        for (const auto& s : report.entries) {
            std::cout << s.strategy.name() << ',' << format_double(s.mean_power_w) << ','
                      << format_double(s.norm_mean_response) << ',' << (s.meets_budget ? "1" : "0")
                      << '\n';
        }
    }
    return kExitOk;
}

int cmd_predict_eval(const GlobalOpts& g, const std::string& trace_path, const std::string& synth,
                     const std::string& predictor, std::size_t hist, double step) {
    const UtilizationTrace trace = resolve_trace(trace_path, synth);
    const PredictorChoice choice = predictor_choice_from(predictor);
    if (choice == PredictorChoice::Offline) throw ConfigError("predict-eval needs an online predictor");
    PredictorParams params;
    params.hist = hist;
    params.step = step;
    const PredictorKind kind = choice == PredictorChoice::Naive
                                   ? PredictorKind::Naive
                                   : (choice == PredictorChoice::Lms ? PredictorKind::Lms
                                                                     : PredictorKind::LmsCusum);
    const auto records = run_series(kind, trace, params);
    if (g.format == "json") {
        nlohmann::json j;
        j["mae"] = mean_absolute_error(records);
        j["records"] = nlohmann::json::array();
        for (const auto& r : records) {
            j["records"].push_back({{"minute", r.minute},
                                    {"predicted", r.predicted},
                                    {"actual", r.actual},
                                    {"error", r.error},
                                    {"reset", r.reset}});
        }
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << prediction_csv_header() << '\n';
        for (const auto& r : records) std::cout << prediction_csv_row(r) << '\n';
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-server DVFS + sleep-state policy simulator"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--power-table", g.power_table_path,
                   "power table config (default: built-in Xeon table, or $SLEEPSIM_POWER_TABLE)");
    app.add_option("--format", g.format, "output format: json | csv")
        ->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--jobs", g.jobs, "max worker threads for policy sweeps")
        ->check(CLI::Range(1u, 256u));
    app.add_flag("--strict-latency", g.strict_latency,
                 "treat out-of-range wake-up latencies as errors instead of warnings");

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate one policy against a generated workload");
    WorkloadOpts sim_wl;
    sim_wl.attach(sim);
    double sim_freq = 1.0;
    std::string sim_sleep = "none";
    std::size_t sim_n = 10000;
    std::uint64_t sim_seed = 1;
    double sim_rho = -1.0;
    sim->add_option("--freq", sim_freq, "DVFS frequency factor")->required();
    sim->add_option("--sleep", sim_sleep, "sleep cascade, e.g. 'C6S3' or 'C0iS0i@0,C6S3@2.5' or 'none'");
    sim->add_option("-n,--num-jobs", sim_n, "number of jobs")->check(CLI::PositiveNumber);
    sim->add_option("--seed", sim_seed, "PRNG seed");
    sim->add_option("--rho", sim_rho, "rescale the generated stream to this utilization");

    // analyze
    auto* ana = app.add_subcommand("analyze", "closed-form metrics for the exponential model");
    double ana_lambda = 0, ana_mu = 0, ana_freq = 1.0;
    std::string ana_sleep = "C6S3";
    double ana_deadline = -1.0;
    ana->add_option("--lambda", ana_lambda, "arrival rate, jobs/s")->required();
    ana->add_option("--mu", ana_mu, "service rate at f=1, jobs/s")->required();
    ana->add_option("--freq", ana_freq, "DVFS frequency factor");
    ana->add_option("--sleep", ana_sleep, "sleep cascade spec");
    ana->add_option("--deadline", ana_deadline, "also report Pr(R >= deadline)");

    // frontier
    auto* fro = app.add_subcommand("frontier", "power/response sweep across the policy grid (CSV)");
    WorkloadOpts fro_wl;
    fro_wl.attach(fro);
    std::size_t fro_n = 10000;
    std::uint64_t fro_seed = 1;
    double fro_rho = 0.1, fro_step = 0.01;
    std::string fro_set = "standard", fro_out;
    fro->add_option("--rho", fro_rho, "target utilization")->required();
    fro->add_option("-n,--num-jobs", fro_n, "jobs per policy evaluation")->check(CLI::PositiveNumber);
    fro->add_option("--seed", fro_seed, "PRNG seed");
    fro->add_option("--f-step", fro_step, "frequency grid step");
    fro->add_option("--sleep-set", fro_set, "standard | singletons | none | <state label>");
    fro->add_option("-o,--out", fro_out, "output file (default stdout)");

    // select
    auto* sel = app.add_subcommand("select", "pick the minimum-power policy meeting the QoS budget");
    WorkloadOpts sel_wl;
    sel_wl.attach(sel);
    std::size_t sel_n = 10000;
    std::uint64_t sel_seed = 1;
    double sel_rho = 0.1, sel_rho_b = 0.8, sel_step = 0.01, sel_maxviol = 0.05;
    std::string sel_qos = "mean", sel_budget, sel_set = "standard";
    double sel_deadline = -1.0;
    sel->add_option("--rho", sel_rho, "workload utilization")->required();
    sel->add_option("--rho-b", sel_rho_b, "design (baseline) utilization");
    sel->add_option("--qos", sel_qos, "constraint mode: mean | tail");
    sel->add_option("--budget", sel_budget, "override normalized response budget ('inf' allowed)");
    sel->add_option("--deadline", sel_deadline, "tail deadline in seconds");
    sel->add_option("--max-violation", sel_maxviol, "tail violation probability cap");
    sel->add_option("-n,--num-jobs", sel_n, "jobs per policy evaluation")->check(CLI::PositiveNumber);
    sel->add_option("--seed", sel_seed, "PRNG seed");
    sel->add_option("--f-step", sel_step, "frequency grid step");
    sel->add_option("--sleep-set", sel_set, "standard | singletons | none | <state label>");

    // run-trace
    auto* rt = app.add_subcommand("run-trace", "run the online loop over a utilization trace");
    WorkloadOpts rt_wl;
    rt_wl.attach(rt);
    std::string rt_trace, rt_synth, rt_pred = "lms_cusum", rt_strategy = "SS";
    int rt_T = 5;
    double rt_alpha = 0.0, rt_rho_b = 0.8, rt_step = 0.01;
    std::size_t rt_eval = 10000;
    std::uint64_t rt_seed = 1;
    rt->add_option("--trace", rt_trace, "utilization trace CSV (minute,rho)");
    rt->add_option("--synth", rt_synth, "synthetic trace spec, e.g. 'sin:low=0.1,high=0.9,period=1440'");
    rt->add_option("--T", rt_T, "epoch length in minutes")->check(CLI::PositiveNumber);
    rt->add_option("--alpha", rt_alpha, "over-provisioning factor");
    rt->add_option("--predictor", rt_pred, "naive | lms | lms_cusum | offline");
    rt->add_option("--rho-b", rt_rho_b, "design utilization for the QoS budget");
    rt->add_option("--strategy", rt_strategy, "SS | SS:<state> | DVFS | R2H:<state>");
    rt->add_option("--f-step", rt_step, "frequency grid step");
    rt->add_option("--eval-jobs", rt_eval, "policy evaluation job budget")->check(CLI::PositiveNumber);
    rt->add_option("--seed", rt_seed, "PRNG seed");

    // compare
    auto* cmp = app.add_subcommand("compare", "run several strategies on identical job realizations");
    WorkloadOpts cmp_wl;
    cmp_wl.attach(cmp);
    std::string cmp_trace, cmp_synth, cmp_pred = "lms_cusum", cmp_strategies = "SS,R2H:C3,DVFS";
    int cmp_T = 5;
    double cmp_alpha = 0.0, cmp_rho_b = 0.8, cmp_step = 0.01;
    std::size_t cmp_eval = 10000;
    std::uint64_t cmp_seed = 1;
    cmp->add_option("--trace", cmp_trace, "utilization trace CSV");
    cmp->add_option("--synth", cmp_synth, "synthetic trace spec");
    cmp->add_option("--T", cmp_T, "epoch length in minutes")->check(CLI::PositiveNumber);
    cmp->add_option("--alpha", cmp_alpha, "over-provisioning factor");
    cmp->add_option("--predictor", cmp_pred, "naive | lms | lms_cusum | offline");
    cmp->add_option("--rho-b", cmp_rho_b, "design utilization");
    cmp->add_option("--strategies", cmp_strategies, "comma list, e.g. SS,SS:C3,DVFS,R2H:C3,R2H:C6");
    cmp->add_option("--f-step", cmp_step, "frequency grid step");
    cmp->add_option("--eval-jobs", cmp_eval, "policy evaluation job budget")->check(CLI::PositiveNumber);
    cmp->add_option("--seed", cmp_seed, "PRNG seed");

    // predict-eval
    auto* pe = app.add_subcommand("predict-eval", "score a utilization predictor over a trace");
    std::string pe_trace, pe_synth, pe_pred = "lms_cusum";
    std::size_t pe_hist = 10;
    double pe_step = 0.5;
    pe->add_option("--trace", pe_trace, "utilization trace CSV");
    pe->add_option("--synth", pe_synth, "synthetic trace spec");
    pe->add_option("--predictor", pe_pred, "naive | lms | lms_cusum");
    pe->add_option("--hist", pe_hist, "maximum history depth")->check(CLI::PositiveNumber);
    pe->add_option("--step", pe_step, "LMS adaptation rate");

    // Let global options (--format, --jobs, ...) appear after the
    // subcommand as well.
    for (auto* sub : app.get_subcommands(static_cast<const CLI::App*>(nullptr))) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (sim->parsed()) {
            return cmd_simulate(g, sim_wl, sim_freq, sim_sleep, sim_n, sim_seed,
                                sim_rho > 0 ? std::optional<double>(sim_rho) : std::nullopt);
        }
        if (ana->parsed()) {
            return cmd_analyze(g, ana_lambda, ana_mu, ana_freq, ana_sleep,
                               ana_deadline >= 0 ? std::optional<double>(ana_deadline) : std::nullopt);
        }
        if (fro->parsed()) {
            return cmd_frontier(g, fro_wl, fro_n, fro_seed, fro_rho, fro_set, fro_step, fro_out);
        }
        if (sel->parsed()) {
            return cmd_select(g, sel_wl, sel_n, sel_seed, sel_rho, sel_rho_b, sel_qos, sel_budget,
                              sel_deadline >= 0 ? std::optional<double>(sel_deadline) : std::nullopt,
                              sel_maxviol, sel_set, sel_step);
        }
        if (rt->parsed()) {
            return cmd_run_trace(g, rt_wl, rt_trace, rt_synth, rt_T, rt_alpha, rt_pred, rt_rho_b,
                                 rt_strategy, rt_step, rt_eval, rt_seed);
        }
        if (cmp->parsed()) {
            return cmd_compare(g, cmp_wl, cmp_trace, cmp_synth, cmp_T, cmp_alpha, cmp_pred,
                               cmp_rho_b, cmp_strategies, cmp_step, cmp_eval, cmp_seed);
        }
        if (pe->parsed()) {
            return cmd_predict_eval(g, pe_trace, pe_synth, pe_pred, pe_hist, pe_step);
        }
    } catch (const Unstable& e) {
        std::cerr << "error: unstable: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
