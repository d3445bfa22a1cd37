#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hybridyn/ensemble.hpp"
#include "hybridyn/io.hpp"

namespace {

constexpr const char* kVersion = "hybridyn 0.1.0";

using namespace hybridyn;

std::vector<Observable> default_observables(int dim) {
    if (dim != 2) return {};
    return {{"sx", pauli_x()}, {"sy", pauli_y()}, {"sz", pauli_z()}};
}

int resolve_workers(const io::RunConfig& cfg) {
    if (cfg.workers > 0) return cfg.workers;
    if (const char* env = std::getenv("HYBRIDYN_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    return 0;  // library default: available parallelism
}

struct CommonArgs {
    std::string config_path;
    io::RunConfig cfg;

    // flag-provided values (applied over the config file)
    std::string scenario;
    std::vector<std::string> params;
    double dt = 0, T = 0, z0_mean = 0, z0_std = 0, theta = 0, pde_dt = 0;
    int n_traj = 0, n_cells = 0, workers = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir, rho0;
    std::vector<double> snapshots, grid;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "JSON config file (flags override)");
        app->add_option("--scenario", scenario, "registry scenario name");
        app->add_option("--param", params, "scenario parameter NAME=VALUE (repeatable)");
        app->add_option("--dt", dt, "time step");
        app->add_option("--T", T, "horizon");
        app->add_option("--n-traj", n_traj, "number of trajectories");
        app->add_option("--seed", seed, "master seed")->each([this](const std::string&) {
            seed_set = true;
        });
        app->add_option("--out", out_dir, "output directory");
        app->add_option("--snapshots", snapshots, "snapshot times")->delimiter(',');
        app->add_option("--rho0", rho0, "initial state: plus|ground|mixed|tilted");
        app->add_option("--theta", theta, "tilt angle for rho0=tilted");
        app->add_option("--z0-mean", z0_mean, "initial classical mean");
        app->add_option("--z0-std", z0_std, "initial classical spread");
        app->add_option("--grid", grid, "PDE grid z_min,z_max,n_cells")->delimiter(',');
        app->add_option("--pde-dt", pde_dt, "PDE step (0 = stability bound)");
        app->add_option("--workers", workers, "worker count (0 = available parallelism)");
    }

    void resolve(const CLI::App* app) {
        if (!config_path.empty()) cfg = io::load_config(config_path);
        auto given = [&](const char* name) { return app->count(name) > 0; };
        if (given("--scenario")) cfg.scenario = scenario;
        for (const auto& kv : params) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw CLI::ValidationError("--param", "expected NAME=VALUE");
            cfg.parameters[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        }
        if (given("--dt")) cfg.dt = dt;
        if (given("--T")) cfg.T = T;
        if (given("--n-traj")) cfg.n_traj = n_traj;
        if (seed_set) cfg.seed = seed;
        if (given("--out")) cfg.output_dir = out_dir;
        if (given("--snapshots")) cfg.snapshot_times = snapshots;
        if (given("--rho0")) cfg.rho0 = rho0;
        if (given("--theta")) cfg.rho0_theta = theta;
        if (given("--z0-mean")) cfg.z0_mean = z0_mean;
        if (given("--z0-std")) cfg.z0_std = z0_std;
        if (given("--grid")) {
            if (grid.size() != 3) throw CLI::ValidationError("--grid", "expected zmin,zmax,n");
            cfg.z_min = grid[0];
            cfg.z_max = grid[1];
            cfg.n_cells = int(grid[2]);
        }
        if (given("--pde-dt")) cfg.pde_dt = pde_dt;
        if (given("--workers")) cfg.workers = workers;
        std::filesystem::create_directories(cfg.output_dir);
    }

    std::string out(const std::string& name) const { return cfg.output_dir + "/" + name; }

    HybridModel model() const { return build_scenario({cfg.scenario, cfg.parameters}); }

    EnsembleSpec ensemble_spec(const HybridModel& m) const {
        EnsembleSpec spec;
        spec.model = m;
        spec.mode = m.has_feedback() ? StepMode::markovian_feedback : StepMode::hybrid;
        spec.n_traj = cfg.n_traj;
        spec.dt = cfg.dt;
        spec.T = cfg.T;
        spec.master_seed = cfg.seed;
        spec.rho0 = io::initial_state(cfg, m.hilbert_dim);
        spec.z0_mean = RealVector::Constant(m.classical_dim, cfg.z0_mean);
        spec.z0_std = RealVector::Constant(m.classical_dim, cfg.z0_std);
        spec.snapshot_times = cfg.snapshot_times;
        if (spec.snapshot_times.empty())
            spec.snapshot_times = {0.25 * cfg.T, 0.5 * cfg.T, cfg.T};
        spec.observables = default_observables(m.hilbert_dim);
        if (m.classical_dim == 1) {
            const int nbins = std::min(cfg.n_cells, 60);
            for (int i = 0; i <= nbins; ++i)
                spec.histogram_edges.push_back(cfg.z_min +
                                               (cfg.z_max - cfg.z_min) * i / nbins);
        }
        return spec;
    }

    void write_manifest(const std::string& subcommand) const {
        io::write_text(out("manifest.json"), io::manifest_json(cfg, subcommand, kVersion));
    }
};

int cmd_simulate(CommonArgs& args) {
    const HybridModel model = args.model();
    HybridState init;
    init.rho = io::initial_state(args.cfg, model.hilbert_dim);
    init.z = RealVector::Constant(model.classical_dim, args.cfg.z0_mean);
    const StepMode mode =
        model.has_feedback() ? StepMode::markovian_feedback : StepMode::hybrid;
    const TrajectoryRecord rec = run_trajectory(model, init, args.cfg.dt, args.cfg.T,
                                                RngStream(args.cfg.seed, 0), mode);
    io::write_trajectory_csv(rec, model.classical_dim, args.out("trajectory.csv"));
    args.write_manifest("simulate");
    std::cout << "wrote " << args.out("trajectory.csv") << " (" << rec.states.size()
              << " rows)\n";
    return 0;
}

int cmd_ensemble(CommonArgs& args) {
    const HybridModel model = args.model();
    EnsembleSpec spec = args.ensemble_spec(model);
    const int workers = resolve_workers(args.cfg);
    bool pass = true;
    if (model.quantum_z_independent() && model.classical_dim == 0) {
        const RealVector z0 = RealVector::Zero(0);
        std::vector<MeasurementChannel> chans;
        for (const auto& c : model.channels) chans.push_back(c.at(z0));
        LindbladGenerator gen;
        if (model.has_feedback()) {
            std::vector<ComplexMatrix> fb;
            for (const auto& b : model.feedback_ops) fb.push_back(b.at(z0));
            gen = feedback_generator(model.h0.at(z0), chans, fb);
        } else {
            gen = averaged_measurement_generator(model.h0.at(z0), chans);
        }
        const ComparisonReport rep = compare_mean_to_lindblad(spec, gen, workers);
        io::write_report(rep, args.out("report_lindblad.json"));
        std::cout << io::report_table(rep);
        pass = rep.pass;
    }
    const EnsembleStats stats = run_ensemble(spec, workers);
    io::write_stats_json(stats, args.out("stats.json"));
    if (!stats.hist_edges.empty())
        io::write_histograms_csv(stats, args.out("histograms.csv"));
    args.write_manifest("ensemble");
    std::cout << "wrote " << args.out("stats.json") << '\n';
    return pass ? 0 : 1;
}

int cmd_pde(CommonArgs& args) {
    const HybridModel model = args.model();
    if (model.classical_dim != 1) {
        std::cerr << "pde: scenario must have classical_dim = 1\n";
        return 2;
    }
    const Grid1D grid(args.cfg.z_min, args.cfg.z_max, args.cfg.n_cells);
    const HybridDensityField f0 = gaussian_field(grid, io::initial_state(args.cfg, 2),
                                                 args.cfg.z0_mean, args.cfg.z0_std);
    std::vector<double> snaps = args.cfg.snapshot_times;
    if (snaps.empty()) snaps = {0.5 * args.cfg.T, args.cfg.T};
    const PdeRun run = run_pde(model, f0, args.cfg.T, snaps, args.cfg.pde_dt);
    for (std::size_t i = 0; i < run.snapshots.size(); ++i) {
        std::ostringstream name;
        name << "field_t" << run.times[i] << ".csv";
        io::write_field_csv(run.snapshots[i], args.out(name.str()));
    }
    args.write_manifest("pde");
    std::cout << "dt used " << run.dt_used << ", steps " << run.steps
              << ", max boundary mass fraction " << run.max_boundary_mass << '\n';
    return 0;
}

int cmd_lindblad(CommonArgs& args) {
    const HybridModel model = args.model();
    if (!model.quantum_z_independent() || model.classical_dim != 0) {
        std::cerr << "lindblad: scenario must have a z-independent quantum part (d = 0)\n";
        return 2;
    }
    const RealVector z0 = RealVector::Zero(0);
    std::vector<MeasurementChannel> chans;
    for (const auto& c : model.channels) chans.push_back(c.at(z0));
    LindbladGenerator gen;
    if (model.has_feedback()) {
        std::vector<ComplexMatrix> fb;
        for (const auto& b : model.feedback_ops) fb.push_back(b.at(z0));
        gen = feedback_generator(model.h0.at(z0), chans, fb);
    } else {
        gen = averaged_measurement_generator(model.h0.at(z0), chans);
    }
    const auto series = integrate_lindblad(gen, io::initial_state(args.cfg, model.hilbert_dim),
                                           args.cfg.dt, args.cfg.T);
    io::write_lindblad_csv(series, args.cfg.dt, default_observables(model.hilbert_dim),
                           args.out("lindblad.csv"));
    args.write_manifest("lindblad");
    std::cout << "wrote " << args.out("lindblad.csv") << '\n';
    return 0;
}

int cmd_validate_tradeoff(const std::string& input) {
    const DiagonalParams p = io::read_diagonal_params(input);
    const TradeoffReport rep = tradeoff_margin(to_nondiagonal(p));
    std::cout << "psd_margin: " << rep.psd_margin << '\n'
              << "saturated: " << (rep.saturated ? "true" : "false") << '\n'
              << "pseudo_inverse_used: " << (rep.pseudo_inverse_used ? "true" : "false") << '\n'
              << "d0_min_eigenvalue: " << rep.d0_min_eigenvalue << '\n';
    return rep.psd_margin >= -1e-10 ? 0 : 1;
}

int cmd_ito_selftest(CommonArgs& args) {
    const int n_steps = int(std::llround(args.cfg.T / args.cfg.dt));
    const ItoReport rep =
        ito_selftest(RngStream(args.cfg.seed, 0), args.cfg.dt, n_steps, args.cfg.n_traj);
    std::cout << "pathwise W dW identity: max err " << rep.pathwise_max_error << " (bound "
              << rep.pathwise_bound << ", C = " << rep.empirical_c << ") "
              << (rep.pathwise_pass ? "pass" : "FAIL") << '\n'
              << "martingale mean: " << rep.martingale_mean << " (tol " << rep.martingale_tol
              << ") " << (rep.martingale_pass ? "pass" : "FAIL") << '\n'
              << "quadratic variation: mean err " << rep.qv_mean_error << " (tol " << rep.qv_tol
              << "), pathwise max " << rep.qv_pathwise_max << " (bound "
              << rep.qv_pathwise_bound << ") " << (rep.qv_pass ? "pass" : "FAIL") << '\n';
    return rep.all_pass() ? 0 : 1;
}

int cmd_born(CommonArgs& args) {
    const HybridModel model = args.model();
    EnsembleSpec spec = args.ensemble_spec(model);
    const BornReport rep = born_rule_histogram(spec, resolve_workers(args.cfg));
    std::cout << "mean final purity: " << rep.mean_final_purity << '\n'
              << "unresolved fraction: " << rep.unresolved_fraction << '\n';
    for (std::size_t j = 0; j < rep.frequencies.size(); ++j)
        std::cout << "outcome " << j << ": freq " << rep.frequencies[j] << " vs Born "
                  << rep.born_weights[j] << " (tol " << rep.tolerances[j] << ")\n";
    std::cout << (rep.pass ? "pass" : "FAIL") << '\n';
    args.write_manifest("born");
    return rep.pass ? 0 : 1;
}

int cmd_xcheck(CommonArgs& args) {
    const HybridModel model = args.model();
    if (model.classical_dim != 1) {
        std::cerr << "xcheck: scenario must have classical_dim = 1 (try hybrid_linear)\n";
        return 2;
    }
    EnsembleSpec spec = args.ensemble_spec(model);
    if (args.cfg.snapshot_times.empty()) spec.snapshot_times = {0.5 * args.cfg.T, args.cfg.T};
    const int workers = resolve_workers(args.cfg);

    const Grid1D grid(args.cfg.z_min, args.cfg.z_max, args.cfg.n_cells);
    const HybridDensityField f0 =
        gaussian_field(grid, spec.rho0, args.cfg.z0_mean, args.cfg.z0_std);
    spec.histogram_edges.clear();
    for (int i = 0; i <= grid.n_cells; ++i)
        spec.histogram_edges.push_back(grid.z_min + i * grid.dz());
    const PdeRun pde = run_pde(model, f0, args.cfg.T, spec.snapshot_times, args.cfg.pde_dt);

    const double zm = args.cfg.z0_mean, zs = args.cfg.z0_std;
    std::vector<TestFunction> fs = {
        {"1", [](const RealVector&) { return 1.0; }},
        {"z", [](const RealVector& z) { return z(0); }},
        {"z^2", [](const RealVector& z) { return z(0) * z(0); }},
        {"1[z<mean]", [zm](const RealVector& z) { return z(0) < zm ? 1.0 : 0.0; }},
        {"1[|z-mean|<std]",
         [zm, zs](const RealVector& z) { return std::abs(z(0) - zm) < zs ? 1.0 : 0.0; }},
    };
    ComparisonReport rep = compare_to_pde(spec, pde, fs, workers);
    rep.title = "cross-representation check (" + args.cfg.scenario + ")";

    if (model.quantum_z_independent()) {
        const RealVector z_zero = RealVector::Zero(1);
        std::vector<MeasurementChannel> chans;
        for (const auto& c : model.channels) chans.push_back(c.at(z_zero));
        const auto gen = averaged_measurement_generator(model.h0.at(z_zero), chans);
        const ComparisonReport lrep = compare_mean_to_lindblad(spec, gen, workers);
        for (const auto& l : lrep.lines) rep.add(l);
    }
    io::write_report(rep, args.out("xcheck.json"));
    std::cout << io::report_table(rep);
    args.write_manifest("xcheck");
    return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid quantum-classical dynamics simulator"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonArgs args;
    std::string tradeoff_input;

    auto* simulate = app.add_subcommand("simulate", "single stochastic trajectory -> CSV");
    auto* ensemble = app.add_subcommand("ensemble", "Monte Carlo statistics and comparisons");
    auto* pde = app.add_subcommand("pde", "deterministic field evolution -> CSV snapshots");
    auto* lindblad = app.add_subcommand("lindblad", "deterministic master equation -> CSV");
    auto* tradeoff =
        app.add_subcommand("validate-tradeoff", "decoherence-diffusion trade-off report");
    tradeoff->add_option("--input", tradeoff_input, "JSON parameter file")->required();
    auto* ito = app.add_subcommand("ito-selftest", "Ito-calculus self-tests");
    auto* born = app.add_subcommand("born", "collapse-outcome histogram vs Born weights");
    auto* xcheck =
        app.add_subcommand("xcheck", "run all representations and cross-validate");
    for (auto* sub : {simulate, ensemble, pde, lindblad, ito, born, xcheck}) args.attach(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (tradeoff->parsed()) return cmd_validate_tradeoff(tradeoff_input);
        CLI::App* active = app.get_subcommands().front();
        args.resolve(active);
        if (simulate->parsed()) return cmd_simulate(args);
        if (ensemble->parsed()) return cmd_ensemble(args);
        if (pde->parsed()) return cmd_pde(args);
        if (lindblad->parsed()) return cmd_lindblad(args);
        if (ito->parsed()) return cmd_ito_selftest(args);
        if (born->parsed()) return cmd_born(args);
        if (xcheck->parsed()) return cmd_xcheck(args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
