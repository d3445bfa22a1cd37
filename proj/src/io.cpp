#include "hybridyn/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace hybridyn::io {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << std::setprecision(17);
    return out;
}

void entry_header(std::ostream& os, int dim, const std::string& prefix) {
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j)
            os << ',' << prefix << i << '_' << j << "_re," << prefix << i << '_' << j << "_im";
}

void entry_row(std::ostream& os, const ComplexMatrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i; j < m.cols(); ++j)
            os << ',' << m(i, j).real() << ',' << m(i, j).imag();
}

json matrix_to_json(const ComplexMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

json real_matrix_to_json(const RealMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

ComplexMatrix matrix_from_json(const json& rows, const std::string& what) {
    if (!rows.is_array() || rows.empty())
        throw std::invalid_argument(what + ": expected a non-empty array of rows");
    const std::size_t nr = rows.size();
    const std::size_t nc = rows[0].size();
    ComplexMatrix m(nr, nc);
    for (std::size_t i = 0; i < nr; ++i) {
        if (rows[i].size() != nc) throw std::invalid_argument(what + ": ragged rows");
        for (std::size_t j = 0; j < nc; ++j) {
            const auto& e = rows[i][j];
            if (e.is_number()) {
                m(i, j) = Complex(e.get<double>(), 0.0);
            } else if (e.is_array() && e.size() == 2) {
                m(i, j) = Complex(e[0].get<double>(), e[1].get<double>());
            } else {
                throw std::invalid_argument(what + ": entries must be numbers or [re, im]");
            }
        }
    }
    return m;
}

}  // namespace

void write_trajectory_csv(const TrajectoryRecord& rec, int classical_dim,
                          const std::string& path) {
    std::ofstream out = open_out(path);
    const int dim = int(rec.states.front().rho.rows());
    const int n = rec.increments.empty() ? 0 : int(rec.increments.front().dW.size());
    out << "t";
    entry_header(out, dim, "rho_");
    for (int a = 0; a < classical_dim; ++a) out << ",z_" << a;
    for (int k = 0; k < n; ++k) out << ",dr_" << k;
    for (int k = 0; k < n; ++k) out << ",dW_" << k;
    out << '\n';
    for (std::size_t s = 0; s < rec.states.size(); ++s) {
        out << rec.times[s];
        entry_row(out, rec.states[s].rho);
        for (int a = 0; a < classical_dim; ++a) out << ',' << rec.states[s].z(a);
        if (s == 0) {
            for (int k = 0; k < 2 * n; ++k) out << ',';
        } else {
            const auto& inc = rec.increments[s - 1];
            for (int k = 0; k < n; ++k) {
                out << ',';
                if (inc.dr_available[k]) out << inc.dr(k);
            }
            for (int k = 0; k < n; ++k) out << ',' << inc.dW(k);
        }
        out << '\n';
    }
}

void write_field_csv(const HybridDensityField& field, const std::string& path) {
    std::ofstream out = open_out(path);
    const int dim = int(field.values.front().rows());
    out << "z,trace";
    entry_header(out, dim, "rho_");
    out << '\n';
    for (std::size_t i = 0; i < field.values.size(); ++i) {
        out << field.grid.center(int(i)) << ',' << field.values[i].trace().real();
        entry_row(out, field.values[i]);
        out << '\n';
    }
}

void write_lindblad_csv(const std::vector<ComplexMatrix>& series, double dt,
                        const std::vector<Observable>& observables, const std::string& path) {
    std::ofstream out = open_out(path);
    const int dim = int(series.front().rows());
    out << "t";
    entry_header(out, dim, "rho_");
    out << ",purity";
    for (const auto& o : observables) out << ',' << o.name;
    out << '\n';
    for (std::size_t s = 0; s < series.size(); ++s) {
        out << double(s) * dt;
        entry_row(out, series[s]);
        out << ',' << purity(series[s]);
        for (const auto& o : observables) out << ',' << (o.op * series[s]).trace().real();
        out << '\n';
    }
}

void write_stats_json(const EnsembleStats& stats, const std::string& path) {
    json doc;
    doc["n_traj"] = stats.n_traj;
    doc["sem_valid"] = stats.sem_valid;
    doc["observables"] = stats.observable_names;
    doc["test_functions"] = stats.f_names;
    doc["histogram_edges"] = stats.hist_edges;
    json snaps = json::array();
    for (const auto& s : stats.snapshots) {
        json j;
        j["t"] = s.t;
        j["mean_rho"] = matrix_to_json(s.mean_rho);
        j["sem_rho"] = real_matrix_to_json(s.sem_rho);
        j["z_mean"] = std::vector<double>(s.z_mean.data(), s.z_mean.data() + s.z_mean.size());
        j["z_sem"] = std::vector<double>(s.z_sem.data(), s.z_sem.data() + s.z_sem.size());
        j["z2_mean"] = std::vector<double>(s.z2_mean.data(), s.z2_mean.data() + s.z2_mean.size());
        j["z2_sem"] = std::vector<double>(s.z2_sem.data(), s.z2_sem.data() + s.z2_sem.size());
        j["obs_mean"] =
            std::vector<double>(s.obs_mean.data(), s.obs_mean.data() + s.obs_mean.size());
        j["obs_sem"] = std::vector<double>(s.obs_sem.data(), s.obs_sem.data() + s.obs_sem.size());
        json fm = json::array();
        for (std::size_t i = 0; i < s.fmoments.size(); ++i) {
            json one;
            one["mean"] = matrix_to_json(s.fmoments[i].mean);
            one["sem"] = real_matrix_to_json(s.fmoments[i].sem);
            fm.push_back(std::move(one));
        }
        j["fmoments"] = std::move(fm);
        j["hist_counts"] = std::vector<int>(s.hist_counts.data(),
                                            s.hist_counts.data() + s.hist_counts.size());
        snaps.push_back(std::move(j));
    }
    doc["snapshots"] = std::move(snaps);
    open_out(path) << doc.dump(2) << '\n';
}

void write_histograms_csv(const EnsembleStats& stats, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "bin_lo,bin_hi";
    for (const auto& s : stats.snapshots) out << ",count_t" << s.t;
    out << '\n';
    const int nbins = stats.hist_edges.size() >= 2 ? int(stats.hist_edges.size()) - 1 : 0;
    for (int b = 0; b < nbins; ++b) {
        out << stats.hist_edges[b] << ',' << stats.hist_edges[b + 1];
        for (const auto& s : stats.snapshots) out << ',' << s.hist_counts(b);
        out << '\n';
    }
}

std::string report_table(const ComparisonReport& report) {
    std::ostringstream os;
    os << report.title << "\n";
    os << std::left << std::setw(34) << "check" << std::setw(8) << "t" << std::setw(14)
       << "discrepancy" << std::setw(14) << "stat_error" << std::setw(14) << "threshold"
       << "result\n";
    os << std::setprecision(4);
    for (const auto& l : report.lines)
        os << std::left << std::setw(34) << l.label << std::setw(8) << l.t << std::setw(14)
           << l.discrepancy << std::setw(14) << l.stat_error << std::setw(14) << l.threshold
           << (l.pass ? "pass" : "FAIL") << '\n';
    os << (report.pass ? "ALL PASS" : "FAILED") << '\n';
    return os.str();
}

void write_report(const ComparisonReport& report, const std::string& json_path) {
    json doc;
    doc["title"] = report.title;
    doc["pass"] = report.pass;
    json lines = json::array();
    for (const auto& l : report.lines) {
        lines.push_back({{"label", l.label},
                         {"t", l.t},
                         {"discrepancy", l.discrepancy},
                         {"stat_error", l.stat_error},
                         {"threshold", l.threshold},
                         {"pass", l.pass}});
    }
    doc["lines"] = std::move(lines);
    open_out(json_path) << doc.dump(2) << '\n';
    std::string txt_path = json_path;
    const auto pos = txt_path.rfind(".json");
    if (pos != std::string::npos) txt_path = txt_path.substr(0, pos);
    write_text(txt_path + ".txt", report_table(report));
}

DiagonalParams read_diagonal_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    json doc = json::parse(in);
    DiagonalParams p;
    p.Gamma = matrix_from_json(doc.at("Gamma"), "Gamma");
    const auto eta = doc.at("eta").get<std::vector<double>>();
    p.eta = Eigen::Map<const RealVector>(eta.data(), eta.size());
    const ComplexMatrix g = matrix_from_json(doc.at("G"), "G");
    if (g.imag().cwiseAbs().maxCoeff() > 0.0)
        throw std::invalid_argument("G must be real");
    p.G = g.real();
    for (const auto& l : doc.at("L")) p.L.push_back(matrix_from_json(l, "L"));
    p.check_shapes();
    return p;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config " + path + ": " + e.what());
    }
    RunConfig cfg;
    for (const auto& [key, value] : doc.items()) {
        if (key == "scenario") cfg.scenario = value.get<std::string>();
        else if (key == "parameters") cfg.parameters = value.get<std::map<std::string, double>>();
        else if (key == "dt") cfg.dt = value.get<double>();
        else if (key == "T") cfg.T = value.get<double>();
        else if (key == "n_traj") cfg.n_traj = value.get<int>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "output_dir") cfg.output_dir = value.get<std::string>();
        else if (key == "snapshot_times") cfg.snapshot_times = value.get<std::vector<double>>();
        else if (key == "rho0") cfg.rho0 = value.get<std::string>();
        else if (key == "rho0_theta") cfg.rho0_theta = value.get<double>();
        else if (key == "z0_mean") cfg.z0_mean = value.get<double>();
        else if (key == "z0_std") cfg.z0_std = value.get<double>();
        else if (key == "z_min") cfg.z_min = value.get<double>();
        else if (key == "z_max") cfg.z_max = value.get<double>();
        else if (key == "n_cells") cfg.n_cells = value.get<int>();
        else if (key == "pde_dt") cfg.pde_dt = value.get<double>();
        else if (key == "workers") cfg.workers = value.get<int>();
        else if (key == "subcommand" || key == "tool_version") { /* manifest fields */ }
        else throw std::invalid_argument("config " + path + ": unknown key '" + key + "'");
    }
    if (cfg.dt <= 0 || cfg.T <= 0 || cfg.n_traj < 1)
        throw std::invalid_argument("config " + path + ": dt, T, n_traj must be positive");
    return cfg;
}

std::string manifest_json(const RunConfig& cfg, const std::string& subcommand,
                          const std::string& tool_version) {
    json doc;
    doc["subcommand"] = subcommand;
    doc["tool_version"] = tool_version;
    doc["scenario"] = cfg.scenario;
    doc["parameters"] = cfg.parameters;
    doc["dt"] = cfg.dt;
    doc["T"] = cfg.T;
    doc["n_traj"] = cfg.n_traj;
    doc["seed"] = cfg.seed;
    doc["output_dir"] = cfg.output_dir;
    doc["snapshot_times"] = cfg.snapshot_times;
    doc["rho0"] = cfg.rho0;
    doc["rho0_theta"] = cfg.rho0_theta;
    doc["z0_mean"] = cfg.z0_mean;
    doc["z0_std"] = cfg.z0_std;
    doc["z_min"] = cfg.z_min;
    doc["z_max"] = cfg.z_max;
    doc["n_cells"] = cfg.n_cells;
    doc["pde_dt"] = cfg.pde_dt;
    doc["workers"] = cfg.workers;
    return doc.dump(2) + "\n";
}

void write_text(const std::string& path, const std::string& body) {
    open_out(path) << body;
}

ComplexMatrix initial_state(const RunConfig& cfg, int dim) {
    if (cfg.rho0 == "mixed") return DensityMatrix::maximally_mixed(dim).matrix();
    if (cfg.rho0 == "ground") return DensityMatrix::ground(dim).matrix();
    if (dim == 2) {
        if (cfg.rho0 == "plus") return DensityMatrix::plus().matrix();
        if (cfg.rho0 == "tilted") return DensityMatrix::tilted(cfg.rho0_theta).matrix();
    } else if (cfg.rho0 == "plus" || cfg.rho0 == "tilted") {
        // tensor power of the qubit state
        const ComplexMatrix one = cfg.rho0 == "plus"
                                      ? DensityMatrix::plus().matrix()
                                      : DensityMatrix::tilted(cfg.rho0_theta).matrix();
        ComplexMatrix out = one;
        while (out.rows() < dim) out = kron(out, one);
        if (out.rows() != dim)
            throw std::invalid_argument("rho0 '" + cfg.rho0 + "' does not fit dimension " +
                                        std::to_string(dim));
        return out;
    }
    throw std::invalid_argument("unknown rho0 '" + cfg.rho0 + "'");
}

}  // namespace hybridyn::io
