#include "hybridyn/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "hybridyn/detail/stepper.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hybridyn {

namespace {

std::vector<long> snapshot_steps(const EnsembleSpec& spec) {
    std::vector<long> steps;
    for (double t : spec.snapshot_times) {
        if (t < -1e-12 || t > spec.T * (1.0 + 1e-9))
            throw std::invalid_argument("snapshot time outside [0, T]");
        steps.push_back(std::llround(t / spec.dt));
    }
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    return steps;
}

struct TrajSlot {
    std::vector<ComplexMatrix> rho;  // one per snapshot
    std::vector<RealVector> z;
    std::string error;
};

void run_one_trajectory(const EnsembleSpec& spec, long n_steps, const std::vector<long>& steps,
                        int traj_index, TrajSlot& slot) {
    RngStream rng(spec.master_seed, std::uint64_t(traj_index));
    const int d = spec.model.classical_dim;
    RealVector z0 = RealVector::Zero(d);
    for (int a = 0; a < d; ++a) {
        const double s = spec.z0_std.size() > a ? spec.z0_std(a) : 0.0;
        const double m = spec.z0_mean.size() > a ? spec.z0_mean(a) : 0.0;
        z0(a) = m + s * rng.gaussian();
    }
    slot.rho.resize(steps.size());
    slot.z.resize(steps.size());
    std::size_t next = 0;
    auto obs = [&](long step, double, const auto& rho, const RealVector& z, const double*,
                   const double*, const std::uint8_t*) {
        if (next < steps.size() && step == steps[next]) {
            slot.rho[next] = rho;
            slot.z[next] = z;
            ++next;
        }
    };
    detail::dispatch_dim(spec.model.hilbert_dim, [&](auto dim_tag) {
        detail::run_path<dim_tag()>(spec.model, spec.rho0, z0, spec.dt, n_steps, rng, spec.mode,
                                    spec.engine, obs);
    });
}

struct SnapAccum {
    ComplexMatrix srho;
    Eigen::ArrayXXd srho2;
    RealVector sz, sz2, sz4;
    RealVector sobs, sobs2;
    std::vector<ComplexMatrix> sf;
    std::vector<Eigen::ArrayXXd> sf2;
    Eigen::VectorXi hist;

    SnapAccum& operator+=(const SnapAccum& o) {
        srho += o.srho;
        srho2 += o.srho2;
        sz += o.sz;
        sz2 += o.sz2;
        sz4 += o.sz4;
        sobs += o.sobs;
        sobs2 += o.sobs2;
        for (std::size_t i = 0; i < sf.size(); ++i) {
            sf[i] += o.sf[i];
            sf2[i] += o.sf2[i];
        }
        hist += o.hist;
        return *this;
    }
};

int bin_index(double z, const std::vector<double>& edges) {
    const int nbins = int(edges.size()) - 1;
    if (z <= edges.front()) return 0;
    if (z >= edges.back()) return nbins - 1;
    const int j = int(std::upper_bound(edges.begin(), edges.end(), z) - edges.begin()) - 1;
    return std::clamp(j, 0, nbins - 1);
}

SnapAccum make_leaf(const EnsembleSpec& spec, const std::vector<TrajSlot>& slots, int traj,
                    std::size_t snap) {
    const int dim = spec.model.hilbert_dim;
    const int d = spec.model.classical_dim;
    const int nobs = int(spec.observables.size());
    const int nf = int(spec.test_functions.size());
    const int nbins = spec.histogram_edges.size() >= 2 ? int(spec.histogram_edges.size()) - 1 : 0;

    SnapAccum a;
    const ComplexMatrix& rho = slots[traj].rho[snap];
    const RealVector& z = slots[traj].z[snap];
    a.srho = rho;
    a.srho2 = rho.cwiseAbs2().array();
    a.sz = z;
    a.sz2 = z.array().square().matrix();
    a.sz4 = z.array().pow(4).matrix();
    a.sobs.resize(nobs);
    a.sobs2.resize(nobs);
    for (int j = 0; j < nobs; ++j) {
        const double v = (spec.observables[j].op * rho).trace().real();
        a.sobs(j) = v;
        a.sobs2(j) = v * v;
    }
    a.sf.resize(nf);
    a.sf2.resize(nf);
    for (int j = 0; j < nf; ++j) {
        const double fv = spec.test_functions[j].f(z);
        a.sf[j] = fv * rho;
        a.sf2[j] = a.sf[j].cwiseAbs2().array();
    }
    a.hist = Eigen::VectorXi::Zero(nbins);
    if (nbins > 0 && d == 1) a.hist(bin_index(z(0), spec.histogram_edges)) += 1;
    (void)dim;
    return a;
}

/// Fixed-shape pairwise reduction over trajectory index; independent of the
/// execution schedule and accurate to near-roundoff.
SnapAccum pairwise_sum(const EnsembleSpec& spec, const std::vector<TrajSlot>& slots,
                       std::size_t snap, int lo, int hi) {
    if (hi - lo == 1) return make_leaf(spec, slots, lo, snap);
    const int mid = lo + (hi - lo) / 2;
    SnapAccum a = pairwise_sum(spec, slots, snap, lo, mid);
    a += pairwise_sum(spec, slots, snap, mid, hi);
    return a;
}

RealVector sem_from_sums(const RealVector& s, const RealVector& s2, int n) {
    RealVector out = RealVector::Zero(s.size());
    if (n <= 1) return out;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const double mean = s(i) / n;
        const double var = std::max(0.0, s2(i) / n - mean * mean);
        out(i) = std::sqrt(var / n);
    }
    return out;
}

EnsembleStats reduce_stats(const EnsembleSpec& spec, const std::vector<TrajSlot>& slots,
                           const std::vector<long>& steps) {
    const int n = spec.n_traj;
    EnsembleStats stats;
    stats.n_traj = n;
    stats.sem_valid = n > 1;
    for (const auto& o : spec.observables) stats.observable_names.push_back(o.name);
    for (const auto& f : spec.test_functions) stats.f_names.push_back(f.name);
    stats.hist_edges = spec.histogram_edges;

    for (std::size_t s = 0; s < steps.size(); ++s) {
        SnapAccum acc = pairwise_sum(spec, slots, s, 0, n);
        EnsembleSnapshot snap;
        snap.t = double(steps[s]) * spec.dt;
        snap.mean_rho = acc.srho / double(n);
        snap.sem_rho = RealMatrix::Zero(acc.srho.rows(), acc.srho.cols());
        if (n > 1) {
            Eigen::ArrayXXd var =
                (acc.srho2 / double(n) - snap.mean_rho.cwiseAbs2().array()).max(0.0);
            snap.sem_rho = (var / double(n)).sqrt().matrix();
        }
        snap.z_mean = acc.sz / double(n);
        snap.z_sem = sem_from_sums(acc.sz, acc.sz2, n);
        snap.z2_mean = acc.sz2 / double(n);
        snap.z2_sem = sem_from_sums(acc.sz2, acc.sz4, n);
        snap.obs_mean = acc.sobs / double(n);
        snap.obs_sem = sem_from_sums(acc.sobs, acc.sobs2, n);
        for (std::size_t j = 0; j < acc.sf.size(); ++j) {
            FMoment fm;
            fm.mean = acc.sf[j] / double(n);
            fm.sem = RealMatrix::Zero(fm.mean.rows(), fm.mean.cols());
            if (n > 1) {
                Eigen::ArrayXXd var =
                    (acc.sf2[j] / double(n) - fm.mean.cwiseAbs2().array()).max(0.0);
                fm.sem = (var / double(n)).sqrt().matrix();
            }
            snap.fmoments.push_back(std::move(fm));
        }
        snap.hist_counts = acc.hist;
        stats.snapshots.push_back(std::move(snap));
    }
    return stats;
}

EnsembleStats run_impl(const EnsembleSpec& spec, int num_workers, bool use_omp) {
    if (spec.n_traj < 1) throw std::invalid_argument("run_ensemble: n_traj must be >= 1");
    if (spec.dt <= 0.0 || spec.T <= 0.0)
        throw std::invalid_argument("run_ensemble: need dt > 0 and T > 0");
    const long n_steps = std::llround(std::ceil(spec.T / spec.dt - 1e-9));
    const std::vector<long> steps = snapshot_steps(spec);
    if (steps.empty()) throw std::invalid_argument("run_ensemble: no snapshot times");

    std::vector<TrajSlot> slots(spec.n_traj);
#ifdef _OPENMP
    const int workers = num_workers > 0 ? num_workers : omp_get_max_threads();
#else
    const int workers = 1;
#endif
    if (use_omp) {
#pragma omp parallel for schedule(dynamic) num_threads(workers)
        for (int i = 0; i < spec.n_traj; ++i) {
            try {
                run_one_trajectory(spec, n_steps, steps, i, slots[i]);
            } catch (const std::exception& e) {
                slots[i].error = e.what();
            }
        }
    } else {
        for (int i = 0; i < spec.n_traj; ++i) {
            try {
                run_one_trajectory(spec, n_steps, steps, i, slots[i]);
            } catch (const std::exception& e) {
                slots[i].error = e.what();
            }
        }
    }
    for (int i = 0; i < spec.n_traj; ++i)
        if (!slots[i].error.empty())
            throw std::runtime_error("trajectory " + std::to_string(i) +
                                     " failed: " + slots[i].error);
    return reduce_stats(spec, slots, steps);
}

bool matrices_identical(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a(i) != b(i)) return false;
    return true;
}

}  // namespace

EnsembleStats run_ensemble(const EnsembleSpec& spec, int num_workers) {
    return run_impl(spec, num_workers, true);
}

EnsembleStats run_ensemble_serial(const EnsembleSpec& spec) {
    return run_impl(spec, 1, false);
}

bool stats_identical(const EnsembleStats& a, const EnsembleStats& b) {
    if (a.n_traj != b.n_traj || a.snapshots.size() != b.snapshots.size()) return false;
    for (std::size_t s = 0; s < a.snapshots.size(); ++s) {
        const auto& x = a.snapshots[s];
        const auto& y = b.snapshots[s];
        if (!matrices_identical(x.mean_rho, y.mean_rho)) return false;
        if ((x.sem_rho - y.sem_rho).cwiseAbs().maxCoeff() != 0.0) return false;
        if (x.z_mean != y.z_mean || x.z_sem != y.z_sem) return false;
        if (x.z2_mean != y.z2_mean || x.z2_sem != y.z2_sem) return false;
        if (x.obs_mean != y.obs_mean || x.obs_sem != y.obs_sem) return false;
        if (x.hist_counts != y.hist_counts) return false;
        if (x.fmoments.size() != y.fmoments.size()) return false;
        for (std::size_t j = 0; j < x.fmoments.size(); ++j) {
            if (!matrices_identical(x.fmoments[j].mean, y.fmoments[j].mean)) return false;
            if ((x.fmoments[j].sem - y.fmoments[j].sem).cwiseAbs().maxCoeff() != 0.0)
                return false;
        }
    }
    return true;
}

ComparisonReport compare_mean_to_lindblad(const EnsembleSpec& spec, const LindbladGenerator& gen,
                                          int num_workers) {
    ComparisonReport rep;
    rep.title = "ensemble mean vs Lindblad";
    const EnsembleStats stats = run_ensemble(spec, num_workers);

    // RK4 oracle on a grid that hits every snapshot exactly.
    double scale = gen.h_total.norm();
    for (const auto& j : gen.jump_ops) scale += j.squaredNorm();
    double dt_l = scale > 0.0 ? std::min(1e-3, 5e-3 / scale) : 1e-3;
    double spacing = spec.T;
    for (double t : spec.snapshot_times)
        if (t > 0.0) spacing = std::min(spacing, t);
    const long per = std::max(1L, long(std::ceil(spacing / dt_l - 1e-9)));
    dt_l = spacing / double(per);
    const auto series = integrate_lindblad(gen, spec.rho0, dt_l, spec.T);

    for (const auto& snap : stats.snapshots) {
        const long idx = std::llround(snap.t / dt_l);
        const ComplexMatrix& oracle = series.at(std::size_t(idx));
        ComparisonLine line;
        line.label = "||mean_rho - lindblad||_F";
        line.t = snap.t;
        line.discrepancy = frobenius_distance(snap.mean_rho, oracle);
        line.stat_error = std::sqrt(snap.sem_rho.array().square().sum());
        line.threshold = 4.0 * line.stat_error + 10.0 * spec.dt;
        line.pass = std::isfinite(line.discrepancy) && line.discrepancy <= line.threshold;
        rep.add(std::move(line));
    }
    return rep;
}

ComparisonReport compare_to_pde(const EnsembleSpec& spec, const PdeRun& pde,
                                const std::vector<TestFunction>& fs, int num_workers) {
    if (spec.model.classical_dim != 1)
        throw std::invalid_argument("compare_to_pde: requires classical_dim = 1");
    if (pde.snapshots.empty()) throw std::invalid_argument("compare_to_pde: empty PDE run");

    // Initial-condition consistency: unit mass and matching first moment.
    const auto& f0 = pde.snapshots.front();
    if (std::abs(pde.times.front()) < 1e-12) {
        if (std::abs(total_mass(f0) - 1.0) > 1e-6)
            throw std::invalid_argument("compare_to_pde: initial field is not normalized");
        const double pde_mean = expectation_against(f0, [](double z) { return z; }).trace().real();
        const double tol = 0.05 * (spec.z0_std.size() ? spec.z0_std(0) : 1.0) + 1e-6;
        if (std::abs(pde_mean - (spec.z0_mean.size() ? spec.z0_mean(0) : 0.0)) > tol)
            throw std::invalid_argument("compare_to_pde: mismatched initial conditions");
    }

    EnsembleSpec s2 = spec;
    s2.test_functions = fs;
    const EnsembleStats stats = run_ensemble(s2, num_workers);
    const double dz = pde.snapshots.front().grid.dz();

    ComparisonReport rep;
    rep.title = "trajectories vs PDE";
    for (const auto& snap : stats.snapshots) {
        // Locate the PDE snapshot at this time.
        const HybridDensityField* field = nullptr;
        for (std::size_t i = 0; i < pde.times.size(); ++i)
            if (std::abs(pde.times[i] - snap.t) < 1e-9) field = &pde.snapshots[i];
        if (!field)
            throw std::invalid_argument("compare_to_pde: PDE run lacks snapshot at t=" +
                                        std::to_string(snap.t));
        for (std::size_t j = 0; j < fs.size(); ++j) {
            const ComplexMatrix pde_side =
                expectation_against(*field, [&](double z) {
                    RealVector zz(1);
                    zz(0) = z;
                    return fs[j].f(zz);
                });
            const ComplexMatrix& mc_side = snap.fmoments[j].mean;
            ComparisonLine line;
            line.label = "E[rho f(z)] f=" + fs[j].name;
            line.t = snap.t;
            line.discrepancy = max_abs(mc_side - pde_side);
            line.stat_error = snap.fmoments[j].sem.maxCoeff();
            line.threshold = 0.0;
            bool ok = mc_side.allFinite() && pde_side.allFinite();
            double worst_threshold = 0.0;
            for (Eigen::Index r = 0; r < mc_side.rows() && ok; ++r) {
                for (Eigen::Index c = 0; c < mc_side.cols(); ++c) {
                    const double diff = std::abs(mc_side(r, c) - pde_side(r, c));
                    const double thr =
                        4.0 * snap.fmoments[j].sem(r, c) + 10.0 * (spec.dt + dz);
                    worst_threshold = std::max(worst_threshold, thr);
                    if (diff > thr) {
                        ok = false;
                        break;
                    }
                }
            }
            line.threshold = worst_threshold;
            line.pass = ok;
            rep.add(std::move(line));
        }
    }
    return rep;
}

BornReport born_rule_histogram(const EnsembleSpec& spec, int num_workers) {
    if (spec.model.num_channels() != 1)
        throw std::invalid_argument("born_rule_histogram: a single channel is required");
    const RealVector z0 = RealVector::Zero(spec.model.classical_dim);
    const MeasurementChannel ch = spec.model.channels[0].at(z0);
    if (ch.eta != 1.0)
        throw std::invalid_argument("born_rule_histogram: eta must be 1");
    if (!is_hermitian(ch.c, 1e-10))
        throw std::invalid_argument("born_rule_histogram: channel operator must be Hermitian");

    const auto [evals, evecs] = hermitian_eigen(ch.c);
    const int dim = spec.model.hilbert_dim;
    const int n_out = int(evals.size());

    EnsembleSpec s2 = spec;
    s2.snapshot_times = {spec.T};
    s2.test_functions.clear();
    s2.observables.clear();
    s2.histogram_edges.clear();
    const long n_steps = std::llround(std::ceil(s2.T / s2.dt - 1e-9));

    std::vector<int> outcome(s2.n_traj, -1);
    std::vector<double> purities(s2.n_traj, 0.0);
    std::vector<std::string> errors(s2.n_traj);
#ifdef _OPENMP
    const int workers = num_workers > 0 ? num_workers : omp_get_max_threads();
#else
    const int workers = 1;
#endif
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (int i = 0; i < s2.n_traj; ++i) {
        try {
            RngStream rng(s2.master_seed, std::uint64_t(i));
            ComplexMatrix final_rho;
            auto obs = [&](long step, double, const auto& rho, const RealVector&, const double*,
                           const double*, const std::uint8_t*) {
                if (step == n_steps) final_rho = rho;
            };
            detail::dispatch_dim(dim, [&](auto dim_tag) {
                detail::run_path<dim_tag()>(s2.model, s2.rho0, RealVector::Zero(0), s2.dt,
                                            n_steps, rng, s2.mode, s2.engine, obs);
            });
            purities[i] = purity(final_rho);
            int best = -1;
            double best_f = 0.0;
            for (int j = 0; j < n_out; ++j) {
                const double f =
                    (evecs.col(j).adjoint() * final_rho * evecs.col(j))(0, 0).real();
                if (f > best_f) {
                    best_f = f;
                    best = j;
                }
            }
            outcome[i] = best_f > 0.99 ? best : -1;
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (int i = 0; i < s2.n_traj; ++i)
        if (!errors[i].empty())
            throw std::runtime_error("trajectory " + std::to_string(i) + " failed: " + errors[i]);

    BornReport rep;
    rep.frequencies.assign(n_out, 0.0);
    rep.born_weights.assign(n_out, 0.0);
    rep.tolerances.assign(n_out, 0.0);
    int unresolved = 0;
    double purity_sum = 0.0;
    for (int i = 0; i < s2.n_traj; ++i) {
        purity_sum += purities[i];
        if (outcome[i] < 0)
            ++unresolved;
        else
            rep.frequencies[outcome[i]] += 1.0;
    }
    for (auto& f : rep.frequencies) f /= s2.n_traj;
    rep.unresolved_fraction = double(unresolved) / s2.n_traj;
    rep.mean_final_purity = purity_sum / s2.n_traj;

    bool ok = rep.unresolved_fraction < 0.01 && rep.mean_final_purity > 0.999;
    for (int j = 0; j < n_out; ++j) {
        const double w =
            (evecs.col(j).adjoint() * spec.rho0 * evecs.col(j))(0, 0).real();
        rep.born_weights[j] = w;
        rep.tolerances[j] = 3.0 * std::sqrt(std::max(0.0, w * (1.0 - w)) / s2.n_traj);
        if (std::abs(rep.frequencies[j] - w) > rep.tolerances[j]) ok = false;
    }
    rep.pass = ok;
    return rep;
}

}  // namespace hybridyn
