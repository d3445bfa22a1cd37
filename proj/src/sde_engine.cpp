#include "hybridyn/sde_engine.hpp"

#include <cmath>

#include "hybridyn/detail/stepper.hpp"

namespace hybridyn {

namespace {

void check_dr_available(const HybridModel& model, const RealVector& dr) {
    if (dr.size() != model.num_channels())
        throw std::invalid_argument("signal vector has wrong length");
    for (int k = 0; k < model.num_channels(); ++k) {
        // z-independent eta is the registry norm; sample at z = 0 otherwise.
        const double eta = model.channels[k].eta.eval(RealVector::Zero(model.classical_dim));
        if (eta > 0.0 && !std::isfinite(dr(k)))
            throw std::invalid_argument("missing dr entry for channel " + std::to_string(k) +
                                        " with eta > 0");
    }
}

}  // namespace

std::pair<HybridState, StepIncrements> step_hybrid(const HybridModel& model,
                                                   const HybridState& state, const RealVector& dW,
                                                   double dt, const EngineOptions& opts) {
    if (dW.size() != model.num_channels())
        throw std::invalid_argument("step_hybrid: dW has wrong length");
    detail::Stepper<Eigen::Dynamic> st(model, dt, opts);
    st.refresh(state.z);

    HybridState out = state;
    StepIncrements inc;
    inc.dW = dW;
    inc.dr.resize(model.num_channels());
    inc.dr_available.assign(std::size_t(model.num_channels()), 0);

    st.signal_means(out.rho);
    st.make_signal(dW.data(), inc.dr.data(), inc.dr_available.data());
    st.apply_measurement(out.rho, inc.dr.data(), /*renormalize=*/true);
    st.classical_update(out.z, dW.data());
    out.t = state.t + dt;
    st.check_state(out.rho, out.t, -1);
    return {std::move(out), std::move(inc)};
}

ComplexMatrix step_linear(const HybridModel& model, const ComplexMatrix& rho_tilde,
                          const RealVector& z, const RealVector& dr, double dt) {
    check_dr_available(model, dr);
    detail::Stepper<Eigen::Dynamic> st(model, dt);
    st.refresh(z);
    ComplexMatrix out = rho_tilde;
    st.apply_measurement(out, dr.data(), /*renormalize=*/false);
    if (!out.allFinite()) throw std::runtime_error("step_linear: non-finite state");
    return out;
}

ComplexMatrix reconstruct_from_signal(const HybridModel& model, const ComplexMatrix& rho,
                                      const RealVector& z, const RealVector& dr, double dt) {
    check_dr_available(model, dr);
    detail::Stepper<Eigen::Dynamic> st(model, dt);
    st.refresh(z);
    ComplexMatrix out = rho;
    st.apply_measurement(out, dr.data(), /*renormalize=*/true);
    st.check_state(out, dt, -1);
    return out;
}

HybridState step_markovian_feedback(const HybridModel& model, const HybridState& state,
                                    const RealVector& dW, double dt, const EngineOptions& opts) {
    if (!model.has_feedback())
        throw std::invalid_argument("step_markovian_feedback: model has no feedback_ops");
    detail::Stepper<Eigen::Dynamic> st(model, dt, opts);
    st.refresh(state.z);

    HybridState out = state;
    StepIncrements inc;
    inc.dr.resize(model.num_channels());
    inc.dr_available.assign(std::size_t(model.num_channels()), 0);
    st.signal_means(out.rho);
    st.make_signal(dW.data(), inc.dr.data(), inc.dr_available.data());
    st.apply_measurement(out.rho, inc.dr.data(), /*renormalize=*/true);
    st.apply_feedback(out.rho, inc.dr.data());
    st.classical_update(out.z, dW.data());
    out.t = state.t + dt;
    st.check_state(out.rho, out.t, -1);
    return out;
}

TrajectoryRecord run_trajectory(const HybridModel& model, const HybridState& initial, double dt,
                                double T, RngStream rng, StepMode mode,
                                const EngineOptions& opts) {
    if (T <= 0.0 || dt <= 0.0) throw std::invalid_argument("run_trajectory: need T > 0, dt > 0");
    const long n_steps = long(std::ceil(T / dt - 1e-9));
    if (n_steps > 100000000L) throw std::invalid_argument("run_trajectory: T/dt exceeds 1e8");

    TrajectoryRecord rec;
    rec.master_seed = rng.master_seed();
    rec.stream_index = rng.stream_index();
    rec.dt = dt;
    rec.mode = mode;
    rec.times.reserve(n_steps + 1);
    rec.states.reserve(n_steps + 1);
    rec.increments.reserve(n_steps);

    const int n = model.num_channels();
    auto obs = [&](long step, double t, const auto& rho, const RealVector& z, const double* dW,
                   const double* dr, const std::uint8_t* avail) {
        rec.times.push_back(step == 0 ? initial.t : initial.t + t);
        rec.states.push_back({ComplexMatrix(rho), z, rec.times.back()});
        if (step > 0) {
            StepIncrements inc;
            inc.dW = Eigen::Map<const RealVector>(dW, n);
            inc.dr = Eigen::Map<const RealVector>(dr, n);
            inc.dr_available.assign(avail, avail + n);
            rec.increments.push_back(std::move(inc));
        }
    };
    try {
        detail::dispatch_dim(model.hilbert_dim, [&](auto dim_tag) {
            detail::run_path<dim_tag()>(model, initial.rho, initial.z, dt, n_steps, rng, mode,
                                        opts, obs);
        });
    } catch (const std::exception& e) {
        throw std::runtime_error("run_trajectory: step " + std::to_string(rec.states.size()) +
                                 " failed: " + e.what());
    }
    return rec;
}

ItoReport ito_selftest(RngStream rng, double dt, int n_steps, int n_paths) {
    ItoReport rep;
    const double T = dt * n_steps;

    double sum_f = 0.0, sum_qv_err = 0.0;
    double max_wdw_err = 0.0, max_qv_err = 0.0;
    double var_f = 0.0;  // discrete int sin^2 dt
    for (int k = 0; k < n_steps; ++k) {
        const double s = std::sin(k * dt);
        var_f += s * s * dt;
    }

    for (int p = 0; p < n_paths; ++p) {
        RngStream stream(rng.master_seed(), (rng.stream_index() << 20) + 1 + p);
        double w = 0.0, s_wdw = 0.0, s_f = 0.0, s_qv = 0.0;
        const double sq = std::sqrt(dt);
        for (int k = 0; k < n_steps; ++k) {
            const double dW = sq * stream.gaussian();
            s_wdw += w * dW;
            s_f += std::sin(k * dt) * dW;
            s_qv += dW * dW;
            w += dW;
        }
        max_wdw_err = std::max(max_wdw_err, std::abs(s_wdw - 0.5 * (w * w - T)));
        max_qv_err = std::max(max_qv_err, std::abs(s_qv - T));
        sum_f += s_f;
        sum_qv_err += s_qv - T;
    }

    rep.pathwise_max_error = max_wdw_err;
    rep.pathwise_bound = 6.0 * std::sqrt(dt) * T;
    rep.empirical_c = max_wdw_err / (std::sqrt(dt) * T);
    rep.pathwise_pass = max_wdw_err <= rep.pathwise_bound;

    rep.martingale_mean = sum_f / n_paths;
    rep.martingale_tol = 4.0 * std::sqrt(var_f / n_paths);
    rep.martingale_pass = std::abs(rep.martingale_mean) <= rep.martingale_tol;

    rep.qv_mean_error = sum_qv_err / n_paths;
    rep.qv_tol = 4.0 * std::sqrt(2.0 * dt * T / n_paths);
    rep.qv_pathwise_max = max_qv_err;
    rep.qv_pathwise_bound = 6.0 * std::sqrt(2.0 * dt * T);
    rep.qv_pass =
        std::abs(rep.qv_mean_error) <= rep.qv_tol && max_qv_err <= rep.qv_pathwise_bound;
    return rep;
}

}  // namespace hybridyn
