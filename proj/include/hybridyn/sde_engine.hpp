#pragma once

#include <cstdint>
#include <vector>

#include "hybridyn/model.hpp"
#include "hybridyn/rng.hpp"

namespace hybridyn {

struct HybridState {
    ComplexMatrix rho;
    RealVector z;
    double t = 0.0;
};

struct StepIncrements {
    RealVector dW;
    RealVector dr;                          // valid only where dr_available
    std::vector<std::uint8_t> dr_available;  // one flag per channel (eta_k > 0)
};

enum class StepMode { hybrid, markovian_feedback, linear };

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<HybridState> states;
    std::vector<StepIncrements> increments;
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
    double dt = 0.0;
    StepMode mode = StepMode::hybrid;
};

struct EngineOptions {
    /// Abort threshold on the smallest eigenvalue of the evolved state.
    double positivity_abort = -1e-6;
    bool monitor_positivity = true;
};

/// One step of the coupled quantum-classical system driven by the Wiener
/// increments dW. Returns the new state and the emitted signal increments.
std::pair<HybridState, StepIncrements> step_hybrid(const HybridModel& model,
                                                   const HybridState& state,
                                                   const RealVector& dW, double dt,
                                                   const EngineOptions& opts = {});

/// One step of the linear (unnormalized) equation driven by the signal dr.
/// No renormalization is applied; entries of dr for eta_k = 0 channels are ignored.
ComplexMatrix step_linear(const HybridModel& model, const ComplexMatrix& rho_tilde,
                          const RealVector& z, const RealVector& dr, double dt);

/// Reconstruct a state update from recorded signal increments. Feeding back the
/// dr emitted by step_hybrid on the same state reproduces that step's result.
ComplexMatrix reconstruct_from_signal(const HybridModel& model, const ComplexMatrix& rho,
                                      const RealVector& z, const RealVector& dr, double dt);

/// Measurement step followed by the exact unitary feedback kick
/// exp(-i sum_k b_k dr_k). Requires eta_k > 0 wherever b_k != 0.
HybridState step_markovian_feedback(const HybridModel& model, const HybridState& state,
                                    const RealVector& dW, double dt,
                                    const EngineOptions& opts = {});

/// Integrate a full trajectory with uniform step dt over [0, T], recording
/// every step. In linear mode the stored states are the normalized rho_tilde.
TrajectoryRecord run_trajectory(const HybridModel& model, const HybridState& initial, double dt,
                                double T, RngStream rng, StepMode mode = StepMode::hybrid,
                                const EngineOptions& opts = {});

struct ItoReport {
    // (a) pathwise Ito integral of W dW against its closed form
    double pathwise_max_error = 0.0;
    double pathwise_bound = 0.0;
    double empirical_c = 0.0;  // max error / (sqrt(dt) T)
    bool pathwise_pass = false;
    // (b) martingale property of int sin(t) dW
    double martingale_mean = 0.0;
    double martingale_tol = 0.0;
    bool martingale_pass = false;
    // (c) realized quadratic variation vs T
    double qv_mean_error = 0.0;
    double qv_tol = 0.0;
    double qv_pathwise_max = 0.0;
    double qv_pathwise_bound = 0.0;
    bool qv_pass = false;

    bool all_pass() const { return pathwise_pass && martingale_pass && qv_pass; }
};

/// Discrete Ito-calculus self-tests: pathwise W dW identity, martingale
/// property of a deterministic integrand, and quadratic-variation concentration.
ItoReport ito_selftest(RngStream rng, double dt, int n_steps, int n_paths);

}  // namespace hybridyn
