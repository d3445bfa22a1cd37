#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hybridyn/quantum_core.hpp"

namespace hybridyn {

/// z-dependent operator. `eval` writes into `out` (resized as needed); the
/// `constant` flag lets engines cache the value once per trajectory.
struct ZOperator {
    std::function<void(const RealVector& z, ComplexMatrix& out)> eval;
    bool constant = true;

    ComplexMatrix at(const RealVector& z) const {
        ComplexMatrix m;
        eval(z, m);
        return m;
    }

    static ZOperator fixed(ComplexMatrix m) {
        return {[m = std::move(m)](const RealVector&, ComplexMatrix& out) { out = m; }, true};
    }
};

struct ZScalar {
    std::function<double(const RealVector& z)> eval;
    bool constant = true;

    static ZScalar fixed(double v) {
        return {[v](const RealVector&) { return v; }, true};
    }
};

struct ChannelSpec {
    ZOperator c;
    ZScalar eta;

    MeasurementChannel at(const RealVector& z) const { return {c.at(z), eta.eval(z)}; }
};

/// Full dynamics specification: H0(z), channels {c_k(z), eta_k(z)}, classical
/// drift F(z), signal coupling G(z), optional Hermitian feedback operators b_k.
struct HybridModel {
    int hilbert_dim = 2;
    int classical_dim = 0;  // d
    ZOperator h0;
    std::vector<ChannelSpec> channels;
    std::function<void(const RealVector& z, RealVector& out)> drift_f;  // d-vector
    bool drift_constant = true;
    std::function<void(const RealVector& z, RealMatrix& out)> coupling_g;  // d x n
    bool coupling_constant = true;
    std::vector<ZOperator> feedback_ops;  // empty unless Markovian feedback is used

    int num_channels() const { return int(channels.size()); }
    bool has_feedback() const { return !feedback_ops.empty(); }
    bool quantum_z_independent() const;

    RealVector drift_at(const RealVector& z) const;
    RealMatrix coupling_at(const RealVector& z) const;

    static HybridModel closed(int dim, ComplexMatrix h);
};

struct ScenarioId {
    std::string name;
    std::map<std::string, double> parameters;
};

/// Names of all built-in scenarios.
std::vector<std::string> scenario_registry();

/// Parameter names and defaults for a registry scenario.
std::map<std::string, double> scenario_defaults(const std::string& name);

/// Construct a registry scenario; unknown names or parameters raise.
HybridModel build_scenario(const ScenarioId& id);

/// Spot-check model consistency at the given classical points. Returns the
/// list of violations (empty means valid).
std::vector<std::string> validate(const HybridModel& model,
                                  const std::vector<RealVector>& sample_points);

}  // namespace hybridyn
