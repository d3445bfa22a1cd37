#include "hybridyn/model.hpp"

#include <algorithm>
#include <sstream>

namespace hybridyn {

bool HybridModel::quantum_z_independent() const {
    if (!h0.constant) return false;
    for (const auto& ch : channels)
        if (!ch.c.constant || !ch.eta.constant) return false;
    for (const auto& b : feedback_ops)
        if (!b.constant) return false;
    return true;
}

RealVector HybridModel::drift_at(const RealVector& z) const {
    RealVector out = RealVector::Zero(classical_dim);
    if (drift_f) drift_f(z, out);
    return out;
}

RealMatrix HybridModel::coupling_at(const RealVector& z) const {
    RealMatrix out = RealMatrix::Zero(classical_dim, num_channels());
    if (coupling_g) coupling_g(z, out);
    return out;
}

HybridModel HybridModel::closed(int dim, ComplexMatrix h) {
    HybridModel m;
    m.hilbert_dim = dim;
    m.classical_dim = 0;
    m.h0 = ZOperator::fixed(std::move(h));
    return m;
}

namespace {

struct ScenarioDef {
    std::map<std::string, double> defaults;
    HybridModel (*build)(const std::map<std::string, double>&);
};

std::map<std::string, double> merged(const std::map<std::string, double>& defaults,
                                     const std::map<std::string, double>& user,
                                     const std::string& name) {
    std::map<std::string, double> out = defaults;
    for (const auto& [k, v] : user) {
        auto it = out.find(k);
        if (it == out.end()) {
            std::ostringstream os;
            os << "scenario '" << name << "': unknown parameter '" << k << "' (known:";
            for (const auto& [dk, dv] : defaults) os << ' ' << dk;
            os << ")";
            throw std::invalid_argument(os.str());
        }
        it->second = v;
    }
    return out;
}

void check_eta(double eta, const std::string& name) {
    if (eta < 0.0 || eta > 1.0)
        throw std::invalid_argument("scenario '" + name + "': eta must lie in [0,1]");
}

HybridModel make_dephasing(const std::map<std::string, double>& p) {
    check_eta(p.at("eta"), "dephasing_qubit");
    HybridModel m;
    m.hilbert_dim = 2;
    m.classical_dim = 0;
    m.h0 = ZOperator::fixed(ComplexMatrix::Zero(2, 2));
    m.channels.push_back({ZOperator::fixed(std::sqrt(p.at("gamma")) * pauli_z()),
                          ZScalar::fixed(p.at("eta"))});
    return m;
}

HybridModel make_rabi(const std::map<std::string, double>& p) {
    check_eta(p.at("eta"), "rabi_measured_qubit");
    HybridModel m;
    m.hilbert_dim = 2;
    m.classical_dim = 0;
    m.h0 = ZOperator::fixed(0.5 * p.at("Omega") * pauli_x());
    m.channels.push_back({ZOperator::fixed(std::sqrt(p.at("gamma")) * pauli_z()),
                          ZScalar::fixed(p.at("eta"))});
    return m;
}

HybridModel make_hybrid_linear(const std::map<std::string, double>& p) {
    check_eta(p.at("eta"), "hybrid_linear");
    HybridModel m;
    m.hilbert_dim = 2;
    m.classical_dim = 1;
    const double omega = p.at("Omega"), lambda = p.at("lambda");
    const double kappa = p.at("kappa"), g = p.at("g");
    m.h0 = {[omega, lambda](const RealVector& z, ComplexMatrix& out) {
                out = 0.5 * omega * pauli_x() + lambda * z(0) * pauli_z();
            },
            lambda == 0.0};
    m.channels.push_back({ZOperator::fixed(std::sqrt(p.at("gamma")) * pauli_z()),
                          ZScalar::fixed(p.at("eta"))});
    m.drift_f = [kappa](const RealVector& z, RealVector& out) { out(0) = -kappa * z(0); };
    m.drift_constant = (kappa == 0.0);
    m.coupling_g = [g](const RealVector&, RealMatrix& out) { out(0, 0) = g; };
    m.coupling_constant = true;
    return m;
}

HybridModel make_open_qbm(const std::map<std::string, double>& p) {
    check_eta(p.at("eta"), "open_qbm");
    HybridModel m;
    m.hilbert_dim = 2;
    m.classical_dim = 1;
    const double g = p.at("g");
    m.h0 = ZOperator::fixed(0.5 * p.at("Omega") * pauli_x());
    m.channels.push_back({ZOperator::fixed(std::sqrt(p.at("gamma")) * pauli_z()),
                          ZScalar::fixed(p.at("eta"))});
    m.drift_f = [](const RealVector&, RealVector& out) { out(0) = 0.0; };
    m.drift_constant = true;
    m.coupling_g = [g](const RealVector&, RealMatrix& out) { out(0, 0) = g; };
    m.coupling_constant = true;
    return m;
}

HybridModel make_markovian_feedback(const std::map<std::string, double>& p) {
    check_eta(p.at("eta"), "markovian_feedback_qubit");
    HybridModel m;
    m.hilbert_dim = 2;
    m.classical_dim = 0;
    m.h0 = ZOperator::fixed(ComplexMatrix::Zero(2, 2));
    m.channels.push_back({ZOperator::fixed(std::sqrt(p.at("gamma")) * pauli_z()),
                          ZScalar::fixed(p.at("eta"))});
    m.feedback_ops.push_back(ZOperator::fixed(p.at("mu") * pauli_x()));
    return m;
}

HybridModel make_two_qubit_product(const std::map<std::string, double>& p) {
    check_eta(p.at("eta"), "two_qubit_product");
    HybridModel m;
    m.hilbert_dim = 4;
    m.classical_dim = 0;
    const ComplexMatrix i2 = ComplexMatrix::Identity(2, 2);
    m.h0 = ZOperator::fixed(ComplexMatrix::Zero(4, 4));
    m.channels.push_back({ZOperator::fixed(std::sqrt(p.at("gamma")) * kron(pauli_z(), i2)),
                          ZScalar::fixed(p.at("eta"))});
    m.feedback_ops.push_back(ZOperator::fixed(p.at("mu") * kron(i2, pauli_x())));
    return m;
}

const std::map<std::string, ScenarioDef>& registry() {
    static const std::map<std::string, ScenarioDef> reg = {
        {"dephasing_qubit", {{{"gamma", 1.0}, {"eta", 1.0}}, &make_dephasing}},
        {"rabi_measured_qubit", {{{"Omega", 1.0}, {"gamma", 1.0}, {"eta", 1.0}}, &make_rabi}},
        {"hybrid_linear",
         {{{"Omega", 1.0}, {"gamma", 1.0}, {"kappa", 0.5}, {"g", 0.5}, {"lambda", 0.5},
           {"eta", 1.0}},
          &make_hybrid_linear}},
        {"open_qbm", {{{"Omega", 1.0}, {"gamma", 1.0}, {"g", 1.0}, {"eta", 1.0}}, &make_open_qbm}},
        {"markovian_feedback_qubit",
         {{{"gamma", 1.0}, {"mu", 0.5}, {"eta", 1.0}}, &make_markovian_feedback}},
        {"two_qubit_product",
         {{{"gamma", 1.0}, {"mu", 0.5}, {"eta", 1.0}}, &make_two_qubit_product}},
    };
    return reg;
}

}  // namespace

std::vector<std::string> scenario_registry() {
    std::vector<std::string> names;
    for (const auto& [k, v] : registry()) names.push_back(k);
    return names;
}

std::map<std::string, double> scenario_defaults(const std::string& name) {
    auto it = registry().find(name);
    if (it == registry().end()) throw std::invalid_argument("unknown scenario '" + name + "'");
    return it->second.defaults;
}

HybridModel build_scenario(const ScenarioId& id) {
    auto it = registry().find(id.name);
    if (it == registry().end()) {
        std::ostringstream os;
        os << "unknown scenario '" << id.name << "'; registry:";
        for (const auto& n : scenario_registry()) os << ' ' << n;
        throw std::invalid_argument(os.str());
    }
    return it->second.build(merged(it->second.defaults, id.parameters, id.name));
}

std::vector<std::string> validate(const HybridModel& model,
                                  const std::vector<RealVector>& sample_points) {
    std::vector<std::string> violations;
    auto note = [&](const std::string& s) { violations.push_back(s); };

    std::vector<RealVector> points = sample_points;
    if (points.empty()) points.push_back(RealVector::Zero(model.classical_dim));

    for (const auto& z : points) {
        if (z.size() != model.classical_dim) {
            note("sample point dimension differs from classical_dim");
            continue;
        }
        std::ostringstream where;
        where << "at z=(" << z.transpose() << ")";

        ComplexMatrix h = model.h0.at(z);
        if (h.rows() != model.hilbert_dim || h.cols() != model.hilbert_dim)
            note("H0 has wrong shape " + where.str());
        else if (!is_hermitian(h))
            note("H0 not Hermitian " + where.str());

        for (int k = 0; k < model.num_channels(); ++k) {
            ComplexMatrix c = model.channels[k].c.at(z);
            if (c.rows() != model.hilbert_dim || c.cols() != model.hilbert_dim)
                note("channel " + std::to_string(k) + " has wrong shape " + where.str());
            const double eta = model.channels[k].eta.eval(z);
            if (eta < 0.0 || eta > 1.0)
                note("channel " + std::to_string(k) + " eta outside [0,1] " + where.str());
        }

        for (std::size_t k = 0; k < model.feedback_ops.size(); ++k) {
            ComplexMatrix b = model.feedback_ops[k].at(z);
            if (b.rows() != model.hilbert_dim || b.cols() != model.hilbert_dim)
                note("feedback op " + std::to_string(k) + " has wrong shape " + where.str());
            else if (!is_hermitian(b))
                note("feedback op " + std::to_string(k) + " not Hermitian " + where.str());
        }

        if (model.classical_dim > 0) {
            if (!model.drift_f) {
                note("classical_dim > 0 but no drift F given");
            } else {
                RealVector f = model.drift_at(z);
                if (f.size() != model.classical_dim) note("F has wrong shape " + where.str());
            }
            if (!model.coupling_g) {
                note("classical_dim > 0 but no coupling G given");
            } else {
                RealMatrix g = model.coupling_at(z);
                if (g.rows() != model.classical_dim || g.cols() != model.num_channels())
                    note("G has wrong shape " + where.str());
            }
        }
    }
    if (!model.feedback_ops.empty() && model.feedback_ops.size() != model.channels.size())
        note("feedback_ops must match channel count when present");
    return violations;
}

}  // namespace hybridyn
