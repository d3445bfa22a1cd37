#pragma once

#include <cmath>
#include <sstream>
#include <utility>

#include "hybridyn/sde_engine.hpp"

namespace hybridyn::detail {

/// Exactly unitary exp(-i h s). Closed form for 2x2, eigendecomposition
/// otherwise; either way U U^+ = I to machine precision.
template <class Mat>
inline void unitary_from_hermitian(const Mat& h, double s, Mat& u) {
    const Eigen::Index n = h.rows();
    if (n == 2) {
        const double alpha = 0.5 * (h(0, 0).real() + h(1, 1).real());
        const double vx = h(0, 1).real();
        const double vy = -h(0, 1).imag();
        const double vz = 0.5 * (h(0, 0).real() - h(1, 1).real());
        const double vn = std::sqrt(vx * vx + vy * vy + vz * vz);
        const Complex phase = std::exp(Complex(0.0, -alpha * s));
        u.resize(2, 2);
        if (vn * std::abs(s) < 1e-300) {
            u.setZero();
            u(0, 0) = phase;
            u(1, 1) = phase;
            return;
        }
        const double th = vn * s;
        const double c = std::cos(th), sn = std::sin(th);
        const double ux = vx / vn, uy = vy / vn, uz = vz / vn;
        // cos(th) I - i sin(th) (u . sigma)
        u(0, 0) = phase * Complex(c, -sn * uz);
        u(1, 1) = phase * Complex(c, sn * uz);
        u(0, 1) = phase * (Complex(0.0, -sn) * Complex(ux, -uy));
        u(1, 0) = phase * (Complex(0.0, -sn) * Complex(ux, uy));
        return;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    ComplexVector ph(n);
    for (Eigen::Index i = 0; i < n; ++i) ph(i) = std::exp(Complex(0.0, -es.eigenvalues()(i) * s));
    u = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

template <class Mat>
inline double lambda_min(const Mat& m) {
    const Eigen::Index n = m.rows();
    if (n == 1) return m(0, 0).real();
    if (n == 2) {
        const double a = m(0, 0).real(), d = m(1, 1).real();
        const double off = std::norm(m(0, 1));
        return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + off);
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

/// Stepping workspace for one trajectory. N is the compile-time Hilbert
/// dimension (2, 4, or Eigen::Dynamic); all per-step work is allocation-free
/// for fixed N. Coefficients are evaluated at the pre-step state (Ito
/// convention, left endpoint).
template <int N>
class Stepper {
  public:
    using Mat = Eigen::Matrix<Complex, N, N>;

    Stepper(const HybridModel& model, double dt, EngineOptions opts = {})
        : model_(&model), dt_(dt), opts_(opts), dim_(model.hilbert_dim),
          n_(model.num_channels()), d_(model.classical_dim) {
        if (dt <= 0.0) throw std::invalid_argument("Stepper: dt must be positive");
        if (N != Eigen::Dynamic && N != model.hilbert_dim)
            throw std::invalid_argument("Stepper: dimension mismatch");
        chans_.resize(n_);
        k_.resize(dim_, dim_);
        t1_.resize(dim_, dim_);
        t2_.resize(dim_, dim_);
        qhalf_dt_.resize(dim_, dim_);
        u_.resize(dim_, dim_);
        kick_gen_.resize(dim_, dim_);
        kick_u_.resize(dim_, dim_);
        mean_.resize(n_);
        if (model.has_feedback()) {
            if (int(model.feedback_ops.size()) != n_)
                throw std::invalid_argument("Stepper: feedback_ops must match channel count");
            fb_.resize(n_);
        }
        if (d_ > 0) {
            fbuf_.resize(d_);
            gbuf_.resize(d_, n_);
        }
        const RealVector z0 = RealVector::Zero(d_);
        refresh(z0, true);
    }

    int num_channels() const { return n_; }
    double dt() const { return dt_; }
    const EngineOptions& options() const { return opts_; }

    /// Re-evaluate z-dependent model quantities. Constant parts are kept.
    void refresh(const RealVector& z, bool force = false) {
        if (force || !model_->h0.constant) {
            model_->h0.eval(z, dyn_);
            if (dyn_.rows() != dim_ || dyn_.cols() != dim_)
                throw std::invalid_argument("Stepper: H0 has wrong shape");
            have_h_ = dyn_.cwiseAbs().maxCoeff() > 0.0;
            if (have_h_) unitary_from_hermitian<Mat>(h_ = dyn_, dt_, u_);
        }
        bool q_dirty = force;
        for (int k = 0; k < n_; ++k) {
            auto& ch = chans_[k];
            const auto& spec = model_->channels[k];
            if (force || !spec.c.constant) {
                spec.c.eval(z, dyn_);
                if (dyn_.rows() != dim_ || dyn_.cols() != dim_)
                    throw std::invalid_argument("Stepper: channel operator has wrong shape");
                ch.c = dyn_;
                ch.a = ch.c + ch.c.adjoint();
                ch.q = ch.c.adjoint() * ch.c;
                q_dirty = true;
            }
            if (force || !spec.eta.constant) {
                ch.eta = spec.eta.eval(z);
                if (ch.eta < 0.0 || ch.eta > 1.0)
                    throw std::invalid_argument("Stepper: eta outside [0,1]");
                ch.sqrt_eta = std::sqrt(ch.eta);
                ch.inv_2sqrt_eta = ch.eta > 0.0 ? 0.5 / ch.sqrt_eta : 0.0;
            }
        }
        if (q_dirty) {
            qhalf_dt_.setZero(dim_, dim_);
            for (const auto& ch : chans_) qhalf_dt_ += ch.q;
            qhalf_dt_ *= 0.5 * dt_;
        }
        for (std::size_t k = 0; k < fb_.size(); ++k) {
            if (force || !model_->feedback_ops[k].constant) {
                model_->feedback_ops[k].eval(z, dyn_);
                fb_[k].b = dyn_;
                fb_[k].nonzero = dyn_.cwiseAbs().maxCoeff() > 0.0;
            }
        }
        if (model_->has_feedback()) {
            for (int k = 0; k < n_; ++k)
                if (fb_[k].nonzero && chans_[k].eta <= 0.0)
                    throw std::invalid_argument(
                        "Stepper: feedback operator on an eta = 0 channel (no signal exists)");
        }
    }

    /// tr[(c_k + c_k^+) rho] for every channel.
    void signal_means(const Mat& rho) {
        for (int k = 0; k < n_; ++k)
            mean_(k) = chans_[k].a.cwiseProduct(rho.transpose()).sum().real();
    }

    /// Signal increments from Wiener increments (means must be current).
    /// dr_k = (1/2) tr[(c_k+c_k^+) rho] dt + dW_k / (2 sqrt(eta_k)), eta_k > 0.
    void make_signal(const double* dW, double* dr, std::uint8_t* avail) {
        for (int k = 0; k < n_; ++k) {
            if (chans_[k].eta > 0.0) {
                dr[k] = 0.5 * mean_(k) * dt_ + dW[k] * chans_[k].inv_2sqrt_eta;
                if (avail) avail[k] = 1;
            } else {
                dr[k] = 0.0;
                if (avail) avail[k] = 0;
            }
        }
    }

    /// Measurement-map update driven by the signal increments:
    ///   K = I - (1/2) sum_k c_k^+ c_k dt + sum_k (2 eta_k dr_k) c_k
    ///   rho' = U [K rho K^+ + sum_k (1 - eta_k) dt c_k rho c_k^+] U^+
    /// with U = exp(-i H0 dt). The map is completely positive, so positivity,
    /// purity at eta = 1, and product structure are preserved exactly; it
    /// agrees with the Euler-Maruyama expansion of the SME to first order.
    void apply_measurement(Mat& rho, const double* dr, bool renormalize) {
        k_ = -qhalf_dt_;
        for (Eigen::Index i = 0; i < dim_; ++i) k_(i, i) += 1.0;
        for (int k = 0; k < n_; ++k) {
            const auto& ch = chans_[k];
            if (ch.eta > 0.0) k_ += (2.0 * ch.eta * dr[k]) * ch.c;
        }
        t1_.noalias() = k_ * rho;
        t2_.noalias() = t1_ * k_.adjoint();
        for (int k = 0; k < n_; ++k) {
            const auto& ch = chans_[k];
            if (ch.eta < 1.0) {
                t1_.noalias() = ch.c * rho;
                t2_.noalias() += ((1.0 - ch.eta) * dt_) * (t1_ * ch.c.adjoint());
            }
        }
        if (have_h_) {
            t1_.noalias() = u_ * t2_;
            t2_.noalias() = t1_ * u_.adjoint();
        }
        rho = 0.5 * (t2_ + t2_.adjoint());
        if (renormalize) rho /= rho.trace().real();
    }

    /// Exact unitary feedback kick exp(-i sum_k b_k dr_k).
    void apply_feedback(Mat& rho, const double* dr) {
        kick_gen_.setZero(dim_, dim_);
        bool any = false;
        for (int k = 0; k < n_; ++k) {
            if (!fb_[k].nonzero) continue;
            kick_gen_ += dr[k] * fb_[k].b;
            any = true;
        }
        if (!any) return;
        unitary_from_hermitian<Mat>(kick_gen_, 1.0, kick_u_);
        t1_.noalias() = kick_u_ * rho;
        t2_.noalias() = t1_ * kick_u_.adjoint();
        rho = 0.5 * (t2_ + t2_.adjoint());
        rho /= rho.trace().real();
    }

    /// Euler-Maruyama update of the classical variables (means must be current):
    ///   z_a' = z_a + F_a dt + sum_k G_ak [ (sqrt(eta_k)/2) m_k dt + dW_k / 2 ].
    void classical_update(RealVector& z, const double* dW) {
        if (d_ == 0) return;
        model_->drift_f(z, fbuf_);
        model_->coupling_g(z, gbuf_);
        for (int a = 0; a < d_; ++a) {
            double dz = fbuf_(a) * dt_;
            for (int k = 0; k < n_; ++k)
                dz += gbuf_(a, k) * (0.5 * chans_[k].sqrt_eta * mean_(k) * dt_ + 0.5 * dW[k]);
            z(a) += dz;
        }
    }

    void check_state(const Mat& rho, double t, long step) const {
        if (!rho.allFinite()) {
            std::ostringstream os;
            os << "non-finite state at t=" << t << " (step " << step
               << "); retry with a smaller dt (e.g. dt/10 = " << dt_ / 10 << ")";
            throw std::runtime_error(os.str());
        }
        if (opts_.monitor_positivity) {
            const double lmin = lambda_min<Mat>(rho);
            if (lmin < opts_.positivity_abort) {
                std::ostringstream os;
                os << "positivity violation lambda_min=" << lmin << " below threshold "
                   << opts_.positivity_abort << " at t=" << t << " (step " << step << ")";
                throw std::runtime_error(os.str());
            }
        }
    }

    double mean(int k) const { return mean_(k); }

  private:
    struct ChanData {
        Mat c, a, q;  // operator, c + c^+, c^+ c
        double eta = 1.0, sqrt_eta = 1.0, inv_2sqrt_eta = 0.5;
    };
    struct FbData {
        Mat b;
        bool nonzero = false;
    };

    const HybridModel* model_;
    double dt_;
    EngineOptions opts_;
    Eigen::Index dim_;
    int n_, d_;
    std::vector<ChanData> chans_;
    std::vector<FbData> fb_;
    Mat h_, u_, qhalf_dt_, k_, t1_, t2_, kick_gen_, kick_u_;
    bool have_h_ = false;
    ComplexMatrix dyn_;  // closure evaluation buffer
    RealVector mean_, fbuf_;
    RealMatrix gbuf_;
};

/// Run a path, invoking obs(step, t, rho, z, dW, dr, avail) after the initial
/// state (step 0, null increments) and after every step. In linear mode the
/// reported state is the normalized unnormalized-equation solution.
template <int N, class Obs>
void run_path(const HybridModel& model, const ComplexMatrix& rho0, const RealVector& z0,
              double dt, long n_steps, RngStream& rng, StepMode mode, const EngineOptions& opts,
              Obs&& obs) {
    using Mat = typename Stepper<N>::Mat;
    Stepper<N> st(model, dt, opts);
    const int n = model.num_channels();

    Mat rho = rho0;
    Mat rho_tilde;
    Mat reported;
    if (mode == StepMode::linear) rho_tilde = rho0;
    RealVector z = z0;
    RealVector dW(n), dr(n);
    std::vector<std::uint8_t> avail(std::size_t(n), 0);

    if (mode == StepMode::markovian_feedback && !model.has_feedback())
        throw std::invalid_argument("run_path: markovian_feedback mode requires feedback_ops");

    obs(0L, 0.0, rho, z, nullptr, nullptr, nullptr);
    const double sq_dt = std::sqrt(dt);
    for (long s = 1; s <= n_steps; ++s) {
        st.refresh(z);
        for (int k = 0; k < n; ++k) dW(k) = sq_dt * rng.gaussian();
        st.signal_means(rho);
        st.make_signal(dW.data(), dr.data(), avail.data());
        st.apply_measurement(rho, dr.data(), /*renormalize=*/true);
        if (mode == StepMode::markovian_feedback) st.apply_feedback(rho, dr.data());
        st.classical_update(z, dW.data());
        const double t = double(s) * dt;
        st.check_state(rho, t, s);
        if (mode == StepMode::linear) {
            st.apply_measurement(rho_tilde, dr.data(), /*renormalize=*/false);
            reported = rho_tilde / rho_tilde.trace().real();
            st.check_state(reported, t, s);
            obs(s, t, reported, z, dW.data(), dr.data(), avail.data());
        } else {
            obs(s, t, rho, z, dW.data(), dr.data(), avail.data());
        }
    }
}

template <class F>
decltype(auto) dispatch_dim(int dim, F&& f) {
    if (dim == 2) return f(std::integral_constant<int, 2>{});
    if (dim == 4) return f(std::integral_constant<int, 4>{});
    return f(std::integral_constant<int, Eigen::Dynamic>{});
}

}  // namespace hybridyn::detail
