// Generative models: flow f, observation map g, their Jacobians and the
// fluctuation precisions. Parameters are frozen inside each model.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pcfe/error.hpp"

namespace pcfe {

using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using MatrixFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Symmetric positive-definite inverse-covariance matrix.
class PrecisionMatrix {
public:
    explicit PrecisionMatrix(Eigen::MatrixXd entries) : m_(std::move(entries)) {
        if (m_.rows() == 0 || m_.rows() != m_.cols())
            throw InvalidInput("precision matrix must be square and non-empty");
        if (!m_.allFinite()) throw InvalidInput("precision matrix has non-finite entries");
        const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
        if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw InvalidInput("precision matrix is not symmetric");
        Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (m_ + m_.transpose()));
        if (llt.info() != Eigen::Success)
            throw InvalidInput("precision matrix is not positive definite");
    }

    static PrecisionMatrix identity(Eigen::Index d) {
        return PrecisionMatrix(Eigen::MatrixXd::Identity(d, d));
    }

    const Eigen::MatrixXd& matrix() const noexcept { return m_; }
    Eigen::Index dim() const noexcept { return m_.rows(); }

private:
    Eigen::MatrixXd m_;
};

/// Central-difference Jacobian of `fn` at `x`, one column per coordinate.
inline Eigen::MatrixXd numerical_jacobian(const VectorFn& fn, const Eigen::VectorXd& x,
                                          double h = 1e-6) {
    const Eigen::VectorXd f0 = fn(x);
    Eigen::MatrixXd jac(f0.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        xp[j] += h;
        xm[j] -= h;
        jac.col(j) = (fn(xp) - fn(xm)) / (xp[j] - xm[j]);
    }
    return jac;
}

/// Immutable generative model. Construction checks precision shapes and
/// spot-checks the supplied Jacobians against central differences at a few
/// fixed probe points; a missing Jacobian falls back to finite differences.
class ModelSpec {
public:
    ModelSpec(std::string name, VectorFn flow, VectorFn obs, MatrixFn flow_jacobian,
              MatrixFn obs_jacobian, PrecisionMatrix pi_x, PrecisionMatrix pi_y)
        : name_(std::move(name)),
          flow_(std::move(flow)),
          obs_(std::move(obs)),
          flow_jac_(std::move(flow_jacobian)),
          obs_jac_(std::move(obs_jacobian)),
          pi_x_(std::move(pi_x)),
          pi_y_(std::move(pi_y)) {
        if (!flow_ || !obs_) throw InvalidInput("model '" + name_ + "': flow and obs are required");
        if (!flow_jac_) {
            flow_jac_ = [f = flow_](const Eigen::VectorXd& x) { return numerical_jacobian(f, x); };
        }
        if (!obs_jac_) {
            obs_jac_ = [g = obs_](const Eigen::VectorXd& x) { return numerical_jacobian(g, x); };
        }
        spot_check();
    }

    const std::string& name() const noexcept { return name_; }
    Eigen::Index state_dim() const noexcept { return pi_x_.dim(); }
    Eigen::Index obs_dim() const noexcept { return pi_y_.dim(); }

    Eigen::VectorXd flow(const Eigen::VectorXd& x) const { return flow_(x); }
    Eigen::VectorXd obs(const Eigen::VectorXd& x) const { return obs_(x); }
    Eigen::MatrixXd flow_jacobian(const Eigen::VectorXd& x) const { return flow_jac_(x); }
    Eigen::MatrixXd obs_jacobian(const Eigen::VectorXd& x) const { return obs_jac_(x); }

    const PrecisionMatrix& pi_x() const noexcept { return pi_x_; }
    const PrecisionMatrix& pi_y() const noexcept { return pi_y_; }

    /// Same model with both precisions replaced.
    ModelSpec with_precisions(PrecisionMatrix pi_x, PrecisionMatrix pi_y) const {
        return ModelSpec(name_, flow_, obs_, flow_jac_, obs_jac_, std::move(pi_x),
                         std::move(pi_y));
    }

private:
    void spot_check() const {
        const Eigen::Index dx = state_dim();
        const Eigen::Index dy = obs_dim();
        std::mt19937_64 rng(0x5eed);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        for (int probe = 0; probe < 5; ++probe) {
            Eigen::VectorXd x(dx);
            for (Eigen::Index i = 0; i < dx; ++i) x[i] = u(rng);

            const Eigen::VectorXd fx = flow_(x);
            const Eigen::VectorXd gx = obs_(x);
            if (fx.size() != dx)
                throw InvalidInput("model '" + name_ + "': flow output dimension != pi_x dimension");
            if (gx.size() != dy)
                throw InvalidInput("model '" + name_ + "': obs output dimension != pi_y dimension");

            check_jacobian("flow", flow_jac_(x), numerical_jacobian(flow_, x));
            check_jacobian("obs", obs_jac_(x), numerical_jacobian(obs_, x));
        }
    }

    void check_jacobian(const char* which, const Eigen::MatrixXd& analytic,
                        const Eigen::MatrixXd& numeric) const {
        if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols())
            throw InvalidInput("model '" + name_ + "': " + which + " Jacobian has wrong shape");
        const Eigen::ArrayXXd diff = (analytic - numeric).array().abs();
        const Eigen::ArrayXXd bound = 1e-4 * numeric.array().abs() + 1e-6;
        if ((diff > bound).any())
            throw InvalidInput("model '" + name_ + "': " + which +
                               " Jacobian disagrees with finite differences");
    }

    std::string name_;
    VectorFn flow_;
    VectorFn obs_;
    MatrixFn flow_jac_;
    MatrixFn obs_jac_;
    PrecisionMatrix pi_x_;
    PrecisionMatrix pi_y_;
};

/// Linear pullback attractor f(x) = -A (x - phi) with identity observations.
inline ModelSpec make_pullback_model(const Eigen::MatrixXd& A, const Eigen::VectorXd& phi,
                                     PrecisionMatrix pi_x, PrecisionMatrix pi_y,
                                     std::string name = "pullback") {
    if (!A.allFinite() || !phi.allFinite()) throw InvalidInput("pullback: non-finite A or phi");
    if (A.rows() != A.cols() || A.rows() != phi.size() || A.rows() != pi_x.dim())
        throw InvalidInput("pullback: A, phi and pi_x dimensions disagree");
    if (pi_y.dim() != pi_x.dim())
        throw InvalidInput("pullback: identity observations need dim(pi_y) == dim(pi_x)");
    const Eigen::Index d = A.rows();
    return ModelSpec(
        std::move(name),
        [A, phi](const Eigen::VectorXd& x) -> Eigen::VectorXd { return -A * (x - phi); },
        [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x; },
        [A](const Eigen::VectorXd&) -> Eigen::MatrixXd { return -A; },
        [d](const Eigen::VectorXd&) -> Eigen::MatrixXd { return Eigen::MatrixXd::Identity(d, d); },
        std::move(pi_x), std::move(pi_y));
}

/// f(x) = sin(x) elementwise with identity observations.
inline ModelSpec make_trig_model(PrecisionMatrix pi_x, PrecisionMatrix pi_y,
                                 std::string name = "trig") {
    if (pi_y.dim() != pi_x.dim())
        throw InvalidInput("trig: identity observations need dim(pi_y) == dim(pi_x)");
    const Eigen::Index d = pi_x.dim();
    return ModelSpec(
        std::move(name),
        [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x.array().sin().matrix(); },
        [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x; },
        [](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
            return x.array().cos().matrix().asDiagonal();
        },
        [d](const Eigen::VectorXd&) -> Eigen::MatrixXd { return Eigen::MatrixXd::Identity(d, d); },
        std::move(pi_x), std::move(pi_y));
}

/// Expected sensations y_hat = g(mu) for a sequence of state beliefs.
inline std::vector<Eigen::VectorXd> predict_observations(const ModelSpec& model,
                                                         const std::vector<Eigen::VectorXd>& states) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(states.size());
    for (const auto& x : states) out.push_back(model.obs(x));
    return out;
}

}  // namespace pcfe
