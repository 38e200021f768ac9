// Laplace-approximated variational free energy for a one-layer predictive
// coding network in generalised coordinates (position, velocity).
//
//   eps_y = y - g(mu)
//   eps_x = (mu_dot - f(mu), -J mu_dot)         J = grad f(mu)
//   F     = 1/2 [eps_y' Pi_y eps_y + eps_x' (I_2 kron Pi_x) eps_x]
//
// J in the second block of eps_x is treated as a constant when
// differentiating; both the analytic gradient and the finite-difference
// oracle follow that convention.
#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "pcfe/error.hpp"
#include "pcfe/model.hpp"

namespace pcfe {

struct GeneralizedState {
    Eigen::VectorXd mu;      ///< belief about the hidden state
    Eigen::VectorXd mu_dot;  ///< belief about its velocity

    Eigen::VectorXd flat() const {
        Eigen::VectorXd out(mu.size() + mu_dot.size());
        out << mu, mu_dot;
        return out;
    }

    static GeneralizedState from_flat(const Eigen::VectorXd& v) {
        if (v.size() % 2 != 0) throw InvalidInput("generalised state must have even length");
        const Eigen::Index d = v.size() / 2;
        return {v.head(d), v.tail(d)};
    }

    bool finite() const { return mu.allFinite() && mu_dot.allFinite(); }
};

struct PredictionErrors {
    Eigen::VectorXd eps_y;
    Eigen::VectorXd eps_x;  ///< length 2*d_x
};

struct VfeGradient {
    Eigen::VectorXd d_mu;
    Eigen::VectorXd d_mu_dot;

    Eigen::VectorXd flat() const {
        Eigen::VectorXd out(d_mu.size() + d_mu_dot.size());
        out << d_mu, d_mu_dot;
        return out;
    }
};

namespace detail {

inline void check_dims(const ModelSpec& model, const GeneralizedState& belief,
                       const Eigen::VectorXd& y) {
    if (belief.mu.size() != model.state_dim() || belief.mu_dot.size() != model.state_dim())
        throw InvalidInput("belief dimension does not match model state dimension");
    if (y.size() != model.obs_dim())
        throw InvalidInput("observation dimension does not match model");
}

// eps_x with the regulariser Jacobian supplied by the caller.
inline PredictionErrors errors_with_jacobian(const ModelSpec& model, const GeneralizedState& b,
                                             const Eigen::VectorXd& y,
                                             const Eigen::MatrixXd& flow_jac) {
    const Eigen::Index d = b.mu.size();
    PredictionErrors e;
    e.eps_y = y - model.obs(b.mu);
    e.eps_x.resize(2 * d);
    e.eps_x.head(d) = b.mu_dot - model.flow(b.mu);
    e.eps_x.tail(d) = -flow_jac * b.mu_dot;
    return e;
}

}  // namespace detail

inline PredictionErrors prediction_errors(const ModelSpec& model, const GeneralizedState& belief,
                                          const Eigen::VectorXd& y) {
    detail::check_dims(model, belief, y);
    return detail::errors_with_jacobian(model, belief, y, model.flow_jacobian(belief.mu));
}

/// Expanded state precision I_2 kron Pi_x.
inline Eigen::MatrixXd expanded_state_precision(const PrecisionMatrix& pi_x) {
    const Eigen::Index d = pi_x.dim();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    out.topLeftCorner(d, d) = pi_x.matrix();
    out.bottomRightCorner(d, d) = pi_x.matrix();
    return out;
}

inline double approx_vfe(const PredictionErrors& errors, const PrecisionMatrix& pi_y,
                         const PrecisionMatrix& pi_x) {
    if (errors.eps_y.size() != pi_y.dim() || errors.eps_x.size() != 2 * pi_x.dim())
        throw InvalidInput("approx_vfe: error vectors do not match precision dimensions");
    const double obs_term = errors.eps_y.dot(pi_y.matrix() * errors.eps_y);
    const double state_term = errors.eps_x.dot(expanded_state_precision(pi_x) * errors.eps_x);
    return 0.5 * (obs_term + state_term);
}

inline double approx_vfe(const ModelSpec& model, const GeneralizedState& belief,
                         const Eigen::VectorXd& y) {
    return approx_vfe(prediction_errors(model, belief, y), model.pi_y(), model.pi_x());
}

/// Analytic gradient of F with respect to (mu, mu_dot), frozen-Jacobian
/// convention for the velocity regulariser.
inline VfeGradient vfe_gradient(const ModelSpec& model, const GeneralizedState& belief,
                                const Eigen::VectorXd& y) {
    detail::check_dims(model, belief, y);
    const Eigen::MatrixXd& Px = model.pi_x().matrix();
    const Eigen::MatrixXd& Py = model.pi_y().matrix();
    const Eigen::MatrixXd Jf = model.flow_jacobian(belief.mu);
    const Eigen::MatrixXd Jg = model.obs_jacobian(belief.mu);

    const Eigen::VectorXd eps_y = y - model.obs(belief.mu);
    const Eigen::VectorXd eps_motion = belief.mu_dot - model.flow(belief.mu);

    VfeGradient grad;
    grad.d_mu = -Jg.transpose() * (Py * eps_y) - Jf.transpose() * (Px * eps_motion);
    grad.d_mu_dot = Px * eps_motion + Jf.transpose() * (Px * (Jf * belief.mu_dot));
    return grad;
}

/// Central differences of F over each belief coordinate, with the
/// regulariser Jacobian held at its value at the base point.
inline VfeGradient finite_diff_gradient(const ModelSpec& model, const GeneralizedState& belief,
                                        const Eigen::VectorXd& y, double h = 1e-6) {
    if (!(h > 0.0)) throw InvalidInput("finite_diff_gradient: h must be positive");
    detail::check_dims(model, belief, y);
    const Eigen::MatrixXd frozen = model.flow_jacobian(belief.mu);
    const Eigen::VectorXd base = belief.flat();

    auto energy = [&](const Eigen::VectorXd& v) {
        const auto e = detail::errors_with_jacobian(model, GeneralizedState::from_flat(v), y, frozen);
        return approx_vfe(e, model.pi_y(), model.pi_x());
    };

    Eigen::VectorXd g(base.size());
    for (Eigen::Index i = 0; i < base.size(); ++i) {
        Eigen::VectorXd vp = base;
        Eigen::VectorXd vm = base;
        vp[i] += h;
        vm[i] -= h;
        g[i] = (energy(vp) - energy(vm)) / (vp[i] - vm[i]);
    }
    const Eigen::Index d = belief.mu.size();
    return {g.head(d), g.tail(d)};
}

/// Laplace posterior covariance: inverse of the numerical Hessian of F at the
/// belief. Diagnostic only.
inline Eigen::MatrixXd posterior_covariance(const ModelSpec& model, const GeneralizedState& belief,
                                            const Eigen::VectorXd& y, double h = 1e-4) {
    detail::check_dims(model, belief, y);
    const Eigen::VectorXd base = belief.flat();
    const Eigen::Index n = base.size();
    auto energy = [&](const Eigen::VectorXd& v) {
        return approx_vfe(model, GeneralizedState::from_flat(v), y);
    };

    Eigen::MatrixXd hess(n, n);
    const double f0 = energy(base);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd vp = base;
        Eigen::VectorXd vm = base;
        vp[i] += h;
        vm[i] -= h;
        hess(i, i) = (energy(vp) - 2.0 * f0 + energy(vm)) / (h * h);
        for (Eigen::Index j = 0; j < i; ++j) {
            Eigen::VectorXd pp = base, pm = base, mp = base, mm = base;
            pp[i] += h; pp[j] += h;
            pm[i] += h; pm[j] -= h;
            mp[i] -= h; mp[j] += h;
            mm[i] -= h; mm[j] -= h;
            hess(i, j) = (energy(pp) - energy(pm) - energy(mp) + energy(mm)) / (4.0 * h * h);
            hess(j, i) = hess(i, j);
        }
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(hess);
    const auto& sv = svd.singularValues();
    if (!(sv.minCoeff() > 1e-10 * sv.maxCoeff()))
        throw SingularityError("posterior_covariance: curvature matrix is singular");
    Eigen::MatrixXd cov = hess.inverse();
    return 0.5 * (cov + cov.transpose());
}

}  // namespace pcfe
