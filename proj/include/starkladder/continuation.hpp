#pragma once

// Persistence of anticontinuum states for small hopping.
//
// Newton works on the square extended system: one residual per window site
// plus the normalization, with unknowns (c_l, mu). The Jacobian is
// tridiagonal with a border column (-c) and border row (2 c^T).
//
// With c = (mu^S/nu)^{1/2} c', beta' = beta/mu^S and f' = f/mu^S the model reads
//
//   (1 - c'_l^2) c'_l = -beta' (c'_{l+1} + c'_{l-1} + 2 c'_l) + f' l c'_l ,
//
// whose beta' = 0 Jacobian is diagonal with T_l = f' l - 1 + 3 c'_l^2.
// Nonzero T_l on the whole window certifies that the state continues.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "starkladder/anticontinuum.hpp"
#include "starkladder/error.hpp"
#include "starkladder/lattice.hpp"

namespace starkladder::continuation {

using starkladder::dnls_residual;

inline constexpr double kDefaultTolerance = 1e-12;
inline constexpr int kDefaultMaxIterations = 50;
/// mu^S/f closer than this to an unoccupied site counts as resonant.
inline constexpr double kResonanceTolerance = 1e-9;
/// Reciprocal condition number below which the Newton matrix is treated as singular.
inline constexpr double kSingularRcond = 1e-14;

struct RescaledProblem {
    double beta_prime;
    double f_prime;
    double base_mu;
};

inline RescaledProblem rescale(const LatticeParams& params, double base_mu)
{
    if (!(base_mu > 0.0))
        throw DomainError("rescaling needs mu^S > 0; translate the state to a higher rung");
    return {params.beta / base_mu, params.f / base_mu, base_mu};
}

/// Residual of the rescaled equation for coefficients c' on `window`.
inline std::vector<double> rescaled_residual(const std::vector<double>& c, const Window& window,
                                             const RescaledProblem& p)
{
    const std::size_t n = c.size();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i > 0 ? c[i - 1] : 0.0;
        const double right = i + 1 < n ? c[i + 1] : 0.0;
        r[i] = (1.0 - c[i] * c[i]) * c[i] + p.beta_prime * (left + right + 2.0 * c[i])
               - p.f_prime * window.site(i) * c[i];
    }
    return r;
}

/// d(residual)/d(c, mu) of dnls_residual; (W+1) x (W+1).
inline Eigen::MatrixXd dnls_jacobian(const StationaryState& state, const LatticeParams& params)
{
    const auto& c = state.coefficients;
    const Eigen::Index n = static_cast<Eigen::Index>(c.size());
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ci = c[static_cast<std::size_t>(i)];
        const double site = params.window.site(static_cast<std::size_t>(i));
        jac(i, i) = -2.0 * params.beta + 3.0 * params.nu * ci * ci + params.f * site - state.mu;
        if (i > 0)
            jac(i, i - 1) = -params.beta;
        if (i + 1 < n)
            jac(i, i + 1) = -params.beta;
        jac(i, n) = -ci;
        jac(n, i) = 2.0 * ci;
    }
    return jac;
}

struct DiagonalCertificate {
    std::vector<double> diagonal; // T_l per window site
    double min_abs;
};

/// T(0) = diag(T_l) for an anticontinuum state. Throws ResonanceError when
/// mu^S/f sits on an unoccupied window site.
inline DiagonalCertificate jacobian_diagonal_t0(const StationaryState& state)
{
    const auto& p = state.params;
    const double mu = state.mu;
    if (!(mu > 0.0))
        throw DomainError("certificate needs mu^S > 0; translate the state to a higher rung");
    const double level = mu / p.f;
    DiagonalCertificate cert{{}, std::numeric_limits<double>::infinity()};
    cert.diagonal.reserve(state.coefficients.size());
    for (std::size_t i = 0; i < state.coefficients.size(); ++i) {
        const int site = p.window.site(i);
        const double c = state.coefficients[i];
        const bool occupied = state.set ? state.set->contains(site) : c != 0.0;
        if (!occupied && std::abs(level - site) <= kResonanceTolerance)
            throw ResonanceError("resonance: mu^S/f = " + std::to_string(level)
                                     + " coincides with unoccupied site " + std::to_string(site),
                                 site);
        const double scaled_c2 = p.nu / mu * c * c;
        const double t = p.f * site / mu - 1.0 + 3.0 * scaled_c2;
        cert.diagonal.push_back(t);
        cert.min_abs = std::min(cert.min_abs, std::abs(t));
    }
    return cert;
}

struct NewtonReport {
    StationaryState state;
    int iterations = 0;
    double residual_norm = 0.0;
};

/// Newton on (c, mu) until the residual max-norm drops below tol.
inline NewtonReport newton_solve(const StationaryState& guess, const LatticeParams& params,
                                 double tol = kDefaultTolerance,
                                 int max_iter = kDefaultMaxIterations)
{
    params.validate();
    if (!(tol > 0.0))
        throw DomainError("Newton tolerance must be > 0");
    if (!(guess.params.window == params.window))
        throw ConfigurationError("guess window does not match parameter window");

    // From an exact anticontinuum state the beta = 0 Jacobian must be regular;
    // at resonance Newton can only land on a hybrid of neighbouring branches.
    if (guess.set && guess.params.beta == 0.0 && params.beta != 0.0 && guess.mu > 0.0) {
        try {
            jacobian_diagonal_t0(guess);
        } catch (const ResonanceError& e) {
            throw SolverError(std::string("singular Jacobian at beta = 0 (") + e.what() + ")",
                              max_norm(dnls_residual(guess, params)));
        }
    }

    StationaryState state = guess;
    state.params = params;
    if (params.beta != 0.0)
        state.set.reset();
    const Eigen::Index n = static_cast<Eigen::Index>(state.coefficients.size());

    for (int iter = 0;; ++iter) {
        const auto r = dnls_residual(state, params);
        const double norm = max_norm(r);
        if (!std::isfinite(norm))
            throw SolverError("Newton diverged (non-finite residual)", norm);
        if (norm < tol)
            return {std::move(state), iter, norm};
        if (iter == max_iter)
            throw SolverError("Newton did not converge in " + std::to_string(max_iter)
                                  + " iterations; last residual " + std::to_string(norm),
                              norm);

        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(dnls_jacobian(state, params));
        // rcond() alone misses exactly singular matrices; check the pivots too.
        const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
        if (!(pivots.minCoeff() > kSingularRcond * pivots.maxCoeff())
            || !(lu.rcond() > kSingularRcond))
            throw SolverError("singular Newton matrix", norm);
        const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(r.data(), n + 1);
        const Eigen::VectorXd delta = lu.solve(rhs);
        if (!delta.allFinite())
            throw SolverError("singular Newton matrix", norm);
        for (Eigen::Index i = 0; i < n; ++i)
            state.coefficients[static_cast<std::size_t>(i)] += delta(i);
        state.mu += delta(n);
    }
}

struct PathEntry {
    double beta;
    double residual_norm;
    int iterations;
    double mu;
};

/// Thrown when a continuation step fails; carries the converged part of the path.
class ContinuationError : public SolverError {
public:
    ContinuationError(const std::string& what, double last_residual, std::vector<PathEntry> path)
        : SolverError(what, last_residual), path_(std::move(path)) {}
    const std::vector<PathEntry>& path() const noexcept { return path_; }
    /// Largest beta reached before failure.
    double last_beta() const noexcept { return path_.empty() ? 0.0 : path_.back().beta; }

private:
    std::vector<PathEntry> path_;
};

struct ContinuationPath {
    StationaryState state;
    std::vector<PathEntry> path;
};

/// Largest Newton correction accepted relative to the tangent predictor.
inline constexpr double kMaxCorrector = 1e-3;
/// Smallest sub-step, relative to the nominal step, before a fold is reported.
inline constexpr double kMinStepFraction = 1.0 / 4096.0;

namespace detail {

/// d(c, mu)/d beta along the branch through `state`.
inline Eigen::VectorXd tangent(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu,
                               const StationaryState& state)
{
    const auto& c = state.coefficients;
    const Eigen::Index n = static_cast<Eigen::Index>(c.size());
    Eigen::VectorXd dr = Eigen::VectorXd::Zero(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double left = i > 0 ? c[static_cast<std::size_t>(i - 1)] : 0.0;
        const double right = i + 1 < n ? c[static_cast<std::size_t>(i + 1)] : 0.0;
        dr(i) = -(left + right + 2.0 * c[static_cast<std::size_t>(i)]);
    }
    return lu.solve(-dr);
}

} // namespace detail

/// Continuation in beta from start.params.beta to beta_target, recording
/// `steps` uniform points. Each step is taken with a tangent predictor and
/// halved while the corrector wanders off or det J changes sign; a step that
/// cannot be resolved means the branch folds back and is reported as failure.
inline ContinuationPath continue_from(const StationaryState& start, double beta_target, int steps,
                                      double tol = kDefaultTolerance,
                                      int max_iter = kDefaultMaxIterations)
{
    if (!(std::isfinite(beta_target) && beta_target >= 0.0))
        throw DomainError("beta target must be finite and >= 0");
    if (steps < 1)
        throw DomainError("continuation needs at least one step");

    ContinuationPath out{start, {}};
    const double beta0 = start.params.beta;
    out.path.push_back({beta0, max_norm(dnls_residual(start, start.params)), 0, start.mu});
    if (beta_target == beta0)
        return out;

    const double nominal = (beta_target - beta0) / steps;
    const double min_step = std::abs(nominal) * kMinStepFraction;
    const Eigen::Index n = static_cast<Eigen::Index>(start.coefficients.size());

    StationaryState cur = start;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(dnls_jacobian(cur, cur.params));
    const bool sign = lu.determinant() > 0.0;
    double h = nominal;

    for (int k = 1; k <= steps; ++k) {
        const double goal = k == steps ? beta_target : beta0 + nominal * k;
        int iterations = 0;
        double residual = 0.0;
        while (cur.params.beta != goal) {
            const double left = goal - cur.params.beta;
            if (std::abs(h) > std::abs(left))
                h = left;
            LatticeParams p = cur.params;
            p.beta = std::abs(h) == std::abs(left) ? goal : cur.params.beta + h;

            StationaryState guess = cur;
            const Eigen::VectorXd dot = detail::tangent(lu, cur);
            const double db = p.beta - cur.params.beta;
            for (Eigen::Index i = 0; i < n; ++i)
                guess.coefficients[static_cast<std::size_t>(i)] += db * dot(i);
            guess.mu += db * dot(n);

            NewtonReport rep;
            std::string why;
            try {
                rep = newton_solve(guess, p, tol, max_iter);
                double moved = std::abs(rep.state.mu - guess.mu);
                for (Eigen::Index i = 0; i < n; ++i)
                    moved = std::max(moved, std::abs(rep.state.coefficients[static_cast<std::size_t>(i)]
                                                     - guess.coefficients[static_cast<std::size_t>(i)]));
                if (moved > kMaxCorrector)
                    why = "corrector left the branch";
            } catch (const SolverError& e) {
                why = e.what();
                rep.residual_norm = e.last_residual();
            }
            Eigen::PartialPivLU<Eigen::MatrixXd> next;
            if (why.empty()) {
                next.compute(dnls_jacobian(rep.state, p));
                if ((next.determinant() > 0.0) != sign)
                    why = "branch turns back (Jacobian determinant changes sign)";
            }
            if (!why.empty()) {
                if (std::abs(h) <= min_step)
                    throw ContinuationError("continuation failed near beta = " + std::to_string(p.beta)
                                                + ": " + why,
                                            rep.residual_norm, out.path);
                h /= 2.0;
                continue;
            }
            cur = std::move(rep.state);
            lu = std::move(next);
            iterations += rep.iterations;
            residual = rep.residual_norm;
            if (std::abs(2.0 * h) <= std::abs(nominal))
                h *= 2.0;
        }
        out.path.push_back({goal, residual, iterations, cur.mu});
    }
    out.state = std::move(cur);
    if (beta_target == 0.0 && start.set)
        out.state.set = start.set;
    return out;
}

struct ContinuationResult {
    StationaryState state;
    std::vector<PathEntry> path;
    double certificate; // min |T_l| at beta' = 0
};

/// Build the anticontinuum state on `set`, certify it, and continue to beta_target.
inline ContinuationResult continue_in_beta(const SolutionSet& set, const LatticeParams& params,
                                           double beta_target, int steps,
                                           const SignPattern& signs = {},
                                           double tol = kDefaultTolerance,
                                           int max_iter = kDefaultMaxIterations)
{
    LatticeParams base = params;
    base.beta = 0.0;
    const StationaryState start = anticontinuum::build_state(set, base, signs);
    const auto cert = jacobian_diagonal_t0(start);
    auto run = continue_from(start, beta_target, steps, tol, max_iter);
    return {std::move(run.state), std::move(run.path), cert.min_abs};
}

} // namespace starkladder::continuation
