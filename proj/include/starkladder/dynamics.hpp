#pragma once

// Time-dependent DNLS in the dimensionless time t' = f t / hbar:
//
//   dc_l/dt' = (i/f) [ -beta (c_{l+1} + c_{l-1} + 2 c_l) + nu |c_l|^2 c_l + f l c_l ] ,
//
// so a stationary state evolves as c e^{i mu t'/f}. The Bloch period is 2 pi.
//
// Superposing the three states on {j}, {j,j+1} and {j-1,j} gives, on site j,
// the profile
//
//   q(t') = c^{S1} e^{i x t'/2} + c^{S2} e^{i t'/2} + c^{S3} e^{-i t'/2} ,   x = nu/f,
//
// whose modulus beats with periods 2 pi, 4 pi/(1+x) and 4 pi/(x-1).
// The sites of the lattice decouple at beta = 0, so evolving the summed
// vector keeps every |c_l| fixed; the beats live in the linear combination
// of separately evolved states (see superposition_trace).

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "starkladder/anticontinuum.hpp"
#include "starkladder/error.hpp"
#include "starkladder/lattice.hpp"

namespace starkladder::dynamics {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

inline constexpr double kBlochPeriod = 2.0 * std::numbers::pi;
inline constexpr int kStepsPerBlochPeriod = 2048;
inline constexpr double kDefaultDt = kBlochPeriod / kStepsPerBlochPeriod;
/// Norm drift beyond which a trace is rejected.
inline constexpr double kMaxNormDrift = 1e-6;
inline constexpr std::size_t kMinSpectrumSamples = 1024;
/// Peaks below this fraction of the largest non-DC peak are dropped.
inline constexpr double kPeakRelativeThreshold = 0.01;
/// Absolute floor (relative to the strongest bin) that keeps round-off ripples out.
inline constexpr double kPeakNoiseFloor = 1e-12;

struct DynamicsTrace {
    Window window;
    std::vector<double> times;
    std::vector<ComplexVector> states;
    double norm_drift = 0.0;
    double energy_drift = 0.0;

    double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }

    /// |c_site(t')|^2 over the trace.
    std::vector<double> abs2(int site) const
    {
        if (!window.contains(site))
            throw DomainError("site " + std::to_string(site) + " is outside the trace window");
        std::vector<double> out;
        out.reserve(states.size());
        for (const auto& s : states)
            out.push_back(std::norm(s[window.index(site)]));
        return out;
    }
};

inline ComplexVector to_complex(const std::vector<double>& c)
{
    return ComplexVector(c.begin(), c.end());
}

inline double norm_squared(const ComplexVector& c)
{
    double s = 0.0;
    for (const auto& z : c)
        s += std::norm(z);
    return s;
}

/// First integral whose c-bar gradient is the DNLS right-hand side:
/// sum of -beta (2 Re conj(c_l) c_{l+1} + 2 |c_l|^2) + nu/2 |c_l|^4 + f l |c_l|^2.
inline double dnls_energy(const ComplexVector& c, const LatticeParams& p)
{
    double h = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double a2 = std::norm(c[i]);
        h += -2.0 * p.beta * a2 + 0.5 * p.nu * a2 * a2 + p.f * p.window.site(i) * a2;
        if (i + 1 < c.size())
            h -= 2.0 * p.beta * std::real(std::conj(c[i]) * c[i + 1]);
    }
    return h;
}

/// dc/dt' written into `out`.
inline void dnls_rhs(const ComplexVector& c, const LatticeParams& p, ComplexVector& out)
{
    const std::size_t n = c.size();
    out.resize(n);
    const Complex i_over_f(0.0, 1.0 / p.f);
    for (std::size_t k = 0; k < n; ++k) {
        const Complex left = k > 0 ? c[k - 1] : Complex{};
        const Complex right = k + 1 < n ? c[k + 1] : Complex{};
        const Complex h = -p.beta * (left + right + 2.0 * c[k]) + p.nu * std::norm(c[k]) * c[k]
                          + p.f * static_cast<double>(p.window.site(k)) * c[k];
        out[k] = i_over_f * h;
    }
}

/// Classical fourth-order Runge-Kutta with a fixed step. The number of steps
/// is t_end/dt rounded to the nearest integer (at least one).
/// Throws IntegrationError if the norm drifts by more than kMaxNormDrift.
inline DynamicsTrace evolve(const ComplexVector& initial, const LatticeParams& params, double t_end,
                            double dt = kDefaultDt)
{
    params.validate();
    if (!(std::isfinite(dt) && dt > 0.0) || !(std::isfinite(t_end) && t_end > 0.0))
        throw DomainError("evolve requires dt > 0 and t_end > 0");
    if (initial.size() != static_cast<std::size_t>(params.window.size()))
        throw ConfigurationError("initial vector does not match the lattice window");
    if (std::abs(norm_squared(initial) - 1.0) > 1e-9)
        throw DomainError("initial vector must be normalized");

    const auto steps = std::max<long long>(1, std::llround(t_end / dt));
    DynamicsTrace trace;
    trace.window = params.window;
    trace.times.reserve(static_cast<std::size_t>(steps) + 1);
    trace.states.reserve(static_cast<std::size_t>(steps) + 1);
    trace.times.push_back(0.0);
    trace.states.push_back(initial);

    const double n0 = norm_squared(initial);
    const double h0 = dnls_energy(initial, params);
    const double h_scale = std::max(std::abs(h0), params.f);

    const std::size_t n = initial.size();
    ComplexVector c = initial, k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (long long s = 1; s <= steps; ++s) {
        dnls_rhs(c, params, k1);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = c[i] + 0.5 * dt * k1[i];
        dnls_rhs(tmp, params, k2);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = c[i] + 0.5 * dt * k2[i];
        dnls_rhs(tmp, params, k3);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = c[i] + dt * k3[i];
        dnls_rhs(tmp, params, k4);
        for (std::size_t i = 0; i < n; ++i)
            c[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

        trace.times.push_back(static_cast<double>(s) * dt);
        trace.states.push_back(c);
        trace.norm_drift = std::max(trace.norm_drift, std::abs(norm_squared(c) - n0));
        trace.energy_drift =
            std::max(trace.energy_drift, std::abs(dnls_energy(c, params) - h0) / h_scale);
    }
    if (!(trace.norm_drift <= kMaxNormDrift))
        throw IntegrationError("norm drift " + std::to_string(trace.norm_drift)
                                   + " exceeds tolerance; reduce dt",
                               trace.norm_drift);
    return trace;
}

struct BeatPeriods {
    double bloch; // 2 pi
    double t1;    // 4 pi / (1 + x)
    double t2;    // 4 pi / (x - 1)
};

inline void check_beating_ratio(double x)
{
    if (!std::isfinite(x) || x <= 1.0)
        throw DomainError("beating needs nu/f > 1 so that all three sets exist");
}

inline BeatPeriods beat_periods(double x)
{
    check_beating_ratio(x);
    const double four_pi = 4.0 * std::numbers::pi;
    return {kBlochPeriod, four_pi / (1.0 + x), four_pi / (x - 1.0)};
}

struct BeatingPrediction {
    double x;
    std::array<double, 3> amplitudes; // site-j coefficients of {j}, {j,j+1}, {j-1,j}
    BeatPeriods periods;
};

inline BeatingPrediction beating_prediction(double x, const SignPattern& signs = {})
{
    check_beating_ratio(x);
    const SignPattern sg = signs.size() == 0 ? SignPattern::all_plus(3) : signs;
    if (sg.size() != 3)
        throw DomainError("beating needs exactly three signs");
    return {x,
            {sg[0] * 1.0, sg[1] * std::sqrt(0.5 + 0.5 / x), sg[2] * std::sqrt(0.5 - 0.5 / x)},
            beat_periods(x)};
}

/// q(t') as printed, with amplitudes from the exact anticontinuum states.
inline Complex beating_profile(double x, const SignPattern& signs, double t_prime)
{
    const auto pred = beating_prediction(x, signs);
    const auto& a = pred.amplitudes;
    return a[0] * std::polar(1.0, 0.5 * x * t_prime) + a[1] * std::polar(1.0, 0.5 * t_prime)
           + a[2] * std::polar(1.0, -0.5 * t_prime);
}

namespace detail {

inline void check_superposition_params(double x, int j, const LatticeParams& params)
{
    check_beating_ratio(x);
    params.validate();
    if (std::abs(params.ratio() - x) > 1e-12 * x)
        throw DomainError("x does not match params.nu / params.f");
    if (!params.window.covers(SolutionSet({j - 1, j, j + 1}), kMinWindowMargin))
        throw ConfigurationError("window must cover sites j-1..j+1 with margin");
}

// Only fftw_execute is thread-safe; planning and destruction share this lock.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

} // namespace detail

/// The states on {j}, {j,j+1} and {j-1,j} (all signs plus).
inline std::array<StationaryState, 3> superposition_components(double x, int j,
                                                               const LatticeParams& params)
{
    detail::check_superposition_params(x, j, params);
    LatticeParams p = params;
    p.beta = 0.0;
    return {anticontinuum::build_state(SolutionSet({j}), p),
            anticontinuum::build_state(SolutionSet({j, j + 1}), p),
            anticontinuum::build_state(SolutionSet({j - 1, j}), p)};
}

/// Normalized sum of the three component states.
inline ComplexVector superposition_state(double x, int j, const LatticeParams& params)
{
    const auto parts = superposition_components(x, j, params);
    ComplexVector out(parts[0].coefficients.size());
    for (const auto& s : parts)
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += s.coefficients[i];
    const double scale = 1.0 / std::sqrt(norm_squared(out));
    for (auto& z : out)
        z *= scale;
    return out;
}

/// Each component evolved on its own under the full DNLS, then summed and
/// scaled by the initial norm of the sum. Drifts are the worst over the three runs.
inline DynamicsTrace superposition_trace(double x, int j, const LatticeParams& params, double t_end,
                                         double dt = kDefaultDt)
{
    const auto parts = superposition_components(x, j, params);
    std::array<DynamicsTrace, 3> runs;
    for (std::size_t k = 0; k < 3; ++k)
        runs[k] = evolve(to_complex(parts[k].coefficients), params, t_end, dt);

    DynamicsTrace out;
    out.window = params.window;
    out.times = runs[0].times;
    out.states.resize(out.times.size());
    ComplexVector sum0(parts[0].coefficients.size());
    for (const auto& s : parts)
        for (std::size_t i = 0; i < sum0.size(); ++i)
            sum0[i] += s.coefficients[i];
    const double scale = 1.0 / std::sqrt(norm_squared(sum0));
    for (std::size_t t = 0; t < out.times.size(); ++t) {
        ComplexVector v(sum0.size());
        for (const auto& r : runs)
            for (std::size_t i = 0; i < v.size(); ++i)
                v[i] += r.states[t][i];
        for (auto& z : v)
            z *= scale;
        out.states[t] = std::move(v);
    }
    for (const auto& r : runs) {
        out.norm_drift = std::max(out.norm_drift, r.norm_drift);
        out.energy_drift = std::max(out.energy_drift, r.energy_drift);
    }
    return out;
}

struct SpectralPeak {
    double frequency; // angular, in units of 1/t'
    double power;
    std::size_t bin;
};

struct Spectrum {
    double bin_width; // angular frequency spacing
    std::vector<SpectralPeak> peaks; // strongest first
};

/// Hann-windowed power spectrum of uniformly sampled data; local maxima above
/// kPeakRelativeThreshold of the largest non-DC peak.
inline Spectrum spectrum_of(const std::vector<double>& samples, double dt)
{
    const std::size_t n = samples.size();
    if (n < kMinSpectrumSamples)
        throw DomainError("spectrum needs at least " + std::to_string(kMinSpectrumSamples)
                          + " samples");
    if (!(dt > 0.0))
        throw DomainError("spectrum needs a positive sample spacing");

    const std::size_t bins = n / 2 + 1;
    std::unique_ptr<double, decltype(&fftw_free)> in(fftw_alloc_real(n), &fftw_free);
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> out(fftw_alloc_complex(bins), &fftw_free);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * k / n));
        in.get()[k] = w * samples[k];
    }
    fftw_plan plan;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::vector<double> power(bins);
    for (std::size_t k = 0; k < bins; ++k)
        power[k] = out.get()[k][0] * out.get()[k][0] + out.get()[k][1] * out.get()[k][1];
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }

    Spectrum result{2.0 * std::numbers::pi / (static_cast<double>(n) * dt), {}};
    const double strongest = *std::max_element(power.begin(), power.end());
    std::vector<std::size_t> maxima;
    for (std::size_t k = 0; k < bins; ++k) {
        const double left = k > 0 ? power[k - 1] : -1.0;
        const double right = k + 1 < bins ? power[k + 1] : -1.0;
        if (power[k] > left && power[k] >= right && power[k] > kPeakNoiseFloor * strongest)
            maxima.push_back(k);
    }
    double largest_ac = 0.0;
    for (auto k : maxima)
        if (k != 0)
            largest_ac = std::max(largest_ac, power[k]);
    for (auto k : maxima)
        if (power[k] >= kPeakRelativeThreshold * largest_ac)
            result.peaks.push_back({k * result.bin_width, power[k], k});
    std::sort(result.peaks.begin(), result.peaks.end(),
              [](const SpectralPeak& a, const SpectralPeak& b) { return a.power > b.power; });
    return result;
}

/// Peaks of |c_site(t')|^2 over the trace.
inline Spectrum spectrum(const DynamicsTrace& trace, int site)
{
    return spectrum_of(trace.abs2(site), trace.dt());
}

/// Distinct positive differences mu/f - mu'/f between anticontinuum states
/// (any rung) whose support contains `site`, at ratio x.
inline std::vector<double> beat_frequencies(double x, int site = 0,
                                            int max_n = anticontinuum::kDefaultMaxN)
{
    constexpr double tol = 1e-9;
    std::vector<double> energies;
    for (const auto& s : anticontinuum::enumerate_solution_sets(x, max_n)) {
        const double base = anticontinuum::energy_of_set(s, x, 1.0);
        for (int l : s.sites())
            energies.push_back(base + (site - l));
    }
    auto dedupe = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end(),
                            [](double a, double b) { return std::abs(a - b) <= tol; }),
                v.end());
    };
    dedupe(energies);
    std::vector<double> diffs;
    for (std::size_t a = 0; a < energies.size(); ++a)
        for (std::size_t b = a + 1; b < energies.size(); ++b)
            diffs.push_back(energies[b] - energies[a]);
    dedupe(diffs);
    return diffs;
}

} // namespace starkladder::dynamics
