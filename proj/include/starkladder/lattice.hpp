#pragma once

// Shared value types for the tilted DNLS on a finite lattice window
//
//   mu c_l = -beta (c_{l+1} + c_{l-1} + 2 c_l) + nu c_l^3 + f l c_l ,   sum c_l^2 = 1,
//
// with Dirichlet conditions outside the window.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "starkladder/error.hpp"

namespace starkladder {

/// Sites a window must leave free on each side of a support.
inline constexpr int kMinWindowMargin = 2;
/// Margin used when the caller does not choose a window.
inline constexpr int kDefaultWindowMargin = 5;

/// Finite set of occupied sites, stored sorted and strictly increasing.
class SolutionSet {
public:
    explicit SolutionSet(std::vector<int> sites) : sites_(std::move(sites))
    {
        if (sites_.empty())
            throw DomainError("solution set must contain at least one site");
        for (std::size_t i = 1; i < sites_.size(); ++i)
            if (sites_[i] <= sites_[i - 1])
                throw DomainError("solution set sites must be strictly increasing");
    }

    const std::vector<int>& sites() const noexcept { return sites_; }
    int size() const noexcept { return static_cast<int>(sites_.size()); }
    int min() const noexcept { return sites_.front(); }
    int max() const noexcept { return sites_.back(); }
    long long sum() const noexcept
    {
        return std::accumulate(sites_.begin(), sites_.end(), 0LL);
    }
    bool contains(int site) const { return std::binary_search(sites_.begin(), sites_.end(), site); }
    bool is_canonical() const noexcept { return min() == 0; }

    SolutionSet shifted(int j) const
    {
        auto out = sites_;
        for (int& s : out)
            s += j;
        return SolutionSet(std::move(out));
    }

    /// "0+1+3"
    std::string to_string(char separator = '+') const
    {
        std::string out;
        for (std::size_t i = 0; i < sites_.size(); ++i) {
            if (i)
                out += separator;
            out += std::to_string(sites_[i]);
        }
        return out;
    }

    friend bool operator==(const SolutionSet&, const SolutionSet&) = default;
    friend auto operator<=>(const SolutionSet&, const SolutionSet&) = default;

private:
    std::vector<int> sites_;
};

/// Inclusive range of lattice sites [lo, hi].
struct Window {
    int lo = 0;
    int hi = 0;

    int size() const noexcept { return hi - lo + 1; }
    bool contains(int site) const noexcept { return site >= lo && site <= hi; }
    std::size_t index(int site) const noexcept { return static_cast<std::size_t>(site - lo); }
    int site(std::size_t index) const noexcept { return lo + static_cast<int>(index); }
    bool covers(const SolutionSet& s, int margin) const noexcept
    {
        return s.min() - margin >= lo && s.max() + margin <= hi;
    }

    friend bool operator==(const Window&, const Window&) = default;
};

inline Window default_window(const SolutionSet& s, int margin = kDefaultWindowMargin)
{
    return Window{s.min() - margin, s.max() + margin};
}

struct LatticeParams {
    double nu = 1.0;   // on-site nonlinearity
    double f = 1.0;    // tilt per lattice period
    double beta = 0.0; // nearest-neighbour hopping
    Window window;

    double ratio() const noexcept { return nu / f; }

    void validate() const
    {
        if (!(std::isfinite(nu) && nu > 0.0))
            throw DomainError("nu must be finite and > 0");
        if (!(std::isfinite(f) && f > 0.0))
            throw DomainError("f must be finite and > 0");
        if (!(std::isfinite(beta) && beta >= 0.0))
            throw DomainError("beta must be finite and >= 0");
        if (window.hi < window.lo)
            throw ConfigurationError("lattice window is empty");
    }
};

/// One sign (+1 or -1) per occupied site.
class SignPattern {
public:
    SignPattern() = default;
    explicit SignPattern(std::vector<std::int8_t> signs) : signs_(std::move(signs))
    {
        for (auto s : signs_)
            if (s != 1 && s != -1)
                throw DomainError("signs must be +1 or -1");
    }

    static SignPattern all_plus(int n) { return SignPattern(std::vector<std::int8_t>(n, 1)); }

    /// "+-+" ; any other character is rejected.
    static SignPattern parse(std::string_view text)
    {
        std::vector<std::int8_t> out;
        for (char c : text) {
            if (c == '+')
                out.push_back(1);
            else if (c == '-')
                out.push_back(-1);
            else
                throw DomainError(std::string("invalid sign character '") + c + "'");
        }
        return SignPattern(std::move(out));
    }

    int size() const noexcept { return static_cast<int>(signs_.size()); }
    double operator[](std::size_t i) const noexcept { return signs_[i]; }
    std::string to_string() const
    {
        std::string out;
        for (auto s : signs_)
            out += s > 0 ? '+' : '-';
        return out;
    }

    friend bool operator==(const SignPattern&, const SignPattern&) = default;

private:
    std::vector<std::int8_t> signs_;
};

/// Real stationary state on params.window; coefficients[i] belongs to site window.lo + i.
struct StationaryState {
    LatticeParams params;
    std::vector<double> coefficients;
    double mu = 0.0;
    std::optional<SolutionSet> set; // exact support; empty once beta > 0
    SignPattern signs;

    double at(int site) const noexcept
    {
        return params.window.contains(site) ? coefficients[params.window.index(site)] : 0.0;
    }

    double norm_squared() const noexcept
    {
        double s = 0.0;
        for (double c : coefficients)
            s += c * c;
        return s;
    }
};

/// Residual of the stationary DNLS plus the normalization constraint.
/// Components 0..W-1 are per-site, component W is sum c^2 - 1.
/// Uses beta, nu and f from `params`; the coefficients are indexed by the state's window.
inline std::vector<double> dnls_residual(const StationaryState& state, const LatticeParams& params)
{
    if (!(state.params.window == params.window))
        throw ConfigurationError("state window does not match parameter window");
    const auto& c = state.coefficients;
    const std::size_t n = c.size();
    std::vector<double> r(n + 1, 0.0);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i > 0 ? c[i - 1] : 0.0;
        const double right = i + 1 < n ? c[i + 1] : 0.0;
        const double site = params.window.site(i);
        r[i] = -params.beta * (left + right + 2.0 * c[i]) + params.nu * c[i] * c[i] * c[i]
               + params.f * site * c[i] - state.mu * c[i];
        norm += c[i] * c[i];
    }
    r[n] = norm - 1.0;
    return r;
}

inline double max_norm(const std::vector<double>& v) noexcept
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

} // namespace starkladder
