#pragma once

// Exact stationary states of the decoupled lattice (beta = 0):
//
//   mu c_l = nu c_l^3 + f l c_l .
//
// A state supported on S has c_l^2 = (mu^S - f l) / nu on S, with
// mu^S = nu/N + (f/N) sum S from the normalization. It exists iff
// nu/f > sum of S* = N max S - sum S.
//
// At nu/f = 3/2 the two-site set {0,1} has c_0 = (5/6)^{1/2}, c_1 = (1/6)^{1/2}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "starkladder/error.hpp"
#include "starkladder/lattice.hpp"
#include "starkladder/partitions.hpp"

namespace starkladder::anticontinuum {

inline constexpr double kNormTolerance = 1e-12;
inline constexpr int kDefaultMaxN = 60;

/// { max S - l : l in S }.
inline SolutionSet complementary_set(const SolutionSet& s)
{
    std::vector<int> out;
    out.reserve(s.sites().size());
    for (auto it = s.sites().rbegin(); it != s.sites().rend(); ++it)
        out.push_back(s.max() - *it);
    return SolutionSet(std::move(out));
}

/// Sum of the complementary set, i.e. the birth threshold of S in nu/f.
inline long long birth_threshold(const SolutionSet& s)
{
    return static_cast<long long>(s.size()) * s.max() - s.sum();
}

namespace detail {
inline void check_ratio(double x)
{
    if (!std::isfinite(x) || x <= 0.0)
        throw DomainError("ratio nu/f must be finite and > 0");
}
} // namespace detail

/// Existence condition nu/f > sum(S*), strict.
inline bool admissible(const SolutionSet& s, double x)
{
    detail::check_ratio(x);
    return x > static_cast<double>(birth_threshold(s));
}

inline double energy_of_set(const SolutionSet& s, double nu, double f)
{
    const double n = s.size();
    return nu / n + f * static_cast<double>(s.sum()) / n;
}

/// Existence condition in its energy form mu^S / f > max S (nu = x, f = 1).
inline bool admissible_by_energy(const SolutionSet& s, double x)
{
    detail::check_ratio(x);
    return energy_of_set(s, x, 1.0) > static_cast<double>(s.max());
}

/// Exact beta = 0 state on S with the given signs (all plus when empty).
inline StationaryState build_state(const SolutionSet& s, const LatticeParams& params,
                                   const SignPattern& signs = {})
{
    params.validate();
    const double x = params.ratio();
    if (!admissible(s, x))
        throw DomainError("set {" + s.to_string(',') + "} is inadmissible at nu/f = "
                          + std::to_string(x) + ": requires nu/f > "
                          + std::to_string(birth_threshold(s)));
    if (!params.window.covers(s, kMinWindowMargin))
        throw ConfigurationError("lattice window [" + std::to_string(params.window.lo) + ", "
                                 + std::to_string(params.window.hi) + "] does not cover {"
                                 + s.to_string(',') + "} with margin "
                                 + std::to_string(kMinWindowMargin));
    const SignPattern sg = signs.size() == 0 ? SignPattern::all_plus(s.size()) : signs;
    if (sg.size() != s.size())
        throw DomainError("sign pattern has " + std::to_string(sg.size()) + " entries for a set of "
                          + std::to_string(s.size()) + " sites");

    StationaryState state;
    state.params = params;
    state.params.beta = 0.0;
    state.mu = energy_of_set(s, params.nu, params.f);
    state.coefficients.assign(static_cast<std::size_t>(params.window.size()), 0.0);
    for (std::size_t k = 0; k < s.sites().size(); ++k) {
        const int site = s.sites()[k];
        const double c2 = (state.mu - params.f * site) / params.nu;
        state.coefficients[params.window.index(site)] = sg[k] * std::sqrt(c2);
    }
    state.set = s;
    state.signs = sg;
    if (std::abs(state.norm_squared() - 1.0) >= kNormTolerance)
        throw std::logic_error("anticontinuum state lost normalization");
    return state;
}

/// Shift the support by j sites and the energy by j f. The window stays put.
inline StationaryState translate_state(const StationaryState& state, int j)
{
    const Window w = state.params.window;
    StationaryState out = state;
    std::fill(out.coefficients.begin(), out.coefficients.end(), 0.0);
    for (std::size_t i = 0; i < state.coefficients.size(); ++i) {
        if (state.coefficients[i] == 0.0)
            continue;
        const int target = w.site(i) + j;
        if (!w.contains(target))
            throw ConfigurationError("translated support leaves the lattice window at site "
                                     + std::to_string(target));
        out.coefficients[w.index(target)] = state.coefficients[i];
    }
    out.mu = state.mu + j * state.params.f;
    if (state.set)
        out.set = state.set->shifted(j);

    if (state.params.beta == 0.0) {
        const double before = max_norm(dnls_residual(state, state.params));
        const double after = max_norm(dnls_residual(out, out.params));
        const double scale = std::max(1.0, std::abs(out.mu));
        if (after > before + kNormTolerance * scale)
            throw std::logic_error("translated state is not stationary");
    }
    return out;
}

/// Every canonical set admissible at x: the singleton plus one set per
/// distinct partition of each 0 < n < x. Ordered by birth threshold, then
/// cardinality, then lexicographically.
/// Throws DomainError when x would need partitions of n > max_n.
inline std::vector<SolutionSet> enumerate_solution_sets(double x, int max_n = kDefaultMaxN)
{
    detail::check_ratio(x);
    if (max_n < 1)
        throw DomainError("max_n must be >= 1");
    const double top = std::ceil(x) - 1.0;
    if (top > max_n)
        throw DomainError("ratio " + std::to_string(x) + " needs partitions beyond max_n = "
                          + std::to_string(max_n));
    const int n_max = static_cast<int>(top);

    std::vector<SolutionSet> out;
    for (int n = 0; n <= n_max; ++n) {
        const std::size_t first = out.size();
        partitions::for_each_distinct_partition(n, [&](std::span<const int> star) {
            const int top_part = star.back();
            std::vector<int> sites;
            sites.reserve(star.size());
            for (auto it = star.rbegin(); it != star.rend(); ++it)
                sites.push_back(top_part - *it);
            out.emplace_back(std::move(sites));
        });
        std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
                  [](const SolutionSet& a, const SolutionSet& b) {
                      if (a.size() != b.size())
                          return a.size() < b.size();
                      return a < b;
                  });
    }
    return out;
}

/// Birth threshold N(N-1)/2 of the consecutive set {0, 1, ..., N-1}.
inline double consecutive_threshold(int n)
{
    if (n < 1)
        throw DomainError("consecutive_threshold requires N >= 1");
    return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
}

struct EnergySample {
    double x;         // nu / f
    double mu_over_f; // mu^S / f
};

struct Branch {
    SolutionSet set;
    long long birth; // the branch exists for x > birth
    std::vector<EnergySample> samples;
};

struct BifurcationTree {
    std::vector<double> x_grid;
    std::vector<Branch> branches;
};

/// Uniform grid on [x_min, x_max] with every integer in range inserted.
inline std::vector<double> tree_grid(double x_min, double x_max, int samples)
{
    if (!(std::isfinite(x_min) && std::isfinite(x_max)) || x_min < 0.0 || x_max <= x_min)
        throw DomainError("tree range requires 0 <= x_min < x_max");
    if (samples < 2)
        throw DomainError("tree needs at least 2 samples");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(samples) + static_cast<std::size_t>(x_max - x_min) + 2);
    const double span = x_max - x_min;
    for (int i = 0; i < samples; ++i) {
        double x = x_min + span * i / (samples - 1);
        const double r = std::round(x);
        if (std::abs(x - r) <= 1e-12 * std::max(1.0, std::abs(r)))
            x = r;
        grid.push_back(x);
    }
    grid.back() = x_max;
    for (double k = std::ceil(x_min); k <= x_max; k += 1.0)
        grid.push_back(k);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

/// Energy curves mu^S / f over a grid of nu/f for every set admissible
/// somewhere in [x_min, x_max]. A branch has samples only where x > birth.
/// x_min = 0 is accepted; nothing is alive there.
inline BifurcationTree bifurcation_tree(double x_min, double x_max, int samples,
                                        int max_n = kDefaultMaxN)
{
    BifurcationTree tree;
    tree.x_grid = tree_grid(x_min, x_max, samples);
    for (auto& s : enumerate_solution_sets(x_max, max_n)) {
        Branch b{s, birth_threshold(s), {}};
        const double n = s.size();
        const double offset = static_cast<double>(s.sum()) / n;
        for (double x : tree.x_grid)
            if (x > static_cast<double>(b.birth))
                b.samples.push_back({x, x / n + offset});
        tree.branches.push_back(std::move(b));
    }
    return tree;
}

} // namespace starkladder::anticontinuum
