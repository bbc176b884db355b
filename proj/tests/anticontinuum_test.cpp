#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "starkladder/anticontinuum.hpp"

using namespace starkladder;
namespace ac = starkladder::anticontinuum;

namespace {

LatticeParams params_for(const SolutionSet& s, double nu, double f = 1.0)
{
    return LatticeParams{nu, f, 0.0, default_window(s)};
}

std::vector<std::vector<int>> as_lists(const std::vector<SolutionSet>& sets)
{
    std::vector<std::vector<int>> out;
    for (const auto& s : sets)
        out.push_back(s.sites());
    return out;
}

} // namespace

TEST(SolutionSet, Invariants)
{
    EXPECT_THROW(SolutionSet({}), DomainError);
    EXPECT_THROW(SolutionSet({0, 0}), DomainError);
    EXPECT_THROW(SolutionSet({2, 1}), DomainError);
    SolutionSet s({0, 1, 3});
    EXPECT_EQ(s.size(), 3);
    EXPECT_EQ(s.sum(), 4);
    EXPECT_TRUE(s.is_canonical());
    EXPECT_EQ(s.to_string(), "0+1+3");
    EXPECT_EQ(s.shifted(2).sites(), (std::vector<int>{2, 3, 5}));
}

TEST(ComplementarySet, Examples)
{
    EXPECT_EQ(ac::complementary_set(SolutionSet({0, 1, 3})).sites(), (std::vector<int>{0, 2, 3}));
    EXPECT_EQ(ac::complementary_set(SolutionSet({0})).sites(), (std::vector<int>{0}));
    EXPECT_EQ(ac::complementary_set(SolutionSet({0, 2})).sites(), (std::vector<int>{0, 2}));
}

TEST(ComplementarySet, InvolutionAndThreshold)
{
    for (const auto& sites : oracle::subsets_with_zero(8)) {
        SolutionSet s(sites);
        const auto star = ac::complementary_set(s);
        EXPECT_EQ(star.min(), 0);
        EXPECT_EQ(star.size(), s.size());
        EXPECT_EQ(ac::complementary_set(star), s);
        EXPECT_EQ(star.sum(), ac::birth_threshold(s));
        EXPECT_EQ(star.sum(), oracle::reflected_sum(sites));
    }
}

TEST(Admissible, Examples)
{
    EXPECT_TRUE(ac::admissible(SolutionSet({0, 1}), 1.5));
    EXPECT_FALSE(ac::admissible(SolutionSet({0, 1}), 1.0));
    EXPECT_FALSE(ac::admissible(SolutionSet({0, 1, 2, 3}), 5.9));
    EXPECT_TRUE(ac::admissible(SolutionSet({0, 1, 2, 3}), 6.1));
    EXPECT_THROW(ac::admissible(SolutionSet({0}), 0.0), DomainError);
}

TEST(Admissible, ThresholdAndEnergyFormsAgree)
{
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> ux(0.01, 14.0);
    std::vector<double> grid;
    for (int k = 0; k < 300; ++k)
        grid.push_back(ux(gen));
    for (int k = 1; k <= 14; ++k)
        grid.push_back(k); // exact thresholds
    for (const auto& sites : oracle::subsets_with_zero(9)) {
        SolutionSet s(sites);
        for (double x : grid)
            ASSERT_EQ(ac::admissible(s, x), ac::admissible_by_energy(s, x))
                << s.to_string() << " at x = " << x;
    }
}

TEST(EnergyOfSet, Examples)
{
    EXPECT_DOUBLE_EQ(ac::energy_of_set(SolutionSet({0}), 2.0, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(ac::energy_of_set(SolutionSet({0, 4}), 3.0, 0.5), 3.0 / 2 + 0.5 * 4 / 2);
    EXPECT_DOUBLE_EQ(ac::energy_of_set(SolutionSet({0, 1, 2}), 3.0, 1.0), 2.0);
}

TEST(BuildState, Singleton)
{
    SolutionSet s({0});
    const auto st = ac::build_state(s, params_for(s, 0.7));
    EXPECT_EQ(st.at(0), 1.0);
    EXPECT_EQ(st.mu, 0.7);
    for (int l = -5; l <= 5; ++l) {
        if (l != 0) {
            EXPECT_EQ(st.at(l), 0.0);
        }
    }
}

TEST(BuildState, TwoSitesAtThreeHalves)
{
    SolutionSet s({0, 1});
    const auto st = ac::build_state(s, params_for(s, 1.5));
    EXPECT_NEAR(st.at(0), std::sqrt(5.0 / 6.0), 1e-15);
    EXPECT_NEAR(st.at(1), std::sqrt(1.0 / 6.0), 1e-15);
    EXPECT_DOUBLE_EQ(st.mu, 1.25);
}

TEST(BuildState, Errors)
{
    SolutionSet s({0, 2});
    try {
        ac::build_state(s, params_for(s, 2.0));
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("nu/f > 2"), std::string::npos) << e.what();
    }
    LatticeParams tight{3.0, 1.0, 0.0, Window{-1, 3}};
    EXPECT_THROW(ac::build_state(s, tight), ConfigurationError);
    EXPECT_THROW(ac::build_state(s, params_for(s, 3.0), SignPattern::parse("+")), DomainError);
    EXPECT_THROW(ac::build_state(s, LatticeParams{-1.0, 1.0, 0.0, default_window(s)}), DomainError);
}

TEST(BuildState, NormalizationResidualAndSignDegeneracy)
{
    for (double x : {0.5, 1.7, 3.4, 6.2, 9.9, 11.5}) {
        for (const auto& s : ac::enumerate_solution_sets(x)) {
            const auto p = params_for(s, x * 0.8, 0.8);
            const int n = s.size();
            double first_residual = -1.0;
            for (int mask = 0; mask < (1 << std::min(n, 4)); ++mask) {
                std::vector<std::int8_t> signs(n, 1);
                for (int k = 0; k < std::min(n, 4); ++k)
                    if (mask & (1 << k))
                        signs[k] = -1;
                const auto st = ac::build_state(s, p, SignPattern(signs));
                ASSERT_LT(std::abs(st.norm_squared() - 1.0), 1e-12);
                const double res = max_norm(dnls_residual(st, st.params));
                ASSERT_LT(res, 1e-12) << s.to_string() << " x = " << x;
                EXPECT_DOUBLE_EQ(st.mu, ac::energy_of_set(s, p.nu, p.f));
                if (first_residual < 0)
                    first_residual = res;
                EXPECT_NEAR(res, first_residual, 1e-15);
                for (int l = p.window.lo; l <= p.window.hi; ++l)
                    EXPECT_EQ(st.at(l) != 0.0, s.contains(l));
            }
        }
    }
}

TEST(TranslateState, ShiftsSupportAndEnergy)
{
    SolutionSet s({0});
    LatticeParams p{2.0, 0.5, 0.0, Window{-6, 6}};
    const auto st = ac::build_state(s, p);
    const auto moved = ac::translate_state(st, 3);
    EXPECT_EQ(moved.at(3), 1.0);
    EXPECT_EQ(moved.at(0), 0.0);
    EXPECT_DOUBLE_EQ(moved.mu, 2.0 + 3 * 0.5);
    EXPECT_EQ(moved.set->sites(), (std::vector<int>{3}));
    EXPECT_LT(max_norm(dnls_residual(moved, moved.params)), 1e-12);

    const auto same = ac::translate_state(st, 0);
    EXPECT_EQ(same.coefficients, st.coefficients);
    EXPECT_EQ(same.mu, st.mu);

    SolutionSet pair({0, 1});
    const auto two = ac::build_state(pair, LatticeParams{2.5, 1.0, 0.0, Window{-5, 6}});
    const auto back = ac::translate_state(ac::translate_state(two, -1), 1);
    EXPECT_EQ(back.coefficients, two.coefficients);
    EXPECT_DOUBLE_EQ(back.mu, two.mu);
    EXPECT_EQ(back.set, two.set);

    EXPECT_THROW(ac::translate_state(st, 7), ConfigurationError);
}

TEST(EnumerateSolutionSets, Examples)
{
    const auto sets = ac::enumerate_solution_sets(3.1);
    const std::vector<std::vector<int>> expected{{0}, {0, 1}, {0, 2}, {0, 3}, {0, 1, 2}};
    EXPECT_EQ(as_lists(sets), expected);
    EXPECT_EQ(as_lists(ac::enumerate_solution_sets(0.5)), (std::vector<std::vector<int>>{{0}}));
    EXPECT_EQ(ac::enumerate_solution_sets(std::nextafter(10.0, 0.0)).size(), 33u);
    EXPECT_EQ(ac::enumerate_solution_sets(10.0).size(), 33u);
}

TEST(EnumerateSolutionSets, MatchesExhaustiveSearch)
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> ux(0.0, 12.0);
    std::vector<double> xs{0.5, 1.0, 2.0, 3.1, 7.0, 12.0};
    for (int k = 0; k < 40; ++k) {
        double x = ux(gen);
        xs.push_back(x > 0 ? x : 0.25);
    }
    for (double x : xs) {
        auto got = as_lists(ac::enumerate_solution_sets(x));
        auto want = oracle::admissible_sets_brute_force(x);
        EXPECT_EQ(got.size(), static_cast<std::size_t>(partitions::counting_function(x)) + 1);
        std::sort(got.begin(), got.end());
        std::sort(want.begin(), want.end());
        EXPECT_EQ(got, want) << "x = " << x;
    }
}

TEST(EnumerateSolutionSets, OrderAndCap)
{
    const auto sets = ac::enumerate_solution_sets(9.5);
    for (std::size_t k = 1; k < sets.size(); ++k) {
        const auto a = ac::birth_threshold(sets[k - 1]);
        const auto b = ac::birth_threshold(sets[k]);
        ASSERT_LE(a, b);
        if (a == b) {
            ASSERT_LE(sets[k - 1].size(), sets[k].size());
            if (sets[k - 1].size() == sets[k].size()) {
                ASSERT_LT(sets[k - 1], sets[k]);
            }
        }
    }
    EXPECT_THROW(ac::enumerate_solution_sets(20.0, 10), DomainError);
    EXPECT_NO_THROW(ac::enumerate_solution_sets(11.0, 10));
    EXPECT_THROW(ac::enumerate_solution_sets(1.0, 0), DomainError);
}

TEST(ConsecutiveThreshold, Examples)
{
    EXPECT_EQ(ac::consecutive_threshold(2), 1.0);
    EXPECT_EQ(ac::consecutive_threshold(1), 0.0);
    EXPECT_EQ(ac::consecutive_threshold(5), 10.0);
    for (int n = 1; n <= 8; ++n) {
        std::vector<int> sites(n);
        std::iota(sites.begin(), sites.end(), 0);
        EXPECT_EQ(static_cast<double>(ac::birth_threshold(SolutionSet(sites))),
                  ac::consecutive_threshold(n));
    }
    EXPECT_THROW(ac::consecutive_threshold(0), DomainError);
}

TEST(BifurcationTree, RangeZeroToTen)
{
    const auto tree = ac::bifurcation_tree(0.0, 10.0, 1001);
    EXPECT_EQ(tree.branches.size(), 33u);
    for (int k = 0; k <= 10; ++k)
        EXPECT_TRUE(std::binary_search(tree.x_grid.begin(), tree.x_grid.end(), double(k)));

    for (const auto& b : tree.branches) {
        const double n = b.set.size();
        ASSERT_FALSE(b.samples.empty());
        for (const auto& smp : b.samples) {
            EXPECT_GT(smp.x, static_cast<double>(b.birth));
            EXPECT_EQ(smp.mu_over_f, smp.x / n + static_cast<double>(b.set.sum()) / n);
        }
        if (b.set == SolutionSet({0})) {
            EXPECT_EQ(b.birth, 0);
            for (const auto& smp : b.samples)
                EXPECT_DOUBLE_EQ(smp.mu_over_f, smp.x);
        }
        if (b.set == SolutionSet({0, 1})) {
            EXPECT_EQ(b.birth, 1);
            EXPECT_GT(b.samples.front().x, 1.0);
            EXPECT_LT(b.samples.front().x, 1.02);
            for (const auto& smp : b.samples)
                EXPECT_DOUBLE_EQ(smp.mu_over_f, smp.x / 2 + 0.5);
        }
    }
    // Every grid point above a birth carries a sample.
    for (const auto& b : tree.branches) {
        const auto alive = std::count_if(tree.x_grid.begin(), tree.x_grid.end(),
                                         [&](double x) { return x > b.birth; });
        EXPECT_EQ(static_cast<long>(b.samples.size()), alive);
    }
}

TEST(BifurcationTree, Errors)
{
    EXPECT_THROW(ac::bifurcation_tree(2.0, 1.0, 10), DomainError);
    EXPECT_THROW(ac::bifurcation_tree(0.0, 1.0, 1), DomainError);
    EXPECT_THROW(ac::bifurcation_tree(-1.0, 1.0, 10), DomainError);
}

TEST(BifurcationTree, LadderBecomesDenser)
{
    // Distinct branch energies modulo f (= 1) among live branches.
    auto distinct_mod_one = [](double x) {
        std::set<long long> keys;
        for (const auto& s : ac::enumerate_solution_sets(x)) {
            double e = ac::energy_of_set(s, x, 1.0);
            e -= std::floor(e);
            keys.insert(std::llround(e * 1e9));
        }
        return keys.size();
    };
    EXPECT_GT(distinct_mod_one(9.5), distinct_mod_one(2.5));

    // Translating by j moves each rung by exactly j.
    const double x = 4.5;
    for (const auto& s : ac::enumerate_solution_sets(x))
        for (int j = -3; j <= 3; ++j)
            EXPECT_NEAR(ac::energy_of_set(s.shifted(j), x, 1.0), ac::energy_of_set(s, x, 1.0) + j,
                        1e-12);
}
