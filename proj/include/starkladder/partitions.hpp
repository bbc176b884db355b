#pragma once

// Partitions of an integer into distinct parts.
//
// A canonical solution set S (min S = 0) is determined by its reflection
// S* = { max S - l : l in S }, which is a set of distinct non-negative
// integers containing 0. Counting the branches born below a ratio nu/f
// therefore reduces to counting partitions into distinct parts.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "starkladder/error.hpp"

namespace starkladder::partitions {

/// Largest n accepted by the exact counters.
inline constexpr int kMaxArgument = 5000;

/// Strictly increasing non-negative parts, always led by 0.
class DistinctPartition {
public:
    explicit DistinctPartition(std::vector<int> parts) : parts_(std::move(parts))
    {
        if (parts_.empty() || parts_.front() != 0)
            throw DomainError("distinct partition must start with 0");
        for (std::size_t i = 1; i < parts_.size(); ++i) {
            if (parts_[i] <= parts_[i - 1])
                throw DomainError("distinct partition parts must be strictly increasing");
            sum_ += parts_[i];
        }
    }

    const std::vector<int>& parts() const noexcept { return parts_; }
    long long sum() const noexcept { return sum_; }

    friend bool operator==(const DistinctPartition&, const DistinctPartition&) = default;

private:
    std::vector<int> parts_;
    long long sum_ = 0;
};

namespace detail {

inline void check_argument(int n)
{
    if (n < 0)
        throw DomainError("partition argument must be non-negative, got " + std::to_string(n));
    if (n > kMaxArgument)
        throw DomainError("partition argument " + std::to_string(n) + " exceeds supported maximum "
                          + std::to_string(kMaxArgument));
}

template <class Count>
Count checked_add(const Count& a, const Count& b)
{
    if constexpr (std::is_integral_v<Count>) {
        Count r{};
        if (__builtin_add_overflow(a, b, &r))
            throw std::overflow_error("distinct-partition count overflows the count type; "
                                      "use an arbitrary-precision Count");
        return r;
    } else {
        return a + b;
    }
}

template <class Visitor>
void visit_partitions(std::vector<int>& buffer, int remaining, Visitor& visit)
{
    if (remaining == 0) {
        visit(std::span<const int>(buffer));
        return;
    }
    // Children in ascending order of the next part give lexicographic output.
    for (int part = buffer.back() + 1; part <= remaining; ++part) {
        if (part != remaining && remaining - part <= part)
            continue; // the rest cannot be split into parts larger than `part`
        buffer.push_back(part);
        visit_partitions(buffer, remaining - part, visit);
        buffer.pop_back();
    }
}

} // namespace detail

/// Q(0..n_max): number of partitions of each n into distinct positive parts.
/// Q(0) = 1 counts the empty partition (the singleton set {0}).
template <class Count = std::uint64_t>
std::vector<Count> q_distinct_table(int n_max)
{
    detail::check_argument(n_max);
    std::vector<Count> table(static_cast<std::size_t>(n_max) + 1, Count{0});
    table[0] = Count{1};
    // 0/1 knapsack over the parts 1..n_max.
    for (int part = 1; part <= n_max; ++part)
        for (int s = n_max; s >= part; --s)
            table[s] = detail::checked_add(table[s], table[s - part]);
    return table;
}

template <class Count = std::uint64_t>
Count q_distinct(int n)
{
    return q_distinct_table<Count>(n).back();
}

/// F(x) = sum of Q(n) over integers 0 < n < x. The singleton branch is not included.
template <class Count = std::uint64_t>
Count counting_function(double x)
{
    if (!std::isfinite(x) || x <= 0.0)
        throw DomainError("counting_function requires a finite ratio x > 0");
    const double top = std::ceil(x) - 1.0; // largest integer strictly below x
    if (top > kMaxArgument)
        throw DomainError("counting_function: x exceeds supported range");
    const int n_max = static_cast<int>(top);
    Count total{0};
    if (n_max < 1)
        return total;
    const auto table = q_distinct_table<Count>(n_max);
    for (int n = 1; n <= n_max; ++n)
        total = detail::checked_add(total, table[n]);
    return total;
}

/// Calls visit(std::span<const int>) for every distinct partition of n, parts
/// led by 0, in lexicographic order. Nothing is stored.
template <class Visitor>
    requires std::invocable<Visitor&, std::span<const int>>
void for_each_distinct_partition(int n, Visitor&& visit)
{
    detail::check_argument(n);
    std::vector<int> buffer{0};
    detail::visit_partitions(buffer, n, visit);
}

inline std::vector<DistinctPartition> enumerate_distinct_partitions(int n)
{
    std::vector<DistinctPartition> out;
    for_each_distinct_partition(n, [&](std::span<const int> parts) {
        out.emplace_back(std::vector<int>(parts.begin(), parts.end()));
    });
    return out;
}

/// Leading-order Hardy-Ramanujan estimate e^{pi sqrt(n/3)} / (4 3^{1/4} n^{3/4}).
inline double q_asymptotic(int n)
{
    if (n < 1)
        throw DomainError("q_asymptotic requires n >= 1");
    const double nd = n;
    return std::exp(std::numbers::pi * std::sqrt(nd / 3.0))
           / (4.0 * std::pow(3.0, 0.25) * std::pow(nd, 0.75));
}

/// Estimate of the cumulative count: e^{pi (n/3)^{1/2}} / (2 pi (n/3)^{1/4}).
inline double f_asymptotic(int n)
{
    if (n < 1)
        throw DomainError("f_asymptotic requires n >= 1");
    const double r = n / 3.0;
    return std::exp(std::numbers::pi * std::sqrt(r)) / (2.0 * std::numbers::pi * std::pow(r, 0.25));
}

} // namespace starkladder::partitions
