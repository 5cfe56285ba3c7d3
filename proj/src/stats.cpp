#include "itlab/stats.hpp"

#include "itlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace itlab {

double mean(std::span<const double> values)
{
    require(!values.empty(), ErrorCode::empty_input, "mean of an empty range");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double median(std::vector<double> values)
{
    require(!values.empty(), ErrorCode::empty_input, "median of an empty range");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double pearson(std::span<const double> a, std::span<const double> b)
{
    require(a.size() == b.size(), ErrorCode::length_mismatch, "correlation inputs differ in length");
    require(!a.empty(), ErrorCode::empty_input, "correlation of empty inputs");
    const double ma = mean(a);
    const double mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    // relative threshold so rounding noise in a constant vector counts as zero variance
    const double eps = 1e-24;
    if (saa <= eps * (1.0 + ma * ma) * static_cast<double>(a.size()) ||
        sbb <= eps * (1.0 + mb * mb) * static_cast<double>(b.size()))
        return 0.0;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> ranks(std::span<const double> values)
{
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> r(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]])
            ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

double spearman(std::span<const double> a, std::span<const double> b)
{
    require(a.size() == b.size(), ErrorCode::length_mismatch, "correlation inputs differ in length");
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    return pearson(ra, rb);
}

} // namespace itlab
