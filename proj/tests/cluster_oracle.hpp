// cluster_oracle.hpp -- brute-force reference for cluster extraction, kept
// independent of the library's single-pass implementation
#pragma once

#include <cstddef>
#include <vector>

#include "centropy/moving_average.hpp"

namespace cluster_oracle {

struct OracleCluster {
    std::size_t start, end;
    int sign;
};

/// Materialize the resolved sign sequence, list every boundary, then read the
/// interior runs off the boundary list.
inline std::vector<OracleCluster> clusters(const std::vector<double>& price,
                                           const centropy::MovingAverageSeries& ma) {
    std::vector<int> sign(ma.values.size(), 0);
    for (std::size_t i = 0; i < ma.values.size(); ++i) {
        const double d = price[ma.offset + i] - ma.values[i];
        sign[i] = (d > 0) - (d < 0);
    }
    for (std::size_t i = 1; i < sign.size(); ++i)
        if (sign[i] == 0) sign[i] = sign[i - 1];
    std::size_t begin = 0;
    while (begin < sign.size() && sign[begin] == 0) ++begin;

    std::vector<std::size_t> boundaries;
    for (std::size_t i = begin + 1; i < sign.size(); ++i)
        if (sign[i] != sign[i - 1]) boundaries.push_back(i);

    std::vector<OracleCluster> out;
    for (std::size_t b = 0; b + 1 < boundaries.size(); ++b)
        out.push_back({ma.offset + boundaries[b], ma.offset + boundaries[b + 1], sign[boundaries[b]]});
    return out;
}

}  // namespace cluster_oracle
