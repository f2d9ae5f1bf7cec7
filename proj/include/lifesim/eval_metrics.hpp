#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace lifesim {

// Jensen-Shannon divergence in nats between two histograms over the same
// bins. Inputs are normalized first; result lies in [0, ln 2].
double jsd(const std::vector<double>& p, const std::vector<double>& q);

enum class AlphaLevel { nominal, ordinal, interval };

struct AlphaResult {
    double alpha = 1.0;
    bool degenerate = false;  // expected disagreement was zero
    std::size_t units_used = 0;
};

// Krippendorff's inter-rater agreement via the coincidence matrix.
// `ratings` is units x raters; missing cells are nullopt. Units with fewer
// than two ratings are dropped.
AlphaResult krippendorff_alpha(
    const std::vector<std::vector<std::optional<double>>>& ratings, AlphaLevel level);

// 1..5 judge rating onto the 0..100 reporting scale.
double scale_rating(double rho);

double mean(const std::vector<double>& xs);

}  // namespace lifesim
