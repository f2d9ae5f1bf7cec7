#include "lifesim/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "lifesim/errors.hpp"

namespace lifesim {

namespace {

std::vector<double> normalized(const std::vector<double>& h) {
    double total = 0.0;
    for (double x : h) {
        if (x < 0.0) throw ValidationError("histogram mass must be non-negative");
        total += x;
    }
    if (total <= 0.0) throw ValidationError("histogram has no mass");
    std::vector<double> out(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i] / total;
    return out;
}

}  // namespace

double jsd(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw ValidationError("histograms must share bin edges");
    if (p.empty()) throw ValidationError("histograms must be non-empty");
    std::vector<double> pn = normalized(p);
    std::vector<double> qn = normalized(q);
    double d = 0.0;
    for (std::size_t i = 0; i < pn.size(); ++i) {
        double m = 0.5 * (pn[i] + qn[i]);
        if (pn[i] > 0.0) d += 0.5 * pn[i] * std::log(pn[i] / m);
        if (qn[i] > 0.0) d += 0.5 * qn[i] * std::log(qn[i] / m);
    }
    return std::max(d, 0.0);
}

AlphaResult krippendorff_alpha(
    const std::vector<std::vector<std::optional<double>>>& ratings, AlphaLevel level) {
    // Pairable values and the coincidence matrix over the observed value set.
    std::map<double, std::size_t> value_index;
    for (const auto& unit : ratings)
        for (const auto& r : unit)
            if (r) value_index.emplace(*r, 0);
    std::size_t v = 0;
    for (auto& [value, idx] : value_index) idx = v++;

    const std::size_t k = value_index.size();
    std::vector<double> coincidence(k * k, 0.0);
    AlphaResult res;
    for (const auto& unit : ratings) {
        std::vector<std::size_t> present;
        for (const auto& r : unit)
            if (r) present.push_back(value_index.at(*r));
        if (present.size() < 2) continue;
        res.units_used += 1;
        double w = 1.0 / double(present.size() - 1);
        for (std::size_t a = 0; a < present.size(); ++a)
            for (std::size_t b = 0; b < present.size(); ++b)
                if (a != b) coincidence[present[a] * k + present[b]] += w;
    }
    if (res.units_used == 0)
        throw ValidationError("agreement needs at least one unit with two ratings");

    std::vector<double> marginal(k, 0.0);
    double n = 0.0;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < k; ++d) {
            marginal[c] += coincidence[c * k + d];
            n += coincidence[c * k + d];
        }

    std::vector<double> values;
    values.reserve(k);
    for (const auto& [value, idx] : value_index) values.push_back(value);

    auto delta_sq = [&](std::size_t c, std::size_t d) {
        if (c == d) return 0.0;
        switch (level) {
            case AlphaLevel::nominal:
                return 1.0;
            case AlphaLevel::interval: {
                double diff = values[c] - values[d];
                return diff * diff;
            }
            case AlphaLevel::ordinal: {
                std::size_t lo = std::min(c, d), hi = std::max(c, d);
                double s = 0.0;
                for (std::size_t g = lo; g <= hi; ++g) s += marginal[g];
                s -= 0.5 * (marginal[lo] + marginal[hi]);
                return s * s;
            }
        }
        return 0.0;
    };

    double d_o = 0.0, d_e = 0.0;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < k; ++d) {
            double dsq = delta_sq(c, d);
            d_o += coincidence[c * k + d] * dsq;
            d_e += marginal[c] * marginal[d] * dsq;
        }
    d_o /= n;
    d_e /= n * (n - 1.0);

    if (d_e == 0.0) {
        res.degenerate = true;
        res.alpha = d_o == 0.0 ? 1.0 : 0.0;
        return res;
    }
    res.alpha = 1.0 - d_o / d_e;
    return res;
}

double scale_rating(double rho) {
    if (rho < 1.0 || rho > 5.0)
        throw ValidationError("rating outside 1..5: " + std::to_string(rho));
    return 25.0 * (rho - 1.0);
}

double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw ValidationError("mean of an empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
}

}  // namespace lifesim
