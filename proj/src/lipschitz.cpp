#include "tsobs/lipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "tsobs/errors.hpp"
#include "tsobs/matrix.hpp"
#include "tsobs/membership.hpp"
#include "tsobs/numerics.hpp"

namespace tsobs {

namespace {

// Largest singular value of J = h I + x grad^T, the Jacobian of x -> h(x) x.
double weighted_state_gain(double h, const std::vector<double>& x, const std::vector<double>& grad) {
    const std::size_t n = x.size();
    Matrix j(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        j(i, i) = h;
        for (std::size_t k = 0; k < n; ++k) j(i, k) += x[i] * grad[k];
    }
    return std::sqrt(std::max(0.0, max_eig(j.transposed() * j)));
}

double ratio_against(double numerator, double denominator) {
    if (denominator <= 0.0) return numerator <= 1e-14 ? 0.0 : std::numeric_limits<double>::infinity();
    return numerator / denominator;
}

}  // namespace

LipschitzBounds estimate_constants(const TsDescriptorModel& model, const Box& box,
                                   const EstimateOptions& options) {
    check_model(model);
    check_box(box, model.n);
    if (options.density == 0) fail(ErrorKind::NonpositiveBounds, "lattice density must be at least 1");
    if (!std::isfinite(options.safety) || options.safety <= 0.0)
        fail(ErrorKind::NonpositiveBounds, "safety factor must be positive");

    std::vector<std::vector<double>> axes(model.n);
    for (std::size_t d = 0; d < model.n; ++d) axes[d] = lattice_axis(box.lower[d], box.upper[d], options.density);

    LipschitzBounds out;
    out.box = box;
    out.method = BoundsMethod::Analytic;
    out.safety = options.safety;
    out.density = options.density;
    out.m.assign(model.r, 0.0);
    out.n.assign(model.r, 0.0);

    std::vector<std::size_t> idx(model.n, 0);
    std::vector<double> z(model.n);
    while (true) {
        for (std::size_t d = 0; d < model.n; ++d) z[d] = axes[d][idx[d]];
        const auto h = evaluate_memberships(model.h, z);
        const auto grads = membership_gradients(model.h, z);
        for (std::size_t i = 0; i < model.r; ++i) {
            out.n[i] = std::max(out.n[i], norm2(grads[i]));
            out.m[i] = std::max(out.m[i], weighted_state_gain(h[i], z, grads[i]));
        }
        std::size_t d = 0;
        while (d < model.n && ++idx[d] == axes[d].size()) idx[d++] = 0;
        if (d == model.n) break;
    }
    for (std::size_t i = 0; i < model.r; ++i) {
        out.m[i] *= options.safety;
        out.n[i] *= options.safety;
    }
    return out;
}

HypothesisCheck check_hypothesis(const TsDescriptorModel& model, const LipschitzBounds& bounds,
                                 std::size_t pairs, std::uint64_t seed) {
    check_model(model);
    check_box(bounds.box, model.n);
    if (bounds.m.size() != model.r || bounds.n.size() != model.r)
        fail(ErrorKind::DimensionMismatch, "bounds do not cover every rule");

    // Raw engine draws mapped to [0, 1) by hand so the pairs are identical on
    // every platform.
    std::mt19937_64 eng(seed);
    auto draw = [&] {
        std::vector<double> z(model.n);
        for (std::size_t d = 0; d < model.n; ++d) {
            const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
            z[d] = bounds.box.lower[d] + (bounds.box.upper[d] - bounds.box.lower[d]) * u;
        }
        return z;
    };

    HypothesisCheck res;
    res.worst_ratio_m.assign(model.r, 0.0);
    res.worst_ratio_n.assign(model.r, 0.0);
    res.pairs = pairs;
    for (std::size_t p = 0; p < pairs; ++p) {
        const auto a = draw();
        const auto b = draw();
        std::vector<double> diff(model.n);
        for (std::size_t d = 0; d < model.n; ++d) diff[d] = a[d] - b[d];
        const double dist = norm2(diff);
        const auto ha = evaluate_memberships(model.h, a);
        const auto hb = evaluate_memberships(model.h, b);
        for (std::size_t i = 0; i < model.r; ++i) {
            std::vector<double> gdiff(model.n);
            for (std::size_t d = 0; d < model.n; ++d) gdiff[d] = ha[i] * a[d] - hb[i] * b[d];
            res.worst_ratio_n[i] =
                std::max(res.worst_ratio_n[i], ratio_against(std::abs(ha[i] - hb[i]), bounds.n[i] * dist));
            res.worst_ratio_m[i] = std::max(res.worst_ratio_m[i], ratio_against(norm2(gdiff), bounds.m[i] * dist));
        }
    }
    for (std::size_t i = 0; i < model.r; ++i)
        if (res.worst_ratio_m[i] > 1.0 || res.worst_ratio_n[i] > 1.0) res.ok = false;
    return res;
}

}  // namespace tsobs
