#include "tsobs/membership.hpp"

#include <cmath>
#include <string>

#include "tsobs/errors.hpp"

namespace tsobs {

MembershipSpec MembershipSpec::tanh_sector(std::size_t state_index, int sign, double scale, double offset) {
    MembershipSpec s;
    s.kind = MembershipKind::TanhSector;
    s.state_index = state_index;
    s.sign = sign;
    s.scale = scale;
    s.offset = offset;
    return s;
}

MembershipSpec MembershipSpec::cos_product(std::vector<std::size_t> state_indices) {
    MembershipSpec s;
    s.kind = MembershipKind::CosProduct;
    s.state_indices = std::move(state_indices);
    return s;
}

MembershipSpec MembershipSpec::constant(double value) {
    MembershipSpec s;
    s.kind = MembershipKind::Constant;
    s.value = value;
    return s;
}

MembershipSpec MembershipSpec::complement(std::size_t of) {
    MembershipSpec s;
    s.kind = MembershipKind::Complement;
    s.of = of;
    return s;
}

void check_membership_list(const std::vector<MembershipSpec>& specs, std::size_t n, const char* list_name) {
    const std::string where = list_name;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const MembershipSpec& s = specs[i];
        switch (s.kind) {
            case MembershipKind::TanhSector:
                if (s.state_index >= n) fail(ErrorKind::ParseError, where + ": tanh_sector state_index out of range");
                if (s.sign != 1 && s.sign != -1) fail(ErrorKind::ParseError, where + ": tanh_sector sign must be +1 or -1");
                break;
            case MembershipKind::CosProduct:
                if (s.state_indices.empty()) fail(ErrorKind::ParseError, where + ": cos_product needs at least one state index");
                for (std::size_t idx : s.state_indices)
                    if (idx >= n) fail(ErrorKind::ParseError, where + ": cos_product state index out of range");
                break;
            case MembershipKind::Constant:
                break;
            case MembershipKind::Complement:
                if (s.of >= specs.size()) fail(ErrorKind::ParseError, where + ": complement target out of range");
                if (s.of == i) fail(ErrorKind::ParseError, where + ": complement of itself");
                if (specs[s.of].kind == MembershipKind::Complement)
                    fail(ErrorKind::ParseError, where + ": complement of a complement is not allowed");
                break;
        }
    }
}

namespace {

double evaluate_one(const MembershipSpec& s, const std::vector<double>& z) {
    switch (s.kind) {
        case MembershipKind::TanhSector:
            return 0.5 * (1.0 + s.sign * std::tanh(s.scale * z[s.state_index] + s.offset));
        case MembershipKind::CosProduct: {
            double p = 1.0;
            for (std::size_t idx : s.state_indices) p *= std::cos(z[idx]);
            return p;
        }
        case MembershipKind::Constant:
            return s.value;
        case MembershipKind::Complement:
            return 0.0;  // resolved by caller
    }
    return 0.0;
}

}  // namespace

std::vector<double> evaluate_memberships(const std::vector<MembershipSpec>& specs, const std::vector<double>& z) {
    std::vector<double> out(specs.size(), 0.0);
    for (std::size_t i = 0; i < specs.size(); ++i)
        if (specs[i].kind != MembershipKind::Complement) out[i] = evaluate_one(specs[i], z);
    for (std::size_t i = 0; i < specs.size(); ++i)
        if (specs[i].kind == MembershipKind::Complement) out[i] = 1.0 - out[specs[i].of];
    return out;
}

std::vector<std::vector<double>> membership_gradients(const std::vector<MembershipSpec>& specs,
                                                      const std::vector<double>& z) {
    const std::size_t n = z.size();
    std::vector<std::vector<double>> grads(specs.size(), std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const MembershipSpec& s = specs[i];
        switch (s.kind) {
            case MembershipKind::TanhSector: {
                const double th = std::tanh(s.scale * z[s.state_index] + s.offset);
                grads[i][s.state_index] = 0.5 * s.sign * s.scale * (1.0 - th * th);
                break;
            }
            case MembershipKind::CosProduct:
                // d/dz_j = -sin(z_j) * prod_{i != j} cos(z_i); repeated indices
                // accumulate, matching the product rule.
                for (std::size_t d = 0; d < s.state_indices.size(); ++d) {
                    double term = 1.0;
                    for (std::size_t k = 0; k < s.state_indices.size(); ++k)
                        term *= (k == d) ? -std::sin(z[s.state_indices[k]]) : std::cos(z[s.state_indices[k]]);
                    grads[i][s.state_indices[d]] += term;
                }
                break;
            case MembershipKind::Constant:
                break;
            case MembershipKind::Complement:
                break;  // resolved below
        }
    }
    for (std::size_t i = 0; i < specs.size(); ++i)
        if (specs[i].kind == MembershipKind::Complement)
            for (std::size_t j = 0; j < n; ++j) grads[i][j] = -grads[specs[i].of][j];
    return grads;
}

}  // namespace tsobs
