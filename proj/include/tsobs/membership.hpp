#pragma once

#include <cstddef>
#include <vector>

namespace tsobs {

enum class MembershipKind { TanhSector, CosProduct, Constant, Complement };

// One scheduling function. The four families cover the fixtures and stay
// analytically differentiable, which the Lipschitz estimator relies on:
//   TanhSector  (1 + sign * tanh(scale * z[state_index] + offset)) / 2
//   CosProduct  product of cos(z[i]) over state_indices
//   Constant    value
//   Complement  1 - sibling(of) within the same rule list
struct MembershipSpec {
    MembershipKind kind = MembershipKind::Constant;

    std::size_t state_index = 0;  // TanhSector
    int sign = -1;                // TanhSector, +1 or -1
    double scale = 1.0;           // TanhSector
    double offset = 0.0;          // TanhSector

    std::vector<std::size_t> state_indices;  // CosProduct

    double value = 0.0;  // Constant

    std::size_t of = 0;  // Complement

    static MembershipSpec tanh_sector(std::size_t state_index, int sign, double scale = 1.0, double offset = 0.0);
    static MembershipSpec cos_product(std::vector<std::size_t> state_indices);
    static MembershipSpec constant(double value);
    static MembershipSpec complement(std::size_t of);
};

// Rejects out-of-range state indices, bad signs, and Complement entries that
// point at themselves, out of range, or at another Complement.
void check_membership_list(const std::vector<MembershipSpec>& specs, std::size_t n, const char* list_name);

// Values of every membership in the list at z (Complements resolved against
// their siblings).
std::vector<double> evaluate_memberships(const std::vector<MembershipSpec>& specs, const std::vector<double>& z);

// Analytic gradients with respect to z, one vector of length z.size() per spec.
std::vector<std::vector<double>> membership_gradients(const std::vector<MembershipSpec>& specs,
                                                      const std::vector<double>& z);

}  // namespace tsobs
