#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nmdtsa {

// A monomial stored as the sorted multiset of its variable indices, so
// x0^2 x3 is {0, 0, 3}. This is the symmetric "alpha <= beta <= ... <= gamma"
// indexing of homogeneous polynomial maps; each product of variables has
// exactly one representation.
//
// Ordering is graded: lower degree first, then lexicographic on the sorted
// index list. Every container keyed by Monomial therefore iterates in the
// same canonical order.
class Monomial {
public:
    static constexpr int kMaxDegree = 16;

    Monomial() = default;

    static Monomial variable(int var);
    static Monomial from_vars(std::initializer_list<int> vars);
    static Monomial from_vars(std::span<const int> vars);
    static Monomial from_exponents(std::span<const int> exponents);

    int degree() const { return degree_; }
    bool is_constant() const { return degree_ == 0; }
    std::span<const std::uint16_t> vars() const { return {vars_.data(), degree_}; }

    int exponent(int var) const;
    std::vector<int> exponents(int dim) const;
    // Largest variable index, -1 for the constant monomial.
    int max_var() const { return degree_ == 0 ? -1 : vars_[degree_ - 1]; }

    // Monomial with the last (largest) variable removed.
    Monomial prefix() const;

    Monomial operator*(const Monomial& other) const;

    // d/dx_var: multiplicity of var (0 if absent) and the reduced monomial.
    std::pair<int, Monomial> derivative(int var) const;

    // Image under a variable relabeling (result re-sorted).
    template <class Map>
    Monomial relabeled(Map&& map) const {
        std::array<int, kMaxDegree> tmp{};
        for (int i = 0; i < degree_; ++i) tmp[i] = map(static_cast<int>(vars_[i]));
        return from_vars(std::span<const int>(tmp.data(), degree_));
    }

    std::string to_string() const;

    friend bool operator==(const Monomial& a, const Monomial& b) {
        if (a.degree_ != b.degree_) return false;
        for (int i = 0; i < a.degree_; ++i)
            if (a.vars_[i] != b.vars_[i]) return false;
        return true;
    }
    friend bool operator<(const Monomial& a, const Monomial& b) {
        if (a.degree_ != b.degree_) return a.degree_ < b.degree_;
        for (int i = 0; i < a.degree_; ++i)
            if (a.vars_[i] != b.vars_[i]) return a.vars_[i] < b.vars_[i];
        return false;
    }

private:
    std::array<std::uint16_t, kMaxDegree> vars_{};
    std::uint8_t degree_ = 0;
};

}  // namespace nmdtsa
