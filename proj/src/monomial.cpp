#include "nmdtsa/monomial.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace nmdtsa {

namespace {

void check_var(int var) {
    if (var < 0 || var > std::numeric_limits<std::uint16_t>::max())
        throw std::out_of_range("monomial variable index out of range: " + std::to_string(var));
}

}  // namespace

Monomial Monomial::variable(int var) {
    check_var(var);
    Monomial m;
    m.vars_[0] = static_cast<std::uint16_t>(var);
    m.degree_ = 1;
    return m;
}

Monomial Monomial::from_vars(std::initializer_list<int> vars) {
    return from_vars(std::span<const int>(vars.begin(), vars.size()));
}

Monomial Monomial::from_vars(std::span<const int> vars) {
    if (vars.size() > static_cast<std::size_t>(kMaxDegree))
        throw std::length_error("monomial degree exceeds " + std::to_string(kMaxDegree));
    Monomial m;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        check_var(vars[i]);
        m.vars_[i] = static_cast<std::uint16_t>(vars[i]);
    }
    m.degree_ = static_cast<std::uint8_t>(vars.size());
    std::sort(m.vars_.begin(), m.vars_.begin() + m.degree_);
    return m;
}

Monomial Monomial::from_exponents(std::span<const int> exponents) {
    std::vector<int> vars;
    for (std::size_t v = 0; v < exponents.size(); ++v) {
        if (exponents[v] < 0) throw std::invalid_argument("negative exponent");
        for (int e = 0; e < exponents[v]; ++e) vars.push_back(static_cast<int>(v));
    }
    return from_vars(std::span<const int>(vars));
}

int Monomial::exponent(int var) const {
    int count = 0;
    for (int i = 0; i < degree_; ++i)
        if (vars_[i] == var) ++count;
    return count;
}

std::vector<int> Monomial::exponents(int dim) const {
    std::vector<int> alpha(static_cast<std::size_t>(dim), 0);
    for (int i = 0; i < degree_; ++i) {
        if (vars_[i] >= dim) throw std::out_of_range("monomial variable exceeds dimension");
        ++alpha[vars_[i]];
    }
    return alpha;
}

Monomial Monomial::prefix() const {
    Monomial m = *this;
    if (m.degree_ > 0) {
        --m.degree_;
        m.vars_[m.degree_] = 0;
    }
    return m;
}

Monomial Monomial::operator*(const Monomial& other) const {
    const int total = degree_ + other.degree_;
    if (total > kMaxDegree)
        throw std::length_error("monomial degree exceeds " + std::to_string(kMaxDegree));
    Monomial m;
    std::merge(vars_.begin(), vars_.begin() + degree_, other.vars_.begin(),
               other.vars_.begin() + other.degree_, m.vars_.begin());
    m.degree_ = static_cast<std::uint8_t>(total);
    return m;
}

std::pair<int, Monomial> Monomial::derivative(int var) const {
    Monomial m;
    int count = 0;
    int out = 0;
    for (int i = 0; i < degree_; ++i) {
        if (vars_[i] == var && count == 0) {
            ++count;
            continue;
        }
        if (vars_[i] == var) ++count;
        m.vars_[out++] = vars_[i];
    }
    if (count == 0) return {0, Monomial{}};
    m.degree_ = static_cast<std::uint8_t>(out);
    return {count, m};
}

std::string Monomial::to_string() const {
    std::ostringstream os;
    os << '[';
    for (int i = 0; i < degree_; ++i) os << (i ? " " : "") << vars_[i];
    os << ']';
    return os.str();
}

}  // namespace nmdtsa
