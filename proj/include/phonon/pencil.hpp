#pragma once

#include "phonon/crystal.hpp"
#include "phonon/types.hpp"

namespace phonon {

/// Galerkin matrices of the split energy and mass forms. The stiffness
/// parts carry the inclusion tensor C1 (contrast factored out); the masses
/// carry unit density.
template <class Matrix>
struct Pencil {
    Matrix k_in;
    Matrix k_out;
    Matrix m_in;
    Matrix m_out;

    /// Matrix of B_k: k * (exterior energy) + (inclusion energy).
    [[nodiscard]] Matrix stiffness(double contrast_k) const {
        Matrix out = contrast_k * k_out;
        out += k_in;
        return out;
    }
    [[nodiscard]] Matrix mass(double rho1, double rho2) const {
        Matrix out = rho1 * m_in;
        out += rho2 * m_out;
        return out;
    }
    [[nodiscard]] Matrix mass(const Material& m) const { return mass(m.rho1, m.rho2); }
    [[nodiscard]] Eigen::Index dim() const { return k_in.rows(); }
};

using DensePencil = Pencil<CMatrix>;
using SparsePencil = Pencil<CSparse>;

} // namespace phonon
