// Lowest bands of a homogeneous crystal (k = 1, rho1 = rho2) along Gamma-X,
// next to the closed form: mu |2 pi n + alpha|^2 twice and
// (lambda + 2 mu) |2 pi n + alpha|^2 once per lattice vector n.

#include "phonon/dispersion.hpp"

#include <algorithm>
#include <cstdio>

int main() {
    using namespace phonon;
    CrystalSpec spec;
    spec.material.rho2 = spec.material.rho1;
    const Material& m = spec.material;
    BandOptions opt;
    opt.cutoff_N = 2;
    for (int i = 1; i <= 4; ++i) {
        const QuasiMomentum a(pi * i / 4, 0, 0);
        const BandSolution b = solve_bands(spec, a, 1.0, 4, opt);
        std::vector<double> closed;
        for (int n = -1; n <= 1; ++n) {
            const double q2 = (two_pi * Vec3(n, 0, 0) + a.alpha()).squaredNorm();
            closed.insert(closed.end(), {m.mu1 * q2, m.mu1 * q2, (m.lambda1 + 2 * m.mu1) * q2});
        }
        std::sort(closed.begin(), closed.end());
        std::printf("alpha_x = %.4f  xi = %.6f %.6f %.6f %.6f  closed form = %.6f %.6f %.6f %.6f\n", a[0], b.xi[0],
                    b.xi[1], b.xi[2], b.xi[3], closed[0], closed[1], closed[2], closed[3]);
    }
}
