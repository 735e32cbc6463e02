#include "phocorr/observables.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace phocorr
{
    namespace
    {
        double physical_moment(const MomentVector& x, const MomentIndex& idx, const ObservableTolerances& tol)
        {
            const cplx v = x(idx);
            const double scale = std::max(1.0, std::abs(v));
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw NonPhysicalMoments("moment " + to_string(idx) + " is not finite");
            if (std::abs(v.imag()) > tol.imag * scale)
                throw NonPhysicalMoments("moment " + to_string(idx) + " has imaginary part "
                                         + std::to_string(v.imag()));
            if (v.real() < -tol.imag * scale)
                throw NonPhysicalMoments("moment " + to_string(idx) + " is negative: "
                                         + std::to_string(v.real()));
            return std::max(v.real(), 0.0);
        }
    }

    std::optional<double> csi_from_factors(std::optional<double> g2_photon, std::optional<double> g2_phonon,
                                           std::optional<double> g2_cross)
    {
        if (!g2_photon || !g2_phonon || !g2_cross || *g2_cross == 0.0)
            return std::nullopt;
        return *g2_photon * *g2_phonon / (*g2_cross * *g2_cross);
    }

    CorrelationSet correlations(const MomentVector& x, const ObservableTolerances& tol)
    {
        if (x.basis.max_order() < 4)
            throw std::invalid_argument("correlations: moments up to order 4 are required");

        const double na = physical_moment(x, {1, 1, 0, 0}, tol);
        const double nb = physical_moment(x, {0, 0, 1, 1}, tol);
        const double aa = physical_moment(x, {2, 2, 0, 0}, tol);
        const double bb = physical_moment(x, {0, 0, 2, 2}, tol);
        const double ab = physical_moment(x, {1, 1, 1, 1}, tol);

        CorrelationSet out;
        out.mean_a = na;
        out.mean_b = nb;
        const bool photon = na >= tol.vacuum;
        const bool phonon = nb >= tol.vacuum;
        if (photon)
            out.g2_photon = aa / (na * na);
        if (phonon)
            out.g2_phonon = bb / (nb * nb);
        if (photon && phonon)
            out.g2_cross = ab / (na * nb);
        out.csi = csi_from_factors(out.g2_photon, out.g2_phonon, out.g2_cross);
        return out;
    }
}
