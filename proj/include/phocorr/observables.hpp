#pragma once

#include <optional>
#include <stdexcept>

#include "phocorr/moments.hpp"

namespace phocorr
{
    /// Zero-delay correlation functions of the two modes. A mode whose mean
    /// occupation is below the vacuum threshold has undefined correlations.
    struct CorrelationSet
    {
        double mean_a = 0.0;
        double mean_b = 0.0;
        std::optional<double> g2_photon;
        std::optional<double> g2_phonon;
        std::optional<double> g2_cross;
        std::optional<double> csi;

        /// CSI < 1: photon-phonon correlations are nonclassical.
        bool violates_csi() const { return csi && *csi < 1.0; }
    };

    struct ObservableTolerances
    {
        double imag = 1e-8;       // relative to the moment magnitude
        double vacuum = 1e-12;    // mean occupation below this is vacuum
    };

    class NonPhysicalMoments : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    CorrelationSet correlations(const MomentVector& x, const ObservableTolerances& tol = {});

    /// g1 * g2 / g3^2; empty if any factor is missing or g3 == 0.
    std::optional<double> csi_from_factors(std::optional<double> g2_photon, std::optional<double> g2_phonon,
                                           std::optional<double> g2_cross);
}
