#pragma once

#include <complex>

#include "phocorr/params.hpp"

namespace phocorr
{
    using cplx = std::complex<double>;

    /// Complex rates of the reduced photon-phonon dynamics (units of gamma).
    /// a1/b1 act on the cavity mode, a2/b2 on the phonon mode and c*/d* couple
    /// the two through pair creation/annihilation.
    struct EffectiveCoefficients
    {
        cplx a1, b1, c1, d1;
        cplx a2, b2, c2, d2;
    };

    /// The four printed expressions with the dressed populations passed
    /// explicitly. Thermal and bare damping terms are not included.
    struct PopulationTerms
    {
        cplx photon;  // A1
        cplx phonon;  // lambda-dependent part of A2
        cplx cross1;  // C1
        cplx cross2;  // C2
    };

    PopulationTerms population_terms(const ModelParams& p, const DressedParams& d,
                                     double p_plus, double p_minus);

    /// Builds all eight coefficients. The b/d rates are the a/c expressions
    /// with P+ and P- exchanged; kappa_a is added to b1, and b2 carries the
    /// thermal kappa_b*nbar of a2 plus kappa_b.
    EffectiveCoefficients effective_coefficients(const ModelParams& p, const DressedParams& d);

    inline EffectiveCoefficients effective_coefficients(const ModelParams& p)
    {
        return effective_coefficients(p, derive_dressed(p));
    }
}
