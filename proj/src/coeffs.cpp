#include "phocorr/coeffs.hpp"

#include <cmath>
#include <stdexcept>

namespace phocorr
{
    namespace
    {
        constexpr cplx I{0.0, 1.0};

        bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }
    }

    PopulationTerms population_terms(const ModelParams& p, const DressedParams& d,
                                     double p_plus, double p_minus)
    {
        const double s2 = std::sin(2.0 * d.theta);
        const double c2 = std::cos(2.0 * d.theta);
        const double sin2 = std::pow(std::sin(d.theta), 2);
        const double cos2 = std::pow(std::cos(d.theta), 2);

        const double g = p.g, lam = p.lam;
        const double d1 = p.delta1, w = p.omega_m;
        const double gpar = d.Gamma_par, gperp = d.Gamma_perp, wr2 = 2.0 * d.omega_r;

        PopulationTerms t;
        t.photon = 0.25 * g * g * s2 * s2 / (gpar + I * d1)
                 + g * g * p_minus * sin2 * sin2 / (gperp - I * (wr2 - d1))
                 + g * g * p_plus * cos2 * cos2 / (gperp + I * (wr2 + d1));

        t.phonon = 0.25 * (lam * lam * c2 * c2 / (gpar - I * w)
                         + lam * lam * p_minus * s2 * s2 / (gperp - I * (wr2 + w))
                         + lam * lam * p_plus * s2 * s2 / (gperp + I * (wr2 - w)));

        const double gl = g * lam * s2;
        t.cross1 = 0.5 * p_plus * gl * cos2 / (gperp - I * (wr2 + d1))
                 - 0.5 * p_minus * gl * sin2 / (gperp + I * (wr2 - d1))
                 - 0.25 * gl * c2 / (gpar - I * d1);

        t.cross2 = 0.5 * p_minus * gl * cos2 / (gperp + I * (wr2 + w))
                 - 0.5 * p_plus * gl * sin2 / (gperp - I * (wr2 - w))
                 - 0.25 * gl * c2 / (gpar + I * w);
        return t;
    }

    EffectiveCoefficients effective_coefficients(const ModelParams& p, const DressedParams& d)
    {
        const PopulationTerms direct = population_terms(p, d, d.p_plus, d.p_minus);
        const PopulationTerms swapped = population_terms(p, d, d.p_minus, d.p_plus);
        const double thermal = p.kappa_b * p.nbar;

        EffectiveCoefficients c;
        c.a1 = direct.photon;
        c.b1 = swapped.photon + p.kappa_a;
        c.c1 = direct.cross1;
        c.d1 = swapped.cross1;
        c.a2 = direct.phonon + thermal;
        c.b2 = swapped.phonon + thermal + p.kappa_b;
        c.c2 = direct.cross2;
        c.d2 = swapped.cross2;

        for (cplx z : {c.a1, c.b1, c.c1, c.d1, c.a2, c.b2, c.c2, c.d2})
            if (!finite(z))
                throw std::domain_error("effective_coefficients: non-finite coefficient");
        return c;
    }
}
