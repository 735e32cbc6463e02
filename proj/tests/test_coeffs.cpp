#include <cmath>
#include <random>

#include <doctest.h>

#include "phocorr/coeffs.hpp"

using namespace phocorr;

namespace
{
    bool close(cplx a, cplx b, double rel)
    {
        return std::abs(a - b) <= rel * std::max(std::abs(b), 1e-300);
    }

    ModelParams blue_point()
    {
        ModelParams p;
        p.gamma_c = 0.0;
        p.g = 1.5;
        p.lam = 4.0;
        p.omega_rabi = 30.0;
        p.delta = 12.0;
        p.delta1 = 45.0;
        p.omega_m = 40.0;
        p.kappa_a = 0.05;
        p.kappa_b = 0.02;
        p.nbar = 0.5;
        return p;
    }
}

TEST_SUITE("coeffs")
{
    TEST_CASE("golden values from the arbitrary-precision oracle")
    {
        // tests/oracles/coefficients_mp.py, 40 digits, rounded to 17
        struct Golden
        {
            ModelParams p;
            EffectiveCoefficients c;
        };
        const Golden cases[] = {
            {reference_params(50.0, 2.0),
             {{0.0018188009897622327, -0.02708325476777828},
              {0.092549320751364038, 0.0010449732306567437},
              {-0.0001815815737501006, 0.057044673961311262},
              {-0.0012330480442438521, 0.082562369746215206},
              {0.020639692546404068, -0.055432601690588287},
              {0.028532256592198575, 0.00033085166696543098},
              {-0.0012330480442438521, -0.082562369746215206},
              {-0.0001815815737501006, -0.057044673961311262}}},
            {blue_point(),
             {{0.0017132492444882983, 0.00096925708012138762},
              {0.050983794470686262, -0.010303615723073362},
              {-0.0046401698496463724, 0.048644444874072799},
              {-0.0020503278364880549, 0.02754191469935501},
              {0.01441089237659231, -0.026184758594769553},
              {0.038969123144937818, -0.108767186819961},
              {-0.0012194466971834969, -0.022046838247140176},
              {-0.0027814215736319105, -0.036456577637370482}}},
        };
        for (const auto& g : cases)
        {
            const auto c = effective_coefficients(g.p);
            CHECK(close(c.a1, g.c.a1, 1e-12));
            CHECK(close(c.b1, g.c.b1, 1e-12));
            CHECK(close(c.c1, g.c.c1, 1e-12));
            CHECK(close(c.d1, g.c.d1, 1e-12));
            CHECK(close(c.a2, g.c.a2, 1e-12));
            CHECK(close(c.b2, g.c.b2, 1e-12));
            CHECK(close(c.c2, g.c.c2, 1e-12));
            CHECK(close(c.d2, g.c.d2, 1e-12));
        }
    }

    TEST_CASE("decoupled cavity: g = 0")
    {
        auto p = reference_params();
        p.g = 0.0;
        const auto c = effective_coefficients(p);
        CHECK(c.a1 == cplx(0.0));
        CHECK(c.b1 == cplx(p.kappa_a));
        CHECK(c.c1 == cplx(0.0));
        CHECK(c.c2 == cplx(0.0));
        CHECK(c.d1 == cplx(0.0));
        CHECK(c.d2 == cplx(0.0));
    }

    TEST_CASE("decoupled phonon: lambda = 0 leaves the thermal bath")
    {
        auto p = reference_params();
        p.lam = 0.0;
        const auto c = effective_coefficients(p);
        CHECK(c.a2 == cplx(p.kappa_b * p.nbar));
        CHECK(c.b2 == cplx(p.kappa_b * p.nbar + p.kappa_b));
        CHECK(c.c1 == cplx(0.0));
        CHECK(c.d2 == cplx(0.0));
    }

    TEST_CASE("resonant drive: equal dressed populations make c and d coincide")
    {
        auto p = reference_params();
        p.delta = 0.0;
        const auto c = effective_coefficients(p);
        CHECK(close(c.c1, c.d1, 1e-14));
        CHECK(close(c.c2, c.d2, 1e-14));
        CHECK(close(c.a1, c.b1 - p.kappa_a, 1e-14));
    }

    TEST_CASE("swap structure over random draws")
    {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 300; i++)
        {
            ModelParams p;
            p.gamma_c = u(rng);
            p.g = 5 * u(rng);
            p.lam = 8 * u(rng);
            p.omega_rabi = 10 + 100 * u(rng);
            p.delta = 100 * (u(rng) - 0.5);
            p.omega_m = 10 + 90 * u(rng);
            p.delta1 = p.omega_m + 40 * (u(rng) - 0.5);
            p.kappa_a = 0.01 + 0.2 * u(rng);
            p.kappa_b = 0.001 + 0.05 * u(rng);
            p.nbar = 5 * u(rng);
            const auto d = derive_dressed(p);
            const auto c = effective_coefficients(p, d);
            const auto direct = population_terms(p, d, d.p_plus, d.p_minus);
            const auto swapped = population_terms(p, d, d.p_minus, d.p_plus);
            CHECK(close(c.b1, swapped.photon + p.kappa_a, 1e-15));
            CHECK(close(c.a2, direct.phonon + p.kappa_b * p.nbar, 1e-15));
            CHECK(close(c.b2, swapped.phonon + p.kappa_b * p.nbar + p.kappa_b, 1e-15));
        }
    }

    TEST_CASE("continuity in delta1")
    {
        auto p = reference_params();
        const auto c0 = effective_coefficients(p);
        p.delta1 += 1e-7;
        const auto c1 = effective_coefficients(p);
        CHECK(std::abs(c1.a1 - c0.a1) < 1e-8);
        CHECK(std::abs(c1.c1 - c0.c1) < 1e-8);
        CHECK(std::abs(c1.d1 - c0.d1) < 1e-8);
    }

    TEST_CASE("population terms reduce to the full coefficients")
    {
        const auto p = reference_params();
        const auto d = derive_dressed(p);
        const auto t = population_terms(p, d, d.p_plus, d.p_minus);
        const auto s = population_terms(p, d, d.p_minus, d.p_plus);
        const auto c = effective_coefficients(p, d);
        CHECK(t.photon == c.a1);
        CHECK(t.cross1 == c.c1);
        CHECK(t.cross2 == c.c2);
        CHECK(s.cross1 == c.d1);
        CHECK(s.cross2 == c.d2);
    }
}
