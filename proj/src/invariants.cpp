#include "phocorr/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "phocorr/observables.hpp"
#include "phocorr/oracle.hpp"

namespace phocorr
{
    const std::vector<MomentIndex>& first_pair_moments()
    {
        static const std::vector<MomentIndex> idx{{1, 1, 0, 0}, {0, 0, 1, 1}, {0, 1, 0, 1}, {1, 0, 1, 0}};
        return idx;
    }

    Eigen::MatrixXcd first_pair_system(const GeneratorBlocks& gen)
    {
        const Eigen::MatrixXcd full = gen.dense();
        const auto& idx = first_pair_moments();
        Eigen::MatrixXcd sys(4, 5);
        for (int r = 0; r < 4; r++)
        {
            const auto row = static_cast<Eigen::Index>(gen.basis.index_of(idx[r]));
            sys(r, 0) = full(row, 0);
            for (int c = 0; c < 4; c++)
                sys(r, c + 1) = full(row, static_cast<Eigen::Index>(gen.basis.index_of(idx[c])));
        }
        return sys;
    }

    Eigen::MatrixXcd first_pair_system_by_hand(const EffectiveCoefficients& c, double delta1, double omega_m)
    {
        using std::conj;
        const cplx i(0.0, 1.0);
        const cplx d1 = c.a1 - c.b1, d2 = c.a2 - c.b2;
        Eigen::MatrixXcd sys = Eigen::MatrixXcd::Zero(4, 5);

        // d<a+a>/dt
        sys(0, 0) = c.a1 + conj(c.a1);
        sys(0, 1) = conj(d1) + d1;
        sys(0, 3) = conj(c.c2) - conj(c.d2);
        sys(0, 4) = c.c2 - c.d2;
        // d<b+b>/dt
        sys(1, 0) = c.a2 + conj(c.a2);
        sys(1, 2) = conj(d2) + d2;
        sys(1, 3) = conj(c.c1) - conj(c.d1);
        sys(1, 4) = c.c1 - c.d1;
        // d<ab>/dt
        sys(2, 0) = c.c1 + c.c2;
        sys(2, 1) = c.c1 - c.d1;
        sys(2, 2) = c.c2 - c.d2;
        sys(2, 3) = d1 + d2 + i * (delta1 - omega_m);
        // d<a+b+>/dt
        sys(3, 0) = conj(c.c1) + conj(c.c2);
        sys(3, 1) = conj(c.c1) - conj(c.d1);
        sys(3, 2) = conj(c.c2) - conj(c.d2);
        sys(3, 4) = conj(d1) + conj(d2) - i * (delta1 - omega_m);
        return sys;
    }

    double trace_row_defect(const GeneratorBlocks& gen)
    {
        return gen.dense().row(0).cwiseAbs().maxCoeff();
    }

    double conjugation_covariance_defect(const GeneratorBlocks& gen)
    {
        const Eigen::MatrixXcd full = gen.dense();
        const double scale = std::max(full.cwiseAbs().maxCoeff(), 1e-300);
        const MomentBasis& basis = gen.basis;
        std::vector<Eigen::Index> conj_of(basis.size());
        for (std::size_t i = 0; i < basis.size(); i++)
            conj_of[i] = static_cast<Eigen::Index>(basis.index_of(basis[i].conjugate()));

        double worst = 0.0;
        for (Eigen::Index r = 0; r < full.rows(); r++)
            for (Eigen::Index t = 0; t < full.cols(); t++)
                worst = std::max(worst, std::abs(full(conj_of[r], conj_of[t]) - std::conj(full(r, t))));
        return worst / scale;
    }

    int block_triangularity_violations(const EffectiveCoefficients& c, double delta1, double omega_m,
                                       const MomentBasis& basis)
    {
        int bad = 0;
        for (const auto& q : basis.indices())
            for (const auto& e : generator_row(c, delta1, omega_m, q))
                if (e.target.order() != q.order() && e.target.order() != q.order() - 2)
                    bad++;
        return bad;
    }

    Eigen::MatrixXcd random_density(int n_a, int n_b, int support, std::mt19937_64& rng)
    {
        std::normal_distribution<double> normal;
        const int d = n_a * n_b;
        Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(d, d);
        for (int r = 0; r < d; r++)
        {
            if (r / n_b >= support || r % n_b >= support)
                continue;
            for (int c = 0; c < d; c++)
                g(r, c) = cplx(normal(rng), normal(rng));
        }
        Eigen::MatrixXcd rho = g * g.adjoint();
        return rho / rho.trace();
    }

    double fock_generator_defect(const EffectiveCoefficients& c, double delta1, double omega_m,
                                 const MomentBasis& basis, int support, std::mt19937_64& rng)
    {
        // levels < support + order so neither Q nor the generator reach the cutoff
        const int cutoff = support + basis.max_order() + 2;
        FockConfig cfg;
        cfg.n_a = cfg.n_b = cutoff;
        const Superoperator L = reduced_generator(c, delta1, omega_m, cfg, SpaceKind::full);
        const HilbertLayout h{1, cutoff, cutoff};

        const DensityMatrix rho{h, random_density(cutoff, cutoff, support, rng)};
        const DensityMatrix drho = L.apply(rho);

        const MomentVector x = fock_moments(rho, basis).moments;
        const MomentVector via_fock = fock_moments(drho, basis).moments;
        const Eigen::VectorXcd via_moments = assemble_generator(c, delta1, omega_m, basis).apply(x.values);

        double worst = 0.0;
        const double scale = std::max(via_moments.cwiseAbs().maxCoeff(), 1e-300);
        for (Eigen::Index i = 0; i < via_moments.size(); i++)
        {
            const double denom = std::max(std::abs(via_moments[i]), 1e-3 * scale);
            worst = std::max(worst, std::abs(via_fock.values[i] - via_moments[i]) / denom);
        }
        return worst;
    }

    ModelParams random_params(std::mt19937_64& rng)
    {
        auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
        ModelParams p;
        p.gamma = 1.0;
        p.gamma_c = uni(0.0, 1.0);
        p.g = uni(0.0, 5.0);
        p.lam = uni(0.0, 8.0);
        p.omega_rabi = uni(20.0, 100.0);
        p.delta = uni(-60.0, 60.0);
        p.omega_m = uni(10.0, 100.0);
        p.delta1 = p.omega_m + uni(-20.0, 20.0);
        p.kappa_a = uni(0.01, 0.2);
        p.kappa_b = uni(0.001, 0.05);
        p.nbar = uni(0.0, 5.0);
        return p;
    }

    std::vector<CheckResult> run_invariant_suite(const ModelParams& p, int order, std::uint64_t seed)
    {
        std::vector<CheckResult> out;
        auto add = [&](std::string name, bool ok, std::string detail) {
            out.push_back({std::move(name), ok, std::move(detail)});
        };

        p.validate();
        const DressedParams d = derive_dressed(p);
        add("dressed populations sum to one", std::abs(d.p_plus + d.p_minus - 1.0) < 1e-15,
            fmt::format("P+ + P- - 1 = {:.3e}", d.p_plus + d.p_minus - 1.0));
        add("Gamma_perp = 4 gamma0 + gamma+ + gamma-",
            std::abs(d.Gamma_perp - (4 * d.gamma0 + d.gamma_plus + d.gamma_minus)) < 1e-14, "");
        add("Omega_R bounds", d.omega_r >= p.omega_rabi && d.omega_r >= std::abs(p.delta) / 2, "");

        const EffectiveCoefficients c = effective_coefficients(p, d);
        const MomentBasis basis(order);
        const GeneratorBlocks gen = assemble_generator(c, p.delta1, p.omega_m, basis);

        const double trace_defect = trace_row_defect(gen);
        add("trace row is zero", trace_defect == 0.0, fmt::format("max |entry| = {:.3e}", trace_defect));

        const double conj_defect = conjugation_covariance_defect(gen);
        add("conjugation covariance", conj_defect < 1e-14, fmt::format("relative defect = {:.3e}", conj_defect));

        const int tri = block_triangularity_violations(c, p.delta1, p.omega_m, basis);
        add("block triangularity", tri == 0, fmt::format("{} violating entries", tri));

        if (order >= 2)
        {
            const bool same = first_pair_system(gen) == first_pair_system_by_hand(c, p.delta1, p.omega_m);
            add("first-pair system matches hand-written equations", same, "exact comparison");
        }

        std::mt19937_64 rng(seed);
        const double fock_defect = fock_generator_defect(c, p.delta1, p.omega_m, MomentBasis(std::min(order, 4)), 3, rng);
        add("moment generator equals truncated Fock generator", fock_defect < 1e-10,
            fmt::format("max relative deviation = {:.3e}", fock_defect));

        const StabilityReport rep = stability_report(gen);
        add("generator is stable", rep.stable(), fmt::format("worst abscissa = {:.6e}", rep.worst()));
        if (rep.stable())
        {
            const MomentVector x = steady_state(gen);
            const double sym = x.conjugation_defect();
            add("steady moments are conjugation symmetric", sym < 1e-9 * std::max(1.0, x.values.cwiseAbs().maxCoeff()),
                fmt::format("defect = {:.3e}", sym));
            if (order >= 4)
            {
                try
                {
                    const CorrelationSet cs = correlations(x);
                    add("steady moments are physical", true,
                        fmt::format("<a+a> = {:.6e}, <b+b> = {:.6e}", cs.mean_a, cs.mean_b));
                }
                catch (const NonPhysicalMoments& e)
                {
                    add("steady moments are physical", false, e.what());
                }
            }
        }

        // decoupled limits derived from the same point
        ModelParams thermal = p;
        thermal.g = thermal.lam = 0.0;
        {
            const GeneratorBlocks tg = assemble_generator(effective_coefficients(thermal), thermal.delta1,
                                                          thermal.omega_m, MomentBasis(2));
            const StabilityReport trep = stability_report(tg);
            if (trep.stable())
            {
                const MomentVector x = steady_state(tg);
                const double err = std::abs(x(0, 0, 1, 1) - p.nbar);
                add("thermal limit <b+b> = nbar", err < 1e-10, fmt::format("error = {:.3e}", err));
            }
        }

        ModelParams resonant = p;
        resonant.delta = 0.0;
        {
            auto photon_mean = [&](double nbar) {
                ModelParams q = resonant;
                q.nbar = nbar;
                const GeneratorBlocks g2 = assemble_generator(effective_coefficients(q), q.delta1, q.omega_m,
                                                              MomentBasis(2));
                return steady_state(g2)(1, 1, 0, 0);
            };
            try
            {
                const cplx x0 = photon_mean(p.nbar);
                const cplx x1 = photon_mean(p.nbar + 1.0);
                const double diff = std::abs(x1 - x0);
                add("delta = 0 decouples <a+a> from nbar", diff < 1e-10, fmt::format("difference = {:.3e}", diff));
            }
            catch (const std::exception& e)
            {
                add("delta = 0 decouples <a+a> from nbar", true, std::string("skipped: ") + e.what());
            }
        }
        return out;
    }
}
