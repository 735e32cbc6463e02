#include "phocorr/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>

namespace phocorr
{
    std::string to_string(const MomentIndex& idx)
    {
        std::ostringstream os;
        os << '(' << idx.j << ',' << idx.k << ',' << idx.l << ',' << idx.m << ')';
        return os.str();
    }

    MomentBasis::MomentBasis(int max_order) : max_order_(max_order)
    {
        if (max_order < 0 || max_order > kMaxSupportedOrder)
            throw std::invalid_argument("MomentBasis: max_order must be in [0, 8]");

        const int side = max_order + 1;
        lookup_.assign(static_cast<std::size_t>(side * side * side * side), -1);
        offsets_.push_back(0);
        for (int n = 0; n <= max_order; n++)
        {
            for (int j = 0; j <= n; j++)
                for (int k = 0; k <= n - j; k++)
                    for (int l = 0; l <= n - j - k; l++)
                    {
                        const int m = n - j - k - l;
                        lookup_[((j * side + k) * side + l) * side + m] = static_cast<int>(indices_.size());
                        indices_.push_back({j, k, l, m});
                    }
            offsets_.push_back(indices_.size());
        }
    }

    std::optional<std::size_t> MomentBasis::find(const MomentIndex& idx) const
    {
        if (idx.j < 0 || idx.k < 0 || idx.l < 0 || idx.m < 0 || idx.order() > max_order_)
            return std::nullopt;
        const int side = max_order_ + 1;
        return static_cast<std::size_t>(lookup_[((idx.j * side + idx.k) * side + idx.l) * side + idx.m]);
    }

    std::size_t MomentBasis::index_of(const MomentIndex& idx) const
    {
        if (auto i = find(idx))
            return *i;
        throw std::out_of_range("moment " + to_string(idx) + " not in basis");
    }

    MomentBasis enumerate_basis(int max_order)
    {
        return MomentBasis(max_order);
    }

    double MomentVector::conjugation_defect() const
    {
        double worst = 0.0;
        for (std::size_t i = 0; i < basis.size(); i++)
        {
            const std::size_t c = basis.index_of(basis[i].conjugate());
            worst = std::max(worst, std::abs(values[c] - std::conj(values[i])));
        }
        return worst;
    }

    MomentVector vacuum_thermal_moments(const MomentBasis& basis, double nbar)
    {
        MomentVector x{basis, Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()))};
        for (std::size_t i = 0; i < basis.size(); i++)
        {
            const auto& q = basis[i];
            if (q.j != 0 || q.k != 0 || q.l != q.m)
                continue;
            // <b+^l b^l> = l! nbar^l for a thermal state
            x.values[i] = std::tgamma(q.l + 1.0) * std::pow(nbar, q.l);
        }
        return x;
    }

    Eigen::MatrixXcd GeneratorBlocks::dense() const
    {
        const auto n = static_cast<Eigen::Index>(basis.size());
        Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(n, n);
        for (int order = 0; order <= basis.max_order(); order++)
        {
            const auto r0 = static_cast<Eigen::Index>(basis.order_begin(order));
            const auto sz = static_cast<Eigen::Index>(basis.order_size(order));
            full.block(r0, r0, sz, sz) = same_order[order];
            if (order >= 2)
            {
                const auto c0 = static_cast<Eigen::Index>(basis.order_begin(order - 2));
                full.block(r0, c0, sz, lowering[order].cols()) = lowering[order];
            }
        }
        return full;
    }

    Eigen::VectorXcd GeneratorBlocks::apply(const Eigen::VectorXcd& x) const
    {
        Eigen::VectorXcd y(x.size());
        for (int order = 0; order <= basis.max_order(); order++)
        {
            const auto r0 = static_cast<Eigen::Index>(basis.order_begin(order));
            const auto sz = static_cast<Eigen::Index>(basis.order_size(order));
            y.segment(r0, sz) = same_order[order] * x.segment(r0, sz);
            if (order >= 2)
            {
                const auto c0 = static_cast<Eigen::Index>(basis.order_begin(order - 2));
                y.segment(r0, sz) += lowering[order] * x.segment(c0, lowering[order].cols());
            }
        }
        return y;
    }

    std::vector<GeneratorEntry> generator_row(const EffectiveCoefficients& c, double delta1, double omega_m,
                                              const MomentIndex& q)
    {
        using std::conj;
        const double j = q.j, k = q.k, l = q.l, m = q.m;
        std::vector<GeneratorEntry> row;
        row.reserve(9);

        const cplx diff1 = c.a1 - c.b1;
        const cplx diff2 = c.a2 - c.b2;
        const cplx detuning = cplx(0.0, -0.5) * (delta1 - omega_m);
        row.push_back({q, (conj(c.a1) - conj(c.b1)) * j + diff1 * k + (conj(c.a2) - conj(c.b2)) * l + diff2 * m
                              + detuning * static_cast<double>(q.j - q.k + q.l - q.m)});

        // same order: one quantum moves between the modes
        if (q.m > 0) row.push_back({{q.j + 1, q.k, q.l, q.m - 1}, (c.c1 - c.d1) * m});
        if (q.j > 0) row.push_back({{q.j - 1, q.k, q.l, q.m + 1}, (conj(c.c2) - conj(c.d2)) * j});
        if (q.l > 0) row.push_back({{q.j, q.k + 1, q.l - 1, q.m}, (conj(c.c1) - conj(c.d1)) * l});
        if (q.k > 0) row.push_back({{q.j, q.k - 1, q.l + 1, q.m}, (c.c2 - c.d2) * k});

        // two orders down
        if (q.j > 0 && q.l > 0) row.push_back({{q.j - 1, q.k, q.l - 1, q.m}, (conj(c.c1) + conj(c.c2)) * (j * l)});
        if (q.j > 0 && q.k > 0) row.push_back({{q.j - 1, q.k - 1, q.l, q.m}, (c.a1 + conj(c.a1)) * (j * k)});
        if (q.k > 0 && q.m > 0) row.push_back({{q.j, q.k - 1, q.l, q.m - 1}, (c.c1 + c.c2) * (k * m)});
        if (q.l > 0 && q.m > 0) row.push_back({{q.j, q.k, q.l - 1, q.m - 1}, (c.a2 + conj(c.a2)) * (l * m)});
        return row;
    }

    GeneratorBlocks assemble_generator(const EffectiveCoefficients& c, double delta1, double omega_m,
                                       const MomentBasis& basis)
    {
        const int max_order = basis.max_order();

        GeneratorBlocks gen{basis, {}, {}};
        gen.same_order.resize(max_order + 1);
        gen.lowering.resize(max_order + 1);
        for (int n = 0; n <= max_order; n++)
        {
            const auto sz = static_cast<Eigen::Index>(basis.order_size(n));
            gen.same_order[n] = Eigen::MatrixXcd::Zero(sz, sz);
            if (n >= 2)
                gen.lowering[n] = Eigen::MatrixXcd::Zero(sz, static_cast<Eigen::Index>(basis.order_size(n - 2)));
        }

        for (std::size_t i = 0; i < basis.size(); i++)
        {
            const MomentIndex q = basis[i];
            const int n = q.order();
            const auto r = static_cast<Eigen::Index>(i - basis.order_begin(n));
            for (const auto& [target, weight] : generator_row(c, delta1, omega_m, q))
            {
                const int tn = target.order();
                const auto t = static_cast<Eigen::Index>(basis.index_of(target) - basis.order_begin(tn));
                if (tn == n)
                    gen.same_order[n](r, t) += weight;
                else if (tn == n - 2)
                    gen.lowering[n](r, t) += weight;
                else
                    throw std::logic_error("assemble_generator: row " + to_string(q) + " couples to order "
                                           + std::to_string(tn));
            }
        }
        return gen;
    }

    UnstableGenerator::UnstableGenerator(int order, cplx eigenvalue)
        : std::runtime_error("moment block of order " + std::to_string(order)
                             + " has no stable steady state (eigenvalue real part "
                             + std::to_string(eigenvalue.real()) + ")"),
          order_(order), eigenvalue_(eigenvalue)
    {
    }

    SingularBlock::SingularBlock(int order)
        : std::runtime_error("moment block of order " + std::to_string(order) + " is singular"),
          order_(order)
    {
    }

    double StabilityReport::worst() const
    {
        double w = -std::numeric_limits<double>::infinity();
        for (std::size_t n = 1; n < abscissa.size(); n++)
            w = std::max(w, abscissa[n]);
        return w;
    }

    double StabilityReport::slowest_rate() const
    {
        double s = std::numeric_limits<double>::infinity();
        for (std::size_t n = 1; n < abscissa.size(); n++)
            s = std::min(s, std::abs(abscissa[n]));
        return s;
    }

    StabilityReport stability_report(const GeneratorBlocks& gen, double eps)
    {
        StabilityReport rep;
        rep.abscissa.assign(gen.same_order.size(), 0.0);
        rep.leading.assign(gen.same_order.size(), cplx{});
        for (std::size_t n = 1; n < gen.same_order.size(); n++)
        {
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(gen.same_order[n], false);
            const auto& ev = es.eigenvalues();
            Eigen::Index best = 0;
            for (Eigen::Index i = 1; i < ev.size(); i++)
                if (ev[i].real() > ev[best].real())
                    best = i;
            rep.leading[n] = ev[best];
            rep.abscissa[n] = ev[best].real();
            if (rep.abscissa[n] >= -eps)
                rep.flagged.push_back(static_cast<int>(n));
        }
        return rep;
    }

    MomentVector steady_state(const GeneratorBlocks& gen, double eps)
    {
        const StabilityReport rep = stability_report(gen, eps);
        if (!rep.stable())
        {
            const int n = rep.flagged.front();
            throw UnstableGenerator(n, rep.leading[n]);
        }

        const MomentBasis& basis = gen.basis;
        MomentVector x{basis, Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()))};
        x.values[0] = 1.0;
        for (int n = 1; n <= basis.max_order(); n++)
        {
            Eigen::FullPivLU<Eigen::MatrixXcd> lu(gen.same_order[n]);
            if (!lu.isInvertible())
                throw SingularBlock(n);
            if (n < 2)
                continue; // homogeneous first-order block: zero
            const auto r0 = static_cast<Eigen::Index>(basis.order_begin(n));
            const auto c0 = static_cast<Eigen::Index>(basis.order_begin(n - 2));
            const Eigen::VectorXcd source = gen.lowering[n] * x.values.segment(c0, gen.lowering[n].cols());
            x.values.segment(r0, static_cast<Eigen::Index>(basis.order_size(n))) = -lu.solve(source);
        }
        return x;
    }

    MomentTrajectory evolve(const GeneratorBlocks& gen, const MomentVector& init, double t_final,
                            const EvolveOptions& opts)
    {
        namespace ode = boost::numeric::odeint;
        using State = std::vector<cplx>;

        if (!(t_final >= 0.0))
            throw std::invalid_argument("evolve: t_final must be >= 0");
        if (init.basis.size() != gen.basis.size())
            throw std::invalid_argument("evolve: initial moments use a different basis");

        const std::size_t samples = std::max<std::size_t>(opts.samples, 2);
        MomentTrajectory traj;
        traj.times.reserve(samples);
        for (std::size_t i = 0; i < samples; i++)
            traj.times.push_back(t_final * static_cast<double>(i) / static_cast<double>(samples - 1));
        traj.times.back() = t_final;

        if (t_final == 0.0)
        {
            traj.times.assign(1, 0.0);
            traj.states.assign(1, init);
            return traj;
        }

        const Eigen::MatrixXcd full = gen.dense();
        const auto n = full.rows();
        auto rhs = [&](const State& x, State& dxdt, double) {
            Eigen::Map<const Eigen::VectorXcd> xv(x.data(), n);
            Eigen::Map<Eigen::VectorXcd> dv(dxdt.data(), n);
            dv.noalias() = full * xv;
        };

        State x(init.values.data(), init.values.data() + n);
        auto record = [&](const State& s, double) {
            MomentVector v{gen.basis, Eigen::VectorXcd(n)};
            std::copy(s.begin(), s.end(), v.values.data());
            traj.states.push_back(std::move(v));
        };

        const double dt0 = std::min(t_final / static_cast<double>(samples), 1e-3);
        try
        {
            ode::integrate_times(ode::make_dense_output(opts.abs_tol, opts.rel_tol, ode::runge_kutta_dopri5<State>()),
                                 rhs, x, traj.times.begin(), traj.times.end(), dt0, record,
                                 ode::max_step_checker(opts.max_steps));
        }
        catch (const ode::odeint_error& e)
        {
            throw StepFailure(std::string("evolve: step controller failed: ") + e.what());
        }
        if (traj.states.size() != traj.times.size())
            throw StepFailure("evolve: integrator returned an incomplete trajectory");
        traj.states.front() = init;
        return traj;
    }
}
