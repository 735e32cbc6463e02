#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phocorr/coeffs.hpp"

namespace phocorr
{
    /// Exponents of the normally ordered moment <a+^j a^k b+^l b^m>.
    struct MomentIndex
    {
        int j = 0, k = 0, l = 0, m = 0;

        int order() const { return j + k + l + m; }
        /// Index of the complex-conjugate moment.
        MomentIndex conjugate() const { return {k, j, m, l}; }
        /// Net charge (j - k) - (l - m); conserved by the reduced dynamics.
        int charge() const { return (j - k) - (l - m); }

        friend auto operator<=>(const MomentIndex&, const MomentIndex&) = default;
    };

    std::string to_string(const MomentIndex& idx);

    /// All moments of total order <= max_order, grouped by order and
    /// lexicographic in (j, k, l, m) within each group.
    class MomentBasis
    {
    public:
        static constexpr int kMaxSupportedOrder = 8;

        explicit MomentBasis(int max_order = 4);

        int max_order() const { return max_order_; }
        std::size_t size() const { return indices_.size(); }
        const MomentIndex& operator[](std::size_t i) const { return indices_[i]; }
        const std::vector<MomentIndex>& indices() const { return indices_; }

        std::size_t order_begin(int n) const { return offsets_[n]; }
        std::size_t order_size(int n) const { return offsets_[n + 1] - offsets_[n]; }

        std::optional<std::size_t> find(const MomentIndex& idx) const;
        /// Like find() but throws std::out_of_range when absent.
        std::size_t index_of(const MomentIndex& idx) const;

    private:
        int max_order_;
        std::vector<MomentIndex> indices_;
        std::vector<std::size_t> offsets_;
        std::vector<int> lookup_;
    };

    MomentBasis enumerate_basis(int max_order);

    /// Moment values aligned with a basis; entry (0,0,0,0) is the trace.
    struct MomentVector
    {
        MomentBasis basis;
        Eigen::VectorXcd values;

        cplx operator()(const MomentIndex& idx) const { return values[basis.index_of(idx)]; }
        cplx operator()(int j, int k, int l, int m) const { return (*this)(MomentIndex{j, k, l, m}); }

        /// max |x(conj idx) - conj(x(idx))| over the basis.
        double conjugation_defect() const;
    };

    /// Moments of vacuum (cavity) x thermal(nbar) (phonon), exact to all orders.
    MomentVector vacuum_thermal_moments(const MomentBasis& basis, double nbar);

    /// Block-triangular linear generator of the moment hierarchy:
    /// d x_n/dt = same_order[n] x_n + lowering[n] x_{n-2}.
    struct GeneratorBlocks
    {
        MomentBasis basis;
        std::vector<Eigen::MatrixXcd> same_order; // size(n) x size(n)
        std::vector<Eigen::MatrixXcd> lowering;   // size(n) x size(n-2); empty for n < 2

        /// The full generator as one dense matrix in basis order.
        Eigen::MatrixXcd dense() const;
        Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
    };

    struct GeneratorEntry
    {
        MomentIndex target;
        cplx weight;
    };

    /// Right-hand side of d<a+^j a^k b+^l b^m>/dt as (moment, weight) pairs:
    /// the diagonal entry first, then same-order and two-orders-down
    /// couplings. Terms whose target has a negative exponent are omitted.
    std::vector<GeneratorEntry> generator_row(const EffectiveCoefficients& c, double delta1, double omega_m,
                                              const MomentIndex& q);

    GeneratorBlocks assemble_generator(const EffectiveCoefficients& c, double delta1, double omega_m,
                                       const MomentBasis& basis);

    class UnstableGenerator : public std::runtime_error
    {
    public:
        UnstableGenerator(int order, cplx eigenvalue);
        int order() const { return order_; }
        cplx eigenvalue() const { return eigenvalue_; }

    private:
        int order_;
        cplx eigenvalue_;
    };

    class SingularBlock : public std::runtime_error
    {
    public:
        explicit SingularBlock(int order);
        int order() const { return order_; }

    private:
        int order_;
    };

    class StepFailure : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    inline constexpr double kStabilityEpsilon = 1e-10;

    struct StabilityReport
    {
        /// Largest real part of the eigenvalues of same_order[n]; entry 0
        /// (trace row) is reported as 0 and never flagged.
        std::vector<double> abscissa;
        /// Eigenvalue attaining the abscissa, per order.
        std::vector<cplx> leading;
        /// Orders n >= 1 with abscissa >= -eps.
        std::vector<int> flagged;

        bool stable() const { return flagged.empty(); }
        /// max over n >= 1 of abscissa[n].
        double worst() const;
        /// min over n >= 1 of |abscissa[n]|: the slowest relaxation rate.
        double slowest_rate() const;
    };

    StabilityReport stability_report(const GeneratorBlocks& gen, double eps = kStabilityEpsilon);

    /// Order-by-order steady state: x_0 = 1, x_n = -L_n^{-1} S_n x_{n-2}.
    /// Throws UnstableGenerator or SingularBlock.
    MomentVector steady_state(const GeneratorBlocks& gen, double eps = kStabilityEpsilon);

    struct EvolveOptions
    {
        double rel_tol = 1e-9;
        double abs_tol = 1e-12;
        /// Number of equally spaced output times including 0 and t_final.
        std::size_t samples = 2;
        std::size_t max_steps = 50'000'000;
    };

    struct MomentTrajectory
    {
        std::vector<double> times;
        std::vector<MomentVector> states;

        const MomentVector& final_state() const { return states.back(); }
    };

    /// Adaptive Dormand-Prince integration of the moment hierarchy.
    /// Throws StepFailure when the step controller gives up.
    MomentTrajectory evolve(const GeneratorBlocks& gen, const MomentVector& init, double t_final,
                            const EvolveOptions& opts = {});
}
