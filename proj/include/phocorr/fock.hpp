#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "phocorr/moments.hpp"

namespace phocorr
{
    using SparseOp = Eigen::SparseMatrix<cplx>;

    /// Fock cutoffs: photon levels 0..n_a-1, phonon levels 0..n_b-1.
    struct FockConfig
    {
        int n_a = 12;
        int n_b = 12;
        /// Largest relative change of the steady moments under cutoff
        /// doubling that still counts as converged.
        double convergence_tol = 1e-4;
        /// Doubling stops (unconverged) once a cutoff would exceed this.
        int max_cutoff = 48;

        void validate() const;
    };

    /// Tensor-product layout qubit (x) photon (x) phonon. The reduced model
    /// has no qubit factor (qubit_dim == 1). Qubit level 0 is |e>, 1 is |g>.
    struct HilbertLayout
    {
        int qubit_dim = 1;
        int n_a = 2;
        int n_b = 2;

        int dim() const { return qubit_dim * n_a * n_b; }
        int index(int q, int ia, int ib) const { return (q * n_a + ia) * n_b + ib; }
        int qubit_of(int i) const { return i / (n_a * n_b); }
        int photon_of(int i) const { return (i / n_b) % n_a; }
        int phonon_of(int i) const { return i % n_b; }
    };

    // Truncated operators embedded in the full layout.
    SparseOp identity_op(const HilbertLayout& h);
    SparseOp photon_lowering(const HilbertLayout& h);
    SparseOp phonon_lowering(const HilbertLayout& h);
    SparseOp qubit_lowering(const HilbertLayout& h); // |g><e|
    SparseOp qubit_sz(const HilbertLayout& h);       // (|e><e| - |g><g|)/2

    struct DensityMatrix
    {
        HilbertLayout layout;
        Eigen::MatrixXcd matrix;

        cplx trace() const { return matrix.trace(); }
        double hermiticity_defect() const;
        /// Smallest eigenvalue of the Hermitian part.
        double min_eigenvalue() const;
    };

    /// |0><0| for the cavity, thermal(nbar) for the phonon (truncated and
    /// renormalized) and |g><g| for the qubit when present.
    DensityMatrix vacuum_thermal_state(const HilbertLayout& h, double nbar);

    /// Subset of density-matrix elements |r><c| the dynamics lives on.
    class LiouvilleSpace
    {
    public:
        static LiouvilleSpace full(const HilbertLayout& h);
        /// Elements with (ia_r - ia_c) == (ib_r - ib_c): the sector reached
        /// from states diagonal in both Fock bases under charge-conserving
        /// reduced dynamics.
        static LiouvilleSpace balanced_sector(const HilbertLayout& h);

        const HilbertLayout& layout() const { return layout_; }
        std::size_t size() const { return rows_.size(); }
        int row(std::size_t i) const { return rows_[i]; }
        int col(std::size_t i) const { return cols_[i]; }
        std::optional<std::size_t> find(int r, int c) const;
        bool is_full() const { return size() == static_cast<std::size_t>(layout_.dim()) * layout_.dim(); }

        Eigen::VectorXcd vectorize(const DensityMatrix& rho) const;
        DensityMatrix unvectorize(const Eigen::VectorXcd& v) const;
        cplx trace(const Eigen::VectorXcd& v) const;
        /// Smallest eigenvalue of the represented density matrix, computed
        /// block by block over the connected components of the element set.
        double min_eigenvalue(const Eigen::VectorXcd& v) const;

    private:
        LiouvilleSpace(HilbertLayout h, std::vector<int> rows, std::vector<int> cols);

        HilbertLayout layout_;
        std::vector<int> rows_, cols_;
        std::vector<std::int32_t> lookup_;
    };

    /// One generator contribution coef * left * rho * right. An empty
    /// operator stands for the identity.
    struct SuperTerm
    {
        std::string name;
        cplx coef;
        SparseOp left;
        SparseOp right;
    };

    struct Superoperator
    {
        LiouvilleSpace space;
        Eigen::SparseMatrix<cplx> matrix;
        std::vector<std::string> term_names;

        DensityMatrix apply(const DensityMatrix& rho) const;
    };

    /// Materializes the terms on `space`. Throws std::logic_error if a term
    /// maps an element outside the space.
    Superoperator build_superoperator(const LiouvilleSpace& space, const std::vector<SuperTerm>& terms);

    class NoConvergence : public std::runtime_error
    {
    public:
        NoConvergence(const std::string& what, double residual, int steps)
            : std::runtime_error(what), residual_(residual), steps_(steps)
        {
        }
        double residual() const { return residual_; }
        int steps() const { return steps_; }

    private:
        double residual_;
        int steps_;
    };

    struct SteadyOptions
    {
        /// Stop once ||L rho|| <= tol * ||L rho0||.
        double tol = 1e-11;
        /// Implicit Euler step in units of 1/gamma.
        double step = 1e4;
        int max_steps = 400;
        /// Skip the eigenvalue scan of the result.
        bool check_positivity = true;
        /// Krylov settings of the preconditioned variant.
        double krylov_tol = 1e-13;
        int krylov_restart = 100;
        int krylov_max_iterations = 3000;
    };

    struct SteadyResult
    {
        LiouvilleSpace space;
        Eigen::VectorXcd state;
        double residual = 0.0;  // ||L rho|| / ||L rho0||
        int steps = 0;
        double trace = 1.0;
        double min_eigenvalue = 0.0;

        DensityMatrix density() const { return space.unvectorize(state); }
    };

    /// Integrates d rho/dt = L rho with L-stable implicit Euler steps until the
    /// residual stalls below tolerance. Throws NoConvergence.
    SteadyResult evolve_to_steady(const Superoperator& L, const DensityMatrix& rho0, const SteadyOptions& opts = {});

    /// Same iteration with each implicit step solved by GMRES, preconditioned
    /// by an exact sparse LU of the step built from `approx` (a cheaper
    /// generator on the same space). For generators whose direct
    /// factorization does not fit in memory.
    SteadyResult evolve_to_steady(const Superoperator& L, const Superoperator& approx, const DensityMatrix& rho0,
                                  const SteadyOptions& opts = {});

    struct FockMoments
    {
        MomentVector moments;
        double top_photon = 0.0; // population of the two highest photon levels
        double top_phonon = 0.0;
        bool contaminated = false;
    };

    inline constexpr double kCutoffContamination = 1e-6;

    /// Exact normally ordered expectation values over the truncated space.
    FockMoments fock_moments(const DensityMatrix& rho, const MomentBasis& basis);
    FockMoments fock_moments(const LiouvilleSpace& space, const Eigen::VectorXcd& state, const MomentBasis& basis);

    /// Truncated matrix element <n - k + j| a+^j a^k |n> of a cutoff-N mode.
    double truncated_ladder_coefficient(int n, int j, int k, int cutoff);
}
