#include "phocorr/fock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/IterativeSolvers>
#include <unsupported/Eigen/KroneckerProduct>

#ifdef PHOCORR_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#else
#include <Eigen/SparseLU>
#endif

namespace phocorr
{
    void FockConfig::validate() const
    {
        if (n_a < 2 || n_b < 2)
            throw std::invalid_argument("FockConfig: cutoffs must be >= 2");
        if (max_cutoff < std::max(n_a, n_b))
            throw std::invalid_argument("FockConfig: max_cutoff below the starting cutoff");
        if (!(convergence_tol > 0.0))
            throw std::invalid_argument("FockConfig: convergence_tol must be > 0");
    }

    namespace
    {
        SparseOp dense_to_sparse(const Eigen::MatrixXcd& m)
        {
            return m.sparseView();
        }

        Eigen::MatrixXcd ladder(int n)
        {
            Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
            for (int i = 1; i < n; i++)
                a(i - 1, i) = std::sqrt(static_cast<double>(i));
            return a;
        }

        SparseOp embed(const HilbertLayout& h, const Eigen::MatrixXcd& q, const Eigen::MatrixXcd& a,
                       const Eigen::MatrixXcd& b)
        {
            SparseOp qa = Eigen::kroneckerProduct(dense_to_sparse(q), dense_to_sparse(a));
            SparseOp out = Eigen::kroneckerProduct(qa, dense_to_sparse(b));
            out.makeCompressed();
            (void)h;
            return out;
        }

        Eigen::MatrixXcd eye(int n) { return Eigen::MatrixXcd::Identity(n, n); }

        double lowest_eigenvalue(const Eigen::MatrixXcd& m)
        {
            const Eigen::MatrixXcd herm = 0.5 * (m + m.adjoint());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
            return es.eigenvalues().minCoeff();
        }
    }

    SparseOp identity_op(const HilbertLayout& h)
    {
        SparseOp id(h.dim(), h.dim());
        id.setIdentity();
        return id;
    }

    SparseOp photon_lowering(const HilbertLayout& h)
    {
        return embed(h, eye(h.qubit_dim), ladder(h.n_a), eye(h.n_b));
    }

    SparseOp phonon_lowering(const HilbertLayout& h)
    {
        return embed(h, eye(h.qubit_dim), eye(h.n_a), ladder(h.n_b));
    }

    SparseOp qubit_lowering(const HilbertLayout& h)
    {
        if (h.qubit_dim != 2)
            throw std::invalid_argument("qubit_lowering: layout has no qubit");
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(2, 2);
        s(1, 0) = 1.0;
        return embed(h, s, eye(h.n_a), eye(h.n_b));
    }

    SparseOp qubit_sz(const HilbertLayout& h)
    {
        if (h.qubit_dim != 2)
            throw std::invalid_argument("qubit_sz: layout has no qubit");
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(2, 2);
        s(0, 0) = 0.5;
        s(1, 1) = -0.5;
        return embed(h, s, eye(h.n_a), eye(h.n_b));
    }

    double DensityMatrix::hermiticity_defect() const
    {
        return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
    }

    double DensityMatrix::min_eigenvalue() const
    {
        return lowest_eigenvalue(matrix);
    }

    DensityMatrix vacuum_thermal_state(const HilbertLayout& h, double nbar)
    {
        if (!(nbar >= 0.0))
            throw std::invalid_argument("vacuum_thermal_state: nbar must be >= 0");
        std::vector<double> p(static_cast<std::size_t>(h.n_b), 0.0);
        const double ratio = nbar / (1.0 + nbar);
        double norm = 0.0;
        for (int n = 0; n < h.n_b; n++)
            norm += p[n] = std::pow(ratio, n);
        DensityMatrix rho{h, Eigen::MatrixXcd::Zero(h.dim(), h.dim())};
        const int q = h.qubit_dim == 2 ? 1 : 0;
        for (int n = 0; n < h.n_b; n++)
        {
            const int i = h.index(q, 0, n);
            rho.matrix(i, i) = p[n] / norm;
        }
        return rho;
    }

    LiouvilleSpace::LiouvilleSpace(HilbertLayout h, std::vector<int> rows, std::vector<int> cols)
        : layout_(h), rows_(std::move(rows)), cols_(std::move(cols))
    {
        const auto d = static_cast<std::size_t>(layout_.dim());
        lookup_.assign(d * d, -1);
        for (std::size_t i = 0; i < rows_.size(); i++)
            lookup_[static_cast<std::size_t>(rows_[i]) * d + static_cast<std::size_t>(cols_[i])] =
                static_cast<std::int32_t>(i);
    }

    LiouvilleSpace LiouvilleSpace::full(const HilbertLayout& h)
    {
        std::vector<int> rows, cols;
        const int d = h.dim();
        rows.reserve(static_cast<std::size_t>(d) * d);
        cols.reserve(static_cast<std::size_t>(d) * d);
        // column-major element order
        for (int c = 0; c < d; c++)
            for (int r = 0; r < d; r++)
            {
                rows.push_back(r);
                cols.push_back(c);
            }
        return LiouvilleSpace(h, std::move(rows), std::move(cols));
    }

    LiouvilleSpace LiouvilleSpace::balanced_sector(const HilbertLayout& h)
    {
        std::vector<int> rows, cols;
        const int d = h.dim();
        for (int c = 0; c < d; c++)
            for (int r = 0; r < d; r++)
            {
                const int da = h.photon_of(r) - h.photon_of(c);
                const int db = h.phonon_of(r) - h.phonon_of(c);
                if (da == db)
                {
                    rows.push_back(r);
                    cols.push_back(c);
                }
            }
        return LiouvilleSpace(h, std::move(rows), std::move(cols));
    }

    std::optional<std::size_t> LiouvilleSpace::find(int r, int c) const
    {
        const auto d = static_cast<std::size_t>(layout_.dim());
        const std::int32_t i = lookup_[static_cast<std::size_t>(r) * d + static_cast<std::size_t>(c)];
        if (i < 0)
            return std::nullopt;
        return static_cast<std::size_t>(i);
    }

    Eigen::VectorXcd LiouvilleSpace::vectorize(const DensityMatrix& rho) const
    {
        if (rho.layout.dim() != layout_.dim())
            throw std::invalid_argument("LiouvilleSpace::vectorize: layout mismatch");
        Eigen::VectorXcd v(static_cast<Eigen::Index>(size()));
        for (std::size_t i = 0; i < size(); i++)
            v[static_cast<Eigen::Index>(i)] = rho.matrix(rows_[i], cols_[i]);
        return v;
    }

    DensityMatrix LiouvilleSpace::unvectorize(const Eigen::VectorXcd& v) const
    {
        DensityMatrix rho{layout_, Eigen::MatrixXcd::Zero(layout_.dim(), layout_.dim())};
        for (std::size_t i = 0; i < size(); i++)
            rho.matrix(rows_[i], cols_[i]) = v[static_cast<Eigen::Index>(i)];
        return rho;
    }

    cplx LiouvilleSpace::trace(const Eigen::VectorXcd& v) const
    {
        cplx t = 0.0;
        for (int r = 0; r < layout_.dim(); r++)
            if (auto i = find(r, r))
                t += v[static_cast<Eigen::Index>(*i)];
        return t;
    }

    double LiouvilleSpace::min_eigenvalue(const Eigen::VectorXcd& v) const
    {
        const int d = layout_.dim();
        std::vector<int> parent(static_cast<std::size_t>(d));
        std::iota(parent.begin(), parent.end(), 0);
        auto root = [&](int x) {
            while (parent[x] != x)
                x = parent[x] = parent[parent[x]];
            return x;
        };
        for (std::size_t i = 0; i < size(); i++)
            parent[root(rows_[i])] = root(cols_[i]);

        std::vector<std::vector<int>> blocks(static_cast<std::size_t>(d));
        for (int r = 0; r < d; r++)
            blocks[root(r)].push_back(r);

        double lowest = std::numeric_limits<double>::infinity();
        for (const auto& members : blocks)
        {
            if (members.empty())
                continue;
            const auto n = static_cast<Eigen::Index>(members.size());
            Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(n, n);
            for (Eigen::Index a = 0; a < n; a++)
                for (Eigen::Index b = 0; b < n; b++)
                    if (auto i = find(members[a], members[b]))
                        block(a, b) = v[static_cast<Eigen::Index>(*i)];
            lowest = std::min(lowest, lowest_eigenvalue(block));
        }
        return lowest;
    }

    DensityMatrix Superoperator::apply(const DensityMatrix& rho) const
    {
        return space.unvectorize(matrix * space.vectorize(rho));
    }

    Superoperator build_superoperator(const LiouvilleSpace& space, const std::vector<SuperTerm>& terms)
    {
        using RowOp = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
        const int d = space.layout().dim();

        struct Prepared
        {
            cplx coef;
            const SparseOp* left;
            RowOp right;
            bool right_identity;
        };
        std::vector<Prepared> prepared;
        prepared.reserve(terms.size());
        for (const auto& t : terms)
        {
            const bool left_id = t.left.size() == 0;
            const bool right_id = t.right.size() == 0;
            if ((!left_id && (t.left.rows() != d || t.left.cols() != d))
                || (!right_id && (t.right.rows() != d || t.right.cols() != d)))
                throw std::invalid_argument("build_superoperator: operator size mismatch in " + t.name);
            prepared.push_back({t.coef, left_id ? nullptr : &t.left, right_id ? RowOp() : RowOp(t.right), right_id});
        }

        std::vector<Eigen::Triplet<cplx>> triplets;
        triplets.reserve(space.size() * terms.size() * 2);

        auto emit = [&](std::size_t from, int r, int c, cplx value) {
            auto to = space.find(r, c);
            if (!to)
                throw std::logic_error("build_superoperator: term leaves the Liouville subspace");
            triplets.emplace_back(static_cast<int>(*to), static_cast<int>(from), value);
        };

        for (std::size_t i = 0; i < space.size(); i++)
        {
            const int r = space.row(i);
            const int c = space.col(i);
            for (const auto& t : prepared)
            {
                auto with_right = [&](int r2, cplx lv) {
                    if (t.right_identity)
                    {
                        emit(i, r2, c, t.coef * lv);
                        return;
                    }
                    for (RowOp::InnerIterator it(t.right, c); it; ++it)
                        emit(i, r2, static_cast<int>(it.col()), t.coef * lv * it.value());
                };
                if (!t.left)
                {
                    with_right(r, 1.0);
                    continue;
                }
                for (SparseOp::InnerIterator it(*t.left, r); it; ++it)
                    with_right(static_cast<int>(it.row()), it.value());
            }
        }

        const auto n = static_cast<Eigen::Index>(space.size());
        Eigen::SparseMatrix<cplx> m(n, n);
        m.setFromTriplets(triplets.begin(), triplets.end());
        m.prune(cplx(0.0), 0.0);
        m.makeCompressed();

        Superoperator op{space, std::move(m), {}};
        for (const auto& t : terms)
            op.term_names.push_back(t.name);
        return op;
    }

    namespace
    {
        using SpMat = Eigen::SparseMatrix<cplx>;
#ifdef PHOCORR_HAVE_UMFPACK
        using SparseLu = Eigen::UmfPackLU<SpMat>;
#else
        using SparseLu = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;
#endif

        SpMat implicit_step_matrix(const SpMat& L, double h)
        {
            SpMat A(L.rows(), L.cols());
            A.setIdentity();
            A -= h * L;
            A.makeCompressed();
            return A;
        }

        /// Eigen-compatible preconditioner applying a prefactored sparse LU.
        class FactoredPreconditioner
        {
        public:
            using Scalar = cplx;
            using StorageIndex = int;
            enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

            FactoredPreconditioner() = default;
            template <typename M> explicit FactoredPreconditioner(const M&) {}
            template <typename M> FactoredPreconditioner& analyzePattern(const M&) { return *this; }
            template <typename M> FactoredPreconditioner& factorize(const M&) { return *this; }
            template <typename M> FactoredPreconditioner& compute(const M&) { return *this; }

            void set(const SparseLu* lu) { lu_ = lu; }
            template <typename Rhs> Eigen::VectorXcd solve(const Eigen::MatrixBase<Rhs>& b) const
            {
                return lu_->solve(b);
            }
            Eigen::ComputationInfo info() const { return Eigen::Success; }

        private:
            const SparseLu* lu_ = nullptr;
        };

        /// Shared implicit-Euler relaxation loop; `advance` maps x_k to x_{k+1}.
        template <typename Advance>
        SteadyResult relax(const Superoperator& L, const DensityMatrix& rho0, const SteadyOptions& opts,
                           int plateau_steps, Advance&& advance, const char* who)
        {
            const LiouvilleSpace& space = L.space;
            Eigen::VectorXcd x = space.vectorize(rho0);

            SteadyResult result{space, x, 0.0, 0, 1.0, 0.0};
            const double scale = (L.matrix * x).norm();
            double lnorm = 0.0;
            for (int k = 0; k < L.matrix.outerSize(); k++)
                for (SpMat::InnerIterator it(L.matrix, k); it; ++it)
                    lnorm = std::max(lnorm, std::abs(it.value()));

            auto finish = [&](SteadyResult& res) {
                res.trace = space.trace(res.state).real();
                if (opts.check_positivity)
                    res.min_eigenvalue = space.min_eigenvalue(res.state);
            };

            if (scale <= opts.tol * lnorm * x.norm())
            {
                finish(result);
                return result;
            }

            const cplx trace0 = space.trace(x);
            double best = 1.0;
            int since_best = 0;
            double residual = 1.0;
            int step = 0;
            while (step < opts.max_steps)
            {
                x = advance(x);
                // exact implicit Euler conserves the trace; inexact solves may not
                x *= trace0 / space.trace(x);
                step++;
                residual = (L.matrix * x).norm() / scale;
                if (!std::isfinite(residual))
                    throw NoConvergence(std::string(who) + ": state diverged", residual, step);
                if (residual <= opts.tol)
                    break;
                if (residual < 0.9 * best)
                {
                    best = residual;
                    since_best = 0;
                }
                else if (++since_best > plateau_steps)
                {
                    throw NoConvergence(std::string(who) + ": residual plateaued at " + std::to_string(residual),
                                        residual, step);
                }
            }
            if (residual > opts.tol)
                throw NoConvergence(std::string(who) + ": step limit reached with residual " + std::to_string(residual),
                                    residual, step);

            result.state = std::move(x);
            result.residual = residual;
            result.steps = step;
            finish(result);
            return result;
        }
    }

    SteadyResult evolve_to_steady(const Superoperator& L, const DensityMatrix& rho0, const SteadyOptions& opts)
    {
        // the LU keeps a reference to the matrix it factored
        SpMat A;
        SparseLu lu;
        bool factored = false;
        auto advance = [&](const Eigen::VectorXcd& x) -> Eigen::VectorXcd {
            if (!factored)
            {
                A = implicit_step_matrix(L.matrix, opts.step);
                lu.compute(A);
                if (lu.info() != Eigen::Success)
                    throw NoConvergence("evolve_to_steady: factorization of the implicit step failed", 1.0, 0);
                factored = true;
            }
            return lu.solve(x);
        };
        return relax(L, rho0, opts, 50, advance, "evolve_to_steady");
    }

    SteadyResult evolve_to_steady(const Superoperator& L, const Superoperator& approx, const DensityMatrix& rho0,
                                  const SteadyOptions& opts)
    {
        if (approx.matrix.rows() != L.matrix.rows() || approx.space.size() != L.space.size())
            throw std::invalid_argument("evolve_to_steady: preconditioner lives on a different space");

        SpMat A, M;
        SparseLu lu;
        Eigen::GMRES<SpMat, FactoredPreconditioner> gmres;
        bool factored = false;
        auto advance = [&](const Eigen::VectorXcd& x) -> Eigen::VectorXcd {
            if (!factored)
            {
                A = implicit_step_matrix(L.matrix, opts.step);
                M = implicit_step_matrix(approx.matrix, opts.step);
                lu.compute(M);
                if (lu.info() != Eigen::Success)
                    throw NoConvergence("evolve_to_steady: factorization of the preconditioner failed", 1.0, 0);
                gmres.compute(A);
                gmres.preconditioner().set(&lu);
                gmres.set_restart(opts.krylov_restart);
                gmres.setTolerance(opts.krylov_tol);
                gmres.setMaxIterations(opts.krylov_max_iterations);
                factored = true;
            }
            Eigen::VectorXcd y = gmres.solveWithGuess(x, x);
            if (gmres.info() != Eigen::Success && gmres.error() > 1e3 * opts.krylov_tol)
                throw NoConvergence("evolve_to_steady: Krylov solve stalled at relative error "
                                        + std::to_string(gmres.error()),
                                    gmres.error(), 0);
            return y;
        };
        return relax(L, rho0, opts, 3, advance, "evolve_to_steady");
    }

    double truncated_ladder_coefficient(int n, int j, int k, int cutoff)
    {
        if (n < 0 || n >= cutoff || n < k)
            return 0.0;
        const int mid = n - k;
        if (mid + j > cutoff - 1)
            return 0.0;
        double v = 1.0;
        for (int i = mid + 1; i <= n; i++)
            v *= std::sqrt(static_cast<double>(i));
        for (int i = mid + 1; i <= mid + j; i++)
            v *= std::sqrt(static_cast<double>(i));
        return v;
    }

    FockMoments fock_moments(const LiouvilleSpace& space, const Eigen::VectorXcd& state, const MomentBasis& basis)
    {
        const HilbertLayout& h = space.layout();
        FockMoments out{MomentVector{basis, Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()))}};

        for (std::size_t bi = 0; bi < basis.size(); bi++)
        {
            const MomentIndex q = basis[bi];
            cplx sum = 0.0;
            for (int r = 0; r < h.dim(); r++)
            {
                const int ia = h.photon_of(r), ib = h.phonon_of(r);
                const int ca = ia - q.k + q.j, cb = ib - q.m + q.l;
                if (ca < 0 || ca >= h.n_a || cb < 0 || cb >= h.n_b)
                    continue;
                const double w = truncated_ladder_coefficient(ia, q.j, q.k, h.n_a)
                               * truncated_ladder_coefficient(ib, q.l, q.m, h.n_b);
                if (w == 0.0)
                    continue;
                if (auto i = space.find(r, h.index(h.qubit_of(r), ca, cb)))
                    sum += state[static_cast<Eigen::Index>(*i)] * w;
            }
            out.moments.values[static_cast<Eigen::Index>(bi)] = sum;
        }

        for (int r = 0; r < h.dim(); r++)
        {
            auto i = space.find(r, r);
            if (!i)
                continue;
            const double p = state[static_cast<Eigen::Index>(*i)].real();
            if (h.photon_of(r) >= h.n_a - 2)
                out.top_photon += p;
            if (h.phonon_of(r) >= h.n_b - 2)
                out.top_phonon += p;
        }
        out.contaminated = out.top_photon > kCutoffContamination || out.top_phonon > kCutoffContamination;
        return out;
    }

    FockMoments fock_moments(const DensityMatrix& rho, const MomentBasis& basis)
    {
        const LiouvilleSpace space = LiouvilleSpace::full(rho.layout);
        return fock_moments(space, space.vectorize(rho), basis);
    }
}
