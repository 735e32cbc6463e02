#pragma once

#include <string>
#include <utility>
#include <vector>

#include "phocorr/coeffs.hpp"
#include "phocorr/fock.hpp"
#include "phocorr/observables.hpp"

namespace phocorr
{
    enum class Ladder { a, a_dag, b, b_dag };

    SparseOp ladder_op(const HilbertLayout& h, Ladder op);

    /// One expectation-value bracket of the reduced photon-phonon equation of
    /// motion:  <[Q, x] Y>  (commutator_first) or  <Y [Q, x]>  otherwise,
    /// with Y = sum_i y[i].first * y[i].second.
    struct Bracket
    {
        std::string name;
        bool commutator_first = true;
        Ladder x = Ladder::a;
        std::vector<std::pair<cplx, Ladder>> y;
    };

    /// The eight brackets of the reduced dynamics (detuning term excluded).
    std::vector<Bracket> reduced_brackets(const EffectiveCoefficients& c);

    /// Schroedinger-picture terms equivalent to a bracket:
    ///   <[Q,X]Y>  ->  X Y rho - Y rho X
    ///   <Y[Q,X]>  ->  X rho Y - rho Y X
    std::vector<SuperTerm> bracket_terms(const Bracket& br, const HilbertLayout& h);

    /// Terms of -(i/2)(delta1 - omega)(rho N - N rho), N = a+a + b+b.
    std::vector<SuperTerm> detuning_terms(double delta1, double omega_m, const HilbertLayout& h);

    enum class SpaceKind { full, balanced_sector };

    Superoperator reduced_generator(const EffectiveCoefficients& c, double delta1, double omega_m,
                                    const FockConfig& cfg, SpaceKind kind = SpaceKind::full);

    /// Bare-basis Lindblad generator of qubit + cavity + phonon in the laser frame:
    ///   H = delta Sz - delta1 a+a + omega b+b + g(a+ S- + a S+) + Omega(S+ + S-)
    ///       + lambda Sz (b + b+)
    /// Dissipators r D[O], D[O]rho = O rho O+ - {O+O, rho}/2, with
    ///   2 gamma on S-, 2 gamma_c on Sz (= gamma_c/2 on sigma_z), 2 kappa_a on a,
    ///   2 kappa_b (nbar + 1) on b and 2 kappa_b nbar on b+.
    /// The factor 2 matches the "-gamma [R, R rho] + H.c." form of the dressed
    /// equation; the dephasing normalization reproduces
    /// gamma0 = (gamma sin^2 2theta + gamma_c cos^2 2theta)/4 after the secular
    /// approximation in the dressed basis.
    Superoperator full_generator(const ModelParams& p, const FockConfig& cfg);

    enum class OracleModel { reduced, full };

    struct OracleOptions
    {
        SteadyOptions steady;
        /// Also double each cutoff separately to certify convergence.
        bool check_convergence = true;
    };

    struct OracleResult
    {
        OracleModel model = OracleModel::reduced;
        MomentVector moments;
        CorrelationSet correlations;
        int n_a = 0;
        int n_b = 0;
        /// Largest relative moment change seen under the final doubling test.
        double cutoff_change = 0.0;
        bool converged = false;
        bool contaminated = false;
        double min_eigenvalue = 0.0;
        double trace = 1.0;
        double residual = 0.0;
        int steps = 0;
    };

    /// Steady state of the truncated reduced (or full) model at a single
    /// cutoff pair, starting from vacuum (x) thermal(nbar).
    OracleResult oracle_steady_at(OracleModel model, const ModelParams& p, int n_a, int n_b,
                                  const MomentBasis& basis, const SteadyOptions& opts = {});

    /// Steady state with automatic cutoff doubling: each of n_a, n_b is
    /// doubled until doing so changes the compared moments by less than
    /// cfg.convergence_tol, or max_cutoff is hit (converged = false).
    OracleResult oracle_steady(OracleModel model, const ModelParams& p, const FockConfig& cfg,
                               const MomentBasis& basis, const OracleOptions& opts = {});

    /// Relative change between two moment vectors, restricted to the
    /// moments used by the correlation functions when `physical_only`.
    double moment_change(const MomentVector& a, const MomentVector& b, bool physical_only);
}
