#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "phocorr/moments.hpp"
#include "phocorr/params.hpp"

namespace phocorr
{
    /// The four moments <a+a>, <b+b>, <ab>, <a+b+> in that order.
    const std::vector<MomentIndex>& first_pair_moments();

    /// Closed 4x5 system [source | coupling] for first_pair_moments(), read
    /// off the assembled generator.
    Eigen::MatrixXcd first_pair_system(const GeneratorBlocks& gen);

    /// The same system written out term by term.
    Eigen::MatrixXcd first_pair_system_by_hand(const EffectiveCoefficients& c, double delta1, double omega_m);

    /// Largest |weight| in the trace row (0,0,0,0).
    double trace_row_defect(const GeneratorBlocks& gen);

    /// max |G(conj r, conj t) - conj(G(r, t))| relative to max |G|.
    double conjugation_covariance_defect(const GeneratorBlocks& gen);

    /// Number of generator_row entries over the basis whose target order is
    /// neither n nor n - 2.
    int block_triangularity_violations(const EffectiveCoefficients& c, double delta1, double omega_m,
                                       const MomentBasis& basis);

    /// Compares d<Q>/dt = Tr(Q L rho) computed with the truncated reduced
    /// Fock generator against the moment generator applied to the Fock
    /// moments of rho, for a random rho supported on levels < support.
    /// Returns the largest relative deviation over the basis.
    double fock_generator_defect(const EffectiveCoefficients& c, double delta1, double omega_m,
                                 const MomentBasis& basis, int support, std::mt19937_64& rng);

    /// Random physical density matrix on levels < support of both modes,
    /// embedded in cutoffs (n_a, n_b).
    Eigen::MatrixXcd random_density(int n_a, int n_b, int support, std::mt19937_64& rng);

    /// Random parameter draw with net damping on both modes, spanning the
    /// strong-driving regime.
    ModelParams random_params(std::mt19937_64& rng);

    struct CheckResult
    {
        std::string name;
        bool passed = false;
        std::string detail;
    };

    /// Invariant suite at one parameter point (the `check` subcommand).
    std::vector<CheckResult> run_invariant_suite(const ModelParams& p, int order, std::uint64_t seed = 1);
}
