#pragma once

#include <stdexcept>
#include <string>

namespace phocorr
{
    /// Physical parameters of the driven quantum dot + cavity + phonon system.
    /// Every rate and frequency is expressed in units of the qubit decay rate,
    /// so `gamma` is 1 unless a caller deliberately rescales.
    struct ModelParams
    {
        double gamma = 1.0;      // qubit spontaneous decay
        double gamma_c = 0.0;    // qubit dephasing
        double g = 0.0;          // qubit-cavity coupling
        double lam = 0.0;        // qubit-phonon coupling
        double omega_rabi = 1.0; // laser Rabi frequency
        double delta = 0.0;      // omega_0 - omega_L
        double delta1 = 0.0;     // omega_L - omega_c
        double omega_m = 1.0;    // phonon frequency
        double kappa_a = 0.0;    // cavity damping
        double kappa_b = 0.0;    // phonon damping
        double nbar = 0.0;       // thermal phonon occupation

        /// Throws std::invalid_argument on the first violated invariant.
        void validate() const;
    };

    /// Dressed-state quantities derived from ModelParams.
    struct DressedParams
    {
        double theta = 0.0;   // 2*theta in (0, pi)
        double omega_r = 0.0; // sqrt((delta/2)^2 + omega_rabi^2)
        double gamma0 = 0.0;
        double gamma_plus = 0.0;
        double gamma_minus = 0.0;
        double Gamma_perp = 0.0;
        double Gamma_par = 0.0;
        double p_plus = 0.0;
        double p_minus = 0.0;
    };

    DressedParams derive_dressed(const ModelParams& p);

    /// Dressed decay rates at a given dressing angle. Split out of
    /// derive_dressed so the rate identities can be exercised directly.
    DressedParams dressed_rates(double gamma, double gamma_c, double theta);

    /// Bose-Einstein occupation for an oscillator of angular frequency
    /// `omega_m` [rad/s] at `temperature` [K].
    double nbar_from_temperature(double omega_m, double temperature);

    /// Same occupation expressed through the ratio hbar*omega/(k_B*T).
    double bose_occupation(double hbar_omega_over_kT);

    /// Adiabatic-elimination regime check. "Much greater" is read as a ratio
    /// of at least `margin`.
    struct RegimeDiagnostics
    {
        bool drive_dominates_decay = false;   // Omega >> gamma
        bool decay_dominates_damping = false; // gamma >> kappa_a, kappa_b
        bool drive_dominates_coupling = false; // Omega >> g, lambda
        bool secular_ok = false;              // dropped oscillations fast vs |delta1 - omega|
        bool ok() const
        {
            return drive_dominates_decay && decay_dominates_damping && drive_dominates_coupling;
        }
    };

    RegimeDiagnostics regime_diagnostics(const ModelParams& p, double margin = 10.0);

    /// Parameter set of the reference figures: gamma_c = 0.3, g = 3, lambda = 5,
    /// Omega = omega = 50, delta/(2 Omega) = -0.263, kappa_a = 0.09,
    /// kappa_b = 0.009 (all in units of gamma).
    ModelParams reference_params(double delta1 = 50.0, double nbar = 2.0);

    /// Field-name access used by sweeps and config parsing.
    double get_field(const ModelParams& p, const std::string& name);
    void set_field(ModelParams& p, const std::string& name, double value);
    bool is_field(const std::string& name);
}
