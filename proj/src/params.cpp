#include "phocorr/params.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

namespace phocorr
{
    namespace
    {
        using Member = double ModelParams::*;

        constexpr std::array<std::pair<const char*, Member>, 11> kFields{{
            {"gamma", &ModelParams::gamma},
            {"gamma_c", &ModelParams::gamma_c},
            {"g", &ModelParams::g},
            {"lam", &ModelParams::lam},
            {"omega_rabi", &ModelParams::omega_rabi},
            {"delta", &ModelParams::delta},
            {"delta1", &ModelParams::delta1},
            {"omega_m", &ModelParams::omega_m},
            {"kappa_a", &ModelParams::kappa_a},
            {"kappa_b", &ModelParams::kappa_b},
            {"nbar", &ModelParams::nbar},
        }};

        Member lookup(const std::string& name)
        {
            for (const auto& [key, member] : kFields)
                if (name == key)
                    return member;
            throw std::invalid_argument("unknown model parameter '" + name + "'");
        }

        void require(bool cond, const char* msg)
        {
            if (!cond)
                throw std::invalid_argument(msg);
        }
    }

    void ModelParams::validate() const
    {
        for (const auto& [key, member] : kFields)
            if (!std::isfinite(this->*member))
                throw std::invalid_argument(std::string("parameter '") + key + "' is not finite");
        require(gamma >= 0.0, "gamma must be >= 0");
        require(gamma_c >= 0.0, "gamma_c must be >= 0");
        require(kappa_a >= 0.0, "kappa_a must be >= 0");
        require(kappa_b >= 0.0, "kappa_b must be >= 0");
        require(omega_rabi > 0.0, "omega_rabi must be > 0");
        require(omega_m > 0.0, "omega_m must be > 0");
        require(nbar >= 0.0, "nbar must be >= 0");
    }

    DressedParams dressed_rates(double gamma, double gamma_c, double theta)
    {
        const double s2 = std::sin(2.0 * theta);
        const double c2 = std::cos(2.0 * theta);
        const double s = std::sin(theta);
        const double c = std::cos(theta);

        DressedParams d;
        d.theta = theta;
        d.gamma0 = 0.25 * (gamma * s2 * s2 + gamma_c * c2 * c2);
        d.gamma_plus = gamma * std::pow(c, 4) + 0.25 * gamma_c * s2 * s2;
        d.gamma_minus = gamma * std::pow(s, 4) + 0.25 * gamma_c * s2 * s2;
        d.Gamma_perp = 4.0 * d.gamma0 + d.gamma_plus + d.gamma_minus;
        d.Gamma_par = gamma * (1.0 + c2 * c2) + gamma_c * s2 * s2;

        const double total = d.gamma_plus + d.gamma_minus;
        if (total > 0.0)
        {
            d.p_plus = d.gamma_minus / total;
            d.p_minus = 1.0 - d.p_plus;
        }
        else
        {
            // no decay at all: populations are not fixed by the rates
            d.p_plus = d.p_minus = 0.5;
        }
        return d;
    }

    DressedParams derive_dressed(const ModelParams& p)
    {
        if (!(p.omega_rabi > 0.0))
            throw std::invalid_argument("derive_dressed: omega_rabi must be > 0");

        // cot(2 theta) = delta / (2 Omega) with 2 theta taken in (0, pi)
        const double two_theta = std::atan2(2.0 * p.omega_rabi, p.delta);
        DressedParams d = dressed_rates(p.gamma, p.gamma_c, 0.5 * two_theta);
        d.omega_r = std::hypot(0.5 * p.delta, p.omega_rabi);
        return d;
    }

    double bose_occupation(double x)
    {
        if (!(x >= 0.0))
            throw std::invalid_argument("bose_occupation: ratio must be >= 0");
        if (std::isinf(x))
            return 0.0;
        return 1.0 / std::expm1(x);
    }

    double nbar_from_temperature(double omega_m, double temperature)
    {
        constexpr double hbar = 1.054571817e-34; // J s
        constexpr double k_b = 1.380649e-23;     // J / K
        if (!(omega_m > 0.0))
            throw std::invalid_argument("nbar_from_temperature: omega_m must be > 0");
        if (!(temperature >= 0.0))
            throw std::invalid_argument("nbar_from_temperature: temperature must be >= 0");
        if (temperature == 0.0)
            return 0.0;
        return bose_occupation(hbar * omega_m / (k_b * temperature));
    }

    RegimeDiagnostics regime_diagnostics(const ModelParams& p, double margin)
    {
        RegimeDiagnostics r;
        r.drive_dominates_decay = p.omega_rabi >= margin * p.gamma;
        r.decay_dominates_damping = p.gamma >= margin * std::max(p.kappa_a, p.kappa_b);
        r.drive_dominates_coupling = p.omega_rabi >= margin * std::max(std::abs(p.g), std::abs(p.lam));

        // the reduced dynamics keeps only terms rotating at delta1 - omega
        const double dropped = std::min({std::abs(2.0 * p.delta1), std::abs(p.delta1 + p.omega_m),
                                         2.0 * p.omega_m});
        const double kept = std::max(std::abs(p.delta1 - p.omega_m), derive_dressed(p).Gamma_par);
        r.secular_ok = dropped >= margin * kept;
        return r;
    }

    ModelParams reference_params(double delta1, double nbar)
    {
        ModelParams p;
        p.gamma = 1.0;
        p.gamma_c = 0.3;
        p.g = 3.0;
        p.lam = 5.0;
        p.omega_rabi = 50.0;
        p.delta = -0.263 * 2.0 * p.omega_rabi;
        p.delta1 = delta1;
        p.omega_m = 50.0;
        p.kappa_a = 0.09;
        p.kappa_b = 0.009;
        p.nbar = nbar;
        return p;
    }

    double get_field(const ModelParams& p, const std::string& name)
    {
        return p.*lookup(name);
    }

    void set_field(ModelParams& p, const std::string& name, double value)
    {
        p.*lookup(name) = value;
    }

    bool is_field(const std::string& name)
    {
        return std::any_of(kFields.begin(), kFields.end(),
                           [&](const auto& f) { return name == f.first; });
    }
}
