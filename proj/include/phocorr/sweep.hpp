#pragma once

#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "phocorr/fock.hpp"
#include "phocorr/observables.hpp"
#include "phocorr/oracle.hpp"
#include "phocorr/params.hpp"

namespace phocorr
{
    enum class OracleMode { off, reduced, full };

    OracleMode parse_oracle_mode(const std::string& s);
    std::string to_string(OracleMode m);

    /// Bad configuration; the message carries file:line:column when known.
    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    struct SweepConfig
    {
        ModelParams base;
        std::string parameter = "delta1";
        double start = 30.0;
        double stop = 70.0;
        int steps = 401;
        std::vector<double> nbars{0.5, 2.0};
        int order = 4;
        OracleMode oracle = OracleMode::off;
        FockConfig fock;
        std::string output;
        int jobs = 1;

        /// Throws ConfigError.
        void validate() const;
        double value_at(int i) const;
    };

    /// Reads a YAML config. All physical values are in units of gamma and the
    /// file must say so (`units: gamma`).
    SweepConfig load_config(const std::string& path);
    SweepConfig parse_config(const std::string& text, const std::string& source = "<string>");

    /// The resolved config as YAML (written into CSV headers).
    std::string dump_config(const SweepConfig& cfg);

    enum class RowStatus { ok, unstable, singular, nonphysical, error };
    std::string to_string(RowStatus s);

    struct SweepRow
    {
        double value = 0.0; // swept parameter
        double nbar = 0.0;
        RowStatus status = RowStatus::ok;
        std::string message;
        std::optional<CorrelationSet> corr;
        double abscissa = 0.0;
        bool regime_ok = false;
        bool secular_ok = false;

        std::optional<OracleResult> oracle;
        std::string oracle_status; // empty when the oracle is off
        /// Relative deviations moment vs oracle for <a+a>, <b+b>, g1, g2, g3, CSI.
        std::vector<std::optional<double>> deviations;
    };

    /// Evaluate a single parameter point (never throws for numerical failures).
    SweepRow compute_point(const ModelParams& p, int order, OracleMode oracle, const FockConfig& fock);

    /// All (value, nbar) rows, ordered by value then nbar index. Points are
    /// distributed over cfg.jobs threads; `order` optionally permutes the
    /// evaluation sequence (results land in fixed slots either way).
    std::vector<SweepRow> run_sweep(const SweepConfig& cfg, const std::vector<std::size_t>* eval_order = nullptr);

    double relative_deviation(double reference, double value);

    void write_csv(std::ostream& os, const SweepConfig& cfg, const std::vector<SweepRow>& rows);

    /// True if any row failed with status `error`.
    bool has_fatal_rows(const std::vector<SweepRow>& rows);
}
