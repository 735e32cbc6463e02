// Command-line front end: steady | sweep | oracle-compare | check.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "phocorr/coeffs.hpp"
#include "phocorr/invariants.hpp"
#include "phocorr/sweep.hpp"

using namespace phocorr;

namespace
{
    enum Exit { kOk = 0, kConfig = 1, kNumerical = 2, kInvariant = 3 };

    struct Common
    {
        std::string config;
        std::string out;
        std::optional<int> order;
        std::optional<std::string> oracle;
        std::vector<int> cutoff;
        std::optional<int> jobs;
        std::vector<std::string> set;
    };

    void add_common(CLI::App* app, Common& c)
    {
        app->add_option("--config", c.config, "YAML config (units of gamma); default: reference parameter set")
            ->check(CLI::ExistingFile);
        app->add_option("--out", c.out, "output path (sweeps default to the config's 'output', else stdout)");
        app->add_option("--order", c.order, "maximum moment order")->check(CLI::Range(4, MomentBasis::kMaxSupportedOrder));
        app->add_option("--oracle", c.oracle, "off | reduced | full")
            ->check(CLI::IsMember({"off", "reduced", "full"}));
        app->add_option("--cutoff", c.cutoff, "initial Fock cutoffs n_a,n_b")->delimiter(',')->expected(2);
        app->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
        app->add_option("--set", c.set, "override a parameter, e.g. --set delta1=48 (repeatable)");
    }

    SweepConfig resolve(const Common& c)
    {
        SweepConfig cfg = c.config.empty() ? parse_config("units: gamma\n", "<default>") : load_config(c.config);
        if (c.order)
            cfg.order = *c.order;
        if (c.oracle)
            cfg.oracle = parse_oracle_mode(*c.oracle);
        if (c.cutoff.size() == 2)
        {
            cfg.fock.n_a = c.cutoff[0];
            cfg.fock.n_b = c.cutoff[1];
        }
        if (c.jobs)
            cfg.jobs = *c.jobs;
        if (!c.out.empty())
            cfg.output = c.out;
        for (const auto& kv : c.set)
        {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set expects key=value, got '" + kv + "'");
            const std::string key = kv.substr(0, eq);
            double v = 0.0;
            try
            {
                v = std::stod(kv.substr(eq + 1));
            }
            catch (const std::exception&)
            {
                throw ConfigError("--set " + key + ": not a number");
            }
            if (key == "nbar")
                cfg.nbars = {v};
            else if (!is_field(key) || key == "gamma")
                throw ConfigError("--set: unknown parameter '" + key + "'");
            else
                set_field(cfg.base, key, v);
        }
        cfg.validate();
        return cfg;
    }

    /// Runs `fn` with the configured output stream.
    template <typename Fn>
    void with_output(const std::string& path, Fn&& fn)
    {
        if (path.empty() || path == "-")
        {
            fn(std::cout);
            return;
        }
        std::ofstream os(path, std::ios::binary);
        if (!os)
            throw ConfigError("cannot write '" + path + "'");
        fn(os);
    }

    std::string opt(const std::optional<double>& v)
    {
        return v ? fmt::format("{:.10g}", *v) : "undefined";
    }

    int cmd_steady(const Common& c)
    {
        const SweepConfig cfg = resolve(c);
        int status = kOk;
        // the config's output path names the sweep CSV; a point report goes to --out or stdout
        with_output(c.out, [&](std::ostream& os) {
            for (double nbar : cfg.nbars)
            {
                ModelParams p = cfg.base;
                p.nbar = nbar;
                const DressedParams d = derive_dressed(p);
                const EffectiveCoefficients k = effective_coefficients(p, d);
                os << fmt::format("delta1 = {:.10g}, nbar = {:.10g}\n", p.delta1, p.nbar);
                os << fmt::format("  theta = {:.10g}  Omega_R = {:.10g}  gamma0 = {:.10g}  gamma+ = {:.10g}  "
                                  "gamma- = {:.10g}\n",
                                  d.theta, d.omega_r, d.gamma0, d.gamma_plus, d.gamma_minus);
                auto c_line = [&](const char* name, cplx z) {
                    os << fmt::format("  {} = {:+.12e} {:+.12e}i\n", name, z.real(), z.imag());
                };
                c_line("A1", k.a1);
                c_line("B1", k.b1);
                c_line("C1", k.c1);
                c_line("D1", k.d1);
                c_line("A2", k.a2);
                c_line("B2", k.b2);
                c_line("C2", k.c2);
                c_line("D2", k.d2);

                SweepRow row = compute_point(p, cfg.order, cfg.oracle, cfg.fock);
                os << "  status = " << to_string(row.status);
                if (!row.message.empty())
                    os << " (" << row.message << ")";
                os << fmt::format("\n  stability abscissa = {:.6e}, regime_ok = {}, secular_ok = {}\n", row.abscissa,
                                  row.regime_ok, row.secular_ok);
                if (row.corr)
                {
                    const CorrelationSet& s = *row.corr;
                    os << fmt::format("  <a+a> = {:.10g}\n  <b+b> = {:.10g}\n", s.mean_a, s.mean_b);
                    os << "  g2_photon = " << opt(s.g2_photon) << "\n  g2_phonon = " << opt(s.g2_phonon)
                       << "\n  g2_cross = " << opt(s.g2_cross) << "\n  CSI = " << opt(s.csi)
                       << (s.violates_csi() ? "  (violated: nonclassical)" : "") << "\n";
                }
                if (row.oracle)
                {
                    const CorrelationSet& s = row.oracle->correlations;
                    os << fmt::format("  oracle ({}, cutoffs {}x{}, {}): <a+a> = {:.10g}, <b+b> = {:.10g}, CSI = {}\n",
                                      to_string(cfg.oracle), row.oracle->n_a, row.oracle->n_b, row.oracle_status,
                                      s.mean_a, s.mean_b, opt(s.csi));
                }
                else if (!row.oracle_status.empty())
                    os << "  oracle: " << row.oracle_status << "\n";
                if (row.status == RowStatus::error)
                    status = kNumerical;
            }
        });
        return status;
    }

    int cmd_sweep(const Common& c, bool oracle_default)
    {
        SweepConfig cfg = resolve(c);
        if (oracle_default && cfg.oracle == OracleMode::off && !c.oracle)
            cfg.oracle = OracleMode::reduced;
        const auto rows = run_sweep(cfg);
        with_output(cfg.output, [&](std::ostream& os) { write_csv(os, cfg, rows); });
        return has_fatal_rows(rows) ? kNumerical : kOk;
    }

    int cmd_oracle_point(const Common& c)
    {
        SweepConfig cfg = resolve(c);
        if (cfg.oracle == OracleMode::off)
            cfg.oracle = OracleMode::reduced;
        // a single point is a degenerate sweep over the current value
        const double v = get_field(cfg.base, cfg.parameter);
        cfg.start = cfg.stop = v;
        cfg.steps = 2;
        auto rows = run_sweep(cfg);
        rows.resize(cfg.nbars.size());
        with_output(cfg.output, [&](std::ostream& os) { write_csv(os, cfg, rows); });
        return has_fatal_rows(rows) ? kNumerical : kOk;
    }

    int cmd_check(const Common& c, std::uint64_t seed)
    {
        const SweepConfig cfg = resolve(c);
        bool all = true;
        for (double nbar : cfg.nbars)
        {
            ModelParams p = cfg.base;
            p.nbar = nbar;
            std::cout << fmt::format("invariants at {} = {:.10g}, nbar = {:.10g}, order {}\n", cfg.parameter,
                                     get_field(p, cfg.parameter), nbar, cfg.order);
            for (const auto& r : run_invariant_suite(p, cfg.order, seed))
            {
                std::cout << (r.passed ? "  PASS  " : "  FAIL  ") << r.name;
                if (!r.detail.empty())
                    std::cout << "  [" << r.detail << "]";
                std::cout << "\n";
                all = all && r.passed;
            }
        }
        return all ? kOk : kInvariant;
    }
}

int main(int argc, char** argv)
{
    CLI::App app{"phocorr: steady-state photon-phonon correlations of a driven quantum-dot optomechanical system"};
    app.set_version_flag("--version", std::string(PHOCORR_VERSION));
    app.require_subcommand(1);

    Common steady_opts, sweep_opts, oracle_opts, check_opts;
    auto* steady = app.add_subcommand("steady", "single point: coefficients and correlation functions");
    add_common(steady, steady_opts);
    auto* sweep = app.add_subcommand("sweep", "parameter sweep to CSV");
    add_common(sweep, sweep_opts);
    auto* oracle = app.add_subcommand("oracle-compare", "sweep (or --point) with truncated-Fock oracle columns");
    add_common(oracle, oracle_opts);
    bool point = false;
    oracle->add_flag("--point", point, "evaluate only the base parameter point");
    auto* check = app.add_subcommand("check", "run the invariant suite at the config's base point");
    add_common(check, check_opts);
    std::uint64_t seed = 1;
    check->add_option("--seed", seed, "seed for the randomized Fock comparison");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try
    {
        if (*steady)
            return cmd_steady(steady_opts);
        if (*sweep)
            return cmd_sweep(sweep_opts, false);
        if (*oracle)
            return point ? cmd_oracle_point(oracle_opts) : cmd_sweep(oracle_opts, true);
        if (*check)
            return cmd_check(check_opts, seed);
    }
    catch (const ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kOk;
}
