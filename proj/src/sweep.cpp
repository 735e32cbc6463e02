#include "phocorr/sweep.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "phocorr/moments.hpp"

#ifndef PHOCORR_VERSION
#define PHOCORR_VERSION "unknown"
#endif

namespace phocorr
{
    OracleMode parse_oracle_mode(const std::string& s)
    {
        if (s == "off" || s == "false" || s == "none")
            return OracleMode::off;
        if (s == "reduced")
            return OracleMode::reduced;
        if (s == "full")
            return OracleMode::full;
        throw ConfigError("oracle must be one of off|reduced|full, got '" + s + "'");
    }

    std::string to_string(OracleMode m)
    {
        switch (m)
        {
        case OracleMode::off: return "off";
        case OracleMode::reduced: return "reduced";
        case OracleMode::full: return "full";
        }
        return "?";
    }

    std::string to_string(RowStatus s)
    {
        switch (s)
        {
        case RowStatus::ok: return "ok";
        case RowStatus::unstable: return "unstable";
        case RowStatus::singular: return "singular";
        case RowStatus::nonphysical: return "nonphysical";
        case RowStatus::error: return "error";
        }
        return "?";
    }

    void SweepConfig::validate() const
    {
        if (!is_field(parameter))
            throw ConfigError("sweep.parameter '" + parameter + "' is not a model parameter");
        if (parameter == "nbar")
            throw ConfigError("sweep.parameter cannot be nbar; list occupations under 'nbar' instead");
        if (steps < 2)
            throw ConfigError("sweep.steps must be >= 2");
        if (!std::isfinite(start) || !std::isfinite(stop))
            throw ConfigError("sweep.start/stop must be finite");
        if (nbars.empty())
            throw ConfigError("at least one nbar value is required");
        if (order < 4 || order > MomentBasis::kMaxSupportedOrder)
            throw ConfigError(fmt::format("order must be in [4, {}]", MomentBasis::kMaxSupportedOrder));
        if (jobs < 1)
            throw ConfigError("jobs must be >= 1");
        try
        {
            fock.validate();
            for (int i = 0; i < steps; i += steps - 1)
                for (double nbar : nbars)
                {
                    ModelParams p = base;
                    set_field(p, parameter, value_at(i));
                    p.nbar = nbar;
                    p.validate();
                }
        }
        catch (const std::invalid_argument& e)
        {
            throw ConfigError(e.what());
        }
    }

    double SweepConfig::value_at(int i) const
    {
        if (i == steps - 1)
            return stop;
        return start + (stop - start) * static_cast<double>(i) / static_cast<double>(steps - 1);
    }

    namespace
    {
        std::string where(const std::string& source, const YAML::Node& n)
        {
            const YAML::Mark m = n.Mark();
            if (m.is_null())
                return source;
            return fmt::format("{}:{}:{}", source, m.line + 1, m.column + 1);
        }

        template <typename T>
        T read(const std::string& source, const YAML::Node& n, const std::string& key)
        {
            try
            {
                return n.as<T>();
            }
            catch (const YAML::Exception&)
            {
                throw ConfigError(fmt::format("{}: field '{}' has the wrong type", where(source, n), key));
            }
        }

        void check_keys(const std::string& source, const YAML::Node& map, const std::set<std::string>& allowed,
                        const std::string& section)
        {
            if (!map.IsMap())
                throw ConfigError(fmt::format("{}: '{}' must be a mapping", where(source, map), section));
            for (const auto& kv : map)
            {
                const auto key = kv.first.as<std::string>();
                if (!allowed.count(key))
                    throw ConfigError(fmt::format("{}: unknown field '{}{}'", where(source, kv.first),
                                                  section.empty() ? "" : section + ".", key));
            }
        }

        std::vector<double> read_list(const std::string& source, const YAML::Node& n, const std::string& key)
        {
            if (n.IsScalar())
                return {read<double>(source, n, key)};
            if (!n.IsSequence())
                throw ConfigError(fmt::format("{}: '{}' must be a number or a list", where(source, n), key));
            std::vector<double> out;
            for (const auto& e : n)
                out.push_back(read<double>(source, e, key));
            return out;
        }
    }

    SweepConfig parse_config(const std::string& text, const std::string& source)
    {
        YAML::Node root;
        try
        {
            root = YAML::Load(text);
        }
        catch (const YAML::ParserException& e)
        {
            throw ConfigError(fmt::format("{}:{}:{}: {}", source, e.mark.line + 1, e.mark.column + 1, e.msg));
        }
        if (!root.IsMap())
            throw ConfigError(source + ": top level must be a mapping");
        check_keys(source, root,
                   {"units", "params", "sweep", "nbar", "temperature_K", "omega_m_rad_s", "order", "oracle",
                    "output", "jobs"},
                   "");

        if (!root["units"])
            throw ConfigError(source + ": missing required field 'units' (must be 'gamma')");
        if (const auto u = read<std::string>(source, root["units"], "units"); u != "gamma")
            throw ConfigError(fmt::format("{}: units must be 'gamma', got '{}'", where(source, root["units"]), u));

        SweepConfig cfg;
        cfg.base = reference_params();

        if (const YAML::Node params = root["params"])
        {
            std::set<std::string> allowed{"delta_over_2omega"};
            for (const char* f : {"gamma", "gamma_c", "g", "lam", "omega_rabi", "delta", "delta1", "omega_m",
                                  "kappa_a", "kappa_b"})
                allowed.insert(f);
            check_keys(source, params, allowed, "params");
            std::optional<double> ratio;
            for (const auto& kv : params)
            {
                const auto key = kv.first.as<std::string>();
                const double v = read<double>(source, kv.second, "params." + key);
                if (key == "delta_over_2omega")
                    ratio = v;
                else if (key == "gamma" && v != 1.0)
                    throw ConfigError(fmt::format("{}: params.gamma is the unit and must be 1",
                                                  where(source, kv.second)));
                else
                    set_field(cfg.base, key, v);
            }
            if (ratio)
            {
                if (params["delta"])
                    throw ConfigError(fmt::format("{}: give either params.delta or params.delta_over_2omega",
                                                  where(source, params["delta"])));
                cfg.base.delta = *ratio * 2.0 * cfg.base.omega_rabi;
            }
        }

        if (const YAML::Node sweep = root["sweep"])
        {
            check_keys(source, sweep, {"parameter", "start", "stop", "steps"}, "sweep");
            if (sweep["parameter"])
                cfg.parameter = read<std::string>(source, sweep["parameter"], "sweep.parameter");
            if (sweep["start"])
                cfg.start = read<double>(source, sweep["start"], "sweep.start");
            if (sweep["stop"])
                cfg.stop = read<double>(source, sweep["stop"], "sweep.stop");
            if (sweep["steps"])
                cfg.steps = read<int>(source, sweep["steps"], "sweep.steps");
            if (!is_field(cfg.parameter))
                throw ConfigError(fmt::format("{}: sweep.parameter '{}' is not a model parameter",
                                              where(source, sweep["parameter"]), cfg.parameter));
        }

        if (root["nbar"] && root["temperature_K"])
            throw ConfigError(source + ": give either 'nbar' or 'temperature_K', not both");
        if (root["nbar"])
            cfg.nbars = read_list(source, root["nbar"], "nbar");
        if (root["temperature_K"])
        {
            if (!root["omega_m_rad_s"])
                throw ConfigError(fmt::format("{}: 'temperature_K' requires 'omega_m_rad_s'",
                                              where(source, root["temperature_K"])));
            const double w = read<double>(source, root["omega_m_rad_s"], "omega_m_rad_s");
            cfg.nbars.clear();
            try
            {
                for (double t : read_list(source, root["temperature_K"], "temperature_K"))
                    cfg.nbars.push_back(nbar_from_temperature(w, t));
            }
            catch (const std::invalid_argument& e)
            {
                throw ConfigError(fmt::format("{}: {}", where(source, root["temperature_K"]), e.what()));
            }
        }
        else if (root["omega_m_rad_s"])
            throw ConfigError(fmt::format("{}: 'omega_m_rad_s' is only used with 'temperature_K'",
                                          where(source, root["omega_m_rad_s"])));

        if (root["order"])
            cfg.order = read<int>(source, root["order"], "order");
        if (root["jobs"])
            cfg.jobs = read<int>(source, root["jobs"], "jobs");
        if (root["output"])
            cfg.output = read<std::string>(source, root["output"], "output");

        if (const YAML::Node oracle = root["oracle"])
        {
            if (oracle.IsScalar())
                cfg.oracle = parse_oracle_mode(read<std::string>(source, oracle, "oracle"));
            else
            {
                check_keys(source, oracle, {"mode", "n_a", "n_b", "convergence_tol", "max_cutoff"}, "oracle");
                if (oracle["mode"])
                    cfg.oracle = parse_oracle_mode(read<std::string>(source, oracle["mode"], "oracle.mode"));
                if (oracle["n_a"])
                    cfg.fock.n_a = read<int>(source, oracle["n_a"], "oracle.n_a");
                if (oracle["n_b"])
                    cfg.fock.n_b = read<int>(source, oracle["n_b"], "oracle.n_b");
                if (oracle["convergence_tol"])
                    cfg.fock.convergence_tol = read<double>(source, oracle["convergence_tol"], "oracle.convergence_tol");
                if (oracle["max_cutoff"])
                    cfg.fock.max_cutoff = read<int>(source, oracle["max_cutoff"], "oracle.max_cutoff");
            }
        }

        try
        {
            cfg.validate();
        }
        catch (const ConfigError& e)
        {
            throw ConfigError(source + ": " + e.what());
        }
        return cfg;
    }

    SweepConfig load_config(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str(), path);
    }

    std::string dump_config(const SweepConfig& cfg)
    {
        // shortest round-trip representation keeps the header readable
        auto v = [](double x) { return fmt::format("{}", x); };
        std::vector<std::string> nbars;
        for (double n : cfg.nbars)
            nbars.push_back(v(n));

        YAML::Emitter out;
        out << YAML::BeginMap;
        out << YAML::Key << "units" << YAML::Value << "gamma";
        out << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
        for (const char* f : {"gamma", "gamma_c", "g", "lam", "omega_rabi", "delta", "delta1", "omega_m", "kappa_a",
                              "kappa_b"})
            out << YAML::Key << f << YAML::Value << v(get_field(cfg.base, f));
        out << YAML::EndMap;
        out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "parameter" << YAML::Value << cfg.parameter;
        out << YAML::Key << "start" << YAML::Value << v(cfg.start);
        out << YAML::Key << "stop" << YAML::Value << v(cfg.stop);
        out << YAML::Key << "steps" << YAML::Value << cfg.steps;
        out << YAML::EndMap;
        out << YAML::Key << "nbar" << YAML::Value << YAML::Flow << nbars;
        out << YAML::Key << "order" << YAML::Value << cfg.order;
        out << YAML::Key << "oracle" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "mode" << YAML::Value << to_string(cfg.oracle);
        out << YAML::Key << "n_a" << YAML::Value << cfg.fock.n_a;
        out << YAML::Key << "n_b" << YAML::Value << cfg.fock.n_b;
        out << YAML::Key << "convergence_tol" << YAML::Value << v(cfg.fock.convergence_tol);
        out << YAML::Key << "max_cutoff" << YAML::Value << cfg.fock.max_cutoff;
        out << YAML::EndMap;
        out << YAML::EndMap;
        return out.c_str();
    }

    double relative_deviation(double reference, double value)
    {
        return std::abs(value - reference) / std::max(std::abs(reference), 1e-300);
    }

    namespace
    {
        std::optional<double> deviation(std::optional<double> ref, std::optional<double> v)
        {
            if (!ref || !v)
                return std::nullopt;
            return relative_deviation(*ref, *v);
        }
    }

    SweepRow compute_point(const ModelParams& p, int order, OracleMode oracle, const FockConfig& fock)
    {
        SweepRow row;
        row.nbar = p.nbar;
        try
        {
            const RegimeDiagnostics diag = regime_diagnostics(p);
            row.regime_ok = diag.ok();
            row.secular_ok = diag.secular_ok;

            const MomentBasis basis(order);
            const GeneratorBlocks gen = assemble_generator(effective_coefficients(p), p.delta1, p.omega_m, basis);
            const StabilityReport rep = stability_report(gen);
            row.abscissa = rep.worst();
            row.corr = correlations(steady_state(gen));
        }
        catch (const UnstableGenerator& e)
        {
            row.status = RowStatus::unstable;
            row.message = e.what();
        }
        catch (const SingularBlock& e)
        {
            row.status = RowStatus::singular;
            row.message = e.what();
        }
        catch (const NonPhysicalMoments& e)
        {
            row.status = RowStatus::nonphysical;
            row.message = e.what();
        }
        catch (const std::exception& e)
        {
            row.status = RowStatus::error;
            row.message = e.what();
        }

        if (oracle == OracleMode::off)
            return row;
        try
        {
            const OracleModel model = oracle == OracleMode::full ? OracleModel::full : OracleModel::reduced;
            row.oracle = oracle_steady(model, p, fock, MomentBasis(4));
            row.oracle_status = row.oracle->converged ? "ok" : "unconverged";
            if (row.corr)
            {
                const CorrelationSet& m = *row.corr;
                const CorrelationSet& o = row.oracle->correlations;
                row.deviations = {relative_deviation(o.mean_a, m.mean_a), relative_deviation(o.mean_b, m.mean_b),
                                  deviation(o.g2_photon, m.g2_photon), deviation(o.g2_phonon, m.g2_phonon),
                                  deviation(o.g2_cross, m.g2_cross), deviation(o.csi, m.csi)};
            }
        }
        catch (const NoConvergence& e)
        {
            row.oracle_status = "noconvergence";
            if (row.message.empty())
                row.message = e.what();
        }
        catch (const std::exception& e)
        {
            row.oracle_status = "error";
            if (row.message.empty())
                row.message = e.what();
        }
        return row;
    }

    std::vector<SweepRow> run_sweep(const SweepConfig& cfg, const std::vector<std::size_t>* eval_order)
    {
        cfg.validate();
        const std::size_t n_nbar = cfg.nbars.size();
        const std::size_t total = static_cast<std::size_t>(cfg.steps) * n_nbar;
        std::vector<SweepRow> rows(total);

        auto work = [&](std::size_t slot) {
            const int i = static_cast<int>(slot / n_nbar);
            ModelParams p = cfg.base;
            set_field(p, cfg.parameter, cfg.value_at(i));
            p.nbar = cfg.nbars[slot % n_nbar];
            rows[slot] = compute_point(p, cfg.order, cfg.oracle, cfg.fock);
            rows[slot].value = cfg.value_at(i);
        };

        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t k; (k = next.fetch_add(1)) < total;)
                work(eval_order ? (*eval_order)[k] : k);
        };

        const int n_threads = std::min<int>(cfg.jobs, static_cast<int>(total));
        std::vector<std::thread> pool;
        for (int t = 1; t < n_threads; t++)
            pool.emplace_back(worker);
        worker();
        for (auto& t : pool)
            t.join();
        return rows;
    }

    namespace
    {
        std::string num(double v) { return fmt::format("{:.12e}", v); }
        std::string num(const std::optional<double>& v) { return v ? num(*v) : "undefined"; }

        std::string quoted(const std::string& s)
        {
            std::string out = "\"";
            for (char c : s)
            {
                if (c == '"')
                    out += "\"\"";
                else if (c == '\n')
                    out += ' ';
                else
                    out += c;
            }
            return out + "\"";
        }
    }

    void write_csv(std::ostream& os, const SweepConfig& cfg, const std::vector<SweepRow>& rows)
    {
        os << "# phocorr " << PHOCORR_VERSION << "\n";
        os << "# resolved config (units of gamma):\n";
        std::istringstream dump(dump_config(cfg));
        for (std::string line; std::getline(dump, line);)
            os << "#   " << line << "\n";

        const bool with_oracle = cfg.oracle != OracleMode::off;
        os << cfg.parameter
           << ",nbar,status,mean_a,mean_b,g2_photon,g2_phonon,g2_cross,csi,abscissa,regime_ok,secular_ok";
        if (with_oracle)
            os << ",oracle_status,oracle_n_a,oracle_n_b,oracle_cutoff_change,oracle_min_eigenvalue"
                  ",oracle_mean_a,oracle_mean_b,oracle_g2_photon,oracle_g2_phonon,oracle_g2_cross,oracle_csi"
                  ",dev_mean_a,dev_mean_b,dev_g2_photon,dev_g2_phonon,dev_g2_cross,dev_csi";
        os << ",message\n";

        for (const SweepRow& r : rows)
        {
            os << num(r.value) << ',' << num(r.nbar) << ',' << to_string(r.status);
            if (r.corr)
                os << ',' << num(r.corr->mean_a) << ',' << num(r.corr->mean_b) << ',' << num(r.corr->g2_photon)
                   << ',' << num(r.corr->g2_phonon) << ',' << num(r.corr->g2_cross) << ',' << num(r.corr->csi);
            else
                os << ",undefined,undefined,undefined,undefined,undefined,undefined";
            os << ',' << num(r.abscissa) << ',' << (r.regime_ok ? 1 : 0) << ',' << (r.secular_ok ? 1 : 0);
            if (with_oracle)
            {
                os << ',' << r.oracle_status;
                if (r.oracle)
                {
                    const OracleResult& o = *r.oracle;
                    os << ',' << o.n_a << ',' << o.n_b << ',' << num(o.cutoff_change) << ','
                       << num(o.min_eigenvalue) << ',' << num(o.correlations.mean_a) << ','
                       << num(o.correlations.mean_b) << ',' << num(o.correlations.g2_photon) << ','
                       << num(o.correlations.g2_phonon) << ',' << num(o.correlations.g2_cross) << ','
                       << num(o.correlations.csi);
                }
                else
                    os << ",undefined,undefined,undefined,undefined,undefined,undefined,undefined,undefined,"
                          "undefined,undefined";
                for (std::size_t k = 0; k < 6; k++)
                    os << ',' << (k < r.deviations.size() ? num(r.deviations[k]) : std::string("undefined"));
            }
            os << ',' << quoted(r.message) << '\n';
        }
    }

    bool has_fatal_rows(const std::vector<SweepRow>& rows)
    {
        for (const auto& r : rows)
            if (r.status == RowStatus::error)
                return true;
        return false;
    }
}
