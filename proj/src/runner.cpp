#include "xva/runner.hpp"

#include "xva/errors.hpp"
#include "xva/linear.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <sstream>

namespace xva {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::string_view block, std::initializer_list<std::string_view> known)
{
    if (!obj.is_object())
        throw ValidationError("config block '" + std::string(block) + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ValidationError("unknown config key '" + std::string(block) + "." + key + "'");
    }
}

double read_number(const json& obj, const char* key, double fallback)
{
    if (!obj.contains(key))
        return fallback;
    const json& v = obj.at(key);
    if (!v.is_number())
        throw ValidationError(std::string("config key '") + key + "' must be a number");
    return v.get<double>();
}

int read_int(const json& obj, const char* key, int fallback)
{
    if (!obj.contains(key))
        return fallback;
    const json& v = obj.at(key);
    if (!v.is_number())
        throw ValidationError(std::string("config key '") + key + "' must be a number");
    const double d = v.get<double>();
    if (d != std::floor(d) || std::abs(d) > 1e9)
        throw ValidationError(std::string("config key '") + key + "' must be an integer");
    return static_cast<int>(d);
}

bool read_bool(const json& obj, const char* key, bool fallback)
{
    if (!obj.contains(key))
        return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean())
        throw ValidationError(std::string("config key '") + key + "' must be true or false");
    return v.get<bool>();
}

std::string read_string(const json& obj, const char* key, std::string fallback)
{
    if (!obj.contains(key))
        return fallback;
    const json& v = obj.at(key);
    if (!v.is_string())
        throw ValidationError(std::string("config key '") + key + "' must be a string");
    return v.get<std::string>();
}

std::optional<double> read_optional(const json& obj, const char* key, std::optional<double> fallback)
{
    if (!obj.contains(key))
        return fallback;
    if (obj.at(key).is_null())
        return std::nullopt;
    return read_number(obj, key, 0.0);
}

ExecutionMode execution_from_string(std::string_view s)
{
    if (s == "parallel")
        return ExecutionMode::Parallel;
    if (s == "serial")
        return ExecutionMode::Serial;
    throw ValidationError("unknown execution mode '" + std::string(s) + "' (expected serial or parallel)");
}

const char* to_string(ExecutionMode m)
{
    return m == ExecutionMode::Serial ? "serial" : "parallel";
}

std::string one_line(std::string s)
{
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ValidationError("cannot write " + path.string());
    os << text;
    if (!os)
        throw ValidationError("write failed for " + path.string());
}

void write_csv(const std::filesystem::path& path, const Surface& s)
{
    std::ostringstream os;
    write_surface_csv(os, s);
    write_text(path, os.str());
}

json optional_json(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

json diagnostics_json(const MonotoneResult& res)
{
    json iters = json::array();
    for (const auto& d : res.diagnostics) {
        iters.push_back({
            {"n", d.n},
            {"gap_sup_norm", optional_json(d.gap_sup_norm)},
            {"max_ordering_violation", d.max_ordering_violation},
            {"ordering_violations", d.ordering_violations},
            {"residual_sup_norm", optional_json(d.residual_sup_norm)},
            {"residual_sup_norm_sub", optional_json(d.residual_sup_norm_sub)},
            {"residual_sup_norm_super", optional_json(d.residual_sup_norm_super)},
            {"step_change_sub", optional_json(d.step_change_sub)},
            {"step_change_super", optional_json(d.step_change_super)},
        });
    }
    json domains = json::array();
    for (const auto& iv : res.schedule.intervals)
        domains.push_back({iv.lo, iv.hi});
    return {
        {"iterations", iters},
        {"max_ordering_violation", res.max_ordering_violation},
        {"ordering_violations", res.ordering_violations},
        {"truncation_bound", res.truncation_bound},
        {"domains", domains},
    };
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

}  // namespace

std::string_view to_string(RunMode mode)
{
    switch (mode) {
    case RunMode::RiskFree:
        return "riskfree";
    case RunMode::Linear:
        return "linear";
    case RunMode::NonnegClosed:
        return "nonneg-closed";
    case RunMode::Monotone:
        return "monotone";
    }
    return "monotone";
}

RunMode run_mode_from_string(std::string_view name)
{
    for (RunMode m : {RunMode::RiskFree, RunMode::Linear, RunMode::NonnegClosed, RunMode::Monotone})
        if (to_string(m) == name)
            return m;
    throw ValidationError("unknown mode '" + std::string(name) + "' (expected riskfree, linear, nonneg-closed or monotone)");
}

void RunConfig::resolve()
{
    const double lo = contract.kind == ContractKind::Gap ? contract.trigger : contract.strike;
    if (!s_min)
        s_min = lo - 5.0;
    if (!s_max)
        s_max = contract.strike + 5.0;
}

void RunConfig::validate() const
{
    market.validate();
    contract.validate();
    if (!s_min || !s_max)
        throw ValidationError("price range is unresolved");
    grid().validate();
    if (mode == RunMode::Monotone) {
        iteration_config().validate(contract);
        if (verify && !track_both && contract.kind != ContractKind::Call)
            throw ValidationError("verify needs both sequences unless the contract is a call");
    }
    if (mode == RunMode::Linear)
        linear_numerics().validate();
    if (mode == RunMode::NonnegClosed && !contract.has_nonnegative_payoff())
        throw ValidationError("nonneg-closed mode needs a contract with non-negative payoff (call)");
    if (verify && mode != RunMode::Monotone)
        throw ValidationError("verify applies to monotone mode only");
}

GridSpec RunConfig::grid() const
{
    return output_grid(contract.maturity, d_tau, s_min.value_or(0.0), s_max.value_or(0.0), d_x);
}

IterationConfig RunConfig::iteration_config() const
{
    IterationConfig c;
    c.grid = grid();
    c.iterations = iterations;
    c.epsilon = epsilon;
    c.space_order = space_order;
    c.space_panels = space_panels;
    c.time_order = time_order;
    c.time_panels = time_panels;
    c.kernel_cutoff = kernel_cutoff;
    c.alpha = alpha;
    c.interp_order = interp_order;
    c.track_both = track_both;
    c.mode = execution;
    return c;
}

LinearNumerics RunConfig::linear_numerics() const
{
    LinearNumerics n;
    n.truncation_target = linear_truncation_target;
    n.order = space_order;
    n.space_panels = space_panels;
    n.time_panels = time_panels;
    return n;
}

RunConfig config_from_json_text(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(doc, "root", {"mode", "contract", "market", "numerics", "output", "verify"});

    RunConfig cfg;
    cfg.mode = run_mode_from_string(read_string(doc, "mode", "monotone"));
    cfg.verify = read_bool(doc, "verify", false);

    if (doc.contains("contract")) {
        const json& c = doc.at("contract");
        reject_unknown(c, "contract", {"kind", "strike", "trigger", "maturity"});
        const ContractKind kind = contract_kind_from_string(read_string(c, "kind", "call"));
        const double strike = read_number(c, "strike", 15.0);
        const double maturity = read_number(c, "maturity", 2.0);
        if (kind == ContractKind::Gap)
            cfg.contract = Contract::gap(strike, read_number(c, "trigger", 12.0), maturity);
        else if (kind == ContractKind::Forward)
            cfg.contract = Contract::forward(strike, maturity);
        else
            cfg.contract = Contract::call(strike, maturity);
    }

    if (doc.contains("market")) {
        const json& m = doc.at("market");
        reject_unknown(m, "market", {"r", "q_s", "gamma_s", "sigma", "lambda_b", "lambda_c", "recovery_b",
                                     "recovery_c", "funding_spread", "c_m"});
        MarketParams& p = cfg.market;
        p.r = read_number(m, "r", p.r);
        p.q_s = read_number(m, "q_s", p.q_s);
        p.gamma_s = read_number(m, "gamma_s", p.gamma_s);
        p.sigma = read_number(m, "sigma", p.sigma);
        p.lambda_b = read_number(m, "lambda_b", p.lambda_b);
        p.lambda_c = read_number(m, "lambda_c", p.lambda_c);
        p.recovery_b = read_number(m, "recovery_b", p.recovery_b);
        p.recovery_c = read_number(m, "recovery_c", p.recovery_c);
        p.funding_spread = read_number(m, "funding_spread", p.funding_spread);
        p.c_m_override = read_optional(m, "c_m", std::nullopt);
    }

    if (doc.contains("numerics")) {
        const json& n = doc.at("numerics");
        reject_unknown(n, "numerics", {"grid", "iterations", "epsilon", "alpha", "quadrature", "interp_order",
                                       "track_both", "execution", "linear_truncation_target"});
        if (n.contains("grid")) {
            const json& g = n.at("grid");
            reject_unknown(g, "numerics.grid", {"d_tau", "d_x", "s_min", "s_max"});
            cfg.d_tau = read_number(g, "d_tau", cfg.d_tau);
            cfg.d_x = read_number(g, "d_x", cfg.d_x);
            cfg.s_min = read_optional(g, "s_min", std::nullopt);
            cfg.s_max = read_optional(g, "s_max", std::nullopt);
        }
        cfg.iterations = read_int(n, "iterations", cfg.iterations);
        cfg.epsilon = read_number(n, "epsilon", cfg.epsilon);
        cfg.alpha = read_number(n, "alpha", cfg.alpha);
        if (n.contains("quadrature")) {
            const json& q = n.at("quadrature");
            reject_unknown(q, "numerics.quadrature",
                           {"space_order", "space_panels", "time_order", "time_panels", "kernel_cutoff"});
            cfg.space_order = read_int(q, "space_order", cfg.space_order);
            cfg.space_panels = read_int(q, "space_panels", cfg.space_panels);
            cfg.time_order = read_int(q, "time_order", cfg.time_order);
            cfg.time_panels = read_int(q, "time_panels", cfg.time_panels);
            cfg.kernel_cutoff = read_number(q, "kernel_cutoff", cfg.kernel_cutoff);
        }
        if (n.contains("interp_order") && !n.at("interp_order").is_null())
            cfg.interp_order = interp_order_from_int(read_int(n, "interp_order", 1));
        cfg.track_both = read_bool(n, "track_both", cfg.track_both);
        cfg.execution = execution_from_string(read_string(n, "execution", "parallel"));
        cfg.linear_truncation_target = read_number(n, "linear_truncation_target", cfg.linear_truncation_target);
    }

    if (doc.contains("output")) {
        const json& o = doc.at("output");
        reject_unknown(o, "output", {"dir", "formats", "all_iterations"});
        cfg.out_dir = read_string(o, "dir", cfg.out_dir);
        cfg.all_iterations = read_bool(o, "all_iterations", cfg.all_iterations);
        if (o.contains("formats")) {
            const json& f = o.at("formats");
            if (!f.is_array())
                throw ValidationError("output.formats must be an array");
            cfg.write_csv = cfg.write_json = false;
            for (const json& item : f) {
                const std::string s = item.is_string() ? item.get<std::string>() : std::string();
                if (s == "csv")
                    cfg.write_csv = true;
                else if (s == "json")
                    cfg.write_json = true;
                else
                    throw ValidationError("unknown output format (expected csv or json)");
            }
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ValidationError("cannot read config file " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return config_from_json_text(ss.str());
}

std::string config_to_json_text(const RunConfig& cfg)
{
    const MarketParams& p = cfg.market;
    json contract = {{"kind", std::string(to_string(cfg.contract.kind))},
                     {"strike", cfg.contract.strike},
                     {"maturity", cfg.contract.maturity}};
    if (cfg.contract.kind == ContractKind::Gap)
        contract["trigger"] = cfg.contract.trigger;
    json formats = json::array();
    if (cfg.write_csv)
        formats.push_back("csv");
    if (cfg.write_json)
        formats.push_back("json");
    json doc = {
        {"mode", std::string(to_string(cfg.mode))},
        {"verify", cfg.verify},
        {"contract", contract},
        {"market",
         {{"r", p.r},
          {"q_s", p.q_s},
          {"gamma_s", p.gamma_s},
          {"sigma", p.sigma},
          {"lambda_b", p.lambda_b},
          {"lambda_c", p.lambda_c},
          {"recovery_b", p.recovery_b},
          {"recovery_c", p.recovery_c},
          {"funding_spread", p.funding_spread},
          {"c_m", optional_json(p.c_m_override)}}},
        {"numerics",
         {{"grid", {{"d_tau", cfg.d_tau}, {"d_x", cfg.d_x}, {"s_min", optional_json(cfg.s_min)},
                    {"s_max", optional_json(cfg.s_max)}}},
          {"iterations", cfg.iterations},
          {"epsilon", cfg.epsilon},
          {"alpha", cfg.alpha},
          {"quadrature",
           {{"space_order", cfg.space_order},
            {"space_panels", cfg.space_panels},
            {"time_order", cfg.time_order},
            {"time_panels", cfg.time_panels},
            {"kernel_cutoff", cfg.kernel_cutoff}}},
          {"interp_order", cfg.interp_order ? json(static_cast<int>(*cfg.interp_order)) : json(nullptr)},
          {"track_both", cfg.track_both},
          {"execution", to_string(cfg.execution)},
          {"linear_truncation_target", cfg.linear_truncation_target}}},
        {"output", {{"dir", cfg.out_dir}, {"formats", formats}, {"all_iterations", cfg.all_iterations}}},
    };
    return doc.dump(2) + "\n";
}

void apply_overrides(RunConfig& cfg, const FlagOverrides& flags)
{
    if (flags.mode)
        cfg.mode = run_mode_from_string(*flags.mode);
    if (flags.contract) {
        const ContractKind kind = contract_kind_from_string(*flags.contract);
        if (kind != cfg.contract.kind) {
            const Contract& old = cfg.contract;
            if (kind == ContractKind::Gap)
                cfg.contract = Contract::gap(old.strike, 12.0, old.maturity);
            else if (kind == ContractKind::Forward)
                cfg.contract = Contract::forward(old.strike, old.maturity);
            else
                cfg.contract = Contract::call(old.strike, old.maturity);
        }
    }
    if (flags.iterations)
        cfg.iterations = *flags.iterations;
    if (flags.alpha)
        cfg.alpha = *flags.alpha;
    if (flags.epsilon)
        cfg.epsilon = *flags.epsilon;
    if (flags.out)
        cfg.out_dir = *flags.out;
    if (flags.verify)
        cfg.verify = true;
    if (flags.all_iterations)
        cfg.all_iterations = true;
}

VerifyReport verify_result(const RunConfig& cfg, const MonotoneResult& res)
{
    VerifyReport rep;
    rep.max_ordering_violation = res.max_ordering_violation;
    rep.ordering_violations = res.ordering_violations;
    rep.truncation_bound = res.truncation_bound;

    if (cfg.contract.kind == ContractKind::Call) {
        const Surface& sub = res.final_sub();
        double num = 0.0;
        double den = 0.0;
        const GridSpec& g = sub.grid();
        for (std::size_t i = 0; i < sub.rows(); ++i) {
            const double tau = g.tau(i);
            for (std::size_t j = 0; j < sub.cols(); ++j) {
                const double S = std::exp(g.x(j));
                const double exact = nonneg_nonlinear_closed_form(cfg.market, tau,
                                                                  risk_free_price(cfg.contract, cfg.market, tau, S));
                den = std::max(den, std::abs(exact));
                num = std::max(num, std::abs(sub.at(i, j) - exact));
                if (!res.super_surfaces.empty())
                    num = std::max(num, std::abs(res.final_super().at(i, j) - exact));
            }
        }
        rep.oracle_gap = den > 0.0 ? num / den : num;
        const bool ok = *rep.oracle_gap <= kVerifyOracleTolerance;
        rep.pass = rep.pass && ok;
        rep.lines.push_back(std::string(ok ? "PASS" : "FAIL") + " oracle_gap=" + fmt(*rep.oracle_gap)
                            + " threshold=" + fmt(kVerifyOracleTolerance));
    }
    if (!res.super_surfaces.empty()) {
        rep.gap_sup_norm = sup_distance(res.final_super(), res.final_sub());
        if (cfg.contract.kind != ContractKind::Call) {
            const bool ok = *rep.gap_sup_norm < kVerifyGapTolerance;
            rep.pass = rep.pass && ok;
            rep.lines.push_back(std::string(ok ? "PASS" : "FAIL") + " gap_sup_norm=" + fmt(*rep.gap_sup_norm)
                                + " threshold=" + fmt(kVerifyGapTolerance));
        } else {
            rep.lines.push_back("INFO gap_sup_norm=" + fmt(*rep.gap_sup_norm));
        }
    }
    {
        const bool ok = rep.ordering_violations == 0;
        rep.pass = rep.pass && ok;
        rep.lines.push_back(std::string(ok ? "PASS" : "FAIL") + " ordering_violations="
                            + std::to_string(rep.ordering_violations)
                            + " max_ordering_violation=" + fmt(rep.max_ordering_violation));
    }
    {
        const bool ok = rep.truncation_bound <= kVerifyTruncationTolerance;
        rep.pass = rep.pass && ok;
        rep.lines.push_back(std::string(ok ? "PASS" : "FAIL") + " truncation_bound=" + fmt(rep.truncation_bound)
                            + " threshold=" + fmt(kVerifyTruncationTolerance));
        if (!ok)
            rep.lines.push_back("WARNING truncation bound exceeds threshold; increase epsilon (now "
                                + fmt(cfg.epsilon) + ")");
    }
    rep.lines.push_back(rep.pass ? "VERIFY PASS" : "VERIFY FAIL");
    return rep;
}

int run(RunConfig cfg, std::ostream& out, std::ostream& err)
{
    namespace fs = std::filesystem;
    try {
        cfg.resolve();
        cfg.validate();
        const GridSpec grid = cfg.grid();
        const fs::path dir(cfg.out_dir);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec)
            throw ValidationError("cannot create output directory " + dir.string() + ": " + ec.message());
        write_text(dir / "config.json", config_to_json_text(cfg));

        const Contract& c = cfg.contract;
        const MarketParams& p = cfg.market;
        int status = kExitOk;

        switch (cfg.mode) {
        case RunMode::RiskFree: {
            const Surface s = Surface::sample(
                grid, [&](double tau, double x) { return risk_free_price(c, p, tau, std::exp(x)); },
                InterpOrder::Linear);
            if (cfg.write_csv)
                write_csv(dir / "riskfree.csv", s);
            break;
        }
        case RunMode::Linear: {
            const Surface s = linear_surface(c, p, grid, cfg.linear_numerics());
            if (cfg.write_csv)
                write_csv(dir / "linear.csv", s);
            break;
        }
        case RunMode::NonnegClosed: {
            const Surface lin = Surface::sample(
                grid,
                [&](double tau, double x) {
                    return nonneg_linear_closed_form(p, tau, risk_free_price(c, p, tau, std::exp(x)));
                },
                InterpOrder::Linear);
            const Surface nonlin = Surface::sample(
                grid,
                [&](double tau, double x) {
                    return nonneg_nonlinear_closed_form(p, tau, risk_free_price(c, p, tau, std::exp(x)));
                },
                InterpOrder::Linear);
            if (cfg.write_csv) {
                write_csv(dir / "nonneg_linear.csv", lin);
                write_csv(dir / "nonneg_nonlinear.csv", nonlin);
            }
            break;
        }
        case RunMode::Monotone: {
            const MonotoneResult res = run_monotone(c, p, cfg.iteration_config());
            if (cfg.write_csv) {
                write_csv(dir / "sub.csv", res.final_sub());
                if (!res.super_surfaces.empty())
                    write_csv(dir / "super.csv", res.final_super());
                if (!res.residual_sub.empty())
                    write_csv(dir / "residual_sub.csv", res.residual_sub.back());
                if (!res.residual_super.empty())
                    write_csv(dir / "residual_super.csv", res.residual_super.back());
                if (cfg.all_iterations) {
                    for (std::size_t n = 0; n < res.sub_surfaces.size(); ++n)
                        write_csv(dir / ("sub_" + std::to_string(n) + ".csv"), res.sub_surfaces[n]);
                    for (std::size_t n = 0; n < res.super_surfaces.size(); ++n)
                        write_csv(dir / ("super_" + std::to_string(n) + ".csv"), res.super_surfaces[n]);
                }
            }
            if (cfg.write_json)
                write_text(dir / "diagnostics.json", diagnostics_json(res).dump(2) + "\n");
            if (cfg.verify) {
                const VerifyReport rep = verify_result(cfg, res);
                for (const auto& line : rep.lines)
                    out << line << '\n';
                if (!rep.pass)
                    status = kExitVerifyFailed;
            }
            break;
        }
        }
        out << "wrote " << to_string(cfg.mode) << " output to " << dir.string() << '\n';
        return status;
    } catch (const ValidationError& e) {
        err << "error: validation: " << one_line(e.what()) << '\n';
        return kExitValidation;
    } catch (const NumericalError& e) {
        err << "error: numerical: " << one_line(e.what()) << '\n';
        return kExitNumerical;
    } catch (const std::bad_alloc&) {
        err << "error: numerical: out of memory\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: runtime: " << one_line(e.what()) << '\n';
        return kExitNumerical;
    }
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"xVA pricing engine: risk-free, linear and monotone-iteration solvers"};
    std::string config_path;
    FlagOverrides flags;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--mode", flags.mode, "riskfree | linear | nonneg-closed | monotone");
    app.add_option("--contract", flags.contract, "call | forward | gap");
    app.add_option("--iterations", flags.iterations, "number of monotone iterations N");
    app.add_option("--alpha", flags.alpha, "relaxation parameter in (0, 1]");
    app.add_option("--epsilon", flags.epsilon, "truncation margin in log-price");
    app.add_option("--out", flags.out, "output directory");
    app.add_flag("--verify", flags.verify, "check the run against oracles and thresholds");
    app.add_flag("--all-iterations", flags.all_iterations, "also write every iterate as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: validation: " << one_line(e.what()) << '\n';
        return kExitValidation;
    }

    RunConfig cfg;
    try {
        if (!config_path.empty())
            cfg = load_config(config_path);
        apply_overrides(cfg, flags);
    } catch (const ValidationError& e) {
        err << "error: validation: " << one_line(e.what()) << '\n';
        return kExitValidation;
    }
    return run(std::move(cfg), out, err);
}

}  // namespace xva
