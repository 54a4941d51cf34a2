#pragma once

#include "driftlab/errors.hpp"
#include "driftlab/fp_solver.hpp"
#include "driftlab/hardliners.hpp"
#include "driftlab/params.hpp"
#include "driftlab/potential.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace driftlab {

struct HardlinerConfig {
    double ratio = 0.0;
    std::optional<double> center_left;
    std::optional<double> center_right;
    double spread = 0.001;
    SpreadKind spread_kind = SpreadKind::Variance;

    bool operator==(const HardlinerConfig&) const = default;
};

struct GridConfig {
    std::size_t cells = 1024;
    bool operator==(const GridConfig&) const = default;
};

struct SolverConfig {
    double tol = 1e-8;
    std::size_t max_iter = 5'000'000;
    HardlinerForm hardliner_form = HardlinerForm::Approximate;
    bool operator==(const SolverConfig&) const = default;
};

struct SimConfig {
    std::size_t particles = 50000;
    std::size_t steps = 2000;
    std::size_t seeds = 10;
    std::uint64_t seed = 1;
    /// 0 records only the initial and final densities.
    std::size_t snapshot_every = 0;
    std::size_t bins = 128;
    /// Interaction-density smoothing; 0 means epsilon / 2.
    double bandwidth = 0.0;
    double tail_fraction = 0.2;
    /// Initial spread around the neutral point; 0 means 0.3 w.
    double initial_std = 0.0;
    std::size_t hardliner_particles = 0;
    bool operator==(const SimConfig&) const = default;
};

enum class SolverKind { Pde, Particle };

struct SweepConfig {
    std::string axis = "N";
    std::vector<double> values;
    SolverKind solver = SolverKind::Pde;
    bool operator==(const SweepConfig&) const = default;
};

struct AnalysisConfig {
    double prominence = 0.02;
    bool operator==(const AnalysisConfig&) const = default;
};

/// A fully resolved, validated run description; file sections map 1:1 onto its members.
struct RunConfig {
    ModelParams params = ModelParams::make(1.0, 2.3, 0.0, 0.1, 1e8);
    PotentialSpec potential;
    std::optional<HardlinerConfig> hardliners;
    GridConfig grid;
    SolverConfig solver;
    SimConfig sim;
    std::optional<SweepConfig> sweep;
    AnalysisConfig analysis;
    std::string output_dir = "out";

    std::optional<HardlinerSpec> hardliner_spec() const {
        if (!hardliners) return std::nullopt;
        const double w = potential.well_position();
        return HardlinerSpec(hardliners->ratio,
                             {hardliners->center_left.value_or(-w), hardliners->center_right.value_or(w)},
                             HardlinerSpec::std_from(hardliners->spread, hardliners->spread_kind),
                             potential.half_width());
    }

    BeliefGrid belief_grid() const { return BeliefGrid(potential.half_width(), grid.cells); }

    bool operator==(const RunConfig&) const = default;
};

inline const std::set<std::string>& sweep_axes() {
    static const std::set<std::string> axes{"N", "sigma", "mu", "kappa", "ratio"};
    return axes;
}

/// Copy of `base` with one swept parameter replaced; throws ConfigError if the point is invalid.
inline RunConfig with_axis_value(const RunConfig& base, const std::string& axis, double value) {
    RunConfig c = base;
    if (axis == "N") {
        c.params = base.params.with_n_total(value);
    } else if (axis == "sigma") {
        c.params = base.params.with_sigma(value);
    } else if (axis == "mu") {
        c.params = base.params.with_mu(value);
    } else if (axis == "kappa") {
        c.params = base.params.with_kappa(value);
    } else if (axis == "ratio") {
        HardlinerConfig h = base.hardliners.value_or(HardlinerConfig{});
        h.ratio = value;
        c.hardliners = h;
        (void)c.hardliner_spec();
    } else {
        throw ConfigError("sweep.axis: unknown axis '" + axis + "' (expected N, sigma, mu, kappa or ratio)");
    }
    return c;
}

namespace config_detail {

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    auto res = std::from_chars(first, s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError(key + ": expected a number, got '" + raw + "'");
    return v;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        // Accept integral values written in exponent form, e.g. 5e4.
        double d = parse_double(key, raw);
        if (!(d >= 0.0) || d != std::floor(d) || d > 1.8e19)
            throw ConfigError(key + ": expected a non-negative integer, got '" + raw + "'");
        return static_cast<std::uint64_t>(d);
    }
    return v;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& raw) {
    std::vector<double> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(parse_double(key, item));
    }
    return out;
}

inline std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += format_double(v[i]);
    }
    return s;
}

/// Reads one section, rejecting keys it does not know.
class Section {
public:
    Section(std::string name, const boost::property_tree::ptree* tree, std::set<std::string> allowed)
        : name_(std::move(name)), tree_(tree) {
        if (!tree_) return;
        for (const auto& [k, v] : *tree_) {
            if (!allowed.count(k)) throw ConfigError(name_ + "." + k + ": unknown key");
            if (!v.empty()) throw ConfigError(name_ + "." + k + ": nested values are not allowed");
        }
    }

    bool present() const { return tree_ != nullptr; }
    std::string path(const std::string& key) const { return name_ + "." + key; }

    std::optional<std::string> raw(const std::string& key) const {
        if (!tree_) return std::nullopt;
        if (auto v = tree_->get_optional<std::string>(key)) return trim(*v);
        return std::nullopt;
    }
    std::optional<double> number(const std::string& key) const {
        if (auto r = raw(key)) return parse_double(path(key), *r);
        return std::nullopt;
    }
    std::optional<std::uint64_t> count(const std::string& key) const {
        if (auto r = raw(key)) return parse_uint(path(key), *r);
        return std::nullopt;
    }

private:
    std::string name_;
    const boost::property_tree::ptree* tree_;
};

inline std::pair<std::vector<double>, std::vector<double>> read_table(const std::string& key,
                                                                      const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(key + ": cannot open potential table '" + file.string() + "'");
    std::vector<double> xs, vs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto comma = t.find(',');
        if (comma == std::string::npos) throw ConfigError(key + ": line " + std::to_string(lineno) + " needs 'x,V'");
        const std::string a = t.substr(0, comma);
        const std::string b = t.substr(comma + 1);
        // Skip a header row.
        if (xs.empty() && vs.empty() && lineno == 1 && a.find_first_of("0123456789") == std::string::npos) continue;
        xs.push_back(parse_double(key, a));
        vs.push_back(parse_double(key, b));
    }
    return {xs, vs};
}

}  // namespace config_detail

/**
 * Parses the INI-style run description. Paths of table files are resolved against
 * `base_dir`. Every problem is reported as a ConfigError naming its `section.key`.
 */
inline RunConfig parse_config(std::istream& text, const std::filesystem::path& base_dir = ".") {
    using namespace config_detail;
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::read_ini(text, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    static const std::set<std::string> known_sections{"params", "potential", "hardliners", "grid",
                                                      "solver", "sim",       "sweep",      "analysis",
                                                      "output"};
    for (const auto& [name, sub] : pt) {
        if (!known_sections.count(name)) throw ConfigError(name + ": unknown section");
        if (sub.empty() && !sub.data().empty()) throw ConfigError(name + ": keys must live inside a section");
    }
    auto child = [&](const char* name) -> const boost::property_tree::ptree* {
        auto it = pt.find(name);
        return it == pt.not_found() ? nullptr : &it->second;
    };

    RunConfig cfg;

    const Section pot("potential", child("potential"),
                      {"form", "well_height", "well_position", "domain_half_width", "table", "table_x", "table_v"});
    const double L = pot.number("domain_half_width").value_or(2.0);
    const std::string form = pot.raw("form").value_or("quartic");
    if (form == "quartic") {
        if (pot.raw("table") || pot.raw("table_x") || pot.raw("table_v"))
            throw ConfigError("potential.table: only valid with form = tabulated");
        cfg.potential = PotentialSpec::quartic(pot.number("well_height").value_or(1.0),
                                               pot.number("well_position").value_or(1.0), L);
    } else if (form == "tabulated") {
        if (pot.raw("well_height") || pot.raw("well_position"))
            throw ConfigError("potential.well_height: only valid with form = quartic");
        TabulatedWell t;
        if (auto file = pot.raw("table")) {
            if (pot.raw("table_x") || pot.raw("table_v"))
                throw ConfigError("potential.table: give either a table file or table_x/table_v");
            std::filesystem::path p(*file);
            if (p.is_relative()) p = base_dir / p;
            std::tie(t.xs, t.vs) = read_table("potential.table", p);
        } else {
            t.xs = parse_list("potential.table_x", pot.raw("table_x").value_or(""));
            t.vs = parse_list("potential.table_v", pot.raw("table_v").value_or(""));
        }
        cfg.potential = PotentialSpec(t, L);
    } else {
        throw ConfigError("potential.form: expected 'quartic' or 'tabulated', got '" + form + "'");
    }

    const Section par("params", child("params"), {"mu", "sigma", "kappa", "epsilon", "n_total", "alpha_rate", "dt"});
    ModelParamsInput in;
    in.mu = par.number("mu");
    in.alpha_rate = par.number("alpha_rate");
    if (!in.mu && !in.alpha_rate) in.mu = 1.0;
    in.sigma = par.number("sigma").value_or(in.sigma);
    in.kappa = par.number("kappa").value_or(in.kappa);
    in.epsilon = par.number("epsilon").value_or(in.epsilon);
    in.n_total = par.number("n_total").value_or(in.n_total);
    in.dt = par.number("dt").value_or(in.dt);
    cfg.params = ModelParams::make(in);
    cfg.params.check_domain(cfg.potential.half_width());

    const Section hard("hardliners", child("hardliners"),
                       {"ratio", "center_left", "center_right", "spread", "spread_kind"});
    if (hard.present()) {
        HardlinerConfig h;
        h.ratio = hard.number("ratio").value_or(0.0);
        h.center_left = hard.number("center_left");
        h.center_right = hard.number("center_right");
        h.spread = hard.number("spread").value_or(h.spread);
        const std::string kind = hard.raw("spread_kind").value_or("variance");
        if (kind == "variance") h.spread_kind = SpreadKind::Variance;
        else if (kind == "std") h.spread_kind = SpreadKind::StdDev;
        else throw ConfigError("hardliners.spread_kind: expected 'variance' or 'std', got '" + kind + "'");
        cfg.hardliners = h;
        (void)cfg.hardliner_spec();
    }

    const Section grid("grid", child("grid"), {"cells"});
    cfg.grid.cells = grid.count("cells").value_or(cfg.grid.cells);
    (void)cfg.belief_grid();

    const Section solver("solver", child("solver"), {"tol", "max_iter", "hardliner_form"});
    cfg.solver.tol = solver.number("tol").value_or(cfg.solver.tol);
    if (!(cfg.solver.tol > 0.0)) throw ConfigError("solver.tol: must be > 0");
    cfg.solver.max_iter = solver.count("max_iter").value_or(cfg.solver.max_iter);
    if (cfg.solver.max_iter == 0) throw ConfigError("solver.max_iter: must be >= 1");
    const std::string hf = solver.raw("hardliner_form").value_or("approximate");
    if (hf == "approximate") cfg.solver.hardliner_form = HardlinerForm::Approximate;
    else if (hf == "exact") cfg.solver.hardliner_form = HardlinerForm::Exact;
    else throw ConfigError("solver.hardliner_form: expected 'approximate' or 'exact', got '" + hf + "'");

    const Section sim("sim", child("sim"),
                      {"particles", "steps", "seeds", "seed", "snapshot_every", "bins", "bandwidth",
                       "tail_fraction", "initial_std", "hardliner_particles"});
    auto& s = cfg.sim;
    s.particles = sim.count("particles").value_or(s.particles);
    s.steps = sim.count("steps").value_or(s.steps);
    s.seeds = sim.count("seeds").value_or(s.seeds);
    s.seed = sim.count("seed").value_or(s.seed);
    s.snapshot_every = sim.count("snapshot_every").value_or(s.snapshot_every);
    s.bins = sim.count("bins").value_or(s.bins);
    s.bandwidth = sim.number("bandwidth").value_or(s.bandwidth);
    s.tail_fraction = sim.number("tail_fraction").value_or(s.tail_fraction);
    s.initial_std = sim.number("initial_std").value_or(s.initial_std);
    s.hardliner_particles = sim.count("hardliner_particles").value_or(s.hardliner_particles);
    if (s.particles == 0) throw ConfigError("sim.particles: must be >= 1");
    if (s.seeds == 0) throw ConfigError("sim.seeds: must be >= 1");
    if (s.bins < 16 || s.bins % 2) throw ConfigError("sim.bins: need an even count >= 16");
    if (s.bandwidth < 0.0) throw ConfigError("sim.bandwidth: must be >= 0");
    {
        const double bw = s.bandwidth > 0.0 ? s.bandwidth : 0.5 * cfg.params.epsilon();
        const double bin_width = 2.0 * L / static_cast<double>(s.bins);
        if (bw < bin_width * (1.0 - 1e-12)) throw ConfigError("sim.bandwidth: must be >= bin width");
    }
    if (!(s.tail_fraction > 0.0 && s.tail_fraction <= 1.0)) throw ConfigError("sim.tail_fraction: must be in (0, 1]");
    if (s.initial_std < 0.0) throw ConfigError("sim.initial_std: must be >= 0");
    if (cfg.params.alpha_step() > 1.0)
        throw ConfigError("params.dt: alpha_rate * dt = " + format_double(cfg.params.alpha_step()) + " exceeds 1");

    const Section sw("sweep", child("sweep"), {"axis", "values", "solver"});
    if (sw.present()) {
        SweepConfig c;
        c.axis = sw.raw("axis").value_or("");
        if (!sweep_axes().count(c.axis))
            throw ConfigError("sweep.axis: unknown axis '" + c.axis + "' (expected N, sigma, mu, kappa or ratio)");
        c.values = parse_list("sweep.values", sw.raw("values").value_or(""));
        const std::string solver_name = sw.raw("solver").value_or("pde");
        if (solver_name == "pde") c.solver = SolverKind::Pde;
        else if (solver_name == "particle") c.solver = SolverKind::Particle;
        else throw ConfigError("sweep.solver: expected 'pde' or 'particle', got '" + solver_name + "'");
        cfg.sweep = c;
    }

    const Section an("analysis", child("analysis"), {"prominence"});
    cfg.analysis.prominence = an.number("prominence").value_or(cfg.analysis.prominence);
    if (!(cfg.analysis.prominence >= 0.0 && cfg.analysis.prominence < 1.0))
        throw ConfigError("analysis.prominence: must be in [0, 1)");

    const Section out("output", child("output"), {"dir"});
    cfg.output_dir = out.raw("dir").value_or(cfg.output_dir);
    return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
    return parse_config(in, path.parent_path());
}

/// Every value is written explicitly, so parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
    using config_detail::format_double;
    using config_detail::join;
    std::ostringstream os;
    const auto& p = c.params;
    os << "[params]\n"
       << "mu = " << format_double(p.mu()) << "\n"
       << "alpha_rate = " << format_double(p.alpha_rate()) << "\n"
       << "sigma = " << format_double(p.sigma()) << "\n"
       << "kappa = " << format_double(p.kappa()) << "\n"
       << "epsilon = " << format_double(p.epsilon()) << "\n"
       << "n_total = " << format_double(p.n_total()) << "\n"
       << "dt = " << format_double(p.dt()) << "\n\n";

    os << "[potential]\n";
    if (auto* q = std::get_if<QuarticWell>(&c.potential.form())) {
        os << "form = quartic\n"
           << "well_height = " << format_double(q->height) << "\n"
           << "well_position = " << format_double(q->position) << "\n";
    } else {
        const auto& t = std::get<TabulatedWell>(c.potential.form());
        os << "form = tabulated\n"
           << "table_x = " << join(t.xs) << "\n"
           << "table_v = " << join(t.vs) << "\n";
    }
    os << "domain_half_width = " << format_double(c.potential.half_width()) << "\n\n";

    if (c.hardliners) {
        const auto& h = *c.hardliners;
        os << "[hardliners]\n"
           << "ratio = " << format_double(h.ratio) << "\n";
        if (h.center_left) os << "center_left = " << format_double(*h.center_left) << "\n";
        if (h.center_right) os << "center_right = " << format_double(*h.center_right) << "\n";
        os << "spread = " << format_double(h.spread) << "\n"
           << "spread_kind = " << (h.spread_kind == SpreadKind::Variance ? "variance" : "std") << "\n\n";
    }

    os << "[grid]\ncells = " << c.grid.cells << "\n\n";
    os << "[solver]\n"
       << "tol = " << format_double(c.solver.tol) << "\n"
       << "max_iter = " << c.solver.max_iter << "\n"
       << "hardliner_form = " << (c.solver.hardliner_form == HardlinerForm::Exact ? "exact" : "approximate")
       << "\n\n";

    const auto& s = c.sim;
    os << "[sim]\n"
       << "particles = " << s.particles << "\n"
       << "steps = " << s.steps << "\n"
       << "seeds = " << s.seeds << "\n"
       << "seed = " << s.seed << "\n"
       << "snapshot_every = " << s.snapshot_every << "\n"
       << "bins = " << s.bins << "\n"
       << "bandwidth = " << format_double(s.bandwidth) << "\n"
       << "tail_fraction = " << format_double(s.tail_fraction) << "\n"
       << "initial_std = " << format_double(s.initial_std) << "\n"
       << "hardliner_particles = " << s.hardliner_particles << "\n\n";

    if (c.sweep) {
        os << "[sweep]\n"
           << "axis = " << c.sweep->axis << "\n"
           << "values = " << join(c.sweep->values) << "\n"
           << "solver = " << (c.sweep->solver == SolverKind::Particle ? "particle" : "pde") << "\n\n";
    }
    os << "[analysis]\nprominence = " << format_double(c.analysis.prominence) << "\n\n";
    os << "[output]\ndir = " << c.output_dir << "\n";
    return os.str();
}

}  // namespace driftlab
