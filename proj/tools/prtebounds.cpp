// Command-line front end: bounds, table reproductions and coverage runs.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <prtebounds/prtebounds.hpp>
#include <prtebounds/tables.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitFailure = 3;

const char* kFooter = R"(Exit codes: 0 success, 2 invalid input or configuration, 3 solver failure
or a table cell that does not reproduce.

bounds writes a JSON array, one record per grid cell in the order
method, target, restrictions, dgp, v_dim, sigma:
  {"method": str, "target": str, "sigma": num, "v_dim": int,
   "restrictions": str, "status": "Bounded"|"Empty"|"Unbounded",
   "lower": num|null, "upper": num|null}

mc writes CSV with header
  n,sigma,v_dim,target,coverage,mean_width,failures,M,seed
one row per (dgp, v_dim, sigma, target, n). coverage counts replications whose
confidence interval contains the population interval; failed replications are
left out of the denominator and reported in `failures`.

tables prints a plain-text diff against the embedded reference values.

Config files are INI with sections [dgp], [target], [method], [inference].
Keys follow the library field names, for example
  [dgp]        treatment_model = local   v_dim = 1   sigma = 0.1,0.5
  [target]     kind = ate   v_lo = 0   v_hi = 1   x_star = 0,1
  [method]     name = cvr   restrictions = r3   v_dim_assumed = 1
               (or mtr, mtr_mean, mts, stochastic_monotone, deterministic_monotone = true)
  [inference]  n = 1000   replications = 200   alpha = 0.05   seed = 1   mu = 0.01   jobs = 4
Comma lists form a grid. Command-line flags override the file.)";

struct Grid {
    std::vector<std::string> methods{"cvr"};
    std::vector<std::string> targets{"ate"};
    std::vector<std::string> models{"local"};
    std::vector<int> v_dims{1};
    std::vector<double> sigmas{0.1};
    std::vector<std::string> restrictions{"none"};
    std::optional<int> assumed_vdim;
    double v_lo = 0.0, v_hi = 1.0;
    std::vector<int> x_star;
    std::vector<std::size_t> ns{1000};
    std::size_t replications = 200;
    double alpha = 0.05;
    std::optional<double> mu;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    std::size_t sample_size = 0;  // 0 means population moments
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    boost::split(out, s, boost::is_any_of(","));
    for (auto& t : out) boost::trim(t);
    std::erase_if(out, [](const std::string& t) { return t.empty(); });
    if (out.empty()) throw prte::ValidationError("empty list '" + s + "'");
    return out;
}

template <class T>
T parse_value(const std::string& s, const std::string& key) {
    std::istringstream is(s);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) throw prte::ValidationError("bad value '" + s + "' for " + key);
    return v;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const std::string& key) {
    std::vector<T> out;
    for (const auto& t : split_list(s)) out.push_back(parse_value<T>(t, key));
    return out;
}

bool parse_bool(const std::string& s, const std::string& key) {
    const std::string v = boost::to_lower_copy(boost::trim_copy(s));
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw prte::ValidationError("bad boolean '" + s + "' for " + key);
}

void load_config(const std::string& path, Grid& grid) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
        throw prte::ValidationError(std::string("config: ") + e.what());
    }
    static const std::set<std::string> restriction_keys{"mtr", "mtr_mean", "mts", "stochastic_monotone",
                                                        "deterministic_monotone"};
    prte::RestrictionSet flags;
    bool any_flag = false;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw prte::ValidationError("config: key '" + section + "' outside a section");
        for (const auto& [key, node] : body) {
            const std::string v = node.data();
            const std::string where = section + "." + key;
            if (section == "dgp") {
                if (key == "treatment_model") grid.models = split_list(v);
                else if (key == "v_dim") grid.v_dims = parse_list<int>(v, where);
                else if (key == "sigma") grid.sigmas = parse_list<double>(v, where);
                else throw prte::ValidationError("config: unknown key " + where);
            } else if (section == "target") {
                if (key == "kind") grid.targets = split_list(v);
                else if (key == "v_lo") grid.v_lo = parse_value<double>(v, where);
                else if (key == "v_hi") grid.v_hi = parse_value<double>(v, where);
                else if (key == "x_star") grid.x_star = parse_list<int>(v, where);
                else throw prte::ValidationError("config: unknown key " + where);
            } else if (section == "method") {
                if (key == "name") grid.methods = split_list(v);
                else if (key == "restrictions") grid.restrictions = split_list(v);
                else if (key == "v_dim_assumed") grid.assumed_vdim = parse_value<int>(v, where);
                else if (restriction_keys.count(key)) {
                    any_flag = true;
                    const bool on = parse_bool(v, where);
                    if (key == "mtr") flags.mtr = on;
                    else if (key == "mtr_mean") flags.mtr_mean = on;
                    else if (key == "mts") flags.mts = on;
                    else if (key == "stochastic_monotone") flags.stochastic_monotone = on;
                    else flags.deterministic_monotone = on;
                } else throw prte::ValidationError("config: unknown key " + where);
            } else if (section == "inference") {
                if (key == "n") grid.ns = parse_list<std::size_t>(v, where);
                else if (key == "replications") grid.replications = parse_value<std::size_t>(v, where);
                else if (key == "alpha") grid.alpha = parse_value<double>(v, where);
                else if (key == "seed") grid.seed = parse_value<std::uint64_t>(v, where);
                else if (key == "mu") grid.mu = parse_value<double>(v, where);
                else if (key == "jobs") grid.jobs = parse_value<unsigned>(v, where);
                else if (key == "sample_size") grid.sample_size = parse_value<std::size_t>(v, where);
                else throw prte::ValidationError("config: unknown key " + where);
            } else {
                throw prte::ValidationError("config: unknown section [" + section + "]");
            }
        }
    }
    if (any_flag) {
        if (tree.get_child_optional("method.restrictions")) {
            throw prte::ValidationError("config: give either method.restrictions or the individual flags");
        }
        grid.restrictions = {flags.name()};
    }
}

prte::TargetSpec make_target(const Grid& grid, const std::string& name) {
    prte::TargetSpec t;
    t.kind = prte::parse_target_kind(name);
    t.v_lo = grid.v_lo;
    t.v_hi = grid.v_hi;
    t.x_star = grid.x_star;
    return t;
}

void check_design(const prte::DgpSpec& g, const prte::TargetSpec& t) {
    prte::ValidationReport r;
    r.merge(prte::dgp_violations(g));
    r.merge(prte::instrument_violations(g.instruments));
    r.merge(prte::target_violations(t, g.instruments));
    if (!r.ok()) throw prte::ValidationError(boost::join(r.violations, "; "));
}

void check_grid(const Grid& grid) {
    for (const auto& m : grid.methods) {
        if (m != "cvr" && m != "mst" && m != "manski" && m != "hv") {
            throw prte::ValidationError("unknown method '" + m + "'");
        }
    }
    for (const auto& t : grid.targets) {
        const auto kind = prte::parse_target_kind(t);
        for (const auto& m : grid.methods) {
            if ((m == "manski" || m == "hv") && kind != prte::TargetKind::ATE) {
                throw prte::ValidationError(m + " bounds are only defined for the ATE");
            }
        }
    }
    for (const auto& r : grid.restrictions) (void)prte::RestrictionSet::parse(r);
    for (const auto& m : grid.models) (void)prte::parse_treatment_model(m);
    for (int k : grid.v_dims) {
        if (k != 1 && k != 2) throw prte::ValidationError("v_dim must be 1 or 2");
    }
    if (grid.assumed_vdim && *grid.assumed_vdim < 1) throw prte::ValidationError("assumed V dimension must be >= 1");
    if (!(grid.alpha > 0.0 && grid.alpha < 0.5)) throw prte::ValidationError("alpha must lie in (0, 0.5)");
    if (grid.mu && *grid.mu < 0.0) throw prte::ValidationError("mu must be nonnegative");
    if (grid.jobs < 1) throw prte::ValidationError("jobs must be at least 1");
}

void emit(const std::optional<std::string>& path, const std::string& text) {
    if (!path) {
        std::cout << text;
        return;
    }
    std::ofstream os(*path, std::ios::binary);
    if (!os) throw prte::ValidationError("cannot open output file " + *path);
    os << text;
}

struct BoundsCell {
    std::string method, target, restrictions, model;
    int v_dim = 1;
    double sigma = 0.0;
};

int cmd_bounds(const Grid& grid, const std::optional<std::string>& output) {
    check_grid(grid);
    std::vector<BoundsCell> cells;
    for (const auto& m : grid.methods)
        for (const auto& t : grid.targets)
            for (const auto& r : grid.restrictions)
                for (const auto& model : grid.models)
                    for (int k : grid.v_dims)
                        for (double s : grid.sigmas) cells.push_back({m, t, r, model, k, s});

    // validate every design before any solve
    for (const auto& c : cells) {
        check_design(prte::make_design(prte::parse_treatment_model(c.model), c.v_dim, c.sigma),
                     make_target(grid, c.target));
    }

    std::vector<prte::BoundsRecord> records(cells.size());
    prte::MomentCache cache;
    prte::parallel_for(cells.size(), grid.jobs, [&](std::size_t i) {
        const BoundsCell& c = cells[i];
        const prte::DgpSpec g = prte::make_design(prte::parse_treatment_model(c.model), c.v_dim, c.sigma);
        prte::ProblemOptions opts;
        opts.target = make_target(grid, c.target);
        opts.restrictions = prte::RestrictionSet::parse(c.restrictions);
        opts.v_dim_assumed = grid.assumed_vdim.value_or(c.v_dim);
        const prte::MomentSet moments =
            grid.sample_size > 0
                ? prte::sample_moments(prte::sample(g, grid.sample_size, grid.seed), g.instruments.size())
                : cache.get(g);
        prte::BoundsRecord& rec = records[i];
        rec.method = c.method;
        rec.target = prte::target_name(opts.target.kind);
        rec.sigma = c.sigma;
        rec.v_dim = c.v_dim;
        rec.restrictions = opts.restrictions.name();
        if (c.method == "cvr") rec.result = prte::cvr_bounds(g.instruments, moments, opts);
        else if (c.method == "mst") rec.result = prte::mst_bounds(g.instruments, moments, opts);
        else if (c.method == "manski") rec.result = prte::manski_bounds(moments);
        else rec.result = prte::hv_bounds(moments);
    });
    emit(output, prte::to_json(records).dump(2) + "\n");
    return kExitOk;
}

int cmd_tables(int id, unsigned jobs, const std::optional<std::string>& output) {
    const auto cells = prte::compute_table(id, jobs);
    std::ostringstream os;
    prte::write_table_report(os, id, cells);
    emit(output, os.str());
    return prte::all_pass(cells) ? kExitOk : kExitFailure;
}

int cmd_mc(const Grid& grid, const std::optional<std::string>& output) {
    check_grid(grid);
    if (grid.replications < 1) throw prte::ValidationError("replications must be at least 1");
    const prte::RestrictionSet restrictions = prte::RestrictionSet::parse(grid.restrictions.front());
    if (grid.restrictions.size() > 1) throw prte::ValidationError("mc takes a single restriction set");
    std::vector<prte::CoverageReport> rows;
    for (const auto& model : grid.models)
        for (int k : grid.v_dims)
            for (double s : grid.sigmas)
                for (const auto& t : grid.targets) {
                    const prte::DgpSpec g = prte::make_design(prte::parse_treatment_model(model), k, s);
                    prte::ProblemOptions opts;
                    opts.target = make_target(grid, t);
                    opts.restrictions = restrictions;
                    opts.v_dim_assumed = grid.assumed_vdim.value_or(k);
                    check_design(g, opts.target);
                    for (std::size_t n : grid.ns) {
                        prte::CoverageOptions co;
                        co.n = n;
                        co.replications = grid.replications;
                        co.alpha = grid.alpha;
                        co.seed = grid.seed;
                        co.jobs = grid.jobs;
                        co.mu = grid.mu;
                        rows.push_back(prte::coverage_experiment(g, opts, co));
                        const auto& r = rows.back();
                        std::cerr << "mc " << model << " v_dim=" << k << " sigma=" << s << " target=" << r.target
                                  << " n=" << n << ": coverage " << r.coverage << " of " << (r.M - r.failures)
                                  << " replications (" << r.failures << " failed), mean width " << r.mean_width
                                  << ", population [" << r.population_lower << ", " << r.population_upper << "]\n";
                    }
                }
    std::ostringstream os;
    prte::write_coverage_csv(os, rows);
    emit(output, os.str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bounds on policy relevant treatment effects without monotone selection"};
    app.footer(kFooter);
    app.require_subcommand(1);

    Grid grid;
    std::optional<std::string> config, output;
    std::string methods, targets, models, vdims, sigmas, restrictions, ns;
    int table_id = 0;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    std::optional<int> assumed_vdim;
    std::optional<double> v_lo, v_hi, alpha, mu;
    std::optional<std::size_t> sample_size, replications;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "INI configuration file")->check(CLI::ExistingFile);
        sub->add_option("--output", output, "write results here instead of stdout");
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    };
    auto add_grid = [&](CLI::App* sub) {
        add_common(sub);
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--target", targets, "targets, comma separated (ate, prte, att, atu, late, ...)");
        sub->add_option("--dgp", models, "treatment models: local, random");
        sub->add_option("--vdim", vdims, "true dimension of V: 1, 2");
        sub->add_option("--sigma", sigmas, "selection noise levels");
        sub->add_option("--restrictions", restrictions, "none, r1, r2, r3 or a list of mtr, mtr-mean, mts, ...");
        sub->add_option("--assumed-vdim", assumed_vdim, "V dimension assumed by the relaxation");
        sub->add_option("--v-lo", v_lo, "lower end of the LATE interval");
        sub->add_option("--v-hi", v_hi, "upper end of the LATE interval");
    };

    CLI::App* bounds = app.add_subcommand("bounds", "population (or simulated-sample) bounds over a grid");
    add_grid(bounds);
    bounds->add_option("--method", methods, "cvr, mst, manski, hv");
    bounds->add_option("--sample-size", sample_size, "use moments of a simulated sample of this size");

    CLI::App* tables = app.add_subcommand("tables", "reproduce a reference table and diff it");
    tables->add_option("id", table_id, "table id")->required()->check(CLI::Range(3, 10));
    tables->add_option("--output", output, "write the report here instead of stdout");
    tables->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    CLI::App* mc = app.add_subcommand("mc", "Monte Carlo coverage of the confidence interval");
    add_grid(mc);
    mc->add_option("--n", ns, "sample sizes");
    mc->add_option("--replications,-M", replications, "replications per design");
    mc->add_option("--alpha", alpha, "one minus the confidence level");
    mc->add_option("--mu", mu, "fixed regularization weight (default: data driven)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (tables->parsed()) return cmd_tables(table_id, jobs, output);

        CLI::App* sub = bounds->parsed() ? bounds : mc;
        if (config) load_config(*config, grid);
        // flags given on the command line win over the config file
        if (sub->count("--target")) grid.targets = split_list(targets);
        if (sub->count("--dgp")) grid.models = split_list(models);
        if (sub->count("--vdim")) grid.v_dims = parse_list<int>(vdims, "--vdim");
        if (sub->count("--sigma")) grid.sigmas = parse_list<double>(sigmas, "--sigma");
        if (sub->count("--restrictions")) grid.restrictions = split_list(restrictions);
        if (sub->count("--seed")) grid.seed = seed;
        if (sub->count("--jobs")) grid.jobs = jobs;
        if (assumed_vdim) grid.assumed_vdim = assumed_vdim;
        if (v_lo) grid.v_lo = *v_lo;
        if (v_hi) grid.v_hi = *v_hi;
        if (sample_size) grid.sample_size = *sample_size;
        if (replications) grid.replications = *replications;
        if (alpha) grid.alpha = *alpha;
        if (mu) grid.mu = mu;
        if (sub == bounds) {
            if (sub->count("--method")) grid.methods = split_list(methods);
            return cmd_bounds(grid, output);
        }
        if (sub->count("--n")) grid.ns = parse_list<std::size_t>(ns, "--n");
        return cmd_mc(grid, output);
    } catch (const prte::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const prte::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return kExitFailure;
    }
}
