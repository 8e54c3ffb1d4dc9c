#include "sfdg/config.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace sfdg {

using nlohmann::json;

std::string to_string(Backend b) { return b == Backend::matrix_free ? "matrix-free" : "matrix-based"; }

Backend backend_from_string(const std::string& s) {
    if (s == "matrix-free")
        return Backend::matrix_free;
    if (s == "matrix-based")
        return Backend::matrix_based;
    throw ConfigError("unknown backend '" + s + "' (expected matrix-free or matrix-based)");
}

namespace {

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object())
            throw ConfigError(where() + ": expected an object");
    }
    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions() > 0)
            return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError("unknown key '" + it.key() + "' at " + path_ + "/" + it.key());
    }

    const json* get(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    std::string child(const std::string& key) const { return path_ + "/" + key; }

    template <class T>
    void number(const std::string& key, T& out) {
        const json* v = get(key);
        if (!v)
            return;
        if constexpr (std::is_integral_v<T>) {
            if (!v->is_number_integer())
                throw ConfigError(child(key) + ": expected an integer");
            out = v->get<T>();
        } else {
            if (!v->is_number())
                throw ConfigError(child(key) + ": expected a number");
            out = v->get<T>();
        }
    }
    void boolean(const std::string& key, bool& out) {
        const json* v = get(key);
        if (!v)
            return;
        if (!v->is_boolean())
            throw ConfigError(child(key) + ": expected a boolean");
        out = v->get<bool>();
    }
    void string(const std::string& key, std::string& out) {
        const json* v = get(key);
        if (!v)
            return;
        if (!v->is_string())
            throw ConfigError(child(key) + ": expected a string");
        out = v->get<std::string>();
    }
    template <class T>
    void list(const std::string& key, std::vector<T>& out, std::size_t min_len, std::size_t max_len) {
        const json* v = get(key);
        if (!v)
            return;
        if (!v->is_array() || v->size() < min_len || v->size() > max_len)
            throw ConfigError(child(key) + ": expected an array of " + std::to_string(min_len) + ".." +
                              std::to_string(max_len) + " numbers");
        out.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            const json& e = (*v)[i];
            if (std::is_integral_v<T> ? !e.is_number_integer() : !e.is_number())
                throw ConfigError(child(key) + "/" + std::to_string(i) + ": expected a number");
            out.push_back(e.get<T>());
        }
    }
    const json& raw() const { return j_; }
    std::string where() const { return path_.empty() ? "/" : path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class Fn>
void section(Reader& parent, const std::string& key, Fn&& fn) {
    const json* v = parent.get(key);
    if (!v)
        return;
    Reader r(*v, parent.child(key));
    fn(r);
}

void read_custom(Reader& r, CustomCoefficients& c) {
    if (const json* v = r.get("diffusion")) {
        const std::string p = r.child("diffusion");
        if (!v->is_array() || v->size() < 2 || v->size() > 3)
            throw ConfigError(p + ": expected a 2x2 or 3x3 array");
        c.diffusion = {};
        for (std::size_t i = 0; i < v->size(); ++i) {
            const json& row = (*v)[i];
            if (!row.is_array() || row.size() != v->size())
                throw ConfigError(p + "/" + std::to_string(i) + ": expected a row of " + std::to_string(v->size()));
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (!row[j].is_number())
                    throw ConfigError(p + "/" + std::to_string(i) + "/" + std::to_string(j) + ": expected a number");
                c.diffusion[i][j] = row[j].get<double>();
            }
        }
    }
    std::vector<double> b;
    r.list("velocity", b, 2, 3);
    if (!b.empty()) {
        c.velocity = {0, 0, 0};
        for (std::size_t i = 0; i < b.size(); ++i)
            c.velocity[i] = b[i];
    }
    r.number("reaction", c.reaction);
    r.number("source", c.source);
    r.number("dirichlet", c.dirichlet);
    r.number("neumann", c.neumann);
    r.number("quad_order_offset", c.quad_order_offset);
}

json write_custom(const CustomCoefficients& c, int d) {
    json j;
    json dm = json::array();
    for (int i = 0; i < d; ++i) {
        json row = json::array();
        for (int k = 0; k < d; ++k)
            row.push_back(c.diffusion[i][k]);
        dm.push_back(row);
    }
    j["diffusion"] = dm;
    json b = json::array();
    for (int i = 0; i < d; ++i)
        b.push_back(c.velocity[i]);
    j["velocity"] = b;
    j["reaction"] = c.reaction;
    j["source"] = c.source;
    j["dirichlet"] = c.dirichlet;
    j["neumann"] = c.neumann;
    j["quad_order_offset"] = c.quad_order_offset;
    return j;
}

std::string line_context(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

} // namespace

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config syntax error at " + line_context(text, e.byte > 0 ? e.byte - 1 : 0) + ": " +
                          e.what());
    }
    RunConfig c;
    {
        Reader root(j, "");
        section(root, "mesh", [&](Reader& r) {
            r.number("dim", c.mesh.dim);
            std::vector<index_t> cells;
            r.list("cells", cells, 1, 3);
            if (!cells.empty()) {
                c.mesh.cells = {1, 1, 1};
                for (std::size_t i = 0; i < cells.size(); ++i)
                    c.mesh.cells[i] = cells[i];
                if (cells.size() == 1)
                    c.mesh.cells = {cells[0], cells[0], cells[0]};
            }
            r.number("perturbation", c.mesh.perturbation);
        });
        section(root, "problem", [&](Reader& r) {
            r.string("id", c.problem.id);
            section(r, "custom", [&](Reader& q) { read_custom(q, c.problem.custom); });
        });
        section(root, "discretization", [&](Reader& r) {
            r.number("degree", c.discretization.degree);
            r.number("quad_points", c.discretization.quad_points);
            r.number("alpha", c.discretization.alpha);
        });
        section(root, "time", [&](Reader& r) {
            std::string s = to_string(c.time.scheme);
            r.string("scheme", s);
            try {
                c.time.scheme = scheme_from_string(s);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(r.child("scheme") + ": " + e.what());
            }
            r.number("dt", c.time.dt);
            r.number("courant", c.time.courant);
            r.number("steps", c.time.steps);
            r.number("diagnostics_every", c.time.diagnostics_every);
            r.number("snapshot_every", c.time.snapshot_every);
        });
        section(root, "execution", [&](Reader& r) {
            r.number("threads", c.execution.threads);
            std::string b = to_string(c.execution.backend);
            r.string("backend", b);
            try {
                c.execution.backend = backend_from_string(b);
            } catch (const ConfigError& e) {
                throw ConfigError(r.child("backend") + ": " + e.what());
            }
            r.boolean("pin", c.execution.pin);
            r.number("matrix_cap_bytes", c.execution.matrix_cap_bytes);
        });
        section(root, "bench", [&](Reader& r) {
            r.list("degrees", c.bench.degrees, 1, 32);
            r.number("dof_budget", c.bench.dof_budget);
            r.number("reps", c.bench.reps);
            r.number("warmup", c.bench.warmup);
        });
        section(root, "output", [&](Reader& r) {
            r.string("dir", c.output.dir);
            r.string("prefix", c.output.prefix);
        });
    }
    c.validate();
    const int d = c.mesh.dim;
    for (int k = d; k < kMaxDim; ++k) {
        c.mesh.cells[k] = 1;
        c.problem.custom.velocity[k] = 0.0;
        for (int i = 0; i < kMaxDim; ++i)
            c.problem.custom.diffusion[k][i] = c.problem.custom.diffusion[i][k] = 0.0;
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
    json j = json::object();
    const int d = c.mesh.dim;
    json cells = json::array();
    for (int i = 0; i < d; ++i)
        cells.push_back(c.mesh.cells[i]);
    j["mesh"] = {{"dim", d}, {"cells", cells}, {"perturbation", c.mesh.perturbation}};
    j["problem"] = {{"id", c.problem.id}, {"custom", write_custom(c.problem.custom, d)}};
    j["discretization"] = {{"degree", c.discretization.degree},
                           {"quad_points", c.discretization.quad_points},
                           {"alpha", c.discretization.alpha}};
    j["time"] = {{"scheme", to_string(c.time.scheme)},
                 {"dt", c.time.dt},
                 {"courant", c.time.courant},
                 {"steps", c.time.steps},
                 {"diagnostics_every", c.time.diagnostics_every},
                 {"snapshot_every", c.time.snapshot_every}};
    j["execution"] = {{"threads", c.execution.threads},
                      {"backend", to_string(c.execution.backend)},
                      {"pin", c.execution.pin},
                      {"matrix_cap_bytes", c.execution.matrix_cap_bytes}};
    j["bench"] = {{"degrees", c.bench.degrees},
                  {"dof_budget", c.bench.dof_budget},
                  {"reps", c.bench.reps},
                  {"warmup", c.bench.warmup}};
    j["output"] = {{"dir", c.output.dir}, {"prefix", c.output.prefix}};
    return j.dump(2) + "\n";
}

std::uint64_t config_hash(const RunConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : serialize_config(cfg)) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void RunConfig::validate() const {
    if (mesh.dim < 2 || mesh.dim > 3)
        throw ConfigError("/mesh/dim: must be 2 or 3");
    for (int k = 0; k < mesh.dim; ++k)
        if (mesh.cells[k] < 1)
            throw ConfigError("/mesh/cells/" + std::to_string(k) + ": must be positive");
    if (mesh.perturbation >= 0.5)
        throw ConfigError("/mesh/perturbation: must be below 0.5");
    if (!is_known_problem(problem.id))
        throw ConfigError("/problem/id: unknown problem '" + problem.id + "'");
    if (discretization.degree < 0 || discretization.degree > 12)
        throw ConfigError("/discretization/degree: must be in [0,12]");
    if (discretization.quad_points != 0 && discretization.quad_points < discretization.degree + 1)
        throw ConfigError("/discretization/quad_points: must be 0 or at least degree + 1");
    if (discretization.quad_points > 40)
        throw ConfigError("/discretization/quad_points: at most 40");
    if (time.dt < 0.0)
        throw ConfigError("/time/dt: must be non-negative");
    if (!(time.courant > 0.0))
        throw ConfigError("/time/courant: must be positive");
    if (time.steps < 0 || time.diagnostics_every < 0 || time.snapshot_every < 0)
        throw ConfigError("/time: step counts must be non-negative");
    if (execution.threads < 1)
        throw ConfigError("/execution/threads: must be positive");
    if (bench.reps < 1)
        throw ConfigError("/bench/reps: must be positive");
    if (bench.warmup < 1)
        throw ConfigError("/bench/warmup: must be at least 1");
    if (!(bench.dof_budget > 0.0))
        throw ConfigError("/bench/dof_budget: must be positive");
    for (int p : bench.degrees)
        if (p < 0 || p > 12)
            throw ConfigError("/bench/degrees: degrees must be in [0,12]");
    // alpha is checked by the operator
}

Problem make_problem(const RunConfig& cfg) {
    Problem pr = make_problem(cfg.problem.id, cfg.mesh.dim, cfg.mesh.cells, cfg.problem.custom);
    if (cfg.mesh.perturbation >= 0.0 && pr.mesh.geometry == GeometryClass::multilinear)
        pr.mesh.perturbation = cfg.mesh.perturbation;
    return pr;
}

OperatorOptions operator_options(const RunConfig& cfg, const Problem& problem) {
    OperatorOptions o;
    o.degree = cfg.discretization.degree;
    o.quad_points = cfg.discretization.quad_points > 0 ? cfg.discretization.quad_points
                                                       : problem.quad_points(cfg.discretization.degree);
    o.alpha = cfg.discretization.alpha;
    o.threads = cfg.execution.threads;
    return o;
}

} // namespace sfdg
