#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "json.hpp"
#include "ksjko/error.hpp"
#include "ksjko/jko.hpp"
#include "ksjko/reference_fd.hpp"

namespace ksjko::io {

using Json = nlohmann::ordered_json;

struct PotentialConfig {
    std::string type = "quadratic";  ///< quadratic | table
    double lambda0 = 1.0;
    std::string file;  ///< CSV x,W,W_x,W_xx on the model grid, absolute after loading

    bool operator==(const PotentialConfig&) const = default;
};

struct InitialU {
    std::string type = "gaussian";  ///< gaussian | uniform | file
    double mean = 1.0;
    double variance = 1.0;
    double a = -1.0;
    double b = 1.0;
    std::string path;  ///< CSV x,u

    bool operator==(const InitialU&) const = default;
};

struct InitialV {
    std::string type = "zero";  ///< zero | gaussian-bump | file
    double amplitude = 0.0;
    double center = 0.0;
    double width = 1.0;
    std::string path;  ///< CSV x,v

    bool operator==(const InitialV&) const = default;
};

struct EquilibriumConfig {
    double tol = 1e-12;
    int max_iters = 500;
    bool operator==(const EquilibriumConfig&) const = default;
};

struct FdRunConfig {
    double dt = 1e-3;
    std::string flux = "central";  ///< central | upwind
    std::size_t n_cells = 0;      ///< 0: the model grid
    bool operator==(const FdRunConfig&) const = default;
};

struct OutputConfig {
    std::string dir = "out";
    std::size_t stride = 10;
    bool plots = true;
    bool operator==(const OutputConfig&) const = default;
};

/// Everything a run needs; loaded from a JSON config and echoed into summary.json.
struct RunSpec {
    double chi = 0.0;
    double kappa = 1.0;
    PotentialConfig potential;
    double R = 10.0;
    std::size_t n_cells = 800;
    std::size_t N_m = 400;
    InitialU u0;
    InitialV v0;
    double tau = 1e-2;
    double T = 1.0;
    InnerSolverConfig solver;
    EquilibriumConfig equilibrium;
    FdRunConfig fd;
    OutputConfig output;
    std::uint64_t seed = 0;
    std::vector<double> sweep_chi;
    std::size_t check_states = 50;

    bool operator==(const RunSpec&) const = default;
};

/// Levenshtein distance, used for "did you mean" hints.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

namespace detail {

inline std::string join_path(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

[[noreturn]] inline void config_error(const std::string& key, const std::string& message) {
    throw Error(ErrorKind::ConfigError, "'" + key + "': " + message);
}

inline void reject_unknown(const Json& obj, const std::string& prefix, std::initializer_list<std::string_view> allowed) {
    for (const auto& item : obj.items()) {
        const std::string& key = item.key();
        bool known = false;
        std::string_view best;
        std::size_t best_distance = 1000;
        for (auto candidate : allowed) {
            if (candidate == key) known = true;
            const auto d = edit_distance(key, candidate);
            if (d < best_distance) {
                best_distance = d;
                best = candidate;
            }
        }
        if (known) continue;
        std::string message = "unknown key";
        if (best_distance <= 2) message += " (did you mean '" + join_path(prefix, std::string(best)) + "'?)";
        config_error(join_path(prefix, key), message);
    }
}

inline const Json* find(const Json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

inline void read_number(const Json& obj, const std::string& prefix, const char* key, double& out) {
    if (const Json* node = find(obj, key)) {
        if (!node->is_number()) config_error(join_path(prefix, key), "must be a number");
        out = node->get<double>();
        if (!std::isfinite(out)) config_error(join_path(prefix, key), "must be finite");
    }
}

template <class Int>
inline void read_integer(const Json& obj, const std::string& prefix, const char* key, Int& out) {
    if (const Json* node = find(obj, key)) {
        if (!node->is_number_integer()) config_error(join_path(prefix, key), "must be an integer");
        if constexpr (std::is_unsigned_v<Int>) {
            if (node->is_number_unsigned() || node->get<long long>() >= 0) {
                out = node->get<Int>();
            } else {
                config_error(join_path(prefix, key), "must be nonnegative");
            }
        } else {
            out = node->get<Int>();
        }
    }
}

inline void read_string(const Json& obj, const std::string& prefix, const char* key, std::string& out) {
    if (const Json* node = find(obj, key)) {
        if (!node->is_string()) config_error(join_path(prefix, key), "must be a string");
        out = node->get<std::string>();
    }
}

inline void read_bool(const Json& obj, const std::string& prefix, const char* key, bool& out) {
    if (const Json* node = find(obj, key)) {
        if (!node->is_boolean()) config_error(join_path(prefix, key), "must be true or false");
        out = node->get<bool>();
    }
}

inline const Json& object_at(const Json& obj, const std::string& prefix, const char* key) {
    const Json& node = obj.at(key);
    if (!node.is_object()) config_error(join_path(prefix, key), "must be an object");
    return node;
}

inline std::string resolve(const std::filesystem::path& base, const std::string& path, const std::string& key) {
    if (path.empty()) config_error(key, "path is empty");
    std::filesystem::path p(path);
    if (p.is_relative()) p = base / p;
    return p.lexically_normal().string();
}

inline void require(bool ok, const std::string& key, const std::string& message) {
    if (!ok) config_error(key, message);
}

}  // namespace detail

/// Checks the numeric constraints of every module; errors name the key.
inline void validate(const RunSpec& s) {
    using detail::require;
    require(std::isfinite(s.chi), "chi", "must be finite");
    require(s.kappa >= 0.0, "kappa", "must be >= 0");
    require(s.potential.type == "quadratic" || s.potential.type == "table", "potential.type",
            "must be 'quadratic' or 'table'");
    if (s.potential.type == "quadratic") require(s.potential.lambda0 > 0.0, "lambda0", "must be > 0");
    require(s.R > 0.0, "R", "must be > 0");
    require(s.n_cells >= 2, "n_cells", "must be >= 2");
    require(s.N_m >= 2, "N_m", "must be >= 2");
    require(s.tau > 0.0, "tau", "must be > 0");
    require(s.T >= 0.0, "T", "must be >= 0");
    require(s.u0.type == "gaussian" || s.u0.type == "uniform" || s.u0.type == "file", "u0.type",
            "must be 'gaussian', 'uniform' or 'file'");
    if (s.u0.type == "gaussian") require(s.u0.variance > 0.0, "u0.variance", "must be > 0");
    if (s.u0.type == "uniform") require(s.u0.b > s.u0.a, "u0.b", "must exceed u0.a");
    require(s.v0.type == "zero" || s.v0.type == "gaussian-bump" || s.v0.type == "file", "v0.type",
            "must be 'zero', 'gaussian-bump' or 'file'");
    if (s.v0.type == "gaussian-bump") require(s.v0.width > 0.0, "v0.width", "must be > 0");
    require(s.solver.max_outer_alternations >= 1, "solver.max_outer_alternations", "must be >= 1");
    require(s.solver.max_newton_iters >= 1, "solver.max_newton_iters", "must be >= 1");
    require(s.solver.grad_tol > 0.0, "solver.grad_tol", "must be > 0");
    require(s.solver.energy_decrease_tol > 0.0, "solver.energy_decrease_tol", "must be > 0");
    require(s.solver.backtrack > 0.0 && s.solver.backtrack < 1.0, "solver.backtrack", "must lie in (0, 1)");
    require(s.solver.armijo > 0.0 && s.solver.armijo < 1.0, "solver.armijo", "must lie in (0, 1)");
    require(s.equilibrium.tol > 0.0, "equilibrium.tol", "must be > 0");
    require(s.equilibrium.max_iters >= 1, "equilibrium.max_iters", "must be >= 1");
    require(s.fd.dt > 0.0, "fd.dt", "must be > 0");
    require(s.fd.flux == "central" || s.fd.flux == "upwind", "fd.flux", "must be 'central' or 'upwind'");
    require(s.fd.n_cells == 0 || s.fd.n_cells >= 2, "fd.n_cells", "must be 0 or >= 2");
    require(s.output.stride >= 1, "output.stride", "must be >= 1");
    require(!s.output.dir.empty(), "output.dir", "must not be empty");
    for (double chi : s.sweep_chi) require(std::isfinite(chi), "sweep.chi", "entries must be finite");
    require(s.check_states >= 1, "check.n_states", "must be >= 1");
}

/// Parses a config document; relative paths resolve against `base_dir`.
inline RunSpec parse_config(const Json& doc, const std::filesystem::path& base_dir) {
    using namespace detail;
    if (!doc.is_object()) config_error("<root>", "config must be a JSON object");
    reject_unknown(doc, "", {"chi", "kappa", "lambda0", "potential", "R", "n_cells", "N_m", "u0", "v0", "tau", "T",
                             "solver", "equilibrium", "fd", "output", "seed", "sweep", "check"});
    for (const char* key : {"chi", "kappa", "tau", "T"}) {
        if (find(doc, key) == nullptr) config_error(key, "required key is missing");
    }
    RunSpec s;
    read_number(doc, "", "chi", s.chi);
    read_number(doc, "", "kappa", s.kappa);
    read_number(doc, "", "tau", s.tau);
    read_number(doc, "", "T", s.T);

    const bool has_lambda = find(doc, "lambda0") != nullptr;
    if (const Json* pot = find(doc, "potential")) {
        if (has_lambda) config_error("lambda0", "give either 'lambda0' or 'potential', not both");
        if (!pot->is_object()) config_error("potential", "must be an object");
        reject_unknown(*pot, "potential", {"type", "lambda0", "file"});
        read_string(*pot, "potential", "type", s.potential.type);
        read_number(*pot, "potential", "lambda0", s.potential.lambda0);
        read_string(*pot, "potential", "file", s.potential.file);
        if (s.potential.type == "table") s.potential.file = resolve(base_dir, s.potential.file, "potential.file");
    } else if (has_lambda) {
        read_number(doc, "", "lambda0", s.potential.lambda0);
    } else {
        config_error("lambda0", "required key is missing (or give a 'potential' object)");
    }
    if (s.potential.type == "quadratic" && s.potential.lambda0 > 0.0) {
        s.R = ModelParams::default_half_width(s.potential.lambda0);
    }
    read_number(doc, "", "R", s.R);
    read_integer(doc, "", "n_cells", s.n_cells);
    read_integer(doc, "", "N_m", s.N_m);
    read_integer(doc, "", "seed", s.seed);

    if (find(doc, "u0") != nullptr) {
        const Json& u = object_at(doc, "", "u0");
        reject_unknown(u, "u0", {"type", "mean", "variance", "a", "b", "path"});
        read_string(u, "u0", "type", s.u0.type);
        read_number(u, "u0", "mean", s.u0.mean);
        read_number(u, "u0", "variance", s.u0.variance);
        read_number(u, "u0", "a", s.u0.a);
        read_number(u, "u0", "b", s.u0.b);
        read_string(u, "u0", "path", s.u0.path);
        if (s.u0.type == "file") s.u0.path = resolve(base_dir, s.u0.path, "u0.path");
    }
    if (find(doc, "v0") != nullptr) {
        const Json& v = object_at(doc, "", "v0");
        reject_unknown(v, "v0", {"type", "amplitude", "center", "width", "path"});
        read_string(v, "v0", "type", s.v0.type);
        read_number(v, "v0", "amplitude", s.v0.amplitude);
        read_number(v, "v0", "center", s.v0.center);
        read_number(v, "v0", "width", s.v0.width);
        read_string(v, "v0", "path", s.v0.path);
        if (s.v0.type == "file") s.v0.path = resolve(base_dir, s.v0.path, "v0.path");
    }
    if (find(doc, "solver") != nullptr) {
        const Json& c = object_at(doc, "", "solver");
        reject_unknown(c, "solver", {"max_outer_alternations", "max_newton_iters", "grad_tol", "energy_decrease_tol",
                                     "backtrack", "armijo"});
        read_integer(c, "solver", "max_outer_alternations", s.solver.max_outer_alternations);
        read_integer(c, "solver", "max_newton_iters", s.solver.max_newton_iters);
        read_number(c, "solver", "grad_tol", s.solver.grad_tol);
        read_number(c, "solver", "energy_decrease_tol", s.solver.energy_decrease_tol);
        read_number(c, "solver", "backtrack", s.solver.backtrack);
        read_number(c, "solver", "armijo", s.solver.armijo);
    }
    if (find(doc, "equilibrium") != nullptr) {
        const Json& c = object_at(doc, "", "equilibrium");
        reject_unknown(c, "equilibrium", {"tol", "max_iters"});
        read_number(c, "equilibrium", "tol", s.equilibrium.tol);
        read_integer(c, "equilibrium", "max_iters", s.equilibrium.max_iters);
    }
    if (find(doc, "fd") != nullptr) {
        const Json& c = object_at(doc, "", "fd");
        reject_unknown(c, "fd", {"dt", "flux", "n_cells"});
        read_number(c, "fd", "dt", s.fd.dt);
        read_string(c, "fd", "flux", s.fd.flux);
        read_integer(c, "fd", "n_cells", s.fd.n_cells);
    }
    if (find(doc, "output") != nullptr) {
        const Json& c = object_at(doc, "", "output");
        reject_unknown(c, "output", {"dir", "stride", "plots"});
        read_string(c, "output", "dir", s.output.dir);
        read_integer(c, "output", "stride", s.output.stride);
        read_bool(c, "output", "plots", s.output.plots);
    }
    if (!s.output.dir.empty()) s.output.dir = resolve(base_dir, s.output.dir, "output.dir");
    if (find(doc, "sweep") != nullptr) {
        const Json& c = object_at(doc, "", "sweep");
        reject_unknown(c, "sweep", {"chi"});
        if (const Json* list = find(c, "chi")) {
            if (!list->is_array()) config_error("sweep.chi", "must be an array of numbers");
            for (const auto& item : *list) {
                if (!item.is_number()) config_error("sweep.chi", "must be an array of numbers");
                s.sweep_chi.push_back(item.get<double>());
            }
        }
    }
    if (find(doc, "check") != nullptr) {
        const Json& c = object_at(doc, "", "check");
        reject_unknown(c, "check", {"n_states"});
        read_integer(c, "check", "n_states", s.check_states);
    }
    validate(s);
    return s;
}

inline RunSpec load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read config file '" + path.string() + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::ConfigError, "'" + path.string() + "' is not valid JSON: " + e.what());
    }
    const auto base = std::filesystem::absolute(path).parent_path();
    return parse_config(doc, base);
}

/// Full echo of a RunSpec; `parse_config(to_json(s), any)` gives back `s`.
inline Json to_json(const RunSpec& s) {
    Json j;
    j["chi"] = s.chi;
    j["kappa"] = s.kappa;
    if (s.potential.type == "quadratic") {
        j["potential"] = {{"type", "quadratic"}, {"lambda0", s.potential.lambda0}};
    } else {
        j["potential"] = {{"type", s.potential.type}, {"file", s.potential.file}};
    }
    j["R"] = s.R;
    j["n_cells"] = s.n_cells;
    j["N_m"] = s.N_m;
    j["u0"] = {{"type", s.u0.type}, {"mean", s.u0.mean}, {"variance", s.u0.variance},
               {"a", s.u0.a},       {"b", s.u0.b}};
    if (s.u0.type == "file") j["u0"]["path"] = s.u0.path;
    j["v0"] = {{"type", s.v0.type}, {"amplitude", s.v0.amplitude}, {"center", s.v0.center}, {"width", s.v0.width}};
    if (s.v0.type == "file") j["v0"]["path"] = s.v0.path;
    j["tau"] = s.tau;
    j["T"] = s.T;
    j["solver"] = {{"max_outer_alternations", s.solver.max_outer_alternations},
                   {"max_newton_iters", s.solver.max_newton_iters},
                   {"grad_tol", s.solver.grad_tol},
                   {"energy_decrease_tol", s.solver.energy_decrease_tol},
                   {"backtrack", s.solver.backtrack},
                   {"armijo", s.solver.armijo}};
    j["equilibrium"] = {{"tol", s.equilibrium.tol}, {"max_iters", s.equilibrium.max_iters}};
    j["fd"] = {{"dt", s.fd.dt}, {"flux", s.fd.flux}, {"n_cells", s.fd.n_cells}};
    j["output"] = {{"dir", s.output.dir}, {"stride", s.output.stride}, {"plots", s.output.plots}};
    j["seed"] = s.seed;
    j["sweep"] = {{"chi", s.sweep_chi}};
    j["check"] = {{"n_states", s.check_states}};
    return j;
}

}  // namespace ksjko::io
