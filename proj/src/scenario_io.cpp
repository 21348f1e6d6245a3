#include "sor/scenario_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sor {

namespace {

using nlohmann::json;

void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) {
        throw ScenarioError(path + ": expected an object");
    }
}

void reject_unknown_keys(const json& j, const std::string& path,
                         std::initializer_list<const char*> allowed) {
    expect_object(j, path);
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ScenarioError(path + ": unknown key '" + item.key() + "'");
        }
    }
}

const json& require_key(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) {
        throw ScenarioError(path + ": missing key '" + std::string(key) + "'");
    }
    return j.at(key);
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) {
        throw ScenarioError(path + ": expected a number");
    }
    return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) {
        throw ScenarioError(path + ": expected an integer");
    }
    return j.get<int>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) {
        throw ScenarioError(path + ": expected a string");
    }
    return j.get<std::string>();
}

Eigen::MatrixXd as_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) {
        throw ScenarioError(path + ": expected a non-empty array of rows");
    }
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    Eigen::MatrixXd m;
    for (std::size_t r = 0; r < rows; ++r) {
        const json& row = j.at(r);
        if (!row.is_array() || row.empty()) {
            throw ScenarioError(path + ": expected rows to be non-empty arrays");
        }
        if (r == 0) {
            cols = row.size();
            m.resize(rows, cols);
        } else if (row.size() != cols) {
            throw ScenarioError(path + ": ragged rows");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            m(r, c) = as_number(row.at(c), path);
        }
    }
    return m;
}

Eigen::VectorXd as_vector(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) {
        throw ScenarioError(path + ": expected a non-empty array");
    }
    Eigen::VectorXd v(j.size());
    for (std::size_t k = 0; k < j.size(); ++k) {
        v(k) = as_number(j.at(k), path);
    }
    return v;
}

// Edge entry [from, to] or [from, to, weight] with 1-based agent ids
// (0 reserved for the leader).
Edge parse_edge(const json& j, const std::string& path, int n_agents, bool leader_edge) {
    if (!j.is_array() || (j.size() != 2 && j.size() != 3)) {
        throw ScenarioError(path + ": expected [from, to] or [from, to, weight]");
    }
    Edge e;
    e.from = as_int(j.at(0), path);
    e.to = as_int(j.at(1), path);
    e.weight = j.size() == 3 ? as_number(j.at(2), path) : 1.0;
    if (leader_edge) {
        if (e.to == 0) {
            throw ScenarioError(path + ": leader has no in-edges");
        }
        if (e.from != 0) {
            throw ScenarioError(path + ": leader edges must originate at node 0");
        }
        if (e.to < 1 || e.to > n_agents) {
            throw ScenarioError(path + ": node id out of range");
        }
        return e;   // combined ids, used as-is
    }
    if (e.from < 1 || e.from > n_agents || e.to < 1 || e.to > n_agents) {
        throw ScenarioError(path + ": node id out of range (agents are numbered from 1)");
    }
    e.from -= 1;
    e.to -= 1;
    return e;
}

std::vector<Digraph> parse_graphs(const json& j, int n_agents) {
    if (!j.is_array() || j.empty()) {
        throw ScenarioError("scenario.graphs: expected a non-empty array of edge lists");
    }
    std::vector<Digraph> graphs;
    for (std::size_t g = 0; g < j.size(); ++g) {
        const std::string path = "scenario.graphs[" + std::to_string(g) + "]";
        const json& edges_json = j.at(g);
        if (!edges_json.is_array()) {
            throw ScenarioError(path + ": expected an edge list");
        }
        std::vector<Edge> edges;
        for (std::size_t k = 0; k < edges_json.size(); ++k) {
            edges.push_back(parse_edge(edges_json.at(k),
                                       path + "[" + std::to_string(k) + "]",
                                       n_agents, false));
        }
        try {
            graphs.emplace_back(n_agents, std::move(edges));
        } catch (const std::invalid_argument& e) {
            throw ScenarioError(path + ": " + e.what());
        }
    }
    return graphs;
}

ScheduleSpec parse_schedule(const json& j, std::size_t n_graphs) {
    reject_unknown_keys(j, "scenario.schedule",
                        {"mode", "dwell", "t_end", "seed", "intervals"});
    ScheduleSpec spec;
    const std::string mode = as_string(require_key(j, "scenario.schedule", "mode"),
                                       "scenario.schedule.mode");
    spec.dwell = as_number(require_key(j, "scenario.schedule", "dwell"),
                           "scenario.schedule.dwell");
    spec.end_time = as_number(require_key(j, "scenario.schedule", "t_end"),
                              "scenario.schedule.t_end");
    if (!(spec.dwell > 0.0) || !(spec.end_time > 0.0)) {
        throw ScenarioError("scenario.schedule: dwell and t_end must be positive");
    }
    if (mode == "random") {
        spec.kind = ScheduleSpec::Kind::Random;
        if (j.contains("intervals")) {
            throw ScenarioError("scenario.schedule: 'intervals' only applies to explicit mode");
        }
        if (j.contains("seed")) {
            spec.seed = static_cast<unsigned>(as_int(j.at("seed"), "scenario.schedule.seed"));
        }
    } else if (mode == "explicit") {
        spec.kind = ScheduleSpec::Kind::Explicit;
        if (j.contains("seed")) {
            throw ScenarioError("scenario.schedule: 'seed' only applies to random mode");
        }
        const json& ivs = require_key(j, "scenario.schedule", "intervals");
        if (!ivs.is_array() || ivs.empty()) {
            throw ScenarioError("scenario.schedule.intervals: expected a non-empty array");
        }
        for (std::size_t k = 0; k < ivs.size(); ++k) {
            const std::string path = "scenario.schedule.intervals[" + std::to_string(k) + "]";
            const json& entry = ivs.at(k);
            if (!entry.is_array() || entry.size() != 2) {
                throw ScenarioError(path + ": expected [t_start, graph_index]");
            }
            ScheduleInterval iv;
            iv.t_start = as_number(entry.at(0), path);
            iv.graph_index = as_int(entry.at(1), path) - 1;   // 1-based in the file
            if (iv.graph_index < 0 || iv.graph_index >= static_cast<int>(n_graphs)) {
                throw ScenarioError(path + ": graph index out of range");
            }
            spec.intervals.push_back(iv);
        }
    } else {
        throw ScenarioError("scenario.schedule.mode: expected 'random' or 'explicit'");
    }
    return spec;
}

InitSpec parse_init(const json& j, const std::vector<AgentSetup>& agents, int s_dim,
                    bool observers, bool leader) {
    reject_unknown_keys(j, "scenario.init",
                        {"mode", "range", "seed", "x", "z", "w", "w0"});
    InitSpec init;
    const std::string mode = as_string(require_key(j, "scenario.init", "mode"),
                                       "scenario.init.mode");
    if (mode == "seeded_uniform") {
        init.kind = InitSpec::Kind::SeededUniform;
        for (const char* key : {"x", "z", "w", "w0"}) {
            if (j.contains(key)) {
                throw ScenarioError(std::string("scenario.init: '") + key +
                                    "' only applies to explicit mode");
            }
        }
        if (j.contains("range")) {
            const Eigen::VectorXd range = as_vector(j.at("range"), "scenario.init.range");
            if (range.size() != 2 || !(range(0) <= range(1))) {
                throw ScenarioError("scenario.init.range: expected [lo, hi] with lo <= hi");
            }
            init.lo = range(0);
            init.hi = range(1);
        }
        if (j.contains("seed")) {
            init.seed = static_cast<unsigned>(as_int(j.at("seed"), "scenario.init.seed"));
        }
        return init;
    }
    if (mode != "explicit") {
        throw ScenarioError("scenario.init.mode: expected 'seeded_uniform' or 'explicit'");
    }
    init.kind = InitSpec::Kind::Explicit;
    for (const char* key : {"range", "seed"}) {
        if (j.contains(key)) {
            throw ScenarioError(std::string("scenario.init: '") + key +
                                "' only applies to seeded_uniform mode");
        }
    }
    auto parse_blocks = [&](const char* key, bool required) {
        std::vector<Eigen::VectorXd> blocks;
        if (!j.contains(key)) {
            if (required) {
                throw ScenarioError(std::string("scenario.init: missing '") + key + "'");
            }
            return blocks;
        }
        const json& arr = j.at(key);
        const std::string path = std::string("scenario.init.") + key;
        if (!arr.is_array() || arr.size() != agents.size()) {
            throw ScenarioError(path + ": expected one array per agent");
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            blocks.push_back(as_vector(arr.at(i), path + "[" + std::to_string(i) + "]"));
        }
        return blocks;
    };
    init.x = parse_blocks("x", true);
    init.z = parse_blocks("z", observers);
    init.w = parse_blocks("w", true);
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (init.x[i].size() != agents[i].model.n) {
            throw ScenarioError("scenario.init.x[" + std::to_string(i) + "]: dimension mismatch");
        }
        if (!init.z.empty() && init.z[i].size() != agents[i].model.n) {
            throw ScenarioError("scenario.init.z[" + std::to_string(i) + "]: dimension mismatch");
        }
        if (init.w[i].size() != s_dim) {
            throw ScenarioError("scenario.init.w[" + std::to_string(i) + "]: dimension mismatch");
        }
    }
    if (leader) {
        init.w0 = as_vector(require_key(j, "scenario.init", "w0"), "scenario.init.w0");
        if (init.w0.size() != s_dim) {
            throw ScenarioError("scenario.init.w0: dimension mismatch");
        }
    } else if (j.contains("w0")) {
        throw ScenarioError("scenario.init.w0: only applies to leader mode");
    }
    return init;
}

} // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(origin + ": " + e.what());
    }
    reject_unknown_keys(root, "scenario",
                        {"agents", "exosystem", "graphs", "schedule", "controller",
                         "integration", "init"});

    Scenario sc;

    const json& exo_json = require_key(root, "scenario", "exosystem");
    reject_unknown_keys(exo_json, "scenario.exosystem", {"tau"});
    const double tau = as_number(require_key(exo_json, "scenario.exosystem", "tau"),
                                 "scenario.exosystem.tau");
    if (tau == 0.0) {
        throw ScenarioError("scenario.exosystem.tau: must be nonzero");
    }
    sc.exo = builtin_exosystem(tau);

    const json& agents_json = require_key(root, "scenario", "agents");
    if (!agents_json.is_array() || agents_json.empty()) {
        throw ScenarioError("scenario.agents: expected a non-empty array");
    }
    for (std::size_t i = 0; i < agents_json.size(); ++i) {
        const std::string path = "scenario.agents[" + std::to_string(i) + "]";
        const json& a = agents_json.at(i);
        reject_unknown_keys(a, path, {"name", "gains"});
        const std::string name = as_string(require_key(a, path, "name"), path + ".name");
        BuiltinAgent built;
        try {
            built = builtin_agent(name, tau);
        } catch (const std::invalid_argument& e) {
            throw ScenarioError(path + ".name: " + e.what());
        }
        if (a.contains("gains")) {
            const json& gains = a.at("gains");
            reject_unknown_keys(gains, path + ".gains", {"K", "L"});
            if (gains.contains("K")) {
                built.gains.K = as_matrix(gains.at("K"), path + ".gains.K");
            }
            if (gains.contains("L")) {
                built.gains.L = as_matrix(gains.at("L"), path + ".gains.L");
            }
        }
        sc.agents.push_back({built.model, built.solution, built.gains});
    }
    const int n_agents = static_cast<int>(sc.agents.size());

    const json& controller = require_key(root, "scenario", "controller");
    reject_unknown_keys(controller, "scenario.controller", {"mode", "leader", "leader_edges"});
    const std::string mode = as_string(require_key(controller, "scenario.controller", "mode"),
                                       "scenario.controller.mode");
    if (mode == "state_feedback") {
        sc.mode = ControllerMode::StateFeedback;
    } else if (mode == "output_feedback") {
        sc.mode = ControllerMode::OutputFeedback;
    } else {
        throw ScenarioError(
            "scenario.controller.mode: expected 'state_feedback' or 'output_feedback'");
    }
    if (controller.contains("leader")) {
        const json& leader = controller.at("leader");
        if (!leader.is_boolean()) {
            throw ScenarioError("scenario.controller.leader: expected a boolean");
        }
        sc.leader = leader.get<bool>();
    }
    if (controller.contains("leader_edges")) {
        if (!sc.leader) {
            throw ScenarioError("scenario.controller.leader_edges: only applies to leader mode");
        }
        const json& links = controller.at("leader_edges");
        if (!links.is_array()) {
            throw ScenarioError("scenario.controller.leader_edges: expected an array");
        }
        for (std::size_t k = 0; k < links.size(); ++k) {
            sc.leader_edges.push_back(
                parse_edge(links.at(k),
                           "scenario.controller.leader_edges[" + std::to_string(k) + "]",
                           n_agents, true));
        }
    }
    if (sc.mode == ControllerMode::OutputFeedback) {
        for (std::size_t i = 0; i < sc.agents.size(); ++i) {
            if (!sc.agents[i].gains.L) {
                throw ScenarioError("scenario.agents[" + std::to_string(i) +
                                    "]: output_feedback mode requires an L gain for '" +
                                    sc.agents[i].model.name + "'");
            }
        }
    }

    std::vector<Digraph> graphs = parse_graphs(require_key(root, "scenario", "graphs"), n_agents);
    sc.schedule = parse_schedule(require_key(root, "scenario", "schedule"), graphs.size());
    sc.schedule.graphs = std::move(graphs);
    sc.t_end = sc.schedule.end_time;

    if (root.contains("integration")) {
        const json& integration = root.at("integration");
        reject_unknown_keys(integration, "scenario.integration", {"step"});
        if (integration.contains("step")) {
            sc.step = as_number(integration.at("step"), "scenario.integration.step");
        }
    }
    if (!(sc.step > 0.0)) {
        throw ScenarioError("scenario.integration.step: must be positive");
    }
    const double ratio = sc.schedule.dwell / sc.step;
    if (std::abs(ratio - std::llround(ratio)) > 1e-9 * std::max(1.0, ratio)) {
        throw ScenarioError("scenario.integration.step: must divide schedule.dwell");
    }

    if (root.contains("init")) {
        sc.init = parse_init(root.at("init"), sc.agents, sc.exo.s_dim,
                             sc.mode == ControllerMode::OutputFeedback, sc.leader);
    }

    if (sc.schedule.kind == ScheduleSpec::Kind::Explicit) {
        try {
            (void)materialize_schedule(sc.schedule, sc.seed);
        } catch (const std::invalid_argument& e) {
            throw ScenarioError(std::string("scenario.schedule: ") + e.what());
        }
    }
    return sc;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream file(path);
    if (!file) {
        throw ScenarioError(path + ": cannot open scenario file");
    }
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return parse_scenario_text(buffer.str(), path);
}

namespace {

void append_cell(std::string& line, double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    line += ',';
    line += buf;
}

} // namespace

void write_csv(const SimResult& r, const std::string& path) {
    std::ofstream file(path);
    if (!file) {
        throw ScenarioError(path + ": cannot open output file for writing");
    }
    const bool observers = r.mode == ControllerMode::OutputFeedback;
    const int n_agents = static_cast<int>(r.y.size());
    const int s = n_agents > 0 ? static_cast<int>(r.w.front().cols()) : 0;

    std::string header = "t,sigma";
    auto block_names = [&header](const std::string& stem, int dim) {
        if (dim == 1) {
            header += ',' + stem;
        } else {
            for (int k = 1; k <= dim; ++k) {
                header += ',' + stem + '_' + std::to_string(k);
            }
        }
    };
    for (int i = 0; i < n_agents; ++i) {
        const std::string id = std::to_string(i + 1);
        block_names("y" + id, static_cast<int>(r.y[i].cols()));
        block_names("e" + id, static_cast<int>(r.e[i].cols()));
        for (int k = 1; k <= s; ++k) {
            header += ",w" + id + "_" + std::to_string(k);
        }
        if (observers) {
            header += ",zerr" + id;
        }
    }
    if (r.leader) {
        for (int k = 1; k <= s; ++k) {
            header += ",w0_" + std::to_string(k);
        }
    }
    file << header << '\n';

    for (long long row = 0; row < r.times.size(); ++row) {
        std::string line;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", r.times(row));
        line += buf;
        line += ',';
        line += std::to_string(r.sigma[row] + 1);   // 1-based in the file
        for (int i = 0; i < n_agents; ++i) {
            for (int k = 0; k < r.y[i].cols(); ++k) {
                append_cell(line, r.y[i](row, k));
            }
            for (int k = 0; k < r.e[i].cols(); ++k) {
                append_cell(line, r.e[i](row, k));
            }
            for (int k = 0; k < s; ++k) {
                append_cell(line, r.w[i](row, k));
            }
            if (observers) {
                append_cell(line, (r.z[i].row(row) - r.x[i].row(row)).norm());
            }
        }
        if (r.leader) {
            for (int k = 0; k < s; ++k) {
                append_cell(line, r.w0(row, k));
            }
        }
        file << line << '\n';
    }
    if (!file) {
        throw ScenarioError(path + ": write failed");
    }
}

} // namespace sor
