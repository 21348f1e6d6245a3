#include "sor/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>

namespace sor {

namespace {
constexpr double kTimeTol = 1e-9;
}

Digraph::Digraph(int n_nodes, std::vector<Edge> edges)
    : n_nodes_(n_nodes), edges_(std::move(edges)) {
    if (n_nodes_ <= 0) {
        throw std::invalid_argument("Digraph: node count must be positive");
    }
    std::set<std::pair<int, int>> seen;
    for (const Edge& e : edges_) {
        if (e.from < 0 || e.from >= n_nodes_ || e.to < 0 || e.to >= n_nodes_) {
            throw std::invalid_argument("Digraph: edge endpoint out of range");
        }
        if (e.from == e.to) {
            throw std::invalid_argument("Digraph: self-loops are not allowed");
        }
        if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
            throw std::invalid_argument("Digraph: edge weights must be strictly positive");
        }
        if (!seen.insert({e.from, e.to}).second) {
            throw std::invalid_argument("Digraph: duplicate edge");
        }
    }
}

Eigen::MatrixXd Digraph::adjacency() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_nodes_, n_nodes_);
    for (const Edge& e : edges_) {
        a(e.to, e.from) = e.weight;
    }
    return a;
}

Eigen::MatrixXd Digraph::laplacian() const {
    Eigen::MatrixXd a = adjacency();
    Eigen::MatrixXd l = -a;
    l.diagonal() = a.rowwise().sum();
    return l;
}

Digraph union_graph(const std::vector<Digraph>& graphs) {
    if (graphs.empty()) {
        throw std::invalid_argument("union_graph: no graphs");
    }
    const int n = graphs.front().node_count();
    std::map<std::pair<int, int>, double> best;
    for (const Digraph& g : graphs) {
        if (g.node_count() != n) {
            throw std::invalid_argument("union_graph: node counts differ");
        }
        for (const Edge& e : g.edges()) {
            double& w = best[{e.from, e.to}];
            w = std::max(w, e.weight);
        }
    }
    std::vector<Edge> edges;
    edges.reserve(best.size());
    for (const auto& [key, w] : best) {
        edges.push_back({key.first, key.second, w});
    }
    return Digraph(n, std::move(edges));
}

bool has_spanning_tree(const Digraph& g) {
    const int n = g.node_count();
    if (n == 1) {
        return true;
    }
    std::vector<std::vector<int>> out(n);
    for (const Edge& e : g.edges()) {
        out[e.from].push_back(e.to);
    }
    for (int root = 0; root < n; ++root) {
        std::vector<char> seen(n, 0);
        std::queue<int> frontier;
        seen[root] = 1;
        frontier.push(root);
        int reached = 1;
        while (!frontier.empty()) {
            const int u = frontier.front();
            frontier.pop();
            for (int v : out[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    ++reached;
                    frontier.push(v);
                }
            }
        }
        if (reached == n) {
            return true;
        }
    }
    return false;
}

SwitchingSchedule::SwitchingSchedule(std::vector<Digraph> graphs,
                                     std::vector<ScheduleInterval> intervals,
                                     double dwell_time, double end_time)
    : graphs_(std::move(graphs)),
      intervals_(std::move(intervals)),
      dwell_time_(dwell_time),
      end_time_(end_time) {
    if (graphs_.empty()) {
        throw std::invalid_argument("SwitchingSchedule: no graphs");
    }
    const int n = graphs_.front().node_count();
    for (const Digraph& g : graphs_) {
        if (g.node_count() != n) {
            throw std::invalid_argument("SwitchingSchedule: graphs must share the node count");
        }
    }
    if (!(dwell_time_ > 0.0)) {
        throw std::invalid_argument("SwitchingSchedule: dwell time must be positive");
    }
    if (intervals_.empty()) {
        throw std::invalid_argument("SwitchingSchedule: no intervals");
    }
    if (std::abs(intervals_.front().t_start) > kTimeTol) {
        throw std::invalid_argument("SwitchingSchedule: first interval must start at t = 0");
    }
    for (std::size_t k = 0; k < intervals_.size(); ++k) {
        const auto& iv = intervals_[k];
        if (iv.graph_index < 0 || iv.graph_index >= static_cast<int>(graphs_.size())) {
            throw std::invalid_argument("SwitchingSchedule: graph index out of range");
        }
        if (k > 0 && intervals_[k].t_start - intervals_[k - 1].t_start < dwell_time_ - kTimeTol) {
            throw std::invalid_argument(
                "SwitchingSchedule: switching instants closer than the dwell time");
        }
    }
    if (end_time_ <= intervals_.back().t_start + kTimeTol) {
        throw std::invalid_argument("SwitchingSchedule: end_time inside the last interval start");
    }
}

int SwitchingSchedule::interval_at(double t) const {
    if (t < -kTimeTol || t > end_time_ + kTimeTol) {
        throw std::invalid_argument("SwitchingSchedule: time outside coverage");
    }
    int lo = 0;
    int hi = static_cast<int>(intervals_.size()) - 1;
    while (lo < hi) {
        const int mid = (lo + hi + 1) / 2;
        if (intervals_[mid].t_start <= t + kTimeTol) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return lo;
}

int SwitchingSchedule::active_index(double t) const {
    return intervals_[interval_at(t)].graph_index;
}

const Digraph& SwitchingSchedule::active_graph(double t) const {
    return graphs_[active_index(t)];
}

double SwitchingSchedule::interval_end(std::size_t k) const {
    return k + 1 < intervals_.size() ? intervals_[k + 1].t_start : end_time_;
}

Digraph SwitchingSchedule::union_over(double t1, double t2) const {
    if (t1 > t2 + kTimeTol) {
        throw std::invalid_argument("SwitchingSchedule: union_over window reversed");
    }
    if (t1 < -kTimeTol || t2 > end_time_ + kTimeTol) {
        throw std::invalid_argument("SwitchingSchedule: union_over window outside coverage");
    }
    std::set<int> active;
    for (std::size_t k = 0; k < intervals_.size(); ++k) {
        const double start = intervals_[k].t_start;
        const double end = interval_end(k);
        if (start <= t2 + kTimeTol && end > t1 + kTimeTol) {
            active.insert(intervals_[k].graph_index);
        }
    }
    std::vector<Digraph> parts;
    parts.reserve(active.size());
    for (int idx : active) {
        parts.push_back(graphs_[idx]);
    }
    return union_graph(parts);
}

namespace {

int interval_count(double dwell, double end_time) {
    if (!(dwell > 0.0) || !(end_time > 0.0)) {
        throw std::invalid_argument("schedule: dwell and end_time must be positive");
    }
    return std::max(1, static_cast<int>(std::ceil(end_time / dwell - kTimeTol)));
}

} // namespace

SwitchingSchedule make_cyclic_schedule(std::vector<Digraph> graphs, double dwell,
                                       double end_time) {
    const int count = interval_count(dwell, end_time);
    const int p = static_cast<int>(graphs.size());
    std::vector<ScheduleInterval> intervals;
    intervals.reserve(count);
    for (int k = 0; k < count; ++k) {
        intervals.push_back({k * dwell, k % p});
    }
    return SwitchingSchedule(std::move(graphs), std::move(intervals), dwell, count * dwell);
}

SwitchingSchedule make_random_schedule(std::vector<Digraph> graphs, double dwell,
                                       double end_time, unsigned seed) {
    const int count = interval_count(dwell, end_time);
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(graphs.size()) - 1);
    std::vector<ScheduleInterval> intervals;
    intervals.reserve(count);
    for (int k = 0; k < count; ++k) {
        intervals.push_back({k * dwell, pick(rng)});
    }
    return SwitchingSchedule(std::move(graphs), std::move(intervals), dwell, count * dwell);
}

bool verify_bounded_interconnectivity(const SwitchingSchedule& s, double T,
                                      double t_start, double horizon) {
    if (!(T > 0.0)) {
        throw std::invalid_argument("verify_bounded_interconnectivity: window length must be positive");
    }
    if (horizon > s.end_time() + kTimeTol) {
        throw std::invalid_argument("verify_bounded_interconnectivity: horizon exceeds schedule coverage");
    }
    for (int k = 1; t_start + k * T <= horizon + kTimeTol; ++k) {
        const Digraph window = s.union_over(t_start + (k - 1) * T, t_start + k * T);
        if (!has_spanning_tree(window)) {
            return false;
        }
    }
    return true;
}

LeaderAugmentedGraph::LeaderAugmentedGraph(Digraph base, std::vector<Edge> leader_edges)
    : base_(std::move(base)), leader_edges_(std::move(leader_edges)) {
    std::set<int> seen;
    for (const Edge& e : leader_edges_) {
        if (e.to == 0) {
            throw std::invalid_argument("LeaderAugmentedGraph: leader has no in-edges");
        }
        if (e.from != 0) {
            throw std::invalid_argument("LeaderAugmentedGraph: leader edges must originate at node 0");
        }
        if (e.to < 1 || e.to > base_.node_count()) {
            throw std::invalid_argument("LeaderAugmentedGraph: leader edge target out of range");
        }
        if (!(e.weight > 0.0)) {
            throw std::invalid_argument("LeaderAugmentedGraph: edge weights must be strictly positive");
        }
        if (!seen.insert(e.to).second) {
            throw std::invalid_argument("LeaderAugmentedGraph: duplicate leader edge");
        }
    }
}

Digraph LeaderAugmentedGraph::combined() const {
    std::vector<Edge> edges;
    edges.reserve(base_.edges().size() + leader_edges_.size());
    for (const Edge& e : base_.edges()) {
        edges.push_back({e.from + 1, e.to + 1, e.weight});
    }
    for (const Edge& e : leader_edges_) {
        edges.push_back(e);
    }
    return Digraph(base_.node_count() + 1, std::move(edges));
}

LeaderAugmentedGraph augment_with_leader(const Digraph& base,
                                         const std::vector<Edge>& leader_edges) {
    return LeaderAugmentedGraph(base, leader_edges);
}

} // namespace sor
