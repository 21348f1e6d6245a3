#pragma once

#include <Eigen/Dense>

#include <vector>

namespace sor {

// Weighted communication channel from node `from` to node `to` (0-based ids).
struct Edge {
    int from = 0;
    int to = 0;
    double weight = 1.0;
};

// Immutable weighted digraph. The adjacency convention is receiver-indexed:
// a(i, j) = weight of edge (j, i), so row i collects what node i hears.
class Digraph {
public:
    Digraph(int n_nodes, std::vector<Edge> edges);

    int node_count() const { return n_nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    Eigen::MatrixXd adjacency() const;
    // L = D - A with D = diag(row sums of A); every row sums to zero.
    Eigen::MatrixXd laplacian() const;

private:
    int n_nodes_;
    std::vector<Edge> edges_;
};

// Union of the edge sets; a repeated edge keeps its maximum weight.
Digraph union_graph(const std::vector<Digraph>& graphs);

// True iff some node has a directed path to every other node.
bool has_spanning_tree(const Digraph& g);

// Graph `graph_index` becomes active at `t_start`; the following interval
// start (or the schedule's end_time, for the last one) closes it.
struct ScheduleInterval {
    double t_start = 0.0;
    int graph_index = 0;   // 0-based into SwitchingSchedule::graphs()
};

// Piecewise-constant, right-continuous graph signal on [0, end_time] with
// consecutive switching instants separated by at least dwell_time.
class SwitchingSchedule {
public:
    SwitchingSchedule(std::vector<Digraph> graphs,
                      std::vector<ScheduleInterval> intervals,
                      double dwell_time, double end_time);

    int node_count() const { return graphs_.front().node_count(); }
    double dwell_time() const { return dwell_time_; }
    double end_time() const { return end_time_; }
    const std::vector<Digraph>& graphs() const { return graphs_; }
    const std::vector<ScheduleInterval>& intervals() const { return intervals_; }

    int interval_at(double t) const;
    int active_index(double t) const;
    const Digraph& active_graph(double t) const;
    double interval_end(std::size_t k) const;

    // Union of every graph active somewhere on the closed window [t1, t2].
    Digraph union_over(double t1, double t2) const;

private:
    std::vector<Digraph> graphs_;
    std::vector<ScheduleInterval> intervals_;
    double dwell_time_;
    double end_time_;
};

SwitchingSchedule make_cyclic_schedule(std::vector<Digraph> graphs, double dwell,
                                       double end_time);
// One uniform draw per dwell interval from a seeded generator.
SwitchingSchedule make_random_schedule(std::vector<Digraph> graphs, double dwell,
                                       double end_time, unsigned seed);

// Bounded interconnectivity: every complete window
// [t_start + (k-1) T, t_start + k T] inside the horizon has a union graph
// with a spanning tree.
bool verify_bounded_interconnectivity(const SwitchingSchedule& s, double T,
                                      double t_start, double horizon);

// Reference node 0 prepended to a follower graph. Leader edges use combined
// ids (from must be 0, to in 1..N); the leader has no in-edges.
class LeaderAugmentedGraph {
public:
    LeaderAugmentedGraph(Digraph base, std::vector<Edge> leader_edges);

    const Digraph& base() const { return base_; }
    const std::vector<Edge>& leader_edges() const { return leader_edges_; }
    // Digraph on N+1 nodes: node 0 is the leader, follower i maps to node i+1.
    Digraph combined() const;

private:
    Digraph base_;
    std::vector<Edge> leader_edges_;
};

LeaderAugmentedGraph augment_with_leader(const Digraph& base,
                                         const std::vector<Edge>& leader_edges);

} // namespace sor
