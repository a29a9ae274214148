#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aospr/errors.hpp"

namespace aospr {

// Edge ids are dense 1..n. Per-edge arrays throughout the library are
// sized n+1 and indexed by edge id directly; entry [0] is unused.
using EdgeId = int;

struct Edge {
  int from = 0;
  int to = 0;
};

struct PruneReport {
  int input_edges = 0;
  std::vector<std::pair<int, int>> removed;  // (from,to) of pruned edges
};

// Directed acyclic routing topology with a fixed source/destination pair.
// Immutable after construction; edges not on any s->d path are pruned and
// the survivors re-densified in input order.
class Dag {
 public:
  static Dag build(int vertex_count, const std::vector<std::pair<int, int>>& edges,
                   int source, int destination, PruneReport* report = nullptr);

  int vertex_count() const { return vertex_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()) - 1; }  // n
  int source() const { return source_; }
  int destination() const { return destination_; }
  const Edge& edge(EdgeId id) const { return edges_[static_cast<std::size_t>(id)]; }
  // Outgoing edge ids of a vertex, ascending.
  const std::vector<EdgeId>& out_edges(int vertex) const {
    return out_edges_[static_cast<std::size_t>(vertex)];
  }
  // Vertices in a topological order (source first among relevant ones).
  const std::vector<int>& topo_order() const { return topo_; }

 private:
  Dag() = default;
  int vertex_count_ = 0;
  int source_ = 0;
  int destination_ = 0;
  std::vector<Edge> edges_;  // 1-based, [0] unused
  std::vector<std::vector<EdgeId>> out_edges_;
  std::vector<int> topo_;
};

// An s->d path: ordered edge-id sequence plus an incidence mask over 1..n.
class Path {
 public:
  Path() = default;
  Path(std::vector<EdgeId> edges, int n);

  const std::vector<EdgeId>& edges() const { return edges_; }
  int length() const { return static_cast<int>(edges_.size()); }  // k_i
  bool contains(EdgeId e) const { return mask_[static_cast<std::size_t>(e)] != 0; }
  int edge_universe() const { return static_cast<int>(mask_.size()) - 1; }

  bool operator==(const Path& other) const { return edges_ == other.edges_; }

 private:
  std::vector<EdgeId> edges_;
  std::vector<char> mask_;  // size n+1
};

// The candidate strategy set: N distinct paths covering every edge.
class PathSet {
 public:
  PathSet(std::vector<Path> paths, int n);

  int size() const { return static_cast<int>(paths_.size()); }  // N
  int edge_count() const { return n_; }
  int max_length() const { return k_; }  // k
  const Path& path(int i) const { return paths_[static_cast<std::size_t>(i)]; }
  const std::vector<Path>& paths() const { return paths_; }
  // Indices of paths containing edge e.
  const std::vector<int>& paths_containing(EdgeId e) const {
    return incidence_[static_cast<std::size_t>(e)];
  }

 private:
  std::vector<Path> paths_;
  int n_ = 0;
  int k_ = 0;
  std::vector<std::vector<int>> incidence_;
};

// Covering strategies: a small path subset jointly containing every edge,
// with exactly one designated covering path per edge.
class CoveringSet {
 public:
  const std::vector<int>& members() const { return members_; }  // selection order
  int size() const { return static_cast<int>(members_.size()); }
  bool is_member(int path_index) const;
  // Designated covering path (index into the PathSet) of edge e.
  int designated_cover(EdgeId e) const { return designated_[static_cast<std::size_t>(e)]; }
  // Edges whose designated cover is the given member (parallel to members()).
  const std::vector<EdgeId>& designated_edges(int member_pos) const {
    return designated_edges_[static_cast<std::size_t>(member_pos)];
  }
  int member_pos(int path_index) const;  // -1 if not a member

  friend CoveringSet covering_set(const PathSet& paths);

 private:
  std::vector<int> members_;
  std::vector<int> designated_;  // size n+1, edge -> path index
  std::vector<std::vector<EdgeId>> designated_edges_;
};

Dag build_dag(const std::vector<std::pair<int, int>>& edges, int source, int destination,
              PruneReport* report = nullptr);

// Number of distinct s->d paths (no enumeration).
std::uint64_t count_paths(const Dag& dag);

// All s->d paths in lexicographic edge-id order; PathExplosion if the count
// exceeds cap (use the sampler module instead).
PathSet enumerate_paths(const Dag& dag, std::uint64_t cap);

// Greedy maximum coverage; each edge designated to the first selected path
// containing it.
CoveringSet covering_set(const PathSet& paths);

// Minimum-total-weight s->d path, ties broken by lexicographic edge ids.
// weights is indexed by edge id (size n+1).
Path shortest_path(const Dag& dag, std::span<const double> weights);

}  // namespace aospr
