// Maximum-cardinality bipartite matching (Hopcroft-Karp).

#pragma once

#include <limits>
#include <queue>
#include <utility>
#include <vector>

namespace vpmix {

/// Returns a maximum matching as (left, right) index pairs. adj[u] lists the
/// right-side vertices reachable from left vertex u; the adjacency order
/// determines which of several maximum matchings is returned, so callers that
/// care about determinism should pre-sort it.
class BipartiteMatcher {
 public:
  BipartiteMatcher(int n_left, int n_right, std::vector<std::vector<int>> adj)
      : n_left_(n_left), n_right_(n_right), adj_(std::move(adj)) {}

  std::vector<std::pair<int, int>> solve() {
    match_left_.assign(n_left_, kFree);
    match_right_.assign(n_right_, kFree);
    dist_.assign(n_left_, kInf);
    while (bfs()) {
      for (int u = 0; u < n_left_; ++u) {
        if (match_left_[u] == kFree) dfs(u);
      }
    }
    std::vector<std::pair<int, int>> pairs;
    for (int u = 0; u < n_left_; ++u) {
      if (match_left_[u] != kFree) pairs.emplace_back(u, match_left_[u]);
    }
    return pairs;
  }

 private:
  static constexpr int kFree = -1;
  static constexpr int kInf = std::numeric_limits<int>::max();

  bool bfs() {
    std::queue<int> q;
    for (int u = 0; u < n_left_; ++u) {
      if (match_left_[u] == kFree) {
        dist_[u] = 0;
        q.push(u);
      } else {
        dist_[u] = kInf;
      }
    }
    bool found_free = false;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj_[u]) {
        const int w = match_right_[v];
        if (w == kFree) {
          found_free = true;
        } else if (dist_[w] == kInf) {
          dist_[w] = dist_[u] + 1;
          q.push(w);
        }
      }
    }
    return found_free;
  }

  bool dfs(int u) {
    for (int v : adj_[u]) {
      const int w = match_right_[v];
      if (w == kFree || (dist_[w] == dist_[u] + 1 && dfs(w))) {
        match_left_[u] = v;
        match_right_[v] = u;
        return true;
      }
    }
    dist_[u] = kInf;
    return false;
  }

  int n_left_;
  int n_right_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> match_left_;
  std::vector<int> match_right_;
  std::vector<int> dist_;
};

inline std::vector<std::pair<int, int>> maxBipartiteMatching(int n_left, int n_right,
                                                             std::vector<std::vector<int>> adj) {
  return BipartiteMatcher(n_left, n_right, std::move(adj)).solve();
}

}  // namespace vpmix
