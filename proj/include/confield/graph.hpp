// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "confield/errors.hpp"

namespace confield {

/// Undirected agent connectivity. Always connected: consensus cannot reach
/// across components, so disconnected graphs are rejected at construction.
struct CommGraph {
  int n_agents = 0;
  std::vector<std::pair<int, int>> edges;        // normalized i < j, sorted, unique
  std::vector<std::vector<int>> adjacency;       // sorted neighbor lists

  const std::vector<int>& neighbors(int i) const {
    return adjacency[static_cast<std::size_t>(i)];
  }
  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }

  static CommGraph from_edges(int n_agents, std::vector<std::pair<int, int>> raw_edges) {
    if (n_agents < 1) throw ContractError("graph needs at least one node");
    CommGraph g;
    g.n_agents = n_agents;
    for (auto [a, b] : raw_edges) {
      if (a == b) throw ContractError("self-loop on node " + std::to_string(a));
      if (a < 0 || b < 0 || a >= n_agents || b >= n_agents)
        throw ContractError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                            ") references a node outside [0," + std::to_string(n_agents) + ")");
      if (a > b) std::swap(a, b);
      g.edges.emplace_back(a, b);
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    g.adjacency.assign(static_cast<std::size_t>(n_agents), {});
    for (auto [a, b] : g.edges) {
      g.adjacency[static_cast<std::size_t>(a)].push_back(b);
      g.adjacency[static_cast<std::size_t>(b)].push_back(a);
    }
    for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());

    // Connectivity check (BFS from node 0).
    std::vector<bool> seen(static_cast<std::size_t>(n_agents), false);
    std::vector<int> queue{0};
    seen[0] = true;
    while (!queue.empty()) {
      const int v = queue.back();
      queue.pop_back();
      for (int w : g.neighbors(v)) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = true;
          queue.push_back(w);
        }
      }
    }
    for (int v = 0; v < n_agents; ++v)
      if (!seen[static_cast<std::size_t>(v)])
        throw ContractError("graph is disconnected: node " + std::to_string(v) +
                            " unreachable from node 0");
    return g;
  }
};

/// Builds a graph from a topology spec: "ring:N", "full:N", "chain:N", or
/// "edges:N:a-b,c-d,...".
inline CommGraph build_graph(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw ParseError(ParseError::Code::bad_value, "graph spec needs a ':': " + spec);
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  auto parse_int = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used != s.size() || v < 1) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ParseError(ParseError::Code::bad_value, "bad node count in graph spec: " + spec);
    }
  };

  if (kind == "ring" || kind == "full" || kind == "chain") {
    const int n = parse_int(rest);
    std::vector<std::pair<int, int>> edges;
    if (kind == "full") {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    } else {
      for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
      if (kind == "ring" && n > 2) edges.emplace_back(n - 1, 0);
    }
    return CommGraph::from_edges(n, std::move(edges));
  }
  if (kind == "edges") {
    const auto second_colon = rest.find(':');
    if (second_colon == std::string::npos)
      throw ParseError(ParseError::Code::bad_value,
                       "explicit spec is edges:N:a-b,c-d,...: " + spec);
    const int n = parse_int(rest.substr(0, second_colon));
    std::vector<std::pair<int, int>> edges;
    std::string list = rest.substr(second_colon + 1);
    std::size_t at = 0;
    while (at < list.size()) {
      const auto comma = list.find(',', at);
      const std::string item = list.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
      const auto dash = item.find('-');
      if (dash == std::string::npos)
        throw ParseError(ParseError::Code::bad_value, "bad edge '" + item + "' in " + spec);
      try {
        edges.emplace_back(std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1)));
      } catch (const std::exception&) {
        throw ParseError(ParseError::Code::bad_value, "bad edge '" + item + "' in " + spec);
      }
      if (comma == std::string::npos) break;
      at = comma + 1;
    }
    return CommGraph::from_edges(n, std::move(edges));
  }
  throw ParseError(ParseError::Code::bad_value, "unknown graph kind: " + kind);
}

}  // namespace confield
