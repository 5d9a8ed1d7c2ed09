// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <barrier>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "confield/graph.hpp"
#include "confield/metrics.hpp"
#include "confield/mlp.hpp"
#include "confield/objective.hpp"
#include "confield/wire.hpp"

namespace confield {

struct ConsensusConfig {
  double rho = 0.5;             // consensus step scalar
  int inner_steps = 5;          // gradient steps approximating the primal argmin
  int outer_iterations = 100;
  int rays_per_batch = 512;
  int samples_per_ray = 64;
  double comm_frequency = 1.0;  // fraction of outer iterations that exchange
  std::uint64_t seed = 0;
  OptimizerConfig optimizer{};

  void validate() const {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ContractError("rho must be positive");
    if (inner_steps < 1) throw ContractError("inner_steps must be >= 1");
    if (outer_iterations < 0) throw ContractError("outer_iterations must be >= 0");
    if (rays_per_batch < 1 || samples_per_ray < 1)
      throw ContractError("batch sizes must be >= 1");
    if (!(comm_frequency > 0.0) || comm_frequency > 1.0)
      throw ContractError("comm_frequency must lie in (0, 1]");
  }
};

/// Exchanges happen on iterations where k mod round(1/frequency) == 0; in
/// particular always at k = 0, so caches are populated before the first dual
/// update.
inline bool is_comm_iteration(std::int64_t k, double comm_frequency) {
  if (!(comm_frequency > 0.0) || comm_frequency > 1.0)
    throw ContractError("comm_frequency must lie in (0, 1]");
  const auto period = std::max<std::int64_t>(1, std::llround(1.0 / comm_frequency));
  return k % period == 0;
}

struct ExchangeRecord {
  std::int64_t iteration = 0;
  int agent = 0;     // receiver
  int neighbor = 0;  // sender
  std::uint64_t bytes = 0;
};

/// Per-run record of every delivered payload, ordered by (iteration, agent,
/// neighbor).
struct ExchangeLog {
  int n_agents = 0;
  std::vector<ExchangeRecord> records;

  std::uint64_t total_bytes(int agent) const {
    std::uint64_t total = 0;
    for (const auto& r : records)
      if (r.agent == agent) total += r.bytes;
    return total;
  }

  std::int64_t comm_iteration_count(int agent) const {
    std::int64_t count = 0;
    std::int64_t last = -1;
    for (const auto& r : records) {
      if (r.agent != agent) continue;
      if (r.iteration != last) {
        ++count;
        last = r.iteration;
      }
    }
    return count;
  }
};

struct TraceRow {
  std::int64_t iteration = 0;
  int agent = 0;
  double loss = 0.0;
  double disagreement = 0.0;
  double grad_norm_trunk = 0.0;
  std::vector<double> layer_norms;
};

// ---------------------------------------------------------------------------
// Wire codecs: how a weight snapshot crosses the simulated wire.

template <typename Real>
class WireCodec {
 public:
  virtual ~WireCodec() = default;
  virtual std::vector<std::uint8_t> encode(std::span<const Real> theta) const = 0;
  virtual std::vector<Real> decode(std::span<const std::uint8_t> bytes) const = 0;
};

/// NWV1-framed payloads for network weights (the real wire format).
template <typename Real>
class NwvWireCodec final : public WireCodec<Real> {
 public:
  explicit NwvWireCodec(MlpArchitecture arch) : arch_(arch) {}

  std::vector<std::uint8_t> encode(std::span<const Real> theta) const override {
    return serialize_weights<Real>(theta, arch_);
  }

  std::vector<Real> decode(std::span<const std::uint8_t> bytes) const override {
    LoadedWeights lw = deserialize_weights(bytes);
    if (!(lw.arch == arch_))
      throw ParseError(ParseError::Code::bad_value, "payload architecture mismatch");
    return lw.template as<Real>();
  }

 private:
  MlpArchitecture arch_;
};

/// Raw little-endian vector payloads for non-network parameter vectors
/// (convex surrogate mode). 12-byte header: magic "RWV1", u32 length, then
/// IEEE-754 values.
template <typename Real>
class RawWireCodec final : public WireCodec<Real> {
 public:
  std::vector<std::uint8_t> encode(std::span<const Real> theta) const override {
    std::vector<std::uint8_t> out;
    out.reserve(12 + theta.size() * sizeof(Real));
    out.insert(out.end(), {'R', 'W', 'V', '1'});
    detail::put_u32(out, static_cast<std::uint32_t>(theta.size()));
    detail::put_u32(out, sizeof(Real) == 4 ? 0u : 1u);
    for (const Real v : theta) {
      if constexpr (sizeof(Real) == 4)
        detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      else
        detail::put_u64(out, std::bit_cast<std::uint64_t>(static_cast<double>(v)));
    }
    return out;
  }

  std::vector<Real> decode(std::span<const std::uint8_t> bytes) const override {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RWV1", 4) != 0)
      throw ParseError(ParseError::Code::bad_magic, "bad raw vector payload");
    const std::size_t n = detail::get_u32(bytes, 4);
    if (bytes.size() != 12 + n * sizeof(Real))
      throw ParseError(ParseError::Code::length_mismatch, "raw vector payload length mismatch");
    std::vector<Real> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      if constexpr (sizeof(Real) == 4)
        out[i] = std::bit_cast<float>(detail::get_u32(bytes, 12 + 4 * i));
      else
        out[i] = std::bit_cast<double>(detail::get_u64(bytes, 12 + 8 * i));
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Agent state and the two update rules.

template <typename Real>
struct AgentState {
  int id = 0;
  std::vector<Real> theta;
  std::vector<Real> dual;
  Optimizer<Real> optimizer;
  std::map<int, std::vector<Real>> neighbor_cache;   // last received weights
  std::map<int, std::int64_t> cache_iteration;       // iteration each entry arrived

  AgentState(int id_, std::vector<Real> theta0, const OptimizerConfig& opt)
      : id(id_),
        theta(std::move(theta0)),
        dual(theta.size(), Real(0)),
        optimizer(theta.size(), opt) {}
};

/// Dual ascent on the consensus constraint: p += rho * sum_j (theta_i -
/// cached theta_j). Uses the most recently received (possibly stale) neighbor
/// weights; every neighbor must have delivered at least once.
template <typename Real>
void dual_update(AgentState<Real>& st, const CommGraph& graph, double rho) {
  const Eigen::Index n = static_cast<Eigen::Index>(st.theta.size());
  Eigen::Map<VecX<Real>> dual(st.dual.data(), n);
  Eigen::Map<const VecX<Real>> theta(st.theta.data(), n);
  for (int j : graph.neighbors(st.id)) {
    const auto it = st.neighbor_cache.find(j);
    if (it == st.neighbor_cache.end())
      throw ContractError("dual_update: agent " + std::to_string(st.id) +
                          " has no cached weights from neighbor " + std::to_string(j) +
                          "; an exchange must precede the first dual update");
    if (it->second.size() != st.theta.size())
      throw ContractError("dual_update: cached weight length mismatch");
    Eigen::Map<const VecX<Real>> nbr(it->second.data(), n);
    dual += static_cast<Real>(rho) * (theta - nbr);
  }
}

namespace detail {

/// grad += dual + 2*rho*degree*theta - rho*(degree*own_anchor + anchor_sum),
/// the gradient of theta^T p + rho * sum_j ||theta - (own + nbr_j)/2||^2.
template <typename Real>
void add_consensus_terms(std::span<Real> grad, std::span<const Real> theta,
                         std::span<const Real> dual, std::span<const Real> own_anchor,
                         std::span<const Real> anchor_sum, int degree, double rho) {
  const Eigen::Index n = static_cast<Eigen::Index>(grad.size());
  Eigen::Map<VecX<Real>> g(grad.data(), n);
  Eigen::Map<const VecX<Real>> p(dual.data(), n);
  g += p;
  if (degree == 0) return;
  Eigen::Map<const VecX<Real>> th(theta.data(), n);
  Eigen::Map<const VecX<Real>> own(own_anchor.data(), n);
  Eigen::Map<const VecX<Real>> nbrs(anchor_sum.data(), n);
  const Real r = static_cast<Real>(rho);
  const Real d = static_cast<Real>(degree);
  g += Real(2) * r * d * th - r * (d * own + nbrs);
}

}  // namespace detail

/// Gradient of the augmented primal objective at `theta`: the data-term
/// gradient plus the dual and proximal terms of the consensus update. The
/// anchors (own and neighbors') stay fixed across all inner steps.
template <typename Real>
std::vector<Real> augmented_primal_grad(std::span<const Real> theta,
                                        std::span<const Real> data_grad,
                                        std::span<const Real> dual,
                                        std::span<const Real> own_anchor,
                                        const std::vector<std::span<const Real>>& neighbor_anchors,
                                        double rho) {
  const std::size_t n = theta.size();
  if (data_grad.size() != n || dual.size() != n || own_anchor.size() != n)
    throw ContractError("augmented_primal_grad: length mismatch");
  std::vector<Real> grad(data_grad.begin(), data_grad.end());
  std::vector<Real> anchor_sum(n, Real(0));
  for (const auto& nbr : neighbor_anchors) {
    if (nbr.size() != n) throw ContractError("augmented_primal_grad: anchor length mismatch");
    for (std::size_t i = 0; i < n; ++i) anchor_sum[i] += nbr[i];
  }
  detail::add_consensus_terms<Real>(grad, theta, dual, own_anchor, anchor_sum,
                                    static_cast<int>(neighbor_anchors.size()), rho);
  return grad;
}

/// One communication round. On comm iterations every agent snapshots its
/// weights, and every agent receives every neighbor's snapshot through the
/// codec with the delivered bytes logged; on off iterations caches keep their
/// stale entries and nothing is logged. Returns whether delivery happened.
template <typename Real>
bool exchange_round(std::vector<AgentState<Real>>& agents, const CommGraph& graph,
                    std::int64_t k, double comm_frequency, const WireCodec<Real>& codec,
                    ExchangeLog& log) {
  if (!is_comm_iteration(k, comm_frequency)) return false;
  std::vector<std::vector<std::uint8_t>> payloads(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) payloads[i] = codec.encode(agents[i].theta);
  for (auto& st : agents) {
    for (int j : graph.neighbors(st.id)) {
      st.neighbor_cache[j] = codec.decode(payloads[static_cast<std::size_t>(j)]);
      st.cache_iteration[j] = k;
      log.records.push_back({k, st.id, j, payloads[static_cast<std::size_t>(j)].size()});
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Training loop (Algorithm: initialize shared weights and zero duals; per
// outer iteration exchange, dual-update, then B inner gradient steps on the
// augmented objective with frozen anchors).

template <typename Real>
struct TrainResult {
  std::vector<std::vector<Real>> weights;  // per agent
  std::vector<std::vector<Real>> duals;    // per agent, final dual variables
  ExchangeLog exchange_log;
  std::vector<TraceRow> trace;
};

enum class ExecutionMode { sequential, parallel };

namespace detail {

template <typename Real>
struct AgentIterationStats {
  double loss = 0.0;
  GradNorms norms;
};

/// Dual update plus B inner steps for one agent at outer iteration k. Touches
/// only this agent's state (neighbor data comes from its own cache), so it is
/// safe to run concurrently across agents.
template <typename Real>
AgentIterationStats<Real> advance_agent(AgentState<Real>& st, Objective<Real>& obj,
                                        const CommGraph& graph, const ConsensusConfig& cfg,
                                        std::int64_t k, std::vector<Real>& grad_scratch) {
  dual_update(st, graph, cfg.rho);

  const std::vector<Real> own_anchor = st.theta;  // frozen across inner steps
  std::vector<Real> anchor_sum(st.theta.size(), Real(0));
  const int degree = graph.degree(st.id);
  for (int j : graph.neighbors(st.id)) {
    const auto& nbr = st.neighbor_cache.at(j);
    for (std::size_t i = 0; i < anchor_sum.size(); ++i) anchor_sum[i] += nbr[i];
  }

  AgentIterationStats<Real> stats;
  for (int b = 0; b < cfg.inner_steps; ++b) {
    const double loss = obj.loss_and_grad(st.theta, grad_scratch, k, b);
    if (!std::isfinite(loss))
      throw NumericError("non-finite loss at agent " + std::to_string(st.id) + ", iteration " +
                         std::to_string(k) + ", inner step " + std::to_string(b));
    add_consensus_terms<Real>(grad_scratch, st.theta, st.dual, own_anchor, anchor_sum, degree,
                              cfg.rho);
    st.optimizer.step(st.theta, grad_scratch);
    stats.loss = loss;
  }
  stats.norms = obj.grad_norms(grad_scratch);
  return stats;
}

template <typename Real>
double states_disagreement(const std::vector<AgentState<Real>>& states, const CommGraph& graph) {
  std::vector<std::vector<Real>> thetas;
  thetas.reserve(states.size());
  for (const auto& st : states) thetas.push_back(st.theta);
  return disagreement_norm<Real>(thetas, graph);
}

}  // namespace detail

template <typename Real>
TrainResult<Real> cadmm_train(const CommGraph& graph,
                              const std::vector<std::shared_ptr<Objective<Real>>>& objectives,
                              const std::vector<Real>& initial_theta, const ConsensusConfig& cfg,
                              const WireCodec<Real>& codec,
                              ExecutionMode mode = ExecutionMode::sequential) {
  cfg.validate();
  const int n = graph.n_agents;
  if (static_cast<int>(objectives.size()) != n)
    throw ContractError("cadmm_train: need one objective per agent");
  for (const auto& obj : objectives)
    if (!obj || obj->dim() != initial_theta.size())
      throw ContractError("cadmm_train: objective dimension does not match initial weights");

  std::vector<AgentState<Real>> states;
  states.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) states.emplace_back(i, initial_theta, cfg.optimizer);

  TrainResult<Real> result;
  result.exchange_log.n_agents = n;
  const std::int64_t K = cfg.outer_iterations;

  if (mode == ExecutionMode::sequential || n == 1) {
    std::vector<Real> grad(initial_theta.size());
    std::vector<detail::AgentIterationStats<Real>> stats(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < K; ++k) {
      exchange_round<Real>(states, graph, k, cfg.comm_frequency, codec, result.exchange_log);
      for (int i = 0; i < n; ++i)
        stats[static_cast<std::size_t>(i)] = detail::advance_agent<Real>(
            states[static_cast<std::size_t>(i)], *objectives[static_cast<std::size_t>(i)], graph,
            cfg, k, grad);
      const double dis = detail::states_disagreement(states, graph);
      for (int i = 0; i < n; ++i) {
        const auto& s = stats[static_cast<std::size_t>(i)];
        result.trace.push_back({k, i, s.loss, dis, s.norms.trunk_total, s.norms.per_layer});
      }
    }
  } else {
    // One worker per agent; exchanges pass immutable encoded snapshots with a
    // barrier between publish and read. RNG streams are keyed by (agent,
    // iteration, step), so the result is bit-identical to sequential mode.
    std::vector<std::vector<std::uint8_t>> payloads(static_cast<std::size_t>(n));
    std::vector<std::vector<ExchangeRecord>> agent_records(static_cast<std::size_t>(n));
    std::vector<std::vector<TraceRow>> agent_trace(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    double shared_disagreement = 0.0;
    std::barrier<> sync(n);

    auto worker = [&](int i) {
      AgentState<Real>& st = states[static_cast<std::size_t>(i)];
      Objective<Real>& obj = *objectives[static_cast<std::size_t>(i)];
      std::vector<Real> grad(initial_theta.size());
      // Every thread must arrive at the barrier exactly 4K times, failed or
      // not, or its peers block forever.
      std::int64_t waits_done = 0;
      auto wait = [&] {
        sync.arrive_and_wait();
        ++waits_done;
      };
      try {
        for (std::int64_t k = 0; k < K; ++k) {
          const bool comm = is_comm_iteration(k, cfg.comm_frequency);
          if (comm) payloads[static_cast<std::size_t>(i)] = codec.encode(st.theta);
          wait();
          if (comm) {
            for (int j : graph.neighbors(i)) {
              st.neighbor_cache[j] = codec.decode(payloads[static_cast<std::size_t>(j)]);
              st.cache_iteration[j] = k;
              agent_records[static_cast<std::size_t>(i)].push_back(
                  {k, i, j, payloads[static_cast<std::size_t>(j)].size()});
            }
          }
          wait();
          const auto stats = detail::advance_agent<Real>(st, obj, graph, cfg, k, grad);
          wait();
          if (i == 0) shared_disagreement = detail::states_disagreement(states, graph);
          wait();
          agent_trace[static_cast<std::size_t>(i)].push_back(
              {k, i, stats.loss, shared_disagreement, stats.norms.trunk_total,
               stats.norms.per_layer});
        }
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
        while (waits_done < 4 * K) {
          sync.arrive_and_wait();
          ++waits_done;
        }
      }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker, i);
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);

    for (const auto& recs : agent_records)
      result.exchange_log.records.insert(result.exchange_log.records.end(), recs.begin(),
                                         recs.end());
    std::sort(result.exchange_log.records.begin(), result.exchange_log.records.end(),
              [](const ExchangeRecord& a, const ExchangeRecord& b) {
                return std::tie(a.iteration, a.agent, a.neighbor) <
                       std::tie(b.iteration, b.agent, b.neighbor);
              });
    for (const auto& rows : agent_trace)
      result.trace.insert(result.trace.end(), rows.begin(), rows.end());
    std::sort(result.trace.begin(), result.trace.end(), [](const TraceRow& a, const TraceRow& b) {
      return std::tie(a.iteration, a.agent) < std::tie(b.iteration, b.agent);
    });
  }

  result.weights.reserve(static_cast<std::size_t>(n));
  result.duals.reserve(static_cast<std::size_t>(n));
  for (auto& st : states) {
    result.weights.push_back(std::move(st.theta));
    result.duals.push_back(std::move(st.dual));
  }
  return result;
}

/// Centralized baseline: plain mini-batch training of one objective with the
/// same optimizer settings. Exactly a one-node consensus run (no neighbors,
/// so the dual stays zero and the proximal terms vanish).
template <typename Real>
TrainResult<Real> centralized_train(const std::shared_ptr<Objective<Real>>& objective,
                                    const std::vector<Real>& initial_theta,
                                    const ConsensusConfig& cfg) {
  const CommGraph solo = CommGraph::from_edges(1, {});
  const RawWireCodec<Real> codec;
  return cadmm_train<Real>(solo, {objective}, initial_theta, cfg, codec,
                           ExecutionMode::sequential);
}

// ---------------------------------------------------------------------------
// Communication accounting

struct CommReportRow {
  int agent = 0;
  std::uint64_t bytes_per_comm_iteration = 0;
  std::int64_t comm_iterations = 0;
  std::uint64_t total_bytes = 0;
};

struct CommReport {
  std::vector<CommReportRow> rows;
  std::uint64_t centralized_baseline_bytes = 0;
};

/// Per-agent byte accounting. The identity total = per-iteration x count is
/// checked, not assumed.
inline CommReport comm_report(const ExchangeLog& log, std::uint64_t centralized_baseline_bytes) {
  CommReport report;
  report.centralized_baseline_bytes = centralized_baseline_bytes;
  for (int agent = 0; agent < log.n_agents; ++agent) {
    CommReportRow row;
    row.agent = agent;
    std::int64_t first_iteration = -1;
    for (const auto& r : log.records) {
      if (r.agent != agent) continue;
      if (first_iteration == -1) first_iteration = r.iteration;
      if (r.iteration == first_iteration) row.bytes_per_comm_iteration += r.bytes;
      row.total_bytes += r.bytes;
    }
    row.comm_iterations = log.comm_iteration_count(agent);
    if (row.total_bytes !=
        row.bytes_per_comm_iteration * static_cast<std::uint64_t>(row.comm_iterations))
      throw NumericError("exchange log is not uniform per comm iteration for agent " +
                         std::to_string(agent));
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace confield
