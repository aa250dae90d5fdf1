// Copyright 2026 The stbem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "stbem/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

namespace stbem {
namespace {

Index circular_difference(Index a, Index b, Index p) {
  const Index d = ((b - a) % p + p) % p;
  return std::min(d, p - d);
}

Index packed(Index i, Index j) { return i * (i + 1) / 2 + j; }

}  // namespace

Index DistributionPlan::owner(Index i, Index j) const {
  if (j > i) std::swap(i, j);
  if (i < 0 || i >= workers) throw ValidationError("block index out of range");
  return owners[static_cast<std::size_t>(packed(i, j))];
}

std::vector<BlockId> DistributionPlan::blocks_of(Index worker) const {
  std::vector<BlockId> out;
  for (Index i = 0; i < workers; ++i)
    for (Index j = 0; j <= i; ++j)
      if (owners[static_cast<std::size_t>(packed(i, j))] == worker) out.emplace_back(i, j);
  return out;
}

std::vector<Index> DistributionPlan::column_owners(Index j) const {
  std::vector<Index> out;
  for (Index i = j; i < workers; ++i) out.push_back(owner(i, j));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

DistributionPlan build_plan(Index workers) {
  if (workers < 1) throw ValidationError("need at least one worker");
  const Index p = workers;
  const Index classes = p / 2;
  DistributionPlan plan;
  plan.workers = p;
  plan.generator_vertices = {0};

  // Greedy difference cover: add the vertex covering most missing classes.
  std::vector<char> covered(static_cast<std::size_t>(classes + 1), 0);
  Index missing = classes;
  while (missing > 0) {
    Index best = -1, best_gain = -1;
    for (Index v = 1; v < p; ++v) {
      if (std::find(plan.generator_vertices.begin(), plan.generator_vertices.end(), v) !=
          plan.generator_vertices.end())
        continue;
      std::set<Index> fresh;
      for (Index u : plan.generator_vertices) {
        const Index d = circular_difference(u, v, p);
        if (!covered[static_cast<std::size_t>(d)]) fresh.insert(d);
      }
      const Index gain = static_cast<Index>(fresh.size());
      if (gain > best_gain) {
        best_gain = gain;
        best = v;
      }
    }
    for (Index u : plan.generator_vertices) {
      const Index d = circular_difference(u, best, p);
      if (!covered[static_cast<std::size_t>(d)]) {
        covered[static_cast<std::size_t>(d)] = 1;
        --missing;
      }
    }
    plan.generator_vertices.push_back(best);
  }
  std::sort(plan.generator_vertices.begin(), plan.generator_vertices.end());

  // One generator edge per class, lexicographically first.
  for (Index d = 1; d <= classes; ++d) {
    bool found = false;
    for (std::size_t x = 0; x < plan.generator_vertices.size() && !found; ++x)
      for (std::size_t y = x + 1; y < plan.generator_vertices.size() && !found; ++y) {
        const Index a = plan.generator_vertices[x], b = plan.generator_vertices[y];
        if (circular_difference(a, b, p) == d) {
          plan.generator_edges.emplace_back(a, b);
          found = true;
        }
      }
  }

  plan.owners.assign(static_cast<std::size_t>(packed(p, 0)), -1);
  for (Index w = 0; w < p; ++w) {
    plan.owners[static_cast<std::size_t>(packed(w, w))] = w;
    for (const auto& [a, b] : plan.generator_edges) {
      // Rotations of a diameter coincide pairwise; the lower half keeps them.
      if (2 * (b - a) == p && w >= p / 2) continue;
      Index i = (a + w) % p, j = (b + w) % p;
      if (j > i) std::swap(i, j);
      auto& slot = plan.owners[static_cast<std::size_t>(packed(i, j))];
      if (slot != -1) throw Error("cyclic decomposition overlaps at a block");
      slot = w;
    }
  }
  for (Index o : plan.owners)
    if (o < 0) throw Error("cyclic decomposition left a block unassigned");
  return plan;
}

Index BalanceReport::total_blocks() const {
  Index sum = 0;
  for (Index b : blocks) sum += b;
  return sum;
}

BalanceReport plan_metrics(const DistributionPlan& plan, double slice_length) {
  BalanceReport report;
  for (Index w = 0; w < plan.workers; ++w) {
    const auto blocks = plan.blocks_of(w);
    std::set<Index> touched, trial_in, test_out;
    for (const auto& [i, j] : blocks) {
      touched.insert(i);
      touched.insert(j);
      if (j != w) trial_in.insert(j);
      if (i != w) test_out.insert(i);
    }
    report.blocks.push_back(static_cast<Index>(blocks.size()));
    report.slices.emplace_back(touched.begin(), touched.end());
    report.comm_estimate.push_back(static_cast<double>(trial_in.size() + test_out.size()) *
                                   slice_length);
  }
  return report;
}

Index slice_bound(Index workers) {
  const double s = (1.0 + std::sqrt(8.0 * static_cast<double>(workers) + 1.0)) / 2.0;
  return static_cast<Index>(std::ceil(s)) + 1;
}

namespace {

void worker_loop(Communicator& comm, const DistributionPlan& plan,
                 const std::vector<BlockMatrix>& operators, const std::vector<BlockId>& resident) {
  const Index me = comm.rank();
  const std::set<BlockId> have(resident.begin(), resident.end());
  std::map<Index, std::vector<Index>> rows_by_column;  // my blocks by column
  for (const auto& [i, j] : plan.blocks_of(me)) rows_by_column[j].push_back(i);

  struct RowState {
    std::vector<VectorXd> parts;
    std::vector<char> got;
    Index count = 0;
  };
  std::map<std::pair<std::uint64_t, int>, RowState> pending;
  std::deque<Message> local;
  auto deliver = [&](Index to, Message msg) {
    if (to == me) {
      msg.source = static_cast<int>(me);
      local.push_back(std::move(msg));
    } else {
      comm.send(static_cast<int>(to), std::move(msg));
    }
  };

  for (;;) {
    Message msg;
    if (!local.empty()) {
      msg = std::move(local.front());
      local.pop_front();
    } else {
      msg = comm.receive();
    }
    if (msg.kind == MessageKind::shutdown) return;
    if (msg.kind == MessageKind::disconnect) {
      if (msg.source == comm.orchestrator_rank()) return;
      continue;
    }
    try {
      if (msg.op < 0 || msg.op >= static_cast<int>(operators.size()))
        throw ProtocolError("unknown operator", msg.row, msg.col);
      const BlockMatrix& a = operators[static_cast<std::size_t>(msg.op)];
      switch (msg.kind) {
        case MessageKind::start: {
          if (static_cast<Index>(msg.data.size()) != a.col_slices()[me].size())
            throw ProtocolError("misdistributed vector slice", me, me);
          for (Index w : plan.column_owners(me)) {
            Message out;
            out.kind = MessageKind::slice;
            out.op = msg.op;
            out.epoch = msg.epoch;
            out.col = me;
            out.data = msg.data;
            deliver(w, std::move(out));
          }
          break;
        }
        case MessageKind::slice: {
          const Index j = msg.col;
          const Eigen::Map<const VectorXd> x(msg.data.data(), static_cast<Index>(msg.data.size()));
          for (Index i : rows_by_column[j]) {
            if (!have.count({i, j})) throw ProtocolError("block not resident on its owner", i, j);
            VectorXd y = VectorXd::Zero(a.row_slices()[static_cast<std::size_t>(i)].size());
            a.apply_block(i, j, x, y);
            Message out;
            out.kind = MessageKind::partial;
            out.op = msg.op;
            out.epoch = msg.epoch;
            out.row = i;
            out.col = j;
            out.data.assign(y.data(), y.data() + y.size());
            deliver(i, std::move(out));
          }
          break;
        }
        case MessageKind::partial: {
          if (msg.row != me || msg.col < 0 || msg.col > me)
            throw ProtocolError("partial sum routed to the wrong row owner", msg.row, msg.col);
          auto& st = pending[{msg.epoch, msg.op}];
          if (st.parts.empty()) {
            st.parts.resize(static_cast<std::size_t>(me + 1));
            st.got.assign(static_cast<std::size_t>(me + 1), 0);
          }
          const auto j = static_cast<std::size_t>(msg.col);
          if (st.got[j]) throw ProtocolError("duplicate partial sum", msg.row, msg.col);
          st.parts[j] = Eigen::Map<const VectorXd>(msg.data.data(),
                                                   static_cast<Index>(msg.data.size()));
          st.got[j] = 1;
          if (++st.count == me + 1) {
            VectorXd y = VectorXd::Zero(a.row_slices()[static_cast<std::size_t>(me)].size());
            for (const auto& part : st.parts) y += part;
            Message out;
            out.kind = MessageKind::result;
            out.op = msg.op;
            out.epoch = msg.epoch;
            out.row = me;
            out.data.assign(y.data(), y.data() + y.size());
            comm.send(comm.orchestrator_rank(), std::move(out));
            pending.erase({msg.epoch, msg.op});
          }
          break;
        }
        default:
          throw ProtocolError("unexpected message", msg.row, msg.col);
      }
    } catch (const std::exception& e) {
      Message out;
      out.kind = MessageKind::error;
      out.op = msg.op;
      out.epoch = msg.epoch;
      out.text = "worker " + std::to_string(me) + ": " + e.what();
      if (const auto* pe = dynamic_cast<const ProtocolError*>(&e)) {
        out.row = pe->block_row();
        out.col = pe->block_col();
      }
      comm.send(comm.orchestrator_rank(), std::move(out));
    }
  }
}

}  // namespace

WorkerPool::WorkerPool(DistributionPlan plan, std::vector<BlockMatrix> operators,
                       TransportKind kind, std::vector<std::vector<BlockId>> resident)
    : plan_(std::move(plan)) {
  if (operators.empty()) throw ValidationError("worker pool needs an operator");
  for (auto& op : operators) operators_.push_back(op.with_slices(plan_.workers));
  if (resident.empty())
    for (Index w = 0; w < plan_.workers; ++w) resident.push_back(plan_.blocks_of(w));
  if (static_cast<Index>(resident.size()) != plan_.workers)
    throw ValidationError("residency list must cover every worker");
  auto main = [this, resident = std::move(resident)](Communicator& comm) {
    worker_loop(comm, plan_, operators_, resident[static_cast<std::size_t>(comm.rank())]);
  };
  cluster_ = std::make_unique<Cluster>(static_cast<int>(plan_.workers), kind, main);
}

WorkerPool::~WorkerPool() {
  auto& comm = cluster_->orchestrator();
  for (Index w = 0; w < plan_.workers; ++w) {
    Message msg;
    msg.kind = MessageKind::shutdown;
    try {
      comm.send(static_cast<int>(w), std::move(msg));
    } catch (...) {
      // Worker already gone.
    }
  }
  cluster_->join();
}

std::vector<VectorXd> WorkerPool::split(int op, const VectorXd& x) const {
  const auto& a = operators_.at(static_cast<std::size_t>(op));
  if (x.size() != a.cols()) throw ValidationError("operand length mismatch");
  std::vector<VectorXd> out;
  for (const auto& cs : a.col_slices()) out.push_back(x.segment(cs.first_index, cs.size()));
  return out;
}

std::vector<VectorXd> WorkerPool::apply(int op, const std::vector<VectorXd>& x_slices) {
  if (op < 0 || op >= static_cast<int>(operators_.size()))
    throw ValidationError("unknown operator index");
  if (static_cast<Index>(x_slices.size()) != plan_.workers)
    throw ProtocolError("vector is not split into one slice per worker", -1, -1);
  const std::uint64_t epoch = ++epoch_;
  auto& comm = cluster_->orchestrator();
  for (Index w = 0; w < plan_.workers; ++w) {
    Message msg;
    msg.kind = MessageKind::start;
    msg.op = op;
    msg.epoch = epoch;
    const auto& x = x_slices[static_cast<std::size_t>(w)];
    msg.data.assign(x.data(), x.data() + x.size());
    comm.send(static_cast<int>(w), std::move(msg));
  }
  std::vector<VectorXd> y(static_cast<std::size_t>(plan_.workers));
  for (Index got = 0; got < plan_.workers;) {
    Message msg = comm.receive();
    if (msg.kind == MessageKind::disconnect)
      throw Error("worker " + std::to_string(msg.source) + " terminated");
    if (msg.epoch != epoch) continue;
    if (msg.kind == MessageKind::error) {
      if (msg.row >= 0) throw ProtocolError(msg.text, msg.row, msg.col);
      throw Error(msg.text);
    }
    if (msg.kind != MessageKind::result) continue;
    y[static_cast<std::size_t>(msg.row)] =
        Eigen::Map<const VectorXd>(msg.data.data(), static_cast<Index>(msg.data.size()));
    ++got;
  }
  return y;
}

VectorXd WorkerPool::apply(int op, const VectorXd& x) {
  const auto parts = apply(op, split(op, x));
  const auto& a = operators_[static_cast<std::size_t>(op)];
  VectorXd y(a.rows());
  for (Index i = 0; i < plan_.workers; ++i) {
    const auto& rs = a.row_slices()[static_cast<std::size_t>(i)];
    y.segment(rs.first_index, rs.size()) = parts[static_cast<std::size_t>(i)];
  }
  return y;
}

VectorXd distributed_matvec(const DistributionPlan& plan, const BlockMatrix& a, const VectorXd& x,
                            TransportKind kind) {
  WorkerPool pool(plan, {a}, kind);
  return pool.apply(0, x);
}

}  // namespace stbem
