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

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "stbem/types.hpp"

namespace stbem {

/// Worker deployment: in-process threads with mailboxes, or forked processes
/// connected pairwise by Unix sockets.
enum class TransportKind { threads, processes };

TransportKind parse_transport(const std::string& name);
std::string to_string(TransportKind kind);

enum class MessageKind : std::int32_t {
  start,       // orchestrator -> worker p: x_p for operator `op`
  slice,       // owner of (j,j) -> block owners in column j: x_j
  partial,     // block owner -> owner of (i,i): A_ij x_j
  result,      // owner of (i,i) -> orchestrator: y_i
  report,      // generic payload (run_workers)
  error,       // worker -> orchestrator, with offending block
  shutdown,    // orchestrator -> worker
  disconnect   // synthesized when a peer endpoint closes
};

struct Message {
  MessageKind kind = MessageKind::report;
  int source = -1;
  int op = 0;
  std::uint64_t epoch = 0;
  Index row = -1;
  Index col = -1;
  std::vector<double> data;
  std::string text;
};

/// Endpoint of a message fabric with `size()` ranks; workers are 0..P-1 and
/// the orchestrator is rank P.
class Communicator {
 public:
  virtual ~Communicator() = default;
  virtual int rank() const = 0;
  virtual int size() const = 0;
  int orchestrator_rank() const { return size() - 1; }
  virtual void send(int to, Message msg) = 0;
  /// Blocks until a message for this rank arrives.
  virtual Message receive() = 0;
};

/// Spawns P workers running `main` and exposes the orchestrator endpoint.
/// Workers must return from `main` (e.g. on a shutdown message) before the
/// cluster is destroyed.
class Cluster {
 public:
  using WorkerMain = std::function<void(Communicator&)>;

  Cluster(int workers, TransportKind kind, WorkerMain main);
  ~Cluster();
  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;

  int workers() const;
  Communicator& orchestrator();
  /// Waits for all workers to finish.
  void join();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Runs job(rank, comm) on P workers. Each worker reports its payload to
/// worker 0, which merges them in rank order and hands the result back.
/// Worker exceptions abort the run with an Error naming the worker.
std::vector<std::vector<double>> run_workers(
    int workers, TransportKind kind,
    const std::function<std::vector<double>(int, Communicator&)>& job);

}  // namespace stbem
