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

#include "stbem/transport.hpp"

#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

namespace stbem {

TransportKind parse_transport(const std::string& name) {
  if (name == "threads") return TransportKind::threads;
  if (name == "processes") return TransportKind::processes;
  throw ValidationError("unknown transport '" + name + "' (threads|processes)");
}

std::string to_string(TransportKind kind) {
  return kind == TransportKind::threads ? "threads" : "processes";
}

namespace {

class Mailbox {
 public:
  void push(Message msg) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      queue_.push_back(std::move(msg));
    }
    cv_.notify_one();
  }
  Message pop() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return !queue_.empty(); });
    Message msg = std::move(queue_.front());
    queue_.pop_front();
    return msg;
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Message> queue_;
};

// ---------------------------------------------------------------- threads

class ThreadCommunicator : public Communicator {
 public:
  ThreadCommunicator(int rank, std::vector<Mailbox>* boxes) : rank_(rank), boxes_(boxes) {}
  int rank() const override { return rank_; }
  int size() const override { return static_cast<int>(boxes_->size()); }
  void send(int to, Message msg) override {
    msg.source = rank_;
    (*boxes_)[static_cast<std::size_t>(to)].push(std::move(msg));
  }
  Message receive() override { return (*boxes_)[static_cast<std::size_t>(rank_)].pop(); }

 private:
  int rank_;
  std::vector<Mailbox>* boxes_;
};

// -------------------------------------------------------------- processes

struct WireHeader {
  std::int32_t kind;
  std::int32_t source;
  std::int32_t op;
  std::int32_t pad;
  std::uint64_t epoch;
  std::int64_t row;
  std::int64_t col;
  std::uint64_t ndata;
  std::uint64_t ntext;
};

bool write_all(int fd, const void* buf, std::size_t len) {
  const char* p = static_cast<const char*>(buf);
  while (len > 0) {
    const ssize_t n = ::send(fd, p, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

bool read_all(int fd, void* buf, std::size_t len) {
  char* p = static_cast<char*>(buf);
  while (len > 0) {
    const ssize_t n = ::read(fd, p, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    if (n == 0) return false;
    p += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

class SocketCommunicator : public Communicator {
 public:
  // fds[peer] is this rank's socket to peer (-1 for itself).
  SocketCommunicator(int rank, std::vector<int> fds)
      : rank_(rank), fds_(std::move(fds)), write_mutex_(fds_.size()) {
    for (std::size_t peer = 0; peer < fds_.size(); ++peer)
      if (fds_[peer] >= 0) readers_.emplace_back([this, peer] { read_loop(static_cast<int>(peer)); });
  }

  ~SocketCommunicator() override { close(); }

  int rank() const override { return rank_; }
  int size() const override { return static_cast<int>(fds_.size()); }

  void send(int to, Message msg) override {
    msg.source = rank_;
    if (to == rank_) {
      inbox_.push(std::move(msg));
      return;
    }
    WireHeader h{static_cast<std::int32_t>(msg.kind), msg.source, msg.op, 0, msg.epoch,
                 static_cast<std::int64_t>(msg.row), static_cast<std::int64_t>(msg.col),
                 msg.data.size(), msg.text.size()};
    const int fd = fds_[static_cast<std::size_t>(to)];
    std::lock_guard<std::mutex> lock(write_mutex_[static_cast<std::size_t>(to)]);
    if (!write_all(fd, &h, sizeof h) ||
        !write_all(fd, msg.data.data(), msg.data.size() * sizeof(double)) ||
        !write_all(fd, msg.text.data(), msg.text.size()))
      throw Error("transport: lost connection to rank " + std::to_string(to));
  }

  Message receive() override { return inbox_.pop(); }

  void close() {
    for (int fd : fds_)
      if (fd >= 0) ::shutdown(fd, SHUT_RDWR);
    for (auto& t : readers_)
      if (t.joinable()) t.join();
    for (int& fd : fds_)
      if (fd >= 0) {
        ::close(fd);
        fd = -1;
      }
  }

 private:
  void read_loop(int peer) {
    const int fd = fds_[static_cast<std::size_t>(peer)];
    for (;;) {
      WireHeader h{};
      Message msg;
      bool ok = read_all(fd, &h, sizeof h);
      if (ok) {
        msg.kind = static_cast<MessageKind>(h.kind);
        msg.source = h.source;
        msg.op = h.op;
        msg.epoch = h.epoch;
        msg.row = static_cast<Index>(h.row);
        msg.col = static_cast<Index>(h.col);
        msg.data.resize(h.ndata);
        msg.text.resize(h.ntext);
        ok = read_all(fd, msg.data.data(), h.ndata * sizeof(double)) &&
             read_all(fd, msg.text.data(), h.ntext);
      }
      if (!ok) {
        Message gone;
        gone.kind = MessageKind::disconnect;
        gone.source = peer;
        inbox_.push(std::move(gone));
        return;
      }
      inbox_.push(std::move(msg));
    }
  }

  int rank_;
  std::vector<int> fds_;
  std::vector<std::mutex> write_mutex_;
  Mailbox inbox_;
  std::vector<std::thread> readers_;
};

void report_failure(Communicator& comm, const std::exception& e) {
  Message msg;
  msg.kind = MessageKind::error;
  msg.text = "worker " + std::to_string(comm.rank()) + ": " + e.what();
  if (const auto* pe = dynamic_cast<const ProtocolError*>(&e)) {
    msg.row = pe->block_row();
    msg.col = pe->block_col();
  }
  try {
    comm.send(comm.orchestrator_rank(), std::move(msg));
  } catch (...) {
    // Orchestrator gone; nothing left to tell.
  }
}

}  // namespace

struct Cluster::Impl {
  int workers = 0;
  TransportKind kind = TransportKind::threads;
  bool joined = false;
  // threads
  std::vector<Mailbox> boxes;
  std::vector<std::unique_ptr<ThreadCommunicator>> thread_comms;
  std::vector<std::thread> threads;
  // processes
  std::vector<pid_t> children;
  std::unique_ptr<SocketCommunicator> socket_comm;

  Communicator* orchestrator = nullptr;
};

Cluster::Cluster(int workers, TransportKind kind, WorkerMain main) : impl_(new Impl) {
  if (workers < 1) throw ValidationError("need at least one worker");
  impl_->workers = workers;
  impl_->kind = kind;
  const int size = workers + 1;
  if (kind == TransportKind::threads) {
    impl_->boxes = std::vector<Mailbox>(static_cast<std::size_t>(size));
    for (int r = 0; r < size; ++r)
      impl_->thread_comms.push_back(std::make_unique<ThreadCommunicator>(r, &impl_->boxes));
    for (int r = 0; r < workers; ++r) {
      Communicator* comm = impl_->thread_comms[static_cast<std::size_t>(r)].get();
      impl_->threads.emplace_back([comm, main] {
        try {
          main(*comm);
        } catch (const std::exception& e) {
          report_failure(*comm, e);
        }
      });
    }
    impl_->orchestrator = impl_->thread_comms.back().get();
    return;
  }

  // fds[a][b]: rank a's end of the (a, b) socket pair.
  std::vector<std::vector<int>> fds(static_cast<std::size_t>(size),
                                    std::vector<int>(static_cast<std::size_t>(size), -1));
  for (int a = 0; a < size; ++a)
    for (int b = a + 1; b < size; ++b) {
      int sv[2];
      if (::socketpair(AF_UNIX, SOCK_STREAM, 0, sv) != 0)
        throw Error(std::string("socketpair failed: ") + std::strerror(errno));
      fds[a][b] = sv[0];
      fds[b][a] = sv[1];
    }
  for (int r = 0; r < workers; ++r) {
    const pid_t pid = ::fork();
    if (pid < 0) throw Error(std::string("fork failed: ") + std::strerror(errno));
    if (pid == 0) {
      for (int a = 0; a < size; ++a)
        if (a != r)
          for (int b = 0; b < size; ++b)
            if (fds[a][b] >= 0) ::close(fds[a][b]);
      int status = 0;
      {
        SocketCommunicator comm(r, fds[static_cast<std::size_t>(r)]);
        try {
          main(comm);
        } catch (const std::exception& e) {
          report_failure(comm, e);
          status = 1;
        }
      }
      ::_exit(status);
    }
    impl_->children.push_back(pid);
  }
  for (int a = 0; a < workers; ++a)
    for (int b = 0; b < size; ++b)
      if (fds[a][b] >= 0) ::close(fds[a][b]);
  impl_->socket_comm = std::make_unique<SocketCommunicator>(workers, fds[static_cast<std::size_t>(workers)]);
  impl_->orchestrator = impl_->socket_comm.get();
}

Cluster::~Cluster() { join(); }

int Cluster::workers() const { return impl_->workers; }

Communicator& Cluster::orchestrator() { return *impl_->orchestrator; }

void Cluster::join() {
  if (impl_->joined) return;
  impl_->joined = true;
  for (auto& t : impl_->threads) t.join();
  for (pid_t pid : impl_->children) {
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
  }
  if (impl_->socket_comm) impl_->socket_comm->close();
}

namespace {

// Communicator seen by a run_workers job. Reports addressed to worker 0 are
// set aside for the merge; a vanished peer becomes an error.
class JobCommunicator : public Communicator {
 public:
  explicit JobCommunicator(Communicator& inner) : inner_(inner) {}
  int rank() const override { return inner_.rank(); }
  int size() const override { return inner_.size(); }
  void send(int to, Message msg) override { inner_.send(to, std::move(msg)); }
  Message receive() override {
    for (;;) {
      Message msg = inner_.receive();
      if (msg.kind == MessageKind::disconnect)
        throw Error("worker " + std::to_string(msg.source) + " terminated");
      if (rank() == 0 && (msg.kind == MessageKind::report || msg.kind == MessageKind::error)) {
        reports_.push_back(std::move(msg));
        continue;
      }
      return msg;
    }
  }
  /// Next message for the merge, stashed reports first.
  Message next() {
    if (reports_.empty()) return inner_.receive();
    Message msg = std::move(reports_.front());
    reports_.pop_front();
    return msg;
  }

 private:
  Communicator& inner_;
  std::deque<Message> reports_;
};

}  // namespace

std::vector<std::vector<double>> run_workers(
    int workers, TransportKind kind,
    const std::function<std::vector<double>(int, Communicator&)>& job) {
  auto main = [workers, &job](Communicator& comm) {
    const int rank = comm.rank();
    JobCommunicator job_comm(comm);
    Message mine;
    mine.kind = MessageKind::report;
    mine.row = rank;
    try {
      mine.data = job(rank, job_comm);
    } catch (const std::exception& e) {
      mine.kind = MessageKind::error;
      mine.text = "worker " + std::to_string(rank) + ": " + e.what();
    }
    if (rank != 0) {
      comm.send(0, std::move(mine));
      // Stay reachable until worker 0 has merged everything.
      for (;;) {
        const Message msg = comm.receive();
        if (msg.kind == MessageKind::shutdown) return;
        if (msg.kind == MessageKind::disconnect && msg.source == 0) return;
      }
    }
    // Worker 0 merges: concatenated payloads preceded by their lengths.
    std::vector<std::vector<double>> parts(static_cast<std::size_t>(workers));
    std::vector<char> done(static_cast<std::size_t>(workers), 0);
    std::string failure = mine.kind == MessageKind::error ? mine.text : "";
    parts[0] = std::move(mine.data);
    done[0] = 1;
    for (int got = 1; got < workers;) {
      Message msg = job_comm.next();
      const bool peer = msg.source > 0 && msg.source < workers;
      if (!peer || done[static_cast<std::size_t>(msg.source)]) continue;
      if (msg.kind == MessageKind::disconnect) {
        if (failure.empty()) failure = "worker " + std::to_string(msg.source) + " terminated";
      } else if (msg.kind == MessageKind::error) {
        if (failure.empty()) failure = msg.text;
      } else if (msg.kind == MessageKind::report) {
        parts[static_cast<std::size_t>(msg.source)] = std::move(msg.data);
      } else {
        continue;  // late job traffic
      }
      done[static_cast<std::size_t>(msg.source)] = 1;
      ++got;
    }
    for (int w = 1; w < workers; ++w) {
      Message bye;
      bye.kind = MessageKind::shutdown;
      try {
        comm.send(w, std::move(bye));
      } catch (const Error&) {
        // already gone
      }
    }
    Message merged;
    if (!failure.empty()) {
      merged.kind = MessageKind::error;
      merged.text = failure;
    } else {
      merged.kind = MessageKind::report;
      for (const auto& p : parts) {
        merged.data.push_back(static_cast<double>(p.size()));
        merged.data.insert(merged.data.end(), p.begin(), p.end());
      }
    }
    comm.send(comm.orchestrator_rank(), std::move(merged));
  };
  Cluster cluster(workers, kind, main);
  Message msg;
  for (;;) {
    msg = cluster.orchestrator().receive();
    if (msg.kind == MessageKind::report || msg.kind == MessageKind::error) break;
    if (msg.kind == MessageKind::disconnect && msg.source == 0) {
      msg.kind = MessageKind::error;
      msg.text = "worker 0 terminated";
      break;
    }
  }
  cluster.join();
  if (msg.kind == MessageKind::error) throw Error(msg.text);
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < msg.data.size();) {
    const auto n = static_cast<std::size_t>(msg.data[i++]);
    out.emplace_back(msg.data.begin() + static_cast<std::ptrdiff_t>(i),
                     msg.data.begin() + static_cast<std::ptrdiff_t>(i + n));
    i += n;
  }
  return out;
}

}  // namespace stbem
