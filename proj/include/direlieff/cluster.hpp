#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "direlieff/pipeline.hpp"
#include "direlieff/wire.hpp"

namespace direlieff::cluster {

class ClusterError : public Error {
 public:
  using Error::Error;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// Parses "host:port".
  static Endpoint parse(const std::string& text);
  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Owned TCP stream socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  /// Connects, retrying refused connections until `retry_ms` elapses.
  static Socket connect(const Endpoint& endpoint, int retry_ms = 0);

  bool valid() const noexcept { return fd_ >= 0; }
  int fd() const noexcept { return fd_; }
  void close() noexcept;

  void send_all(std::span<const std::uint8_t> bytes);
  void send_frame(const Frame& frame, std::size_t max_payload = kMaxFramePayload);
  /// Returns false on a clean end of stream before any header byte.
  bool recv_exact(std::span<std::uint8_t> out);
  /// Throws ProtocolError on a malformed header, Error on a broken stream.
  std::optional<Frame> recv_frame(std::size_t max_payload = kMaxFramePayload);

 private:
  int fd_ = -1;
};

class Listener {
 public:
  /// Binds and listens; port 0 picks a free port.
  explicit Listener(const Endpoint& endpoint);

  Endpoint endpoint() const { return bound_; }
  Socket accept();

 private:
  Socket socket_;
  Endpoint bound_;
};

struct WorkerOptions {
  std::size_t threads = 1;
  std::size_t max_result_bytes = std::size_t{6} << 30;
  std::string name = "worker";
};

/// Exit codes of a worker session.
enum WorkerExit : int {
  worker_ok = 0,             ///< SHUTDOWN received
  worker_connection_lost = 1,
  worker_protocol_error = 3,  ///< malformed frame; ERROR sent, connection closed
};

/// Accepts one driver connection, sends REGISTER, then serves
/// ASSIGN_PARTITIONS and RUN_STAGE requests until SHUTDOWN.
int serve_worker(Listener& listener, const WorkerOptions& options, std::ostream* log = nullptr);

/// Binds `listen_addr`, prints "listening <host>:<port>" on `announce` and
/// serves one session.
int serve_worker(const Endpoint& listen_addr, const WorkerOptions& options,
                 std::ostream& announce, std::ostream* log = nullptr);

/// Names of the stages every worker can run.
const std::vector<std::string>& stage_names();

struct ClusterOptions {
  std::size_t max_result_bytes = std::size_t{6} << 30;
  int connect_retry_ms = 5000;
};

/// Driver side: ships partition blocks to workers once, then runs named
/// stages on them. Partition p lives on worker p % workers.
class ClusterBackend final : public relieff::ExecutionBackend {
 public:
  ClusterBackend(std::vector<Endpoint> workers, const relieff::InstanceDataset& dataset,
                 ClusterOptions options = {});
  ~ClusterBackend() override;

  ClusterBackend(const ClusterBackend&) = delete;
  ClusterBackend& operator=(const ClusterBackend&) = delete;

  const core::Schema& schema() const override { return schema_; }
  std::uint64_t count() override;
  relieff::Bounds bounds() override;
  std::vector<std::uint64_t> class_counts() override;
  std::vector<core::Instance> take_sample(std::size_t m, std::uint64_t seed) override;
  relieff::NeighborMatrix find_neighbors(const relieff::NeighborQuery& query) override;

  /// Sends RUN_STAGE to every worker with a config (std::nullopt skips that
  /// worker) and gathers the STAGE_RESULT payloads in worker order.
  std::vector<std::optional<std::vector<std::uint8_t>>> run_stage(
      const std::string& stage,
      const std::vector<std::optional<std::vector<std::uint8_t>>>& configs);
  std::vector<std::vector<std::uint8_t>> run_stage(const std::string& stage,
                                                   const std::vector<std::uint8_t>& config = {});

  /// Sends SHUTDOWN to every worker; idempotent.
  void shutdown();

  std::size_t worker_count() const noexcept { return workers_.size(); }

 private:
  struct Worker {
    Endpoint endpoint;
    Socket socket;
    std::string name;
  };

  std::vector<std::uint8_t> expect_result(Worker& worker);
  [[noreturn]] void fail(const Worker& worker, const std::string& what);

  std::vector<Worker> workers_;
  core::Schema schema_;
  std::vector<std::size_t> partition_sizes_;
  ClusterOptions options_;
  bool broken_ = false;
};

}  // namespace direlieff::cluster
