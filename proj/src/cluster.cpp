#include "direlieff/cluster.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <map>
#include <ostream>
#include <thread>

#include "direlieff/ingestion.hpp"

namespace direlieff::cluster {

namespace {

enum class ErrorCode : std::uint8_t { capacity = 1, protocol = 2, stage = 3 };

std::string errno_text(const std::string& what) { return what + ": " + std::strerror(errno); }

sockaddr_in resolve(const Endpoint& endpoint) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(endpoint.port);
  if (inet_pton(AF_INET, endpoint.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (getaddrinfo(endpoint.host.c_str(), nullptr, &hints, &found) != 0 || found == nullptr) {
    throw ClusterError("cannot resolve host '" + endpoint.host + "'");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(found->ai_addr)->sin_addr;
  freeaddrinfo(found);
  return addr;
}

Frame error_frame(ErrorCode code, const std::string& message, std::uint64_t bytes = 0,
                  std::uint64_t limit = 0) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(code));
  w.u64(bytes);
  w.u64(limit);
  w.str(message);
  return {MessageType::error, w.take()};
}

struct WorkerState {
  explicit WorkerState(const WorkerOptions& options)
      : engine(engine::EngineConfig{options.threads, options.max_result_bytes}) {}

  bool assigned = false;
  core::Schema schema;
  std::map<std::uint32_t, std::size_t> local_index;  // global partition -> local block
  relieff::InstanceDataset dataset;
  engine::Engine engine;
};

using StageHandler = std::function<std::vector<std::uint8_t>(WorkerState&, ByteReader&)>;

const std::map<std::string, StageHandler>& registry() {
  static const std::map<std::string, StageHandler> stages = {
      {"count",
       [](WorkerState& s, ByteReader& r) {
         r.expect_end();
         ByteWriter w;
         w.u64(s.engine.count(s.dataset));
         return w.take();
       }},
      {"bounds",
       [](WorkerState& s, ByteReader& r) {
         r.expect_end();
         ByteWriter w;
         const auto bounds = relieff::bounds_stage(s.engine, s.dataset);
         w.u8(bounds ? 1 : 0);
         if (bounds) {
           w.u32(static_cast<std::uint32_t>(bounds->min.size()));
           for (double v : bounds->min) w.f64(v);
           for (double v : bounds->max) w.f64(v);
         }
         return w.take();
       }},
      {"class_counts",
       [](WorkerState& s, ByteReader& r) {
         const auto classes = r.u32();
         r.expect_end();
         ByteWriter w;
         for (auto c : relieff::class_count_stage(s.engine, s.dataset, classes)) w.u64(c);
         return w.take();
       }},
      {"neighbors",
       [](WorkerState& s, ByteReader& r) {
         const auto query = read_query(r);
         r.expect_end();
         if (query.ranges.size() != s.schema.feature_count() ||
             query.classes != s.schema.class_count()) {
           throw InvalidArgument("neighbor query does not match the assigned schema");
         }
         const auto matrix = relieff::neighbor_stage(s.engine, s.dataset, query);
         ByteWriter w;
         write_neighbors(w, matrix);
         return w.take();
       }},
      {"fetch",
       [](WorkerState& s, ByteReader& r) {
         const auto n = r.u32();
         std::vector<std::pair<std::size_t, std::size_t>> where;
         for (std::uint32_t i = 0; i < n; ++i) {
           const auto partition = r.u32();
           const auto offset = r.u64();
           auto it = s.local_index.find(partition);
           if (it == s.local_index.end()) {
             throw InvalidArgument("partition " + std::to_string(partition) +
                                   " is not assigned to this worker");
           }
           where.emplace_back(it->second, static_cast<std::size_t>(offset));
         }
         r.expect_end();
         ByteWriter w;
         write_instances(w, s.engine.fetch(s.dataset, where), s.schema.feature_count());
         return w.take();
       }},
  };
  return stages;
}

void assign(WorkerState& state, const Frame& frame) {
  ByteReader r(frame.payload);
  auto schema = io::schema_from_json(r.str());
  const auto partitions = r.u32();
  std::vector<std::vector<core::Instance>> blocks;
  std::map<std::uint32_t, std::size_t> index;
  for (std::uint32_t p = 0; p < partitions; ++p) {
    const auto global = r.u32();
    index[global] = blocks.size();
    blocks.push_back(read_instances(r, schema.feature_count()));
  }
  r.expect_end();
  if (blocks.empty()) blocks.emplace_back();
  state.dataset = relieff::InstanceDataset(std::move(blocks)).with_schema(schema);
  state.schema = std::move(schema);
  state.local_index = std::move(index);
  state.assigned = true;
}

}  // namespace

Endpoint Endpoint::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw InvalidArgument("expected host:port, got '" + text + "'");
  }
  Endpoint e;
  e.host = text.substr(0, colon);
  const auto port_text = text.substr(colon + 1);
  std::size_t used = 0;
  unsigned long port = 0;
  try {
    port = std::stoul(port_text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port_text.size() || port > 65535) {
    throw InvalidArgument("bad port in '" + text + "'");
  }
  e.port = static_cast<std::uint16_t>(port);
  return e;
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void Socket::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Socket Socket::connect(const Endpoint& endpoint, int retry_ms) {
  const auto addr = resolve(endpoint);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(retry_ms);
  for (;;) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw ClusterError(errno_text("socket"));
    if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
      int one = 1;
      ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return s;
    }
    const int err = errno;
    if (err != ECONNREFUSED || std::chrono::steady_clock::now() >= deadline) {
      errno = err;
      throw ClusterError(errno_text("cannot connect to " + endpoint.str()));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

void Socket::send_all(std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const auto n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(errno_text("send"));
    }
    sent += static_cast<std::size_t>(n);
  }
}

void Socket::send_frame(const Frame& frame, std::size_t max_payload) {
  send_all(encode_frame(frame, max_payload));
}

bool Socket::recv_exact(std::span<std::uint8_t> out) {
  std::size_t got = 0;
  while (got < out.size()) {
    const auto n = ::recv(fd_, out.data() + got, out.size() - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(errno_text("recv"));
    }
    if (n == 0) {
      if (got == 0) return false;
      throw Error("connection closed mid-frame");
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<Frame> Socket::recv_frame(std::size_t max_payload) {
  std::uint8_t header_bytes[kFrameHeaderBytes];
  if (!recv_exact(header_bytes)) return std::nullopt;
  const auto header = decode_header(header_bytes, max_payload);
  Frame frame{header.type, std::vector<std::uint8_t>(header.length)};
  if (header.length > 0 && !recv_exact(frame.payload)) {
    throw Error("connection closed mid-frame");
  }
  return frame;
}

Listener::Listener(const Endpoint& endpoint) {
  auto addr = resolve(endpoint);
  socket_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
  if (!socket_.valid()) throw ClusterError(errno_text("socket"));
  int one = 1;
  ::setsockopt(socket_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(socket_.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    throw ClusterError(errno_text("cannot bind " + endpoint.str()));
  }
  if (::listen(socket_.fd(), 4) != 0) throw ClusterError(errno_text("listen"));
  socklen_t len = sizeof addr;
  ::getsockname(socket_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  bound_ = endpoint;
  bound_.port = ntohs(addr.sin_port);
}

Socket Listener::accept() {
  for (;;) {
    const int fd = ::accept(socket_.fd(), nullptr, nullptr);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return Socket(fd);
    }
    if (errno != EINTR) throw ClusterError(errno_text("accept"));
  }
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, handler] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

int serve_worker(Listener& listener, const WorkerOptions& options, std::ostream* log) {
  Socket conn = listener.accept();
  WorkerState state(options);
  auto note = [&](const std::string& line) {
    if (log) *log << options.name << ": " << line << std::endl;
  };
  try {
    ByteWriter hello;
    hello.str(options.name);
    hello.u32(static_cast<std::uint32_t>(options.threads));
    conn.send_frame({MessageType::register_worker, hello.take()});

    for (;;) {
      std::optional<Frame> frame;
      try {
        frame = conn.recv_frame(options.max_result_bytes);
      } catch (const ProtocolError& e) {
        note(std::string("protocol violation: ") + e.what());
        conn.send_frame(error_frame(ErrorCode::protocol, e.what()));
        conn.close();
        return worker_protocol_error;
      }
      if (!frame) {
        note("driver closed the connection");
        return worker_connection_lost;
      }

      switch (frame->type) {
        case MessageType::shutdown:
          note("shutdown");
          return worker_ok;

        case MessageType::assign_partitions:
          try {
            assign(state, *frame);
          } catch (const std::exception& e) {
            conn.send_frame(error_frame(ErrorCode::protocol, e.what()));
            conn.close();
            return worker_protocol_error;
          }
          {
            ByteWriter w;
            w.u64(state.engine.count(state.dataset));
            conn.send_frame({MessageType::stage_result, w.take()});
          }
          break;

        case MessageType::run_stage: {
          ByteReader r(frame->payload);
          std::string name;
          try {
            name = r.str();
          } catch (const ProtocolError& e) {
            conn.send_frame(error_frame(ErrorCode::protocol, e.what()));
            conn.close();
            return worker_protocol_error;
          }
          const auto& stages = registry();
          auto it = stages.find(name);
          if (it == stages.end()) {
            conn.send_frame(error_frame(ErrorCode::stage, "unknown stage '" + name + "'"));
            break;
          }
          if (!state.assigned) {
            conn.send_frame(error_frame(ErrorCode::stage, "no partitions assigned"));
            break;
          }
          try {
            auto result = it->second(state, r);
            if (result.size() > std::min(options.max_result_bytes, kMaxFramePayload)) {
              throw CapacityError(result.size(),
                                  std::min(options.max_result_bytes, kMaxFramePayload));
            }
            conn.send_frame({MessageType::stage_result, std::move(result)});
          } catch (const CapacityError& e) {
            conn.send_frame(error_frame(ErrorCode::capacity, e.what(), e.bytes(), e.limit()));
          } catch (const ProtocolError& e) {
            conn.send_frame(error_frame(ErrorCode::protocol, e.what()));
            conn.close();
            return worker_protocol_error;
          } catch (const std::exception& e) {
            conn.send_frame(error_frame(ErrorCode::stage, e.what()));
          }
          break;
        }

        default:
          conn.send_frame(error_frame(ErrorCode::protocol,
                                      "unexpected " + to_string(frame->type) + " from driver"));
          conn.close();
          return worker_protocol_error;
      }
    }
  } catch (const std::exception& e) {
    note(std::string("connection lost: ") + e.what());
    return worker_connection_lost;
  }
}

int serve_worker(const Endpoint& listen_addr, const WorkerOptions& options,
                 std::ostream& announce, std::ostream* log) {
  Listener listener(listen_addr);
  announce << "listening " << listener.endpoint().str() << std::endl;
  return serve_worker(listener, options, log);
}

ClusterBackend::ClusterBackend(std::vector<Endpoint> workers,
                               const relieff::InstanceDataset& dataset, ClusterOptions options)
    : options_(options) {
  if (workers.empty()) throw InvalidArgument("cluster backend needs at least one worker");
  if (!dataset.schema()) throw InvalidArgument("cluster backend needs a dataset with a schema");
  schema_ = *dataset.schema();
  partition_sizes_ = dataset.partition_sizes();

  for (auto& endpoint : workers) {
    Worker w;
    w.endpoint = endpoint;
    w.name = endpoint.str();
    try {
      w.socket = Socket::connect(endpoint, options_.connect_retry_ms);
    } catch (const Error& e) {
      broken_ = true;
      throw ClusterError("worker " + endpoint.str() + ": " + e.what());
    }
    workers_.push_back(std::move(w));
    auto& worker = workers_.back();
    std::optional<Frame> hello;
    try {
      hello = worker.socket.recv_frame(options_.max_result_bytes);
    } catch (const Error& e) {
      fail(worker, e.what());
    }
    if (!hello || hello->type != MessageType::register_worker) {
      fail(worker, "expected REGISTER");
    }
    ByteReader r(hello->payload);
    worker.name = r.str() + "@" + endpoint.str();
  }

  const std::string schema_json = io::schema_to_json(schema_);
  const std::size_t nworkers = workers_.size();
  for (std::size_t w = 0; w < nworkers; ++w) {
    ByteWriter out;
    out.str(schema_json);
    std::uint32_t owned = 0;
    for (std::size_t p = w; p < partition_sizes_.size(); p += nworkers) ++owned;
    out.u32(owned);
    for (std::size_t p = w; p < partition_sizes_.size(); p += nworkers) {
      out.u32(static_cast<std::uint32_t>(p));
      write_instances(out, dataset.block(p), schema_.feature_count());
    }
    try {
      workers_[w].socket.send_frame({MessageType::assign_partitions, out.take()});
    } catch (const Error& e) {
      fail(workers_[w], e.what());
    }
  }
  for (std::size_t w = 0; w < nworkers; ++w) {
    auto payload = expect_result(workers_[w]);
    ByteReader r(payload);
    std::uint64_t expected = 0;
    for (std::size_t p = w; p < partition_sizes_.size(); p += nworkers) {
      expected += partition_sizes_[p];
    }
    if (r.u64() != expected) fail(workers_[w], "stored a different number of instances");
  }
}

ClusterBackend::~ClusterBackend() { shutdown(); }

void ClusterBackend::shutdown() {
  for (auto& w : workers_) {
    if (!w.socket.valid()) continue;
    try {
      w.socket.send_frame({MessageType::shutdown, {}});
    } catch (const std::exception&) {
      // the worker is gone already
    }
    w.socket.close();
  }
}

void ClusterBackend::fail(const Worker& worker, const std::string& what) {
  broken_ = true;
  throw ClusterError("worker " + worker.name + ": " + what);
}

std::vector<std::uint8_t> ClusterBackend::expect_result(Worker& worker) {
  std::optional<Frame> frame;
  try {
    frame = worker.socket.recv_frame(options_.max_result_bytes);
  } catch (const Error& e) {
    fail(worker, e.what());
  }
  if (!frame) fail(worker, "connection closed");
  if (frame->type == MessageType::error) {
    ByteReader r(frame->payload);
    const auto code = static_cast<ErrorCode>(r.u8());
    const auto bytes = r.u64();
    const auto limit = r.u64();
    const auto message = r.str();
    broken_ = true;
    if (code == ErrorCode::capacity) throw CapacityError(bytes, limit);
    throw ClusterError("worker " + worker.name + " reported: " + message);
  }
  if (frame->type != MessageType::stage_result) {
    fail(worker, "unexpected " + to_string(frame->type));
  }
  return std::move(frame->payload);
}

std::vector<std::optional<std::vector<std::uint8_t>>> ClusterBackend::run_stage(
    const std::string& stage,
    const std::vector<std::optional<std::vector<std::uint8_t>>>& configs) {
  if (broken_) throw ClusterError("cluster backend is unusable after an earlier failure");
  if (configs.size() != workers_.size()) throw InvalidArgument("one config per worker expected");
  for (std::size_t w = 0; w < workers_.size(); ++w) {
    if (!configs[w]) continue;
    ByteWriter out;
    out.str(stage);
    out.bytes(*configs[w]);
    try {
      workers_[w].socket.send_frame({MessageType::run_stage, out.take()});
    } catch (const Error& e) {
      fail(workers_[w], e.what());
    }
  }
  std::vector<std::optional<std::vector<std::uint8_t>>> results(workers_.size());
  std::size_t bytes = 0;
  for (std::size_t w = 0; w < workers_.size(); ++w) {
    if (!configs[w]) continue;
    results[w] = expect_result(workers_[w]);
    bytes += results[w]->size();
  }
  if (bytes > options_.max_result_bytes) {
    throw CapacityError(bytes, options_.max_result_bytes);
  }
  return results;
}

std::vector<std::vector<std::uint8_t>> ClusterBackend::run_stage(
    const std::string& stage, const std::vector<std::uint8_t>& config) {
  std::vector<std::optional<std::vector<std::uint8_t>>> configs(workers_.size(), config);
  auto results = run_stage(stage, configs);
  std::vector<std::vector<std::uint8_t>> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

std::uint64_t ClusterBackend::count() {
  std::uint64_t n = 0;
  for (const auto& payload : run_stage("count")) {
    ByteReader r(payload);
    n += r.u64();
  }
  return n;
}

relieff::Bounds ClusterBackend::bounds() {
  std::optional<relieff::Bounds> total;
  for (const auto& payload : run_stage("bounds")) {
    ByteReader r(payload);
    if (r.u8() == 0) continue;
    const auto a = r.u32();
    relieff::Bounds b;
    b.min.resize(a);
    b.max.resize(a);
    for (auto& v : b.min) v = r.f64();
    for (auto& v : b.max) v = r.f64();
    total = total ? relieff::merge_bounds(std::move(*total), b) : std::move(b);
  }
  if (!total) throw InvalidArgument("cannot compute feature ranges of an empty dataset");
  return std::move(*total);
}

std::vector<std::uint64_t> ClusterBackend::class_counts() {
  ByteWriter cfg;
  cfg.u32(static_cast<std::uint32_t>(schema_.class_count()));
  std::vector<std::uint64_t> counts(schema_.class_count(), 0);
  for (const auto& payload : run_stage("class_counts", cfg.take())) {
    ByteReader r(payload);
    for (auto& c : counts) c += r.u64();
  }
  return counts;
}

std::vector<core::Instance> ClusterBackend::take_sample(std::size_t m, std::uint64_t seed) {
  std::uint64_t n = 0;
  for (auto s : partition_sizes_) n += s;
  const auto positions = engine::sample_positions(n, m, seed);
  const auto where = engine::locate_positions(partition_sizes_, positions);

  const std::size_t nworkers = workers_.size();
  std::vector<std::vector<std::size_t>> requests(nworkers);
  for (std::size_t i = 0; i < where.size(); ++i) requests[where[i].first % nworkers].push_back(i);

  std::vector<std::optional<std::vector<std::uint8_t>>> configs(nworkers);
  for (std::size_t w = 0; w < nworkers; ++w) {
    if (requests[w].empty()) continue;
    ByteWriter cfg;
    cfg.u32(static_cast<std::uint32_t>(requests[w].size()));
    for (auto i : requests[w]) {
      cfg.u32(static_cast<std::uint32_t>(where[i].first));
      cfg.u64(where[i].second);
    }
    configs[w] = cfg.take();
  }
  const auto results = run_stage("fetch", configs);
  std::vector<core::Instance> out(where.size());
  for (std::size_t w = 0; w < nworkers; ++w) {
    if (!results[w]) continue;
    ByteReader r(*results[w]);
    auto fetched = read_instances(r, schema_.feature_count());
    if (fetched.size() != requests[w].size()) fail(workers_[w], "fetch returned a short list");
    for (std::size_t j = 0; j < fetched.size(); ++j) out[requests[w][j]] = std::move(fetched[j]);
  }
  return out;
}

relieff::NeighborMatrix ClusterBackend::find_neighbors(const relieff::NeighborQuery& query) {
  ByteWriter cfg;
  write_query(cfg, query);
  relieff::NeighborMatrix total(query.classes, query.samples.size(), query.k);
  for (const auto& payload : run_stage("neighbors", cfg.take())) {
    ByteReader r(payload);
    total.merge(read_neighbors(r));
  }
  return total;
}

}  // namespace direlieff::cluster
