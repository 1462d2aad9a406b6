#pragma once

// Driver/worker wire format. A frame is a 4-byte big-endian payload length,
// a 1-byte type tag and the payload. All integers inside payloads are
// big-endian; doubles travel as their IEEE-754 bit pattern.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "direlieff/core.hpp"
#include "direlieff/error.hpp"
#include "direlieff/neighbors.hpp"
#include "direlieff/stages.hpp"

namespace direlieff::cluster {

enum class MessageType : std::uint8_t {
  register_worker = 1,
  assign_partitions = 2,
  run_stage = 3,
  stage_result = 4,
  error = 5,
  shutdown = 6,
};

std::string to_string(MessageType type);

struct Frame {
  MessageType type = MessageType::shutdown;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::size_t kFrameHeaderBytes = 5;
/// Largest payload the 4-byte length prefix can describe.
inline constexpr std::size_t kMaxFramePayload = 0xFFFFFFFFu;

struct FrameHeader {
  std::size_t length = 0;
  MessageType type = MessageType::shutdown;
};

/// Validates the tag and the length against min(max_payload, 2^32 - 1).
FrameHeader decode_header(std::span<const std::uint8_t> header, std::size_t max_payload);

std::vector<std::uint8_t> encode_frame(const Frame& frame,
                                       std::size_t max_payload = kMaxFramePayload);

/// Decodes exactly one frame occupying all of `bytes`.
Frame decode_frame(std::span<const std::uint8_t> bytes,
                   std::size_t max_payload = kMaxFramePayload);

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void str(const std::string& s);
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  std::vector<std::uint8_t>& buffer() noexcept { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  /// Throws ProtocolError unless every byte was consumed.
  void expect_end() const;

 private:
  std::span<const std::uint8_t> take(std::size_t n);

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

/// id (8), label (4), then `values.size()` 8-byte values.
void write_instance(ByteWriter& w, const core::Instance& instance);
core::Instance read_instance(ByteReader& r, std::size_t features);

void write_instances(ByteWriter& w, const std::vector<core::Instance>& instances,
                     std::size_t features);
std::vector<core::Instance> read_instances(ByteReader& r, std::size_t features);

void write_ranges(ByteWriter& w, const core::FeatureRange& ranges);
core::FeatureRange read_ranges(ByteReader& r);

void write_diff_config(ByteWriter& w, const core::DiffConfig& cfg);
core::DiffConfig read_diff_config(ByteReader& r);

/// Layout matches NeighborMatrix::serialized_size().
void write_neighbors(ByteWriter& w, const relieff::NeighborMatrix& matrix);
relieff::NeighborMatrix read_neighbors(ByteReader& r);

void write_query(ByteWriter& w, const relieff::NeighborQuery& query);
relieff::NeighborQuery read_query(ByteReader& r);

}  // namespace direlieff::cluster
