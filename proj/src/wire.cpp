#include "direlieff/wire.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

namespace direlieff::cluster {

std::string to_string(MessageType type) {
  switch (type) {
    case MessageType::register_worker: return "REGISTER";
    case MessageType::assign_partitions: return "ASSIGN_PARTITIONS";
    case MessageType::run_stage: return "RUN_STAGE";
    case MessageType::stage_result: return "STAGE_RESULT";
    case MessageType::error: return "ERROR";
    case MessageType::shutdown: return "SHUTDOWN";
  }
  return "UNKNOWN(" + std::to_string(static_cast<int>(type)) + ")";
}

FrameHeader decode_header(std::span<const std::uint8_t> header, std::size_t max_payload) {
  if (header.size() != kFrameHeaderBytes) throw ProtocolError("truncated frame header");
  const std::uint32_t length = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                               (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
  const std::uint8_t tag = header[4];
  if (tag < 1 || tag > 6) {
    throw ProtocolError("unknown message type tag " + std::to_string(tag));
  }
  const std::size_t limit = std::min(max_payload, kMaxFramePayload);
  if (length > limit) {
    throw ProtocolError("frame payload of " + std::to_string(length) + " bytes exceeds limit " +
                        std::to_string(limit));
  }
  return {length, static_cast<MessageType>(tag)};
}

std::vector<std::uint8_t> encode_frame(const Frame& frame, std::size_t max_payload) {
  const std::size_t limit = std::min(max_payload, kMaxFramePayload);
  if (frame.payload.size() > limit) {
    throw ProtocolError("frame payload of " + std::to_string(frame.payload.size()) +
                        " bytes exceeds limit " + std::to_string(limit));
  }
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderBytes + frame.payload.size());
  const auto length = static_cast<std::uint32_t>(frame.payload.size());
  out.push_back(static_cast<std::uint8_t>(length >> 24));
  out.push_back(static_cast<std::uint8_t>(length >> 16));
  out.push_back(static_cast<std::uint8_t>(length >> 8));
  out.push_back(static_cast<std::uint8_t>(length));
  out.push_back(static_cast<std::uint8_t>(frame.type));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes, std::size_t max_payload) {
  if (bytes.size() < kFrameHeaderBytes) throw ProtocolError("truncated frame header");
  const auto header = decode_header(bytes.first(kFrameHeaderBytes), max_payload);
  if (bytes.size() - kFrameHeaderBytes != header.length) {
    throw ProtocolError("frame length " + std::to_string(header.length) + " disagrees with " +
                        std::to_string(bytes.size() - kFrameHeaderBytes) + " payload bytes");
  }
  const auto payload = bytes.subspan(kFrameHeaderBytes);
  return {header.type, std::vector<std::uint8_t>(payload.begin(), payload.end())};
}

void ByteWriter::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    buf_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void ByteWriter::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    buf_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
  if (remaining() < n) {
    throw ProtocolError("payload truncated: wanted " + std::to_string(n) + " bytes, " +
                        std::to_string(remaining()) + " left");
  }
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::u8() { return take(1)[0]; }

std::uint32_t ByteReader::u32() {
  std::uint32_t v = 0;
  for (auto b : take(4)) v = (v << 8) | b;
  return v;
}

std::uint64_t ByteReader::u64() {
  std::uint64_t v = 0;
  for (auto b : take(8)) v = (v << 8) | b;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
  const auto n = u32();
  const auto bytes = take(n);
  return std::string(bytes.begin(), bytes.end());
}

void ByteReader::expect_end() const {
  if (remaining() != 0) {
    throw ProtocolError(std::to_string(remaining()) + " unexpected trailing payload bytes");
  }
}

void write_instance(ByteWriter& w, const core::Instance& instance) {
  w.u64(instance.id);
  w.u32(instance.label);
  for (double v : instance.values) w.f64(v);
}

core::Instance read_instance(ByteReader& r, std::size_t features) {
  core::Instance inst;
  inst.id = r.u64();
  inst.label = r.u32();
  inst.values.resize(features);
  for (auto& v : inst.values) v = r.f64();
  return inst;
}

void write_instances(ByteWriter& w, const std::vector<core::Instance>& instances,
                     std::size_t features) {
  w.u64(instances.size());
  for (const auto& inst : instances) {
    if (inst.values.size() != features) throw InvalidArgument("instance width mismatch");
    write_instance(w, inst);
  }
}

std::vector<core::Instance> read_instances(ByteReader& r, std::size_t features) {
  const auto n = r.u64();
  if (n > r.remaining() / (12 + 8 * features)) throw ProtocolError("instance count too large");
  std::vector<core::Instance> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(read_instance(r, features));
  return out;
}

void write_ranges(ByteWriter& w, const core::FeatureRange& ranges) {
  w.u32(static_cast<std::uint32_t>(ranges.size()));
  for (std::size_t a = 0; a < ranges.size(); ++a) {
    w.u8(static_cast<std::uint8_t>(ranges.kind(a)));
    w.f64(ranges.min(a));
    w.f64(ranges.max(a));
  }
}

core::FeatureRange read_ranges(ByteReader& r) {
  const auto a = r.u32();
  if (a > r.remaining() / 17) throw ProtocolError("feature count too large");
  std::vector<core::FeatureKind> kinds(a);
  std::vector<double> lo(a);
  std::vector<double> hi(a);
  for (std::uint32_t f = 0; f < a; ++f) {
    const auto kind = r.u8();
    if (kind > 1) throw ProtocolError("bad feature kind tag");
    kinds[f] = static_cast<core::FeatureKind>(kind);
    lo[f] = r.f64();
    hi[f] = r.f64();
  }
  return core::FeatureRange(std::move(kinds), std::move(lo), std::move(hi));
}

void write_diff_config(ByteWriter& w, const core::DiffConfig& cfg) {
  w.u8(static_cast<std::uint8_t>(cfg.numeric_mode));
  w.f64(cfg.t_eq);
  w.f64(cfg.t_diff);
}

core::DiffConfig read_diff_config(ByteReader& r) {
  core::DiffConfig cfg;
  const auto mode = r.u8();
  if (mode > 1) throw ProtocolError("bad diff mode tag");
  cfg.numeric_mode = static_cast<core::NumericDiff>(mode);
  cfg.t_eq = r.f64();
  cfg.t_diff = r.f64();
  return cfg;
}

void write_neighbors(ByteWriter& w, const relieff::NeighborMatrix& matrix) {
  w.u32(static_cast<std::uint32_t>(matrix.classes()));
  w.u32(static_cast<std::uint32_t>(matrix.samples()));
  w.u32(static_cast<std::uint32_t>(matrix.k()));
  for (std::size_t c = 0; c < matrix.classes(); ++c) {
    for (std::size_t i = 0; i < matrix.samples(); ++i) {
      const auto& heap = matrix.at(c, i);
      w.u32(static_cast<std::uint32_t>(heap.size()));
      for (const auto& n : heap.entries()) {
        w.u64(n.instance_id);
        w.f64(n.distance);
        w.u32(static_cast<std::uint32_t>(n.values.size()));
        for (double v : n.values) w.f64(v);
      }
    }
  }
}

relieff::NeighborMatrix read_neighbors(ByteReader& r) {
  const auto classes = r.u32();
  const auto samples = r.u32();
  const auto k = r.u32();
  if (std::uint64_t{classes} * samples > r.remaining() / 4) {
    throw ProtocolError("neighbor matrix dimensions too large");
  }
  relieff::NeighborMatrix matrix(classes, samples, k);
  for (std::uint32_t c = 0; c < classes; ++c) {
    for (std::uint32_t i = 0; i < samples; ++i) {
      const auto size = r.u32();
      if (size > k) throw ProtocolError("neighbor heap larger than k");
      auto& heap = matrix.at(c, i);
      for (std::uint32_t e = 0; e < size; ++e) {
        relieff::Neighbor n;
        n.instance_id = r.u64();
        n.distance = r.f64();
        const auto width = r.u32();
        if (width > r.remaining() / 8) throw ProtocolError("neighbor width too large");
        n.values.resize(width);
        for (auto& v : n.values) v = r.f64();
        heap.offer(std::move(n));
      }
    }
  }
  return matrix;
}

void write_query(ByteWriter& w, const relieff::NeighborQuery& query) {
  w.u32(static_cast<std::uint32_t>(query.classes));
  w.u32(static_cast<std::uint32_t>(query.k));
  write_diff_config(w, query.diff);
  write_ranges(w, query.ranges);
  write_instances(w, query.samples, query.ranges.size());
}

relieff::NeighborQuery read_query(ByteReader& r) {
  relieff::NeighborQuery query;
  query.classes = r.u32();
  query.k = r.u32();
  query.diff = read_diff_config(r);
  query.ranges = read_ranges(r);
  query.samples = read_instances(r, query.ranges.size());
  return query;
}

}  // namespace direlieff::cluster
