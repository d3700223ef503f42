#include "fforge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace fforge {
namespace {

constexpr std::size_t kMagicSize = sizeof(kCheckpointMagic) - 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f32(std::ostream& out, float f) {
  const auto v = std::bit_cast<std::uint32_t>(f);
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

bool get_bytes(std::istream& in, unsigned char* dst, std::size_t n) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

std::uint64_t get_u64(std::istream& in, const char* what) {
  unsigned char b[8];
  if (!get_bytes(in, b, 8)) throw DecodeError(std::string("checkpoint truncated while reading ") + what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const std::vector<CheckpointRecord>& records) {
  out.write(kCheckpointMagic, kMagicSize);
  for (const auto& r : records) {
    std::uint64_t count = 1;
    for (auto e : r.extents) count *= e;
    if (count != r.values.size())
      throw UsageError("checkpoint record '" + r.name + "' extents do not match its value count");
    put_u64(out, r.name.size());
    out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    put_u64(out, r.extents.size());
    for (auto e : r.extents) put_u64(out, e);
    for (float f : r.values) put_f32(out, f);
  }
  if (!out) throw InputError("failed writing checkpoint");
}

std::vector<CheckpointRecord> read_checkpoint(std::istream& in) {
  char magic[kMagicSize];
  in.read(magic, kMagicSize);
  if (static_cast<std::size_t>(in.gcount()) != kMagicSize || std::memcmp(magic, kCheckpointMagic, kMagicSize) != 0)
    throw DecodeError("not a checkpoint: missing FFORGE1 magic");

  std::vector<CheckpointRecord> records;
  while (in.peek() != std::char_traits<char>::eof()) {
    CheckpointRecord r;
    const std::uint64_t name_len = get_u64(in, "name length");
    if (name_len > (1u << 20)) throw DecodeError("checkpoint name length is implausible");
    r.name.resize(name_len);
    if (!get_bytes(in, reinterpret_cast<unsigned char*>(r.name.data()), name_len))
      throw DecodeError("checkpoint truncated inside a record name");
    const std::uint64_t rank = get_u64(in, "rank");
    if (rank > 8) throw DecodeError("checkpoint record '" + r.name + "' has implausible rank");
    std::uint64_t count = 1;
    for (std::uint64_t k = 0; k < rank; ++k) {
      r.extents.push_back(get_u64(in, "extent"));
      count *= r.extents.back();
    }
    if (count > (std::uint64_t(1) << 32)) throw DecodeError("checkpoint record '" + r.name + "' is too large");
    r.values.resize(count);
    for (auto& f : r.values) {
      unsigned char b[4];
      if (!get_bytes(in, b, 4)) throw DecodeError("checkpoint truncated inside '" + r.name + "'");
      std::uint32_t v = 0;
      for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
      f = std::bit_cast<float>(v);
    }
    records.push_back(std::move(r));
  }
  return records;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open checkpoint for writing: " + path.string());
  write_checkpoint(out, records);
}

std::vector<CheckpointRecord> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint: " + path.string());
  try {
    return read_checkpoint(in);
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

CheckpointRecord text_record(const std::string& name, const std::string& text) {
  CheckpointRecord r;
  r.name = name;
  r.extents = {text.size()};
  for (unsigned char c : text) r.values.push_back(static_cast<float>(c));
  return r;
}

std::string record_text(const CheckpointRecord& record) {
  std::string s;
  for (float f : record.values) {
    if (!(f >= 0.0f && f <= 255.0f)) throw DecodeError("record '" + record.name + "' is not text");
    s.push_back(static_cast<char>(static_cast<unsigned char>(f)));
  }
  return s;
}

const CheckpointRecord* find_record(const std::vector<CheckpointRecord>& records, const std::string& name) {
  for (const auto& r : records)
    if (r.name == name) return &r;
  return nullptr;
}

}  // namespace fforge
