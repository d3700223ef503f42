#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fforge/params.hpp"

namespace fforge {

/// One named array in a checkpoint file.
///
/// On disk: the 7-byte magic "FFORGE1", then records until end of file, each
///   u64 name length | name bytes (UTF-8) | u64 rank | rank × u64 extents |
///   product(extents) × f32 values
/// with every integer and float little-endian.
struct CheckpointRecord {
  std::string name;
  std::vector<std::uint64_t> extents;
  std::vector<float> values;
};

inline constexpr char kCheckpointMagic[] = "FFORGE1";

void write_checkpoint(std::ostream& out, const std::vector<CheckpointRecord>& records);
std::vector<CheckpointRecord> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointRecord>& records);
std::vector<CheckpointRecord> load_checkpoint(const std::filesystem::path& path);

/// Stores text (e.g. a config echo) as a rank-1 record of byte values.
CheckpointRecord text_record(const std::string& name, const std::string& text);
std::string record_text(const CheckpointRecord& record);

const CheckpointRecord* find_record(const std::vector<CheckpointRecord>& records,
                                    const std::string& name);

template <typename Scalar>
std::vector<CheckpointRecord> to_records(const ParameterSet<Scalar>& set) {
  std::vector<CheckpointRecord> out;
  for (const auto& p : set.entries()) {
    CheckpointRecord r;
    r.name = p.name;
    for (Index e : p.extents) r.extents.push_back(static_cast<std::uint64_t>(e));
    r.values.resize(static_cast<std::size_t>(p.value.size()));
    for (Index k = 0; k < p.value.size(); ++k) r.values[k] = static_cast<float>(p.value.value()[k]);
    out.push_back(std::move(r));
  }
  return out;
}

/// Copies record values into every entry of `set`; names and extents must match.
template <typename Scalar>
void load_records(const ParameterSet<Scalar>& set, const std::vector<CheckpointRecord>& records) {
  for (const auto& p : set.entries()) {
    const CheckpointRecord* r = find_record(records, p.name);
    if (!r) throw DecodeError("checkpoint has no record named '" + p.name + "'");
    std::vector<std::uint64_t> want(p.extents.begin(), p.extents.end());
    if (r->extents != want) throw DecodeError("checkpoint record '" + p.name + "' has wrong extents");
    auto& v = p.value.mutable_value();
    for (Index k = 0; k < v.size(); ++k) v[k] = static_cast<Scalar>(r->values[k]);
  }
}

}  // namespace fforge
