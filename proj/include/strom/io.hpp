#ifndef STROM_IO_HPP
#define STROM_IO_HPP

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <variant>

#include "strom/system.hpp"

namespace strom {

// Self-describing binary container for one field:
//   magic "SPFC", u32 version, u32 kind (0 form / 1 matrix), i32 p, i32 q, i32 rank,
//   i32 n, u32 active-axes bitmask, 6 x f64 periods, u32 ncomp,
//   then ncomp x nsites complex64 pairs (component-major, sites row-major,
//   matrix entries row-major per site).
void write_field(std::ostream& os, const FormField& f);
void write_field(std::ostream& os, const MatrixField& m);

using FieldVariant = std::variant<FormField, MatrixField>;
FieldVariant read_field(std::istream& is);

void save_field(const std::string& path, const FieldVariant& f);
FieldVariant load_field(const std::string& path);

// Named-section bundle: magic "SPBD", u32 version, u32 count, then repeated
// [u16 name_len, name, u64 payload_len, payload]. Sections hold field containers
// or raw JSON ("meta").
struct Bundle {
  std::vector<std::pair<std::string, std::string>> sections;  // name -> raw bytes
  void add(const std::string& name, std::string bytes);
  const std::string* find(const std::string& name) const;
};
void save_bundle(const std::string& path, const Bundle& b);
Bundle load_bundle(const std::string& path);

std::string field_bytes(const FieldVariant& f);
FieldVariant field_from_bytes(const std::string& bytes);

// JSON export for small fields (schema_version, shape header, components).
nlohmann::json field_to_json(const FormField& f);
nlohmann::json field_to_json(const MatrixField& m);

// System state files: meta JSON (alpha, rank, coupled, g_hat, f) + field sections.
void save_state(const std::string& path, const Testbed& tb, const SystemState& s);
// Rebuilds the testbed recorded in the file.
std::pair<Testbed, SystemState> load_state(const std::string& path);

std::string describe_lattice_json(const Lattice& lat);

}  // namespace strom

#endif
