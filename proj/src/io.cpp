#include "strom/io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace strom {

namespace {

constexpr char kFieldMagic[4] = {'S', 'P', 'F', 'C'};
constexpr char kBundleMagic[4] = {'S', 'P', 'B', 'D'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw UsageError("field container: truncated input at offset " +
                            std::to_string(static_cast<long long>(is.tellg())));
  return v;
}

void write_header(std::ostream& os, std::uint32_t kind, int p, int q, int rank,
                  const Lattice& lat, std::uint32_t ncomp) {
  os.write(kFieldMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, kind);
  put<std::int32_t>(os, p);
  put<std::int32_t>(os, q);
  put<std::int32_t>(os, rank);
  put<std::int32_t>(os, lat.n());
  std::uint32_t mask = 0;
  for (int a = 0; a < 6; ++a)
    if (lat.active()[a]) mask |= 1u << a;
  put<std::uint32_t>(os, mask);
  for (int a = 0; a < 6; ++a) put<double>(os, lat.periods()[a]);
  put<std::uint32_t>(os, ncomp);
}

struct Header {
  std::uint32_t kind = 0;
  int p = 0, q = 0, rank = 0;
  LatticePtr lat;
  std::uint32_t ncomp = 0;
};

Header read_header(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kFieldMagic, 4) != 0)
    throw UsageError("field container: bad magic");
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion)
    throw UsageError("field container: unsupported version " + std::to_string(version));
  Header h;
  h.kind = get<std::uint32_t>(is);
  h.p = get<std::int32_t>(is);
  h.q = get<std::int32_t>(is);
  h.rank = get<std::int32_t>(is);
  const int n = get<std::int32_t>(is);
  const auto mask = get<std::uint32_t>(is);
  std::array<bool, 6> active{};
  for (int a = 0; a < 6; ++a) active[a] = mask & (1u << a);
  std::array<double, 6> periods{};
  for (int a = 0; a < 6; ++a) periods[a] = get<double>(is);
  h.lat = Lattice::create(n, active, periods);
  h.ncomp = get<std::uint32_t>(is);
  return h;
}

void write_payload(std::ostream& os, const std::vector<cplx>& a) {
  for (const cplx& v : a) {
    put<double>(os, v.real());
    put<double>(os, v.imag());
  }
}

void read_payload(std::istream& is, std::vector<cplx>& a) {
  for (cplx& v : a) {
    const double re = get<double>(is);
    const double im = get<double>(is);
    v = cplx(re, im);
  }
}

}  // namespace

void write_field(std::ostream& os, const FormField& f) {
  write_header(os, 0, f.p, f.q, 0, *f.lat, static_cast<std::uint32_t>(f.ncomp()));
  for (const auto& c : f.comp) write_payload(os, c.a);
}

void write_field(std::ostream& os, const MatrixField& m) {
  write_header(os, 1, -1, -1, m.r, *m.lat, static_cast<std::uint32_t>(m.r * m.r));
  // component-major: entry (a,b) over all sites
  const std::size_t block = static_cast<std::size_t>(m.r) * m.r;
  std::vector<cplx> buf(m.sites());
  for (std::size_t e = 0; e < block; ++e) {
    for (std::size_t i = 0; i < m.sites(); ++i) buf[i] = m.a[i * block + e];
    write_payload(os, buf);
  }
}

FieldVariant read_field(std::istream& is) {
  const Header h = read_header(is);
  if (h.kind == 0) {
    FormField f(h.lat, h.p, h.q);
    if (h.ncomp != static_cast<std::uint32_t>(f.ncomp()))
      throw UsageError("field container: component count mismatch");
    for (auto& c : f.comp) read_payload(is, c.a);
    return f;
  }
  if (h.kind == 1) {
    MatrixField m(h.lat, h.rank);
    const std::size_t block = static_cast<std::size_t>(h.rank) * h.rank;
    if (h.ncomp != block) throw UsageError("field container: component count mismatch");
    std::vector<cplx> buf(m.sites());
    for (std::size_t e = 0; e < block; ++e) {
      read_payload(is, buf);
      for (std::size_t i = 0; i < m.sites(); ++i) m.a[i * block + e] = buf[i];
    }
    return m;
  }
  throw UsageError("field container: unknown kind " + std::to_string(h.kind));
}

void save_field(const std::string& path, const FieldVariant& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw UsageError("cannot open for writing: " + path);
  std::visit([&](const auto& x) { write_field(os, x); }, f);
}

FieldVariant load_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot open: " + path);
  return read_field(is);
}

void Bundle::add(const std::string& name, std::string bytes) {
  sections.emplace_back(name, std::move(bytes));
}

const std::string* Bundle::find(const std::string& name) const {
  for (const auto& [n, b] : sections)
    if (n == name) return &b;
  return nullptr;
}

void save_bundle(const std::string& path, const Bundle& b) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw UsageError("cannot open for writing: " + path);
  os.write(kBundleMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(b.sections.size()));
  for (const auto& [name, bytes] : b.sections) {
    put<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(os, bytes.size());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
}

Bundle load_bundle(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kBundleMagic, 4) != 0)
    throw UsageError("bundle: bad magic in " + path);
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw UsageError("bundle: unsupported version");
  const auto count = get<std::uint32_t>(is);
  Bundle b;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get<std::uint16_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    const auto plen = get<std::uint64_t>(is);
    std::string bytes(plen, '\0');
    is.read(bytes.data(), static_cast<std::streamsize>(plen));
    if (!is) throw UsageError("bundle: truncated section " + name);
    b.add(name, std::move(bytes));
  }
  return b;
}

std::string field_bytes(const FieldVariant& f) {
  std::ostringstream os(std::ios::binary);
  std::visit([&](const auto& x) { write_field(os, x); }, f);
  return os.str();
}

FieldVariant field_from_bytes(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  return read_field(is);
}

namespace {
nlohmann::json header_json(const Lattice& lat) {
  nlohmann::json j;
  j["n"] = lat.n();
  std::vector<std::string> axes;
  for (int a = 0; a < 6; ++a)
    if (lat.active()[a]) axes.push_back(kAxisNames[a]);
  j["active_axes"] = axes;
  j["periods"] = lat.periods();
  return j;
}

nlohmann::json payload_json(const std::vector<cplx>& a) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : a) {
    arr.push_back(v.real());
    arr.push_back(v.imag());
  }
  return arr;
}
}  // namespace

nlohmann::json field_to_json(const FormField& f) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "form";
  j["p"] = f.p;
  j["q"] = f.q;
  j["lattice"] = header_json(*f.lat);
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : f.comp) comps.push_back(payload_json(c.a));
  j["components"] = comps;
  return j;
}

nlohmann::json field_to_json(const MatrixField& m) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "matrix";
  j["rank"] = m.r;
  j["lattice"] = header_json(*m.lat);
  j["entries"] = payload_json(m.a);
  return j;
}

void save_state(const std::string& path, const Testbed& tb, const SystemState& s) {
  Bundle b;
  nlohmann::json meta;
  meta["schema_version"] = 1;
  meta["alpha"] = s.alpha;
  meta["rank"] = tb.rank;
  meta["coupled"] = s.coupled();
  meta["f_re"] = tb.vol.f.real();
  meta["f_im"] = tb.vol.f.imag();
  nlohmann::json ghat = nlohmann::json::array();
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      ghat.push_back(tb.g_hat(j, k).real());
      ghat.push_back(tb.g_hat(j, k).imag());
    }
  meta["g_hat"] = ghat;
  b.add("meta", meta.dump(2));
  b.add("u", field_bytes(s.u));
  b.add("beta", field_bytes(s.beta));
  if (s.u_tan) b.add("u_tan", field_bytes(*s.u_tan));
  save_bundle(path, b);
}

std::pair<Testbed, SystemState> load_state(const std::string& path) {
  const Bundle b = load_bundle(path);
  const std::string* meta_raw = b.find("meta");
  if (!meta_raw) throw UsageError("state file: missing meta section");
  const nlohmann::json meta = nlohmann::json::parse(*meta_raw);
  const std::string* u_raw = b.find("u");
  const std::string* beta_raw = b.find("beta");
  if (!u_raw || !beta_raw) throw UsageError("state file: missing field sections");
  MatrixField u = std::get<MatrixField>(field_from_bytes(*u_raw));
  FormField beta = std::get<FormField>(field_from_bytes(*beta_raw));

  Eigen::Matrix3cd ghat;
  const auto& arr = meta.at("g_hat");
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      ghat(j, k) = cplx(arr.at(2 * (3 * j + k)).get<double>(), arr.at(2 * (3 * j + k) + 1).get<double>());
  HolVolForm vol{cplx(meta.at("f_re").get<double>(), meta.at("f_im").get<double>())};
  Testbed tb = Testbed::make(u.lat, ghat, vol, meta.at("rank").get<int>());

  SystemState s;
  s.alpha = meta.at("alpha").get<double>();
  // rebind the fields to the testbed's lattice object
  s.u = MatrixField(tb.lat, u.r);
  s.u.a = u.a;
  s.beta = FormField(tb.lat, beta.p, beta.q);
  for (int c = 0; c < beta.ncomp(); ++c) s.beta.comp[c].a = beta.comp[c].a;
  if (meta.at("coupled").get<bool>()) {
    const std::string* ut_raw = b.find("u_tan");
    if (!ut_raw) throw UsageError("state file: coupled state missing u_tan");
    MatrixField ut = std::get<MatrixField>(field_from_bytes(*ut_raw));
    MatrixField bound(tb.lat, ut.r);
    bound.a = ut.a;
    s.u_tan = std::move(bound);
  }
  return {std::move(tb), std::move(s)};
}

std::string describe_lattice_json(const Lattice& lat) { return header_json(lat).dump(); }

}  // namespace strom
