#include "mrt/wigner_field.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace mrt {

namespace {

constexpr char kMagic[8] = {'M', 'R', 'T', 'W', 'F', '0', '0', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
  for (double x : v) put_u64(os, std::bit_cast<std::uint64_t>(x));
}

std::vector<double> get_doubles(std::istream& is, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = std::bit_cast<double>(get_u64(is));
  return v;
}

}  // namespace

int Axis::locate(double x) const {
  if (!(x >= lo) || !(x < hi)) return -1;
  const int i = static_cast<int>((x - lo) / width());
  return std::min(i, n - 1);
}

std::size_t WignerField::cells() const {
  std::size_t c = 1;
  for (const auto& a : axes) c *= static_cast<std::size_t>(a.n);
  return c;
}

std::vector<int> WignerField::shape() const {
  std::vector<int> s;
  for (const auto& a : axes) s.push_back(a.n);
  return s;
}

double WignerField::cell_volume() const {
  // Only the trailing 2d+1 phase-space axes carry measure.
  double v = 1.0;
  const std::size_t first = axes.size() - static_cast<std::size_t>(2 * d + 1);
  for (std::size_t i = first; i < axes.size(); ++i) v *= axes[i].width();
  return v;
}

double WignerField::total_mass() const {
  double s = 0.0;
  if (complex_values) {
    for (std::size_t i = 0; i < values.size(); i += 2) s += values[i];
  } else {
    for (double v : values) s += v;
  }
  return s * cell_volume();
}

double WignerField::max_value() const { return *std::max_element(values.begin(), values.end()); }
double WignerField::min_value() const { return *std::min_element(values.begin(), values.end()); }

std::size_t WignerField::flat_index(const std::vector<int>& idx) const {
  std::size_t f = 0;
  for (std::size_t a = 0; a < axes.size(); ++a) f = f * axes[a].n + static_cast<std::size_t>(idx[a]);
  return f;
}

void WignerField::save(const std::string& path) const {
  nlohmann::json h;
  h["format"] = "mrt-wigner-field";
  h["version"] = 1;
  h["d"] = d;
  h["z"] = z;
  h["complex"] = complex_values;
  h["has_errors"] = !errors.empty();
  h["byte_order"] = "little";
  h["axes"] = nlohmann::json::array();
  for (const auto& a : axes)
    h["axes"].push_back({{"name", a.name}, {"unit", a.unit}, {"lo", a.lo}, {"hi", a.hi}, {"n", a.n}});
  h["metadata"] = metadata;
  const std::string header = h.dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os.write(kMagic, 8);
  put_u64(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  put_doubles(os, values);
  if (!errors.empty()) put_doubles(os, errors);
}

WignerField WignerField::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) throw ConfigError(path + ": not a Wigner field container");
  const std::uint64_t n = get_u64(is);
  std::string header(n, '\0');
  is.read(header.data(), static_cast<std::streamsize>(n));
  const auto h = nlohmann::json::parse(header);
  WignerField f;
  f.d = h.at("d");
  f.z = h.at("z");
  f.complex_values = h.at("complex");
  f.metadata = h.at("metadata");
  for (const auto& a : h.at("axes"))
    f.axes.push_back({a.at("name"), a.at("unit"), a.at("lo"), a.at("hi"), a.at("n")});
  const std::size_t count = f.cells() * (f.complex_values ? 2 : 1);
  f.values = get_doubles(is, count);
  if (h.at("has_errors").get<bool>()) f.errors = get_doubles(is, count);
  if (!is) throw ConfigError(path + ": truncated payload");
  return f;
}

void WignerField::write_csv(const std::string& path) const {
  if (d != 1 || axes.size() != 3 || complex_values)
    throw ConfigError("CSV export is available for real d = 1 fields only");
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os.precision(17);
  for (const auto& a : axes) os << a.name << "[" << a.unit << "],";
  os << "W" << (errors.empty() ? "" : ",W_err") << "\n";
  for (int i = 0; i < axes[0].n; ++i)
    for (int j = 0; j < axes[1].n; ++j)
      for (int l = 0; l < axes[2].n; ++l) {
        const std::size_t f = flat_index({i, j, l});
        os << axes[0].center(i) << ',' << axes[1].center(j) << ',' << axes[2].center(l) << ','
           << values[f];
        if (!errors.empty()) os << ',' << errors[f];
        os << '\n';
      }
}

}  // namespace mrt
