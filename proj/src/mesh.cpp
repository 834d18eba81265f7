#include "corrugate/mesh.hpp"

#include <cstdio>
#include <fstream>
#include <string>

namespace corrugate {

std::string obj_text(const Field& u) {
  const GridDomain& d = u.domain();
  if (d.n != 2 || u.comps() != 3) {
    fail(ErrorKind::wrong_dimension, "mesh export needs a 2-dimensional surface in R^3, got n = " +
                                         std::to_string(d.n) + " with " + std::to_string(u.comps()) + " components");
  }
  const std::int64_t nx = d.extent[0], ny = d.extent[1];
  std::string s;
  s.reserve(static_cast<std::size_t>(u.points()) * 48);
  char buf[128];
  s += "# corrugate surface snapshot\n";
  for (std::int64_t p = 0; p < u.points(); ++p) {
    const double* v = u.at(p);
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v[0], v[1], v[2]);
    s += buf;
  }
  // Index p = i * ny + j; x_0 grows with i, x_1 with j.
  for (std::int64_t i = 0; i + 1 < nx; ++i)
    for (std::int64_t j = 0; j + 1 < ny; ++j) {
      const long long a = i * ny + j + 1, b = (i + 1) * ny + j + 1, c = (i + 1) * ny + j + 2, e = i * ny + j + 2;
      std::snprintf(buf, sizeof buf, "f %lld %lld %lld\nf %lld %lld %lld\n", a, b, c, a, c, e);
      s += buf;
    }
  return s;
}

void export_obj(const Field& u, const std::string& path) {
  const std::string text = obj_text(u);
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::io_error, "cannot write '" + path + "'");
  f << text;
  if (!f) fail(ErrorKind::io_error, "write failed for '" + path + "'");
}

}  // namespace corrugate
