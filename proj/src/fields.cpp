#include "corrugate/fields.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace corrugate {

static_assert(std::endian::native == std::endian::little, "container assumes a little-endian host");

namespace {

std::int64_t lattice_shift(const GridDomain& from, const GridDomain& to, int k) {
  // Integer offset between anchors of two lattices with the same spacing.
  const double d = (from.anchor[k] - to.anchor[k]) / to.h;
  const double r = std::round(d);
  if (std::abs(d - r) > 1e-6) {
    fail(ErrorKind::misaligned_lattice, "lattice anchors differ by a non-integral number of cells");
  }
  return static_cast<std::int64_t>(r);
}

void require_same_spacing(const GridDomain& a, const GridDomain& b) {
  if (a.n != b.n) fail(ErrorKind::misaligned_lattice, "dimension mismatch");
  if (std::abs(a.h - b.h) > 1e-12 * std::max(a.h, b.h)) {
    fail(ErrorKind::misaligned_lattice, "grid spacing mismatch");
  }
}

std::string index_string(const GridDomain& d, std::int64_t p) {
  std::ostringstream os;
  Index m{};
  for (int a = d.n - 1; a >= 0; --a) {
    m[a] = p % d.extent[a];
    p /= d.extent[a];
  }
  os << "(";
  for (int a = 0; a < d.n; ++a) os << (a ? "," : "") << m[a];
  os << ")";
  return os.str();
}

}  // namespace

GridDomain GridDomain::box(int n, const Point& lo, const Point& hi, double h, double margin) {
  if (n < 2 || n > kMaxDim) fail(ErrorKind::index_out_of_range, "dimension must be in [2, 4]");
  if (!(h > 0.0)) fail(ErrorKind::domain_too_small, "grid spacing must be positive");
  if (margin < 0.0) fail(ErrorKind::domain_too_small, "negative margin");
  GridDomain d;
  d.n = n;
  d.h = h;
  d.margin = margin;
  for (int k = 0; k < n; ++k) {
    const double cells = (hi[k] - lo[k]) / h;
    const double r = std::round(cells);
    if (std::abs(cells - r) > 1e-12 * std::max(1.0, std::abs(cells))) {
      fail(ErrorKind::misaligned_lattice, "box side is not an integral number of cells");
    }
    if (r < 0) fail(ErrorKind::domain_too_small, "empty box");
    d.anchor[k] = lo[k];
    d.extent[k] = static_cast<std::int64_t>(r) + 1;
  }
  for (int k = n; k < kMaxDim; ++k) d.extent[k] = 1;
  return d;
}

std::int64_t GridDomain::size() const {
  std::int64_t s = 1;
  for (int k = 0; k < n; ++k) s *= extent[k];
  return s;
}

GridDomain GridDomain::shrink(std::int64_t cells) const {
  GridDomain d = *this;
  for (int k = 0; k < n; ++k) {
    d.origin[k] += cells;
    d.extent[k] -= 2 * cells;
    if (d.extent[k] < 1) fail(ErrorKind::domain_too_small, "shrink empties the interior");
  }
  d.margin = std::max(0.0, margin - static_cast<double>(cells) * h);
  return d;
}

GridDomain GridDomain::shrink_axis(int k, std::int64_t cells) const {
  GridDomain d = *this;
  d.origin[k] += cells;
  d.extent[k] -= 2 * cells;
  if (d.extent[k] < 1) fail(ErrorKind::domain_too_small, "shrink empties the interior");
  return d;
}

Index GridDomain::offset_in(const GridDomain& outer) const {
  require_same_spacing(*this, outer);
  Index off{};
  for (int k = 0; k < n; ++k) {
    off[k] = origin[k] - outer.origin[k] + lattice_shift(*this, outer, k);
    if (off[k] < 0 || off[k] + extent[k] > outer.extent[k]) {
      fail(ErrorKind::domain_too_small, "target domain is not contained in the source domain");
    }
  }
  return off;
}

bool GridDomain::contains(const GridDomain& inner) const {
  try {
    (void)inner.offset_in(*this);
    return true;
  } catch (const Error&) {
    return false;
  }
}

bool GridDomain::operator==(const GridDomain& o) const {
  if (n != o.n || std::abs(h - o.h) > 1e-12 * h) return false;
  for (int k = 0; k < n; ++k) {
    if (extent[k] != o.extent[k]) return false;
    if (std::abs(lo(k) - o.lo(k)) > 1e-9 * h) return false;
  }
  return true;
}

GridDomain intersect(const GridDomain& a, const GridDomain& b) {
  require_same_spacing(a, b);
  GridDomain d = a;
  for (int k = 0; k < a.n; ++k) {
    const std::int64_t ob = b.origin[k] + lattice_shift(b, a, k);
    const std::int64_t lo = std::max(a.origin[k], ob);
    const std::int64_t hi = std::min(a.origin[k] + a.extent[k], ob + b.extent[k]);
    if (hi <= lo) fail(ErrorKind::domain_too_small, "domains do not intersect");
    d.origin[k] = lo;
    d.extent[k] = hi - lo;
  }
  d.margin = std::min(a.margin, b.margin);
  return d;
}

Field::Field(const GridDomain& dom, Rank rank, int comps, double fill)
    : dom_(dom), rank_(rank), comps_(comps), data_(static_cast<std::size_t>(dom.size() * comps), fill) {}

Field Field::scalar(const GridDomain& dom, double fill) { return Field(dom, Rank::scalar, 1, fill); }
Field Field::vector(const GridDomain& dom, int m, double fill) { return Field(dom, Rank::vector, m, fill); }
Field Field::matrix(const GridDomain& dom, double fill) {
  return Field(dom, Rank::matrix, dom.n * dom.n, fill);
}
Field Field::map(const GridDomain& dom, double fill) { return Field(dom, Rank::map, dom.n + 1, fill); }

void set_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

void configure_threads_from_env() {
  if (const char* env = std::getenv("CORRUGATE_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) set_threads(t);
  }
}

namespace detail {

Index strides_of(const GridDomain& d) {
  Index s{};
  std::int64_t acc = 1;
  for (int k = d.n - 1; k >= 0; --k) {
    s[k] = acc;
    acc *= d.extent[k];
  }
  return s;
}

Cursor make_cursor(const Field& f, const GridDomain& target) {
  Cursor c{};
  c.base = f.data().data();
  c.offset = target.offset_in(f.domain());
  c.stride = strides_of(f.domain());
  c.comps = f.comps();
  return c;
}

}  // namespace detail

void check_finite(const Field& f, const char* op) {
  const auto& v = f.data();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      fail(ErrorKind::non_finite, std::string(op) + " produced a non-finite value at lattice index " +
                                      index_string(f.domain(), static_cast<std::int64_t>(i) / f.comps()));
    }
  }
}

Field restrict(const Field& f, const GridDomain& target) {
  const int m = f.comps();
  return map_fields(target, f.rank(), m, {&f}, [m](const Site&, const double* const* in, double* out) {
    std::memcpy(out, in[0], sizeof(double) * m);
  });
}

namespace {

std::int64_t half_width(std::int64_t order) { return (order + 1) / 2; }

Field diff_axis(const Field& f, int axis, std::int64_t order) {
  const GridDomain& src = f.domain();
  const GridDomain out = src.shrink_axis(axis, half_width(order));
  const std::int64_t s = detail::strides_of(src)[axis] * f.comps();
  const int m = f.comps();
  const double h = src.h;
  return map_fields(out, f.rank(), m, {&f}, [&](const Site&, const double* const* in, double* o) {
    const double* p = in[0];
    for (int c = 0; c < m; ++c) {
      const double* q = p + c;
      switch (order) {
        case 1: o[c] = (q[s] - q[-s]) / (2.0 * h); break;
        case 2: o[c] = (q[s] - 2.0 * q[0] + q[-s]) / (h * h); break;
        case 3: o[c] = (q[2 * s] - 2.0 * q[s] + 2.0 * q[-s] - q[-2 * s]) / (2.0 * h * h * h); break;
        default:
          o[c] = (q[2 * s] - 4.0 * q[s] + 6.0 * q[0] - 4.0 * q[-s] + q[-2 * s]) / (h * h * h * h);
          break;
      }
    }
  });
}

}  // namespace

Field fd_derivative(const Field& f, const Index& sigma) {
  const GridDomain& d = f.domain();
  std::int64_t total = 0;
  std::int64_t widest = 0;
  for (int k = 0; k < kMaxDim; ++k) {
    if (sigma[k] < 0) fail(ErrorKind::index_out_of_range, "negative multi-index entry");
    if (k >= d.n && sigma[k] != 0) fail(ErrorKind::index_out_of_range, "multi-index exceeds dimension");
    total += sigma[k];
    widest = std::max(widest, half_width(sigma[k]));
  }
  if (total > 4) fail(ErrorKind::index_out_of_range, "derivative order above 4");
  const GridDomain out = d.shrink(widest);
  if (total == 0) return restrict(f, out);
  std::optional<Field> cur;
  for (int k = 0; k < d.n; ++k) {
    if (sigma[k] == 0) continue;
    cur = diff_axis(cur ? *cur : f, k, sigma[k]);
  }
  Field r = restrict(*cur, out);
  check_finite(r, "fd_derivative");
  return r;
}

Field gradient(const Field& f) {
  const GridDomain& src = f.domain();
  const int n = src.n;
  const int m = f.comps();
  const GridDomain out = src.shrink(1);
  const Index st = detail::strides_of(src);
  const double h = src.h;
  return map_fields(out, Rank::vector, m * n, {&f}, [&](const Site&, const double* const* in, double* o) {
    const double* p = in[0];
    for (int c = 0; c < m; ++c) {
      for (int l = 0; l < n; ++l) {
        const std::int64_t s = st[l] * m;
        o[c * n + l] = (p[c + s] - p[c - s]) / (2.0 * h);
      }
    }
  });
}

Field combine(const Field& fa, double a, const Field& fb, double b) {
  if (fa.comps() != fb.comps()) fail(ErrorKind::index_out_of_range, "combine: component mismatch");
  const GridDomain d = intersect(fa.domain(), fb.domain());
  const int m = fa.comps();
  return map_fields(d, fa.rank(), m, {&fa, &fb}, [&](const Site&, const double* const* in, double* o) {
    for (int c = 0; c < m; ++c) o[c] = a * in[0][c] + b * in[1][c];
  });
}

Field scaled(const Field& f, double s) {
  Field r = f;
  for (double& v : r.data()) v *= s;
  return r;
}

double sup_norm(const Field& f) {
  const int m = f.comps();
  const std::int64_t np = f.points();
  const double* d = f.data().data();
  double best = 0.0;
#pragma omp parallel for reduction(max : best) schedule(static)
  for (std::int64_t p = 0; p < np; ++p) {
    double s = 0.0;
    for (int c = 0; c < m; ++c) s += d[p * m + c] * d[p * m + c];
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

double sup_abs_component(const Field& f, int c) {
  const int m = f.comps();
  const std::int64_t np = f.points();
  const double* d = f.data().data();
  double best = 0.0;
#pragma omp parallel for reduction(max : best) schedule(static)
  for (std::int64_t p = 0; p < np; ++p) best = std::max(best, std::abs(d[p * m + c]));
  return best;
}

double SeminormReport::order(int k) const {
  for (const auto& [kk, v] : orders) {
    if (kk == k) return v;
  }
  fail(ErrorKind::index_out_of_range, "seminorm order not computed");
}

std::vector<Index> multi_indices(int n, int k) {
  std::vector<Index> out;
  Index cur{};
  // Recursive composition enumeration, lexicographically descending in the first axis.
  auto rec = [&](auto&& self, int axis, int left) -> void {
    if (axis == n - 1) {
      cur[axis] = left;
      out.push_back(cur);
      return;
    }
    for (int v = left; v >= 0; --v) {
      cur[axis] = v;
      self(self, axis + 1, left - v);
    }
  };
  rec(rec, 0, k);
  return out;
}

namespace {

double value_distance(const double* a, const double* b, int m) {
  double s = 0.0;
  for (int c = 0; c < m; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return std::sqrt(s);
}

}  // namespace

double holder_quotient(const Field& g, double theta, std::uint64_t seed) {
  const GridDomain& d = g.domain();
  const int n = d.n;
  const int m = g.comps();
  const std::int64_t np = g.points();
  const Index st = detail::strides_of(d);
  const double* v = g.data().data();
  auto decode = [&](std::int64_t p) {
    Index idx{};
    for (int a = n - 1; a >= 0; --a) {
      idx[a] = p % d.extent[a];
      p /= d.extent[a];
    }
    return idx;
  };
  double best = 0.0;
  if (np <= 4096) {
    for (std::int64_t p = 0; p < np; ++p) {
      const Index ip = decode(p);
      for (std::int64_t q = p + 1; q < np; ++q) {
        const Index iq = decode(q);
        double r2 = 0.0;
        for (int a = 0; a < n; ++a) r2 += static_cast<double>((ip[a] - iq[a]) * (ip[a] - iq[a]));
        const double dist = std::sqrt(r2) * d.h;
        best = std::max(best, value_distance(v + p * m, v + q * m, m) / std::pow(dist, theta));
      }
    }
    return best;
  }
  // Every axis-neighbour pair.
  const double nn = std::pow(d.h, theta);
#pragma omp parallel for reduction(max : best) schedule(static)
  for (std::int64_t p = 0; p < np; ++p) {
    Index ip{};
    std::int64_t rem = p;
    for (int a = n - 1; a >= 0; --a) {
      ip[a] = rem % d.extent[a];
      rem /= d.extent[a];
    }
    for (int a = 0; a < n; ++a) {
      if (ip[a] + 1 < d.extent[a]) {
        best = std::max(best, value_distance(v + p * m, v + (p + st[a]) * m, m) / nn);
      }
    }
  }
  // Dyadic distance bins, fixed number of random pairs each.
  std::mt19937_64 rng(seed);
  std::int64_t widest = 0;
  for (int a = 0; a < n; ++a) widest = std::max(widest, d.extent[a] - 1);
  constexpr int kPairsPerBin = 10000;
  for (std::int64_t lo = 1; lo <= widest; lo *= 2) {
    const std::int64_t hi = 2 * lo - 1;
    std::uniform_int_distribution<std::int64_t> pick(0, np - 1);
    std::uniform_int_distribution<std::int64_t> off(-hi, hi);
    for (int s = 0; s < kPairsPerBin; ++s) {
      for (int attempt = 0; attempt < 64; ++attempt) {
        const std::int64_t p = pick(rng);
        const Index ip = decode(p);
        Index o{};
        std::int64_t mx = 0;
        bool inside = true;
        for (int a = 0; a < n; ++a) {
          o[a] = off(rng);
          mx = std::max(mx, std::abs(o[a]));
          if (ip[a] + o[a] < 0 || ip[a] + o[a] >= d.extent[a]) inside = false;
        }
        if (mx < lo || !inside) continue;
        std::int64_t q = 0;
        double r2 = 0.0;
        for (int a = 0; a < n; ++a) {
          q += (ip[a] + o[a]) * st[a];
          r2 += static_cast<double>(o[a] * o[a]);
        }
        const double dist = std::sqrt(r2) * d.h;
        best = std::max(best, value_distance(v + p * m, v + q * m, m) / std::pow(dist, theta));
        break;
      }
    }
  }
  return best;
}

SeminormReport holder_seminorm(const Field& f, int k, double theta, std::uint64_t seed) {
  SeminormReport rep;
  rep.method = theta > 0.0 ? "pair-sampling" : "fd";
  const int n = f.domain().n;
  for (int j = 0; j <= k; ++j) {
    double best = 0.0;
    if (j == 0) {
      best = sup_norm(f);
    } else {
      for (const Index& s : multi_indices(n, j)) best = std::max(best, sup_norm(fd_derivative(f, s)));
    }
    rep.orders.emplace_back(j, best);
  }
  if (theta > 0.0) {
    double best = 0.0;
    for (const Index& s : multi_indices(n, k)) {
      best = std::max(best, holder_quotient(k == 0 ? f : fd_derivative(f, s), theta, seed));
    }
    rep.frac = SeminormReport::Frac{k, theta, best};
  }
  return rep;
}

Field mollify(const Field& f, double ell, bool* subgrid) {
  const GridDomain& d = f.domain();
  if (subgrid) *subgrid = false;
  if (ell < d.h) {
    if (subgrid) *subgrid = true;
    return f;
  }
  if (ell > d.margin * (1.0 + 1e-12) + 1e-15) {
    fail(ErrorKind::domain_too_small, "mollification radius exceeds the domain margin");
  }
  const int n = d.n;
  const auto c = static_cast<std::int64_t>(std::ceil(ell / d.h - 1e-9));
  const GridDomain out = d.shrink(c);
  const Index st = detail::strides_of(d);
  std::vector<std::int64_t> offs;
  std::vector<double> wts;
  Index o{};
  auto rec = [&](auto&& self, int axis) -> void {
    if (axis == n) {
      double r2 = 0.0;
      std::int64_t lin = 0;
      for (int a = 0; a < n; ++a) {
        r2 += static_cast<double>(o[a] * o[a]);
        lin += o[a] * st[a];
      }
      const double r = std::sqrt(r2) * d.h / ell;
      if (r < 1.0) {
        offs.push_back(lin);
        wts.push_back(std::exp(-1.0 / (1.0 - r * r)));
      }
      return;
    }
    for (std::int64_t v = -c; v <= c; ++v) {
      o[axis] = v;
      self(self, axis + 1);
    }
  };
  rec(rec, 0);
  double mass = 0.0;
  for (double w : wts) mass += w;
  for (double& w : wts) w /= mass;
  const int m = f.comps();
  Field r = map_fields(out, f.rank(), m, {&f}, [&](const Site&, const double* const* in, double* res) {
    for (int cc = 0; cc < m; ++cc) res[cc] = 0.0;
    for (std::size_t s = 0; s < offs.size(); ++s) {
      const double* q = in[0] + offs[s] * m;
      for (int cc = 0; cc < m; ++cc) res[cc] += wts[s] * q[cc];
    }
  });
  check_finite(r, "mollify");
  return r;
}

namespace {

template <class T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) fail(ErrorKind::io_error, "truncated field container");
  return v;
}

}  // namespace

void write_field(const Field& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::io_error, "cannot open " + path + " for writing");
  const GridDomain& d = f.domain();
  os.write("CGF1", 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(d.n));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.rank()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.comps()));
  for (int k = 0; k < d.n; ++k) put<double>(os, d.lo(k));
  for (int k = 0; k < d.n; ++k) put<double>(os, d.hi(k));
  put<double>(os, d.h);
  for (int k = 0; k < d.n; ++k) put<std::uint64_t>(os, static_cast<std::uint64_t>(d.extent[k]));
  os.write(reinterpret_cast<const char*>(f.data().data()),
           static_cast<std::streamsize>(f.data().size() * sizeof(double)));
  if (!os) fail(ErrorKind::io_error, "write failed for " + path);
}

Field read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::io_error, "cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "CGF1", 4) != 0) fail(ErrorKind::io_error, "bad container magic in " + path);
  const int n = static_cast<int>(get<std::uint32_t>(is));
  const auto rank = static_cast<Rank>(get<std::uint32_t>(is));
  const int comps = static_cast<int>(get<std::uint32_t>(is));
  if (n < 2 || n > kMaxDim || comps < 1) fail(ErrorKind::io_error, "bad container header in " + path);
  Point lo{}, hi{};
  for (int k = 0; k < n; ++k) lo[k] = get<double>(is);
  for (int k = 0; k < n; ++k) hi[k] = get<double>(is);
  const double h = get<double>(is);
  Index ext{};
  for (int k = 0; k < n; ++k) ext[k] = static_cast<std::int64_t>(get<std::uint64_t>(is));
  GridDomain d = GridDomain::box(n, lo, hi, h);
  for (int k = 0; k < n; ++k) {
    if (d.extent[k] != ext[k]) fail(ErrorKind::io_error, "extent mismatch in " + path);
  }
  Field f(d, rank, comps);
  is.read(reinterpret_cast<char*>(f.data().data()), static_cast<std::streamsize>(f.data().size() * sizeof(double)));
  if (!is) fail(ErrorKind::io_error, "truncated values in " + path);
  return f;
}

void write_field_csv(const Field& f, const std::string& path, std::int64_t stride) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::io_error, "cannot open " + path + " for writing");
  const GridDomain& d = f.domain();
  for (int k = 0; k < d.n; ++k) os << "x" << k + 1 << ",";
  for (int c = 0; c < f.comps(); ++c) os << "c" << c << (c + 1 < f.comps() ? "," : "\n");
  char buf[64];
  for (std::int64_t p = 0; p < f.points(); ++p) {
    Index m{};
    std::int64_t rem = p;
    bool keep = true;
    for (int a = d.n - 1; a >= 0; --a) {
      m[a] = rem % d.extent[a];
      rem /= d.extent[a];
      if (m[a] % stride != 0) keep = false;
    }
    if (!keep) continue;
    for (int a = 0; a < d.n; ++a) {
      std::snprintf(buf, sizeof buf, "%.9g,", d.coord(a, m[a]));
      os << buf;
    }
    for (int c = 0; c < f.comps(); ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", f.at(p)[c]);
      os << buf << (c + 1 < f.comps() ? "," : "\n");
    }
  }
  if (!os) fail(ErrorKind::io_error, "write failed for " + path);
}

}  // namespace corrugate
