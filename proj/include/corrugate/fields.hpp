#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "corrugate/error.hpp"

namespace corrugate {

inline constexpr int kMaxDim = 4;
inline constexpr int kMaxInputs = 16;

using Index = std::array<std::int64_t, kMaxDim>;
using Point = std::array<double, kMaxDim>;

/// Uniform box lattice.  Points are anchor + (origin + i) * h per axis, so
/// domains cut from the same lattice agree bitwise on coordinates.
struct GridDomain {
  int n = 0;
  Point anchor{};
  Index origin{};
  Index extent{};  // lattice points per axis
  double h = 0.0;
  double margin = 0.0;  // collar width available around the region of interest

  /// Box [lo, hi] with spacing h; (hi - lo) / h must be integral.
  static GridDomain box(int n, const Point& lo, const Point& hi, double h, double margin = 0.0);

  double lo(int k) const { return coord(k, 0); }
  double hi(int k) const { return coord(k, extent[k] - 1); }
  double coord(int k, std::int64_t i) const {
    return anchor[k] + static_cast<double>(origin[k] + i) * h;
  }
  std::int64_t size() const;
  GridDomain shrink(std::int64_t cells) const;
  GridDomain shrink_axis(int k, std::int64_t cells) const;
  /// Offset of this domain's first point inside `outer`, in lattice cells.
  Index offset_in(const GridDomain& outer) const;
  bool contains(const GridDomain& inner) const;
  bool operator==(const GridDomain& other) const;
};

/// Largest domain contained in both (lattices must align).
GridDomain intersect(const GridDomain& a, const GridDomain& b);

enum class Rank : std::uint8_t { scalar = 0, vector = 1, matrix = 2, map = 3 };

/// Values sampled on a GridDomain, `comps` doubles per lattice point, row-major
/// over the lattice (last axis fastest).  Matrix fields hold full n x n blocks.
class Field {
 public:
  Field() = default;
  Field(const GridDomain& dom, Rank rank, int comps, double fill = 0.0);

  static Field scalar(const GridDomain& dom, double fill = 0.0);
  static Field vector(const GridDomain& dom, int m, double fill = 0.0);
  static Field matrix(const GridDomain& dom, double fill = 0.0);
  static Field map(const GridDomain& dom, double fill = 0.0);

  const GridDomain& domain() const { return dom_; }
  Rank rank() const { return rank_; }
  int comps() const { return comps_; }
  std::int64_t points() const { return dom_.size(); }
  bool empty() const { return data_.empty(); }

  double* at(std::int64_t p) { return data_.data() + p * comps_; }
  const double* at(std::int64_t p) const { return data_.data() + p * comps_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  GridDomain dom_;
  Rank rank_ = Rank::scalar;
  int comps_ = 1;
  std::vector<double> data_;
};

/// Lattice point handed to kernels.
struct Site {
  std::int64_t index;
  Point x;
};

void set_threads(int threads);
/// Honors CORRUGATE_THREADS when set to a positive integer.
void configure_threads_from_env();

namespace detail {

struct Cursor {
  const double* base;
  Index stride;
  Index offset;
  std::int64_t comps;
};

Cursor make_cursor(const Field& f, const GridDomain& target);
Index strides_of(const GridDomain& d);

}  // namespace detail

/// Calls fn(site, inputs) at every point of `target`; inputs[k] points at the
/// value of the k-th field at that lattice point.  Rows run in parallel.
template <class Fn>
void for_each_site(const GridDomain& target, std::initializer_list<const Field*> inputs, Fn&& fn) {
  const int n = target.n;
  const int k_in = static_cast<int>(inputs.size());
  if (k_in > kMaxInputs) fail(ErrorKind::index_out_of_range, "too many kernel inputs");
  std::array<detail::Cursor, kMaxInputs> cur{};
  int c = 0;
  for (const Field* f : inputs) cur[c++] = detail::make_cursor(*f, target);
  const std::int64_t last = target.extent[n - 1];
  const std::int64_t rows = target.size() / last;
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    Index m{};
    std::int64_t rem = r;
    for (int a = n - 2; a >= 0; --a) {
      m[a] = rem % target.extent[a];
      rem /= target.extent[a];
    }
    Site s{};
    for (int a = 0; a < n - 1; ++a) s.x[a] = target.coord(a, m[a]);
    std::array<std::int64_t, kMaxInputs> base{};
    std::array<const double*, kMaxInputs> ptr{};
    for (int q = 0; q < k_in; ++q) {
      std::int64_t b = 0;
      for (int a = 0; a < n - 1; ++a) b += (m[a] + cur[q].offset[a]) * cur[q].stride[a];
      b += cur[q].offset[n - 1];
      base[q] = b;
    }
    for (std::int64_t j = 0; j < last; ++j) {
      s.index = r * last + j;
      s.x[n - 1] = target.coord(n - 1, j);
      for (int q = 0; q < k_in; ++q) ptr[q] = cur[q].base + (base[q] + j) * cur[q].comps;
      fn(static_cast<const Site&>(s), static_cast<const double* const*>(ptr.data()));
    }
  }
}

/// Builds a fresh field on `target` with fn(site, inputs, out).
template <class Fn>
Field map_fields(const GridDomain& target, Rank rank, int comps,
                 std::initializer_list<const Field*> inputs, Fn&& fn) {
  Field out(target, rank, comps);
  double* data = out.data().data();
  for_each_site(target, inputs, [&](const Site& s, const double* const* in) {
    fn(s, in, data + s.index * comps);
  });
  return out;
}

/// Samples fn(x, out) on every lattice point.
template <class Fn>
Field sample(const GridDomain& dom, Rank rank, int comps, Fn&& fn) {
  return map_fields(dom, rank, comps, {}, [&](const Site& s, const double* const*, double* out) {
    fn(s.x, out);
  });
}

/// Aborts with non-finite (lattice index and operation name) on NaN/Inf.
void check_finite(const Field& f, const char* op);

Field restrict(const Field& f, const GridDomain& target);

/// Central differences of order 2 for D^sigma; the domain shrinks uniformly by
/// the widest per-axis stencil half-width.
Field fd_derivative(const Field& f, const Index& sigma);

/// All first partials: component (c, l) = d_l f_c stored at c * n + l.
Field gradient(const Field& f);

/// Pointwise a * fa + b * fb on the intersection of the two domains.
Field combine(const Field& fa, double a, const Field& fb, double b);
Field scaled(const Field& f, double s);

/// Sup over lattice points of the Euclidean (Frobenius) norm of each value.
double sup_norm(const Field& f);
/// Sup over lattice points of |f_c| for a single component.
double sup_abs_component(const Field& f, int c);

struct SeminormReport {
  std::vector<std::pair<int, double>> orders;
  struct Frac {
    int k;
    double theta;
    double value;
  };
  std::optional<Frac> frac;
  std::string method;

  double order(int k) const;
};

inline constexpr std::uint64_t kDefaultSeed = 0x5eedc0de2024ULL;

/// [f]_0..[f]_k and, for theta > 0, [f]_{k,theta} by pair sampling.
SeminormReport holder_seminorm(const Field& f, int k, double theta = 0.0,
                               std::uint64_t seed = kDefaultSeed);

/// Quotient sup |g(x) - g(y)| / |x - y|^theta of a field over sampled pairs.
double holder_quotient(const Field& g, double theta, std::uint64_t seed = kDefaultSeed);

/// Convolution with the radial bump of radius ell.  Sets *subgrid and returns
/// a copy when ell < h.
Field mollify(const Field& f, double ell, bool* subgrid = nullptr);

void write_field(const Field& f, const std::string& path);
Field read_field(const std::string& path);
void write_field_csv(const Field& f, const std::string& path, std::int64_t stride = 1);

/// Multi-indices of total order k in dimension n, lexicographic.
std::vector<Index> multi_indices(int n, int k);

}  // namespace corrugate
