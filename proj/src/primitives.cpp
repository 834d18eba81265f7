#include "corrugate/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <tuple>

namespace corrugate {

SymMat SymMat::identity(int n) {
  SymMat m(n);
  for (int k = 0; k < n; ++k) m.set(k, k, 1.0);
  return m;
}

SymMat SymMat::outer(int n, const Vec& a) {
  SymMat m(n);
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) m.set(k, l, a[k] * a[l]);
  }
  return m;
}

SymMat SymMat::sym_product(int n, const Vec& a, const Vec& b) {
  SymMat m(n);
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) m.set(k, l, a[k] * b[l] + b[k] * a[l]);
  }
  return m;
}

SymMat SymMat::from_full(int n, const double* full) {
  SymMat m(n);
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) m.set(k, l, full[k * n + l]);
  }
  return m;
}

void SymMat::to_full(double* out) const {
  const int n = std::min(n_, kMaxDim);
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) out[k * n + l] = (*this)(k, l);
  }
}

double SymMat::norm() const {
  double s = 0.0;
  for (int k = 0; k < n_; ++k) {
    for (int l = 0; l < n_; ++l) s += (*this)(k, l) * (*this)(k, l);
  }
  return std::sqrt(s);
}

SymMat& SymMat::operator+=(const SymMat& o) {
  for (std::size_t c = 0; c < e_.size(); ++c) e_[c] += o.e_[c];
  return *this;
}

SymMat& SymMat::operator-=(const SymMat& o) {
  for (std::size_t c = 0; c < e_.size(); ++c) e_[c] -= o.e_[c];
  return *this;
}

SymMat& SymMat::operator*=(double s) {
  for (double& v : e_) v *= s;
  return *this;
}

Vec eta(int n, int i, int j) {
  if (n < 2 || n > kMaxDim || i < 1 || j < i || j > n) {
    fail(ErrorKind::index_out_of_range, "eta requires 1 <= i <= j <= n");
  }
  Vec v{};
  if (i == j) {
    v[i - 1] = 1.0;
  } else {
    v[i - 1] = 1.0 / std::sqrt(2.0);
    v[j - 1] = 1.0 / std::sqrt(2.0);
  }
  return v;
}

SymMat h0(int n) {
  if (n < 2 || n > kMaxDim) fail(ErrorKind::index_out_of_range, "h0 requires 2 <= n <= 4");
  SymMat m(n);
  for (int i = 1; i <= n; ++i) {
    for (int j = i; j <= n; ++j) m += SymMat::outer(n, eta(n, i, j));
  }
  return m;
}

PrimitiveBasis::PrimitiveBasis(int n) : n_(n) {
  const int ns = packed_size(n);
  Eigen::MatrixXd gram(ns, ns);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      pairs_.emplace_back(i, j);
      dirs_.push_back(eta(n, i + 1, j + 1));
    }
  }
  for (int s = 0; s < ns; ++s) {
    const Vec& d = dirs_[s];
    for (int k = 0; k < n; ++k) {
      for (int l = k; l < n; ++l) gram(packed_index(n, k, l), s) = d[k] * d[l];
    }
  }
  inv_ = gram.fullPivLu().inverse();
  // Operator norm of each row functional with respect to the Frobenius norm.
  double worst = 0.0;
  for (int s = 0; s < ns; ++s) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      for (int l = k; l < n; ++l) {
        const double w = k == l ? 1.0 : 2.0;
        const double c = inv_(s, packed_index(n, k, l));
        acc += c * c / w;
      }
    }
    op_norm_.push_back(std::sqrt(acc));
    worst = std::max(worst, op_norm_.back());
  }
  r_D_ = 1.0 / (1.0 + worst);
}

void PrimitiveBasis::decompose_full(const double* m, double* coeffs) const {
  const int ns = count();
  std::array<double, 10> packed{};
  for (int k = 0; k < n_; ++k) {
    for (int l = k; l < n_; ++l) packed[packed_index(n_, k, l)] = m[k * n_ + l];
  }
  for (int s = 0; s < ns; ++s) {
    double acc = 0.0;
    for (int c = 0; c < ns; ++c) acc += inv_(s, c) * packed[c];
    coeffs[s] = acc;
  }
}

const PrimitiveBasis& primitive_basis(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<PrimitiveBasis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<PrimitiveBasis>(n);
  return *slot;
}

std::vector<double> basic_decompose(const SymMat& m, const PrimitiveBasis& basis) {
  std::array<double, kMaxDim * kMaxDim> full{};
  m.to_full(full.data());
  std::vector<double> out(basis.count());
  basis.decompose_full(full.data(), out.data());
  return out;
}

double find_rD(const PrimitiveBasis& basis) { return basis.r_D(); }

AlgebraicSplitter::AlgebraicSplitter(int n, int i, const Vec& xi) : n_(n), i_(i - 1), xi_(xi) {
  if (i < 1 || i > n) fail(ErrorKind::index_out_of_range, "family index out of range");
  for (int k = 0; k < i_; ++k) {
    if (xi[k] != 0.0) fail(ErrorKind::ill_posed_direction, "direction has components below the family index");
  }
  if (std::abs(xi[i_]) < 1e-10) fail(ErrorKind::ill_posed_direction, "direction component xi_i vanishes");
  for (int k = i_; k < n; ++k) alpha_slots_.push_back(k);
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) {
      if (k < i_) {
        mixed_slots_.emplace_back(k, l);
      } else if (k > i_) {
        lower_slots_.emplace_back(k, l);
      }
    }
  }
  const int ns = packed_size(n);
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(ns, ns);
  int col = 0;
  for (int k : alpha_slots_) {
    // e_k (.) xi
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        const double v = (a == k ? xi[b] : 0.0) + (b == k ? xi[a] : 0.0);
        phi(packed_index(n, a, b), col) = v;
      }
    }
    ++col;
  }
  for (const auto& [k, l] : mixed_slots_) phi(packed_index(n, k, l), col++) = 1.0;
  for (const auto& [k, l] : lower_slots_) phi(packed_index(n, k, l), col++) = 1.0;
  inv_ = phi.fullPivLu().inverse();
}

void AlgebraicSplitter::split_full(const double* m, double* alpha, double* pi_m, double* pi_l) const {
  const int n = n_;
  const int ns = packed_size(n);
  std::array<double, 10> packed{};
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) packed[packed_index(n, k, l)] = m[k * n + l];
  }
  std::array<double, 10> coef{};
  for (int s = 0; s < ns; ++s) {
    double acc = 0.0;
    for (int c = 0; c < ns; ++c) acc += inv_(s, c) * packed[c];
    coef[s] = acc;
  }
  int col = 0;
  if (alpha) {
    for (int k = 0; k < n; ++k) alpha[k] = 0.0;
    for (int k : alpha_slots_) alpha[k] = coef[col++];
  } else {
    col += static_cast<int>(alpha_slots_.size());
  }
  if (pi_m) {
    for (int c = 0; c < n * n; ++c) pi_m[c] = 0.0;
    for (const auto& [k, l] : mixed_slots_) {
      pi_m[k * n + l] = coef[col];
      pi_m[l * n + k] = coef[col];
      ++col;
    }
  } else {
    col += static_cast<int>(mixed_slots_.size());
  }
  if (pi_l) {
    for (int c = 0; c < n * n; ++c) pi_l[c] = 0.0;
    for (const auto& [k, l] : lower_slots_) {
      pi_l[k * n + l] = coef[col];
      pi_l[l * n + k] = coef[col];
      ++col;
    }
  }
}

AlgebraicSplit AlgebraicSplitter::split(const SymMat& m) const {
  std::array<double, kMaxDim * kMaxDim> full{}, pm{}, pl{};
  m.to_full(full.data());
  AlgebraicSplit out;
  out.i = i_ + 1;
  out.xi = xi_;
  split_full(full.data(), out.alpha.data(), pm.data(), pl.data());
  out.pi_m = SymMat::from_full(n_, pm.data());
  out.pi_l = SymMat::from_full(n_, pl.data());
  return out;
}

const AlgebraicSplitter& algebraic_splitter(int n, int i, const Vec& xi) {
  using Key = std::tuple<int, int, std::array<double, kMaxDim>>;
  static std::mutex mu;
  static std::map<Key, std::unique_ptr<AlgebraicSplitter>> cache;
  std::array<double, kMaxDim> k{};
  for (int a = 0; a < n; ++a) k[a] = xi[a];
  const Key key{n, i, k};
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;
  auto ptr = std::make_unique<AlgebraicSplitter>(n, i, xi);
  const AlgebraicSplitter& ref = *ptr;
  cache.emplace(key, std::move(ptr));
  return ref;
}

AlgebraicSplit algebraic_decompose(int i, const Vec& xi, const SymMat& m) {
  return algebraic_splitter(m.n(), i, xi).split(m);
}

SymMat project_Vi(int i, const SymMat& m) {
  const int n = m.n();
  if (i < 1 || i > n + 1) fail(ErrorKind::index_out_of_range, "project_Vi index out of range");
  SymMat out(n);
  for (int k = i - 1; k < n; ++k) {
    for (int l = k; l < n; ++l) out.set(k, l, m(k, l));
  }
  return out;
}

bool in_Vi(int i, const SymMat& m, double tol) {
  const int n = m.n();
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) {
      if (std::min(k, l) < i - 1 && std::abs(m(k, l)) > tol) return false;
    }
  }
  return true;
}

namespace {

double block_sup(const Field& m, int i, bool inside) {
  const int n = m.domain().n;
  double best = 0.0;
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      const bool in = std::min(k, l) >= i - 1;
      if (in == inside) best = std::max(best, sup_abs_component(m, k * n + l));
    }
  }
  return best;
}

}  // namespace

double off_block_sup(const Field& m, int i) { return block_sup(m, i, false); }
double in_block_sup(const Field& m, int i) { return block_sup(m, i, true); }

const Field& KallenResult::coeff(int i, int j) const {
  const int n = residual.domain().n;
  return a[packed_index(n, i - 1, j - 1)];
}

double distance_to_h0(const Field& H) {
  const int n = H.domain().n;
  std::array<double, kMaxDim * kMaxDim> ref{};
  h0(n).to_full(ref.data());
  Field d = map_fields(H.domain(), Rank::matrix, n * n, {&H}, [&](const Site&, const double* const* in, double* o) {
    for (int c = 0; c < n * n; ++c) o[c] = in[0][c] - ref[c];
  });
  return sup_norm(d);
}

namespace {

// sqrt(L_ij(M)) for every primitive slot; tracks the smallest argument.
std::vector<Field> sqrt_coefficients(const Field& M, double floor_sq, double* min_arg) {
  const int n = M.domain().n;
  const PrimitiveBasis& basis = primitive_basis(n);
  const int ns = basis.count();
  Field coeffs = map_fields(M.domain(), Rank::vector, ns, {&M}, [&](const Site&, const double* const* in, double* o) {
    basis.decompose_full(in[0], o);
  });
  double lowest = 1e300;
  for (double v : coeffs.data()) lowest = std::min(lowest, v);
  *min_arg = lowest;
  if (lowest < floor_sq) {
    std::ostringstream os;
    os << "square-root argument " << lowest << " fell below r_K^2 = " << floor_sq;
    fail(ErrorKind::iteration_diverged, os.str());
  }
  std::vector<Field> out;
  for (int s = 0; s < ns; ++s) {
    out.push_back(map_fields(M.domain(), Rank::scalar, 1, {&coeffs}, [s](const Site&, const double* const* in, double* o) {
      o[0] = std::sqrt(in[0][s]);
    }));
  }
  return out;
}

// M - sum_l weight / lambda_l^2 grad a_{1l} (x) grad a_{1l}
Field subtract_gradients(const Field& M, const std::vector<Field>& grads, const std::vector<double>& lambda,
                         double weight, const GridDomain& dom) {
  const int n = M.domain().n;
  std::array<double, kMaxDim> coef{};
  for (int l = 0; l < n; ++l) coef[l] = weight / (lambda[l + 1] * lambda[l + 1]);
  const Field* g0 = &grads[0];
  const Field* g1 = &grads[1];
  const Field* g2 = n > 2 ? &grads[2] : &grads[0];
  const Field* g3 = n > 3 ? &grads[3] : &grads[0];
  return map_fields(dom, Rank::matrix, n * n, {&M, g0, g1, g2, g3}, [&](const Site&, const double* const* in, double* o) {
    for (int c = 0; c < n * n; ++c) o[c] = in[0][c];
    for (int l = 0; l < n; ++l) {
      const double* g = in[1 + l];
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) o[a * n + b] -= coef[l] * g[a] * g[b];
      }
    }
  });
}

}  // namespace

KallenResult kallen_decompose(const Field& H, const std::vector<double>& lambda, int J, const KallenOptions& opts) {
  const int n = H.domain().n;
  const PrimitiveBasis& basis = primitive_basis(n);
  if (static_cast<int>(lambda.size()) != n + 1) {
    fail(ErrorKind::precondition_violated, "kallen_decompose needs lambda_0..lambda_n");
  }
  if (J < 0) fail(ErrorKind::precondition_violated, "negative J");
  if (lambda[0] < 1.0) fail(ErrorKind::precondition_violated, "lambda_0 must be at least 1");
  for (int l = 1; l <= n; ++l) {
    if (lambda[l] < lambda[l - 1]) fail(ErrorKind::precondition_violated, "frequencies must be nondecreasing");
  }
  KallenResult res;
  res.lambda = lambda;
  res.J = J;
  res.weight = opts.weight;
  const double rK = basis.r_K();
  const double dist = distance_to_h0(H);
  if (dist + lambda[0] / lambda[1] >= rK) {
    std::ostringstream os;
    os << "|H - H_0|_0 + lambda_0/lambda_1 = " << dist + lambda[0] / lambda[1] << " >= r_K = " << rK;
    if (opts.strict) fail(ErrorKind::precondition_violated, os.str());
    res.warnings.push_back(os.str());
  }
  {
    const int top = std::min(opts.N_K + 1, 2);
    const SeminormReport rep = holder_seminorm(H, top);
    for (int k = 1; k <= top; ++k) {
      if (rep.order(k) > 2.0 * std::pow(lambda[0], k)) {
        std::ostringstream os;
        os << "[H]_" << k << " = " << rep.order(k) << " exceeds 2 lambda_0^" << k;
        res.warnings.push_back(os.str());
      }
    }
  }
  double min_arg = 0.0;
  std::vector<Field> a = sqrt_coefficients(H, rK * rK, &min_arg);
  res.min_sqrt_arg = min_arg;
  auto first_row_gradients = [&](const std::vector<Field>& coeffs) {
    std::vector<Field> g;
    for (int l = 0; l < n; ++l) g.push_back(gradient(coeffs[packed_index(n, 0, l)]));
    return g;
  };
  for (int m = 1; m <= J; ++m) {
    std::vector<Field> g = first_row_gradients(a);
    const GridDomain dom = g[0].domain();
    Field Hm = subtract_gradients(H, g, lambda, opts.weight, dom);
    a = sqrt_coefficients(Hm, rK * rK, &min_arg);
    res.min_sqrt_arg = std::min(res.min_sqrt_arg, min_arg);
  }
  std::vector<Field> g = first_row_gradients(a);
  const GridDomain edom = g[0].domain();
  Field rest = subtract_gradients(H, g, lambda, opts.weight, edom);
  const int ns = basis.count();
  std::vector<const Field*> ap;
  for (int s = 0; s < ns; ++s) ap.push_back(&a[s]);
  // Subtract sum a_ij^2 eta_ij (x) eta_ij one slot at a time.
  for (int s = 0; s < ns; ++s) {
    const Vec d = basis.direction(s);
    rest = map_fields(edom, Rank::matrix, n * n, {&rest, ap[s]}, [&](const Site&, const double* const* in, double* o) {
      const double a2 = in[1][0] * in[1][0];
      for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) o[p * n + q] = in[0][p * n + q] - a2 * d[p] * d[q];
      }
    });
  }
  check_finite(rest, "kallen_decompose");
  res.a = std::move(a);
  res.residual = std::move(rest);
  return res;
}

}  // namespace corrugate
