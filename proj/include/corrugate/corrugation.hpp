#pragma once

#include <string>
#include <vector>

#include "corrugate/geometry.hpp"
#include "corrugate/ibp.hpp"
#include "corrugate/primitives.hpp"

namespace corrugate {

struct StepParams {
  double delta = 0.0;
  double nu = 1.0;
  Vec eta{};
  Field a;   // scalar amplitude
  Field w;   // corrector; empty means zero
  Field dw;  // its Jacobian d_l w_k at k * n + l
  double lambda = 1.0;
  double mu = 1.0;
};

/// Sup norms of the named terms of the induced-metric expansion.
struct StepReport {
  double remainder = 0.0;  // |R|, R the residual after the closed-form terms, over delta^{3/2}
  double normal = 0.0;     // 2 delta^{1/2} (a g2 / nu) sym(Du^T Dzeta)
  double grad = 0.0;       // delta (2 g1 + g2 g2') / nu sym(grad(a^2) (x) eta)
  double osc = 0.0;        // delta (g2^2 - mean) / nu^2 grad a (x) grad a
  double identity = 0.0;   // FD metric of v against the closed-form right-hand side
  double identity_scale = 0.0;
  double nu_h = 0.0;
  double c0_increment = 0.0;  // |v - u|_0
  double c1_increment = 0.0;  // [v - u]_1
  bool scales_ordered = true; // nu >= mu >= lambda >= delta^{-1/2}
};

struct StepOutcome {
  Immersion v;
  StepReport report;
};

/// v = u + delta T (a^2 g1(nu x.eta) / nu eta + w) + delta^{1/2} a g2(nu x.eta) / nu zeta,
/// with the Jacobian by the product rule.  Frames of u may be passed in.
StepOutcome step_perturb(const Immersion& u, const StepParams& p, const Frames* fr = nullptr);

struct SharpD2 {
  double deviation = 0.0;
  double bound = 0.0;  // delta^{1/2} (lambda + delta^{1/2} nu)
  double ratio = 0.0;
};

SharpD2 sharp_d2_check(const Immersion& u, const Immersion& v, const StepParams& p);

struct SubstageOptions {
  double rho = 2.0;  // u is expected to satisfy (P_rho); steps must keep (P_{2 rho})
  int J = 1;
  bool verify_ibp = true;
};

struct SubstageTraceRow {
  int j = 0;
  double nu = 0.0;
  double normal = 0.0;
  double grad = 0.0;
  double osc = 0.0;
  double remainder = 0.0;
  double f = 0.0;
  double identity = 0.0;
  double u2 = 0.0;  // [u_j]_2
};

struct SubstageResult {
  Immersion v;
  Field F;  // in V_{i+1}
  Field R;  // (Dv^T Dv - Du^T Du - delta sum a^2 eta eta - gradient terms - delta F) / delta
  std::vector<double> nu;
  std::vector<SubstageTraceRow> trace;
  double ibp_identity = 0.0;  // worst analytic IBP identity defect
};

/// First family: a[j-1] is a_{1j}, frequencies nu_j = lambda K^j.
SubstageResult substage1(const Immersion& u, const std::vector<Field>& a, double lambda, double K, double delta,
                         const SubstageOptions& opts);

/// Family i >= 2: a[j-i] is a_{ij}, frequencies nu_i = K^J lambda, nu_j = K nu_{j-1}.
SubstageResult substage2(int i, const Immersion& u, const std::vector<Field>& a, double lambda, double K,
                         double delta, const SubstageOptions& opts);

void write_substage_csv(const SubstageResult& r, const std::string& path);

}  // namespace corrugate
