#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "corrugate/corrugation.hpp"
#include "corrugate/geometry.hpp"

namespace corrugate {

struct ScheduleParams {
  int n = 2;
  double theta = 0.05;
  int J = 2;
  double a = 4.0;
  double b = 1.1;
  double tau = 0.5;
  double Lambda = 2.0;
  double delta0 = 0.05;
  double lambda0 = 0.0;  // 0 selects delta0^{-1/2}
  int Q = 2;
  double dist0 = 0.125;  // dist(Omega, boundary of V_0)
};

struct StageParams {
  int q = 0;
  double delta = 0.0;       // delta_q
  double delta_next = 0.0;  // delta_{q+1}
  double lambda = 0.0;      // lambda_q
  double K = 0.0;           // K_q
  double d = 0.0;           // d_{q+1}
};

struct Schedule {
  ScheduleParams params;
  double beta = 0.0;
  double b_max = 0.0;
  std::vector<double> delta;   // q = 0..Q
  std::vector<double> lambda;  // q = 0..Q
  std::vector<StageParams> stages;  // q = 0..Q-1

  /// dist0 * 2^{-q}: collar of V_q around Omega.
  double collar(int q) const;
  double d(int q) const;  // 2^{-q} dist0
};

Schedule make_schedule(const ScheduleParams& p);

enum class MetricKind { conformal, diagonal, bump };

struct MetricSpec {
  MetricKind kind = MetricKind::conformal;
  double c = 1.5;      // conformal factor
  double alpha = 0.1;  // diagonal polynomial
  double eps = 0.1;    // bump amplitude
};

Field sample_metric(const MetricSpec& m, const GridDomain& dom);
std::string to_string(MetricKind k);
MetricKind metric_kind_from_string(const std::string& s);

struct PipelineOptions {
  double r = 0.02;
  double r_star = 0.05;
  double rho = 2.0;
  double C_hat = 4.0;   // mollification scale ell = d / (C_hat lambda)
  double C_tilde = 1.0; // frequency headroom for the decomposition and later families
  double delta_star = 0.05;
  double K_star = 2.0;
  int N_K = 1;
  int bootstrap_budget = 16;  // frequency doublings in the generic bootstrap
  bool verify_ibp = true;
  std::uint64_t seed = kDefaultSeed;
};

struct BootstrapReport {
  std::string method;  // "unchanged", "affine", "corrugated"
  double defect = 0.0; // |g - Du^T Du - delta0 H0|_0
  double u2 = 0.0;
  double c0_shift = 0.0;
  int steps = 0;
};

Immersion bootstrap_short_map(const Field& g, const Immersion& u, double delta0, double r,
                              const PipelineOptions& opts, BootstrapReport* report = nullptr);

struct FamilyLedger {
  int i = 0;
  double remainder = 0.0;   // |R^i|_0
  double f = 0.0;           // |F^i|_0
  double f_off_block = 0.0; // entries of F^i outside V_{i+1}
  double top_frequency = 0.0;
  double ibp_identity = 0.0;
};

struct StageOutcome {
  Immersion v;
  int q = 0;
  StageParams params;
  double ell = 0.0;
  double C_hat = 0.0;
  bool subgrid_mollification = false;
  double H_distance = 0.0;  // |H - H_0|_0
  double min_L = 0.0;       // min L_ij(H)
  double lambda_K = 0.0;    // base frequency of the decomposition
  double kallen_residual = 0.0;
  std::vector<FamilyLedger> families;
  double defect = 0.0;      // |g - Dv^T Dv - delta_{q+1} H_0|_0 on V_{q+1}
  double defect_bound = 0.0;  // r delta_{q+1}
  bool gate = false;
  double v2 = 0.0;          // [v]_2
  double c2_envelope = 0.0; // delta^{1/2} lambda d^{-1} K^{J(n-1)+n^2}
  double inc0 = 0.0;        // |v - u|_0
  double inc1 = 0.0;        // [v - u]_1
  double inc2 = 0.0;        // [v - u]_2
  double inc_1theta = 0.0;  // interpolated C^{1,theta} increment
  std::vector<std::string> warnings;
  std::vector<SubstageTraceRow> trace;
};

/// One stage from V_q to V_{q+1}.
StageOutcome stage(const Immersion& u, const Field& g, const Schedule& sched, int q, const PipelineOptions& opts);

struct RunStageRow {
  int q = 0;
  double delta = 0.0;
  double defect = 0.0;        // |g - Du_q^T Du_q - delta_q H_0|_0
  double bound = 0.0;         // r delta_q
  double raw_defect = 0.0;    // |g - Du_q^T Du_q|_0
  double u2 = 0.0;
};

struct RunReport {
  Schedule schedule;
  PipelineOptions options;
  MetricSpec metric;
  double h = 0.0;
  BootstrapReport bootstrap;
  std::vector<RunStageRow> rows;     // q = 0..(stages run)
  std::vector<StageOutcome> stages;  // without the immersions
  double final_defect = 0.0;         // |g - Du_Q^T Du_Q|_0
  int stages_requested = 0;
  int stages_planned = 0;            // after the resolvability check
  bool passed = false;
  std::string error;
  std::vector<std::string> warnings;
};

/// Highest frequency the schedule asks for in stage q, assuming a smooth defect.
double planned_top_frequency(const Schedule& sched, int q, const PipelineOptions& opts);

struct RunInputs {
  MetricSpec metric;
  Point omega_lo{};
  Point omega_hi{};
  double h = 1.0 / 1024.0;
};

/// Bootstrap from the flat inclusion, then sched.params.Q stages.  Snapshots go to
/// snapshot_dir when it is non-empty.
RunReport run_pipeline(const RunInputs& in, const Schedule& sched, const PipelineOptions& opts,
                       const std::string& snapshot_dir = "");

std::string report_json(const RunReport& r);
std::string report_csv(const RunReport& r);

}  // namespace corrugate
