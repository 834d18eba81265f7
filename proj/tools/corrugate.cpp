// Command-line driver: run, verify, export-mesh, report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "corrugate/config.hpp"
#include "corrugate/mesh.hpp"
#include "corrugate/verify.hpp"

using namespace corrugate;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kGateFailed = 1, kConfigInvalid = 2, kIoError = 3 };

int exit_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::io_error: return kIoError;
    case ErrorKind::config_invalid:
    case ErrorKind::invalid_exponent:
    case ErrorKind::invalid_rate:
    case ErrorKind::suite_unknown:
    case ErrorKind::wrong_dimension: return kConfigInvalid;
    default: return kGateFailed;
  }
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) fail(ErrorKind::io_error, "cannot write '" + p.string() + "'");
  f << s;
  if (!f) fail(ErrorKind::io_error, "write failed for '" + p.string() + "'");
}

std::string trace_csv(const StageOutcome& st) {
  std::ostringstream os;
  os << "# remainder is the total measured residual of each step\n";
  os << "j,nu,normal,grad,osc,remainder,F,identity,u2\n";
  char buf[256];
  for (const auto& t : st.trace) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", t.j, t.nu, t.normal, t.grad, t.osc,
                  t.remainder, t.f, t.identity, t.u2);
    os << buf;
  }
  return os.str();
}

int cmd_run(const std::string& config, const std::string& out_override, const std::string& seed, bool quiet) {
  RunConfig c = load_config(config);
  if (!out_override.empty()) c.out = out_override;
  if (!seed.empty()) c.options.seed = std::stoull(seed);
  const fs::path out(c.out);
  if (!fs::is_directory(out)) fail(ErrorKind::io_error, "output directory '" + c.out + "' does not exist");
  const Schedule s = config_schedule(c);
  const RunReport r = run_pipeline(config_inputs(c), s, c.options, c.snapshots ? c.out : "");
  write_text(out / "report.json", report_json(r));
  write_text(out / "stages.csv", report_csv(r));
  for (const auto& st : r.stages) write_text(out / ("trace_" + std::to_string(st.q) + ".csv"), trace_csv(st));
  if (!quiet) {
    for (const auto& row : r.rows) {
      std::printf("q=%d delta=%.6g defect=%.6g bound=%.6g %s\n", row.q, row.delta, row.defect, row.bound,
                  row.defect <= row.bound ? "ok" : "FAILED");
    }
    for (const auto& w : r.warnings) std::printf("warning: %s\n", w.c_str());
    if (!r.error.empty()) std::printf("error: %s\n", r.error.c_str());
    std::printf("%s\n", r.passed ? "PASSED" : "FAILED");
  }
  return r.passed ? kOk : kGateFailed;
}

int cmd_verify(const std::string& suite, const std::string& seed, bool quiet) {
  std::ostringstream sink;
  std::ostream& out = quiet ? static_cast<std::ostream&>(sink) : std::cout;
  const auto res = run_suite(suite, seed.empty() ? kDefaultSeed : std::stoull(seed), out);
  std::size_t failed = 0;
  for (const auto& r : res) failed += r.pass ? 0 : 1;
  if (!quiet) std::printf("%zu properties, %zu failed\n", res.size(), failed);
  return failed == 0 ? kOk : kGateFailed;
}

int cmd_export_mesh(const std::string& snapshot, const std::string& out, bool quiet) {
  const Field u = read_field(snapshot);
  export_obj(u, out);
  if (!quiet) std::printf("wrote %lld vertices to %s\n", static_cast<long long>(u.points()), out.c_str());
  return kOk;
}

int cmd_report(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::io_error, "cannot read '" + path + "'");
  nlohmann::ordered_json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::io_error, std::string("malformed report: ") + e.what());
  }
  const auto& h = j["header"];
  std::printf("n=%d  seed=%s  h=%.6g  metric=%s\n", h.value("n", 0), h["seed"].dump().c_str(),
              h.value("grid_spacing", 0.0), h["metric"].value("kind", "").c_str());
  std::printf("%4s %12s %12s %12s %12s %6s\n", "q", "delta", "defect", "bound", "raw_defect", "gate");
  for (const auto& r : j["defect_ledger"]) {
    std::printf("%4d %12.5g %12.5g %12.5g %12.5g %6s\n", r.value("q", 0), r.value("delta", 0.0),
                r.value("defect", 0.0), r.value("bound", 0.0), r.value("raw_defect", 0.0),
                r.value("gate", false) ? "ok" : "FAIL");
  }
  for (const auto& st : j["stages"]) {
    std::printf("stage %d: ell=%.4g lambda_K=%.4g v2=%.4g c2_ratio=%.4g increment_1theta=%.4g\n", st.value("q", 0),
                st.value("ell", 0.0), st.value("lambda_K", 0.0), st.value("v2", 0.0), st.value("c2_ratio", 0.0),
                st.value("increment_1theta", 0.0));
    for (const auto& fl : st["families"]) {
      std::printf("  family %d: remainder=%.4g F=%.4g top_frequency=%.4g\n", fl.value("i", 0),
                  fl.value("remainder", 0.0), fl.value("F", 0.0), fl.value("top_frequency", 0.0));
    }
  }
  const std::string err = j.value("error", "");
  if (!err.empty()) std::printf("error: %s\n", err.c_str());
  std::printf("status: %s\n", j.value("status", "").c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  configure_threads_from_env();
  CLI::App app{"Convex-integration corrugation experiments"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress progress output");

  std::string config, out, seed, suite = "all", snapshot, report;
  auto* run = app.add_subcommand("run", "run the staged construction from a config file");
  run->add_option("--config", config, "config file")->required();
  run->add_option("--out", out, "output directory (overrides the config)");
  run->add_option("--seed", seed, "random seed (overrides the config)");
  run->add_flag("--quiet", quiet);

  auto* verify = app.add_subcommand("verify", "run property suites");
  verify->add_option("--suite", suite, "fields, primitives, periodic, geometry, ibp, corrugation, pipeline or all");
  verify->add_option("--seed", seed, "random seed");
  verify->add_flag("--quiet", quiet);

  auto* mesh = app.add_subcommand("export-mesh", "write a surface snapshot as OBJ");
  mesh->add_option("snapshot", snapshot, "snapshot file")->required();
  mesh->add_option("--out", out, "OBJ path")->required();
  mesh->add_flag("--quiet", quiet);

  auto* rep = app.add_subcommand("report", "print a run report as a table");
  rep->add_option("report", report, "report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigInvalid;
  }
  try {
    if (*run) return cmd_run(config, out, seed, quiet);
    if (*verify) return cmd_verify(suite, seed, quiet);
    if (*mesh) return cmd_export_mesh(snapshot, out, quiet);
    if (*rep) return cmd_report(report);
  } catch (const Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return exit_for(e);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config-invalid: bad number (%s)\n", e.what());
    return kConfigInvalid;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "config-invalid: number out of range (%s)\n", e.what());
    return kConfigInvalid;
  }
  return kOk;
}
