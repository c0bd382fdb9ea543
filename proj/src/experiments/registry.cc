#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "experiments/common.h"
#include "nsslab/errors.h"

namespace nsslab::experiments {

using internal::Context;
using internal::Entry;

namespace internal {

const std::vector<Entry>& Entries() {
  static const std::vector<Entry> entries{
      {{"ou-sanity",
        "Ornstein-Uhlenbeck stationary second moment equals tr P with A P + P A = sigma^2 I"},
       RunOuSanity},
      {{"quadratic-overdamped",
        "quadratic gradient diffusion: exact generator, NSS certificate, chi-square gain curve"},
       RunQuadraticOverdamped},
      {{"quadratic-underdamped",
        "heavy-ball diffusion on a quadratic: matrix-exponential decay, V2 and V3 certificates"},
       RunQuadraticUnderdamped},
      {{"logistic-overdamped",
        "logistic gradient diffusion under the K-PL envelope: scNSS certificate and gain curve"},
       RunLogisticOverdamped},
      {{"logistic-underdamped",
        "logistic heavy-ball diffusion with phi-scheduled damping and rate eta >= 1"},
       RunLogisticUnderdamped},
      {{"lqr-po-overdamped",
        "LQR policy gradient diffusion with constant rate: blow-up onset under large noise"},
       RunLqrPoOverdamped},
      {{"lqr-po-underdamped",
        "LQR heavy-ball diffusion scheduled by the sublevel smoothness ladder"},
       RunLqrPoUnderdamped},
      {{"gain-sweep",
        "LQR K-PL inequality |grad J(K)| >= h / (b1 h + b2) on random stabilising gains"},
       RunGainSweep},
      {{"certify-dissipation",
        "L V <= -alpha(V) + gamma(|Sigma Sigma^T|) for every shipped triple; phi-ladder bounds"},
       RunCertifyDissipation},
      {{"pl-envelope",
        "logistic Hessian and gradient bounds, nonseparability, sampled K-PL envelope"},
       RunPlEnvelope},
      {{"lqr-scalar",
        "scalar Riccati closed form K* = P* = (a + sqrt(a^2 + f^2 q / r)) r / f^2 at a=f=q=r=1"},
       RunLqrScalar},
  };
  return entries;
}

}  // namespace internal

namespace {

const Entry* Find(const std::string& name) {
  for (const auto& e : internal::Entries())
    if (e.info.name == name) return &e;
  return nullptr;
}

}  // namespace

bool Report::passed() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

const std::vector<ExperimentInfo>& Registry() {
  static const std::vector<ExperimentInfo> infos = [] {
    std::vector<ExperimentInfo> out;
    for (const auto& e : internal::Entries()) out.push_back(e.info);
    return out;
  }();
  return infos;
}

std::string RegistryText() {
  std::ostringstream out;
  for (const auto& info : Registry())
    out << std::left << std::setw(24) << info.name << info.statement << "\n";
  return out.str();
}

void Validate(const Config& config) {
  const std::string name = config.name();
  if (!Find(name))
    throw ConfigurationError(config.source() + ": unknown experiment '" + name +
                             "'; available experiments:\n" + RegistryText());
  for (const char* key : {"mc.dt", "mc.horizon", "dynamics.eta", "dynamics.c", "dynamics.delta",
                          "dynamics.horizon"})
    if (config.Has(key)) config.Positive(key, 1.0);
  for (const char* key : {"mc.paths", "mc.threads", "mc.probes", "mc.scan_paths"})
    if (config.Has(key)) config.Count(key, 1);
  if (config.Has("mc.epsilon")) {
    const double eps = config.Positive("mc.epsilon", 0.05);
    if (eps >= 1.0) throw ConfigurationError(config.source() + ": mc.epsilon must be below 1");
  }
  if (config.Has("mc.kappa")) config.Positive("mc.kappa", 1.0);
  for (const char* key : {"noise.intensities", "noise.scan_intensities"}) {
    if (!config.Has(key)) continue;
    for (double s : config.Reals(key, {}))
      if (s < 0.0) throw ConfigurationError(config.source() + ": " + key + ": negative intensity");
  }
  if (config.Has("mc.master_seed")) config.Seed("mc.master_seed", 0);
  if (config.Has("problem.seed")) config.Seed("problem.seed", 0);
  if (config.Has("mc.export_paths")) config.Count("mc.export_paths", 1);
  if (config.Has("problem.a")) config.Matrix("problem.a", Mat());
  for (const char* key : {"problem.dataset", "problem.matrices"})
    if (config.Has(key)) config.File(key);
  const std::string kind = config.Text("problem.kind", "");
  if (kind == "logistic" && !config.Has("problem.dataset"))
    throw ConfigurationError(config.source() + ": problem.dataset is required for logistic");
  if (kind == "lqr" && !config.Has("problem.matrices"))
    throw ConfigurationError(config.source() + ": problem.matrices is required for lqr");
}

Report Run(const Config& config, const RunOptions& options) {
  Validate(config);
  const Entry* entry = Find(config.name());
  Report report;
  report.experiment = entry->info.name;
  std::filesystem::path out_dir =
      options.out_dir ? *options.out_dir
                      : std::filesystem::path(config.Text("output.dir", "out/" + config.name()));
  std::filesystem::create_directories(out_dir);
  const int threads = options.threads
                          ? *options.threads
                          : static_cast<int>(config.Count("mc.threads", 1));
  const std::uint64_t seed =
      options.seed_override ? *options.seed_override : config.Seed("mc.master_seed", 0);
  Context ctx{config, out_dir, threads, seed, report};
  ctx.Note("statement: " + entry->info.statement);
  ctx.Note("master_seed " + std::to_string(seed) + ", threads " + std::to_string(threads));
  const auto start = std::chrono::steady_clock::now();
  entry->run(ctx);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ctx.Note("wall time " + internal::Num(seconds) + " s");
  std::ofstream summary(out_dir / "summary.txt");
  WriteSummary(report, summary);
  return report;
}

void WriteSummary(const Report& report, std::ostream& out) {
  out << "experiment " << report.experiment << "\n";
  for (const auto& c : report.checks) {
    out << (c.pass ? "PASS" : "FAIL") << " [";
    if (c.criterion > 0)
      out << c.criterion;
    else
      out << "-";
    out << "] " << c.name << ": " << c.detail << "\n";
  }
  for (const auto& n : report.notes) out << "note: " << n << "\n";
  for (const auto& a : report.artifacts) out << "artifact: " << a << "\n";
  out << (report.passed() ? "RESULT PASS" : "RESULT FAIL") << "\n";
}

}  // namespace nsslab::experiments
