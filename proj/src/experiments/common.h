#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "nsslab/experiments.h"
#include "nsslab/langevin.h"
#include "nsslab/lqr.h"
#include "nsslab/lyapcert.h"
#include "nsslab/nssmc.h"
#include "nsslab/objectives.h"
#include "nsslab/sde.h"

namespace nsslab::experiments::internal {

struct Context {
  const Config& config;
  std::filesystem::path out_dir;
  int threads = 1;
  std::uint64_t seed = 0;
  Report& report;

  void Check(const std::string& name, int criterion, bool pass, const std::string& detail);
  void Note(const std::string& note);
  /// Opens out_dir/file for writing and records it as an artifact.
  std::ofstream Artifact(const std::string& file);
};

using Runner = std::function<void(Context&)>;

struct Entry {
  ExperimentInfo info;
  Runner run;
};

const std::vector<Entry>& Entries();

void RunOuSanity(Context& ctx);
void RunQuadraticOverdamped(Context& ctx);
void RunQuadraticUnderdamped(Context& ctx);
void RunLogisticOverdamped(Context& ctx);
void RunLogisticUnderdamped(Context& ctx);
void RunLqrPoOverdamped(Context& ctx);
void RunLqrPoUnderdamped(Context& ctx);
void RunGainSweep(Context& ctx);
void RunCertifyDissipation(Context& ctx);
void RunPlEnvelope(Context& ctx);
void RunLqrScalar(Context& ctx);

/// Shortest round-trip decimal form.
std::string Num(double v);

/// [problem] a (default `fallback_a`) and b (default 0).
objectives::Objective QuadraticFromConfig(const Config& c, const Mat& fallback_a);
/// [problem] dataset with the K-PL envelope estimated around the minimiser.
objectives::Objective LogisticFromConfig(const Context& ctx,
                                         objectives::LogisticModel* model_out = nullptr);
/// [problem] matrices.
lqr::LqrProblem LqrFromConfig(const Config& c);
/// J with the scalar/matrix LQR objective and its analytic smoothness ladder.
std::shared_ptr<const langevin::SmoothnessLadder> LqrLadder(const lqr::LqrProblem& problem,
                                                            double h_max);

/// φ built on the flat ladder L̄₂ ≡ ‖A‖ of a quadratic with identity noise.
std::shared_ptr<const langevin::PhiFunctions> QuadraticPhi(const Mat& a, double h_max,
                                                           double delta = 0.0);

/// [dynamics] x0 or the objective's equilibrium.
Vec InitialState(const Config& c, const Vec& fallback);

struct McSettings {
  std::size_t paths;
  double dt;
  double horizon;
  double epsilon;
  std::size_t export_paths;
};
McSettings McFromConfig(const Config& c, std::size_t paths, double dt, double horizon);

nssmc::NssExperiment MakeExperiment(const Context& ctx, sde::DiffusionModel model,
                                    lyapcert::SizeFunction v,
                                    const std::vector<double>& intensities, const Vec& x0,
                                    const McSettings& mc);

/// gain_curve.csv, quantiles.csv (t, one column per intensity) and
/// ensemble.csv with the first export_paths paths at the top intensity.
void WriteMcArtifacts(Context& ctx, const nssmc::NssExperiment& exp,
                      const nssmc::ExperimentResult& res, const McSettings& mc,
                      const std::string& prefix = "");

/// Number of violations; writes violations CSV and appends the summary text.
std::size_t CertifyTriple(Context& ctx, const langevin::CertificateTriple& triple,
                          const sde::DiffusionModel& model, const std::string& tag,
                          int criterion, std::size_t states = 1000);

/// Largest FD-vs-analytic generator gap over the probes.
double MaxGeneratorGap(const lyapcert::SizeFunction& v, const sde::DiffusionModel& model,
                       const std::vector<Vec>& probes, const Mat& theta);

struct LadderAudit {
  std::size_t gradient_violations = 0;
  std::size_t phi_order_violations = 0;
  std::size_t slope_violations = 0;
  std::size_t probes_used = 0;
  std::size_t levels = 0;
};

/// ‖∇J‖² <= φ₁(h) on probes, φ₂ >= φ₁ and φ₂' >= 2L̄₂+5/2 on 40 levels.
LadderAudit AuditLadder(const objectives::Objective& obj, const langevin::PhiFunctions& phi,
                        const std::vector<Vec>& probes);

/// center + scale·N(0, I) at each scale.
std::vector<Vec> GaussianCloud(const Vec& center, const std::vector<double>& scales,
                               int per_scale, std::uint64_t seed);

/// A Hurwitz matrix, SPD weights and Gaussian input matrix, as in the random
/// instance families used by the LQR experiments.
lqr::LqrProblem RandomLqrProblem(int n, int m, std::uint64_t seed);

}  // namespace nsslab::experiments::internal
