#include "nsslab/lyapcert.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "nsslab/errors.h"
#include "nsslab/parallel.h"
#include "nsslab/rng.h"

namespace nsslab::lyapcert {
namespace {

using compfun::ClassImplies;
using compfun::FunctionClass;
using compfun::ScalarClassFunction;

std::string DescribeState(const Vec& x) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

SizeFunction::SizeFunction(ValueFn value, std::string label,
                           GradientFn gradient, HessianFn hessian)
    : value_(std::move(value)),
      label_(std::move(label)),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)) {
  if (!value_) throw InvalidArgument("SizeFunction: empty value map");
}

double SizeFunction::Value(const Vec& x) const { return value_(x); }

double SizeFunction::Probe(const Vec& x) const {
  const double v = value_(x);
  if (!std::isfinite(v))
    throw NumericalError("SizeFunction " + label_ +
                         ": non-finite value at probe " + DescribeState(x));
  return v;
}

Vec SizeFunction::FiniteDifferenceGradient(const Vec& x) const {
  const double h = 1e-5 * (1.0 + x.norm());
  Vec g(x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = Probe(probe);
    probe[i] = x[i] - h;
    const double down = Probe(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

Mat SizeFunction::FiniteDifferenceHessian(const Vec& x) const {
  const double h = 1e-4 * (1.0 + x.norm());
  const Eigen::Index n = x.size();
  Mat hess(n, n);
  const double center = Probe(x);
  Vec probe = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    probe[i] = x[i] + h;
    const double up = Probe(probe);
    probe[i] = x[i] - h;
    const double down = Probe(probe);
    probe[i] = x[i];
    hess(i, i) = (up - 2.0 * center + down) / (h * h);
    for (Eigen::Index j = 0; j < i; ++j) {
      probe[i] = x[i] + h;
      probe[j] = x[j] + h;
      const double pp = Probe(probe);
      probe[j] = x[j] - h;
      const double pm = Probe(probe);
      probe[i] = x[i] - h;
      const double mm = Probe(probe);
      probe[j] = x[j] + h;
      const double mp = Probe(probe);
      probe[i] = x[i];
      probe[j] = x[j];
      hess(i, j) = hess(j, i) = (pp - pm - mp + mm) / (4.0 * h * h);
    }
  }
  return hess;
}

Vec SizeFunction::Gradient(const Vec& x, DerivativeMode mode) const {
  if (mode == DerivativeMode::kAnalytic && gradient_) return gradient_(x);
  return FiniteDifferenceGradient(x);
}

Mat SizeFunction::Hessian(const Vec& x, DerivativeMode mode) const {
  if (mode == DerivativeMode::kAnalytic) {
    if (hessian_) return hessian_(x);
    if (gradient_) {
      // Central differences of the analytic gradient.
      const double h = 1e-5 * (1.0 + x.norm());
      const Eigen::Index n = x.size();
      Mat hess(n, n);
      Vec probe = x;
      for (Eigen::Index i = 0; i < n; ++i) {
        probe[i] = x[i] + h;
        const Vec up = gradient_(probe);
        probe[i] = x[i] - h;
        const Vec down = gradient_(probe);
        probe[i] = x[i];
        hess.col(i) = (up - down) / (2.0 * h);
      }
      return 0.5 * (hess + hess.transpose());
    }
  }
  return FiniteDifferenceHessian(x);
}

SizeFunctionAudit AuditSizeFunction(const SizeFunction& v, const Vec& equilibrium,
                                    const std::vector<Vec>& probes,
                                    const std::vector<Vec>& escape_sequence) {
  SizeFunctionAudit audit;
  audit.value_at_equilibrium = v.Value(equilibrium);
  for (const Vec& x : probes) {
    if ((x - equilibrium).norm() == 0.0) continue;
    if (!(v.Value(x) > 0.0)) ++audit.nonpositive;
    if (v.has_analytic_gradient()) {
      const Vec ga = v.Gradient(x);
      const Vec gf = v.FiniteDifferenceGradient(x);
      const double rel = (ga - gf).norm() / std::max(1.0, ga.norm());
      audit.max_gradient_mismatch = std::max(audit.max_gradient_mismatch, rel);
    }
  }
  for (std::size_t i = 1; i < escape_sequence.size(); ++i) {
    if (!(v.Value(escape_sequence[i]) > v.Value(escape_sequence[i - 1])))
      audit.coercive_along_escape = false;
  }
  return audit;
}

GeneratorTerms GeneratorTermsAt(const SizeFunction& v,
                                const sde::DiffusionModel& model, const Vec& xi,
                                const Mat& theta, DerivativeMode mode) {
  const int m = model.noise_dim();
  if (theta.rows() != m || theta.cols() != m)
    throw InvalidArgument("GeneratorApply: Theta must be m x m");
  if (xi.size() != model.state_dim())
    throw InvalidArgument("GeneratorApply: state has wrong dimension");
  GeneratorTerms terms;
  terms.drift = v.Gradient(xi, mode).dot(model.Drift(xi));
  const Mat g_theta = model.Diffusion(xi) * theta;
  if (!g_theta.isZero(0.0)) {
    const Mat hess = v.Hessian(xi, mode);
    terms.noise = 0.5 * (g_theta.transpose() * hess * g_theta).trace();
  }
  if (!std::isfinite(terms.drift) || !std::isfinite(terms.noise))
    throw NumericalError("GeneratorApply: non-finite generator at " +
                         DescribeState(xi));
  return terms;
}

double GeneratorApply(const SizeFunction& v, const sde::DiffusionModel& model,
                      const Vec& xi, const Mat& theta, DerivativeMode mode) {
  return GeneratorTermsAt(v, model, xi, theta, mode).total();
}

double GeneratorModeGap(const SizeFunction& v, const sde::DiffusionModel& model,
                        const Vec& xi, const Mat& theta) {
  const auto a = GeneratorTermsAt(v, model, xi, theta, DerivativeMode::kAnalytic);
  const auto f =
      GeneratorTermsAt(v, model, xi, theta, DerivativeMode::kFiniteDifference);
  const double scale = std::max(1.0, std::abs(a.drift) + std::abs(a.noise));
  return std::abs(a.total() - f.total()) / scale;
}

std::string ToString(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::kNss:
      return "NSS";
    case CertificateKind::kScNss:
      return "scNSS";
    case CertificateKind::kInss:
      return "iNSS";
  }
  return "?";
}

DissipationCertificate::DissipationCertificate(CertificateKind kind,
                                               ScalarClassFunction alpha,
                                               ScalarClassFunction gamma,
                                               double d)
    : kind_(kind), alpha_(std::move(alpha)), gamma_(std::move(gamma)), d_(d) {}

DissipationCertificate DissipationCertificate::Make(CertificateKind kind,
                                                    ScalarClassFunction alpha,
                                                    ScalarClassFunction gamma,
                                                    double d) {
  FunctionClass need_alpha = FunctionClass::kKInfinity;
  FunctionClass need_gamma = FunctionClass::kK;
  switch (kind) {
    case CertificateKind::kNss:
      break;
    case CertificateKind::kScNss:
      need_alpha = FunctionClass::kK;
      need_gamma = FunctionClass::kKOnBounded;
      if (!std::isfinite(d) || !(d > 0.0))
        throw InvalidArgument("scNSS certificate needs a finite positive cap d");
      if (gamma.domain_cap() < d)
        throw InvalidArgument("scNSS certificate: gamma is not defined on [0, d)");
      break;
    case CertificateKind::kInss:
      need_alpha = FunctionClass::kPositiveDefinite;
      break;
  }
  if (kind != CertificateKind::kScNss) d = std::numeric_limits<double>::infinity();
  if (!ClassImplies(alpha.declared_class(), need_alpha))
    throw InvalidArgument(ToString(kind) + " certificate: alpha declared " +
                          compfun::ToString(alpha.declared_class()) + ", needs " +
                          compfun::ToString(need_alpha));
  if (!ClassImplies(gamma.declared_class(), need_gamma))
    throw InvalidArgument(ToString(kind) + " certificate: gamma declared " +
                          compfun::ToString(gamma.declared_class()) + ", needs " +
                          compfun::ToString(need_gamma));
  return DissipationCertificate(kind, std::move(alpha), std::move(gamma), d);
}

DissipationCertificate CheckDissipation(const SizeFunction& v,
                                        const sde::DiffusionModel& model,
                                        DissipationCertificate cert,
                                        const std::vector<Vec>& states,
                                        const std::vector<Mat>& thetas,
                                        double tol, int threads,
                                        DerivativeMode mode) {
  std::vector<double> intensities(thetas.size());
  for (std::size_t j = 0; j < thetas.size(); ++j) {
    intensities[j] = NoiseIntensity(thetas[j]);
    if (cert.kind() == CertificateKind::kScNss && intensities[j] >= cert.d()) {
      std::ostringstream msg;
      msg << "CheckDissipation: theta sample " << j << " has intensity "
          << intensities[j] << " >= cap d = " << cert.d();
      throw DomainViolation(msg.str());
    }
  }
  std::vector<double> gamma_values(thetas.size());
  for (std::size_t j = 0; j < thetas.size(); ++j)
    gamma_values[j] = cert.gamma()(intensities[j]);

  std::vector<std::vector<Violation>> per_state(states.size());
  ParallelFor(states.size(), threads, [&](std::size_t i) {
    const Vec& xi = states[i];
    if (!model.InDomain(xi))
      throw InvalidArgument("CheckDissipation: state " + DescribeState(xi) +
                            " outside the model domain");
    const double decay = -cert.alpha()(v.Value(xi));
    for (std::size_t j = 0; j < thetas.size(); ++j) {
      const double lhs = GeneratorApply(v, model, xi, thetas[j], mode);
      const double rhs = decay + gamma_values[j];
      if (lhs - rhs > tol * (1.0 + std::abs(rhs)))
        per_state[i].push_back({i, j, xi, intensities[j], lhs, rhs});
    }
  });
  cert.violations.clear();
  for (auto& list : per_state)
    for (auto& viol : list) cert.violations.push_back(std::move(viol));
  cert.pairs_checked = states.size() * thetas.size();
  return cert;
}

std::vector<Vec> DefaultStateSamples(const sde::DiffusionModel& model,
                                     std::uint64_t seed, std::size_t count,
                                     const std::vector<Vec>& extremes) {
  const Vec& center = model.equilibrium();
  const Eigen::Index n = center.size();
  const double scales[3] = {0.1, 1.0, 10.0};
  std::vector<Vec> states;
  states.reserve(count + extremes.size());
  rng::CounterStream stream(seed, 0x5A3B1E);
  for (int s = 0; s < 3; ++s) {
    const std::size_t quota = count / 3 + (static_cast<std::size_t>(s) < count % 3 ? 1 : 0);
    std::size_t attempts = 0;
    std::size_t accepted = 0;
    while (accepted < quota) {
      if (++attempts > 1000 * (quota + 1))
        throw NumericalError("DefaultStateSamples: domain rejects almost every draw");
      Vec x(n);
      for (Eigen::Index i = 0; i < n; ++i) x[i] = center[i] + scales[s] * stream.Normal();
      if (!model.InDomain(x)) continue;
      states.push_back(std::move(x));
      ++accepted;
    }
  }
  for (const Vec& x : extremes)
    if (model.InDomain(x)) states.push_back(x);
  return states;
}

std::vector<Mat> DefaultThetaSamples(int noise_dim, double cap) {
  std::vector<double> levels{0.0};
  if (std::isinf(cap)) {
    for (int i = 0; i < 9; ++i) levels.push_back(std::pow(10.0, -3.0 + 0.75 * i));
  } else {
    for (int i = 1; i <= 9; ++i) levels.push_back(0.1 * i * cap);
  }
  std::vector<Mat> thetas;
  for (double s : levels)
    thetas.push_back(std::sqrt(s) * Mat::Identity(noise_dim, noise_dim));
  return thetas;
}

DThreshold SetDThreshold(const ScalarClassFunction& alpha,
                         const ScalarClassFunction& gamma, double c,
                         double sup_intensity, double bracket) {
  if (!(c > 1.0)) throw InvalidArgument("SetDThreshold: c must exceed 1");
  if (sup_intensity < 0.0)
    throw InvalidArgument("SetDThreshold: intensity must be nonnegative");
  if (!(bracket > 0.0)) throw InvalidArgument("SetDThreshold: bracket must be positive");
  DThreshold out;
  double alpha_sup = alpha(bracket);
  if (alpha.declared_class() == FunctionClass::kPositiveDefinite) {
    for (int i = 0; i <= 1000; ++i) alpha_sup = std::max(alpha_sup, alpha(bracket * i / 1000.0));
  }
  const double target = alpha_sup / c;
  try {
    out.d1 = compfun::InvertAuto(gamma, target);
  } catch (const BracketError&) {
    out.d1 = gamma.domain_cap();
  }
  if (sup_intensity >= out.d1) {
    std::ostringstream msg;
    msg << "SetDThreshold: intensity " << sup_intensity
        << " is not below the admissible cap d1 = " << out.d1;
    throw AdmissibilityError(msg.str(), out.d1);
  }
  if (sup_intensity == 0.0) return out;
  out.level = compfun::Invert(alpha, c * gamma(sup_intensity), bracket);
  return out;
}

std::vector<Interval> EntryExitTimes(const std::vector<double>& values,
                                     double threshold) {
  if (threshold < 0.0) throw InvalidArgument("EntryExitTimes: negative threshold");
  std::vector<Interval> out;
  bool inside = false;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const bool now_inside = values[k] <= threshold;
    if (now_inside && !inside) out.push_back({k, std::nullopt});
    if (!now_inside && inside) out.back().exit = k;
    inside = now_inside;
  }
  return out;
}

std::vector<double> PathValues(const sde::TrajectoryPath& path,
                               const SizeFunction& v) {
  std::vector<double> values(path.size());
  for (std::size_t j = 0; j < path.size(); ++j)
    values[j] = v.Value(path.states.col(static_cast<Eigen::Index>(j)));
  return values;
}

std::vector<Interval> EntryExitTimes(const sde::TrajectoryPath& path,
                                     const SizeFunction& v, double threshold) {
  return EntryExitTimes(PathValues(path, v), threshold);
}

SupermartingaleReport SupermartingaleDiagnostic(
    const sde::TrajectoryEnsemble& ensemble, const SizeFunction& v,
    double threshold, std::size_t min_population) {
  if (ensemble.paths.empty())
    throw InvalidArgument("SupermartingaleDiagnostic: empty ensemble");
  std::size_t grid_size = 0;
  const std::vector<double>* grid = nullptr;
  for (const auto& p : ensemble.paths) {
    if (p.size() > grid_size) {
      grid_size = p.size();
      grid = &p.times;
    }
  }
  SupermartingaleReport report;
  // stopped[k][j]: V of path k stopped at its first entry (or its last
  // recorded state); active[k][j]: path k still outside D at grid index j.
  std::vector<std::vector<double>> stopped;
  std::vector<std::vector<char>> active;
  for (const auto& p : ensemble.paths) {
    const auto values = PathValues(p, v);
    if (std::any_of(values.begin(), values.end(),
                    [](double x) { return !std::isfinite(x); })) {
      ++report.excluded_paths;
      continue;
    }
    std::vector<double> s(grid_size);
    std::vector<char> a(grid_size, 0);
    bool frozen = false;
    double held = values.front();
    for (std::size_t j = 0; j < grid_size; ++j) {
      if (!frozen && j < values.size()) {
        held = values[j];
        if (values[j] <= threshold) frozen = true;
        a[j] = frozen ? 0 : 1;
      }
      s[j] = held;
    }
    stopped.push_back(std::move(s));
    active.push_back(std::move(a));
  }
  const double count = static_cast<double>(stopped.size());
  for (std::size_t j = 0; j < grid_size; ++j) {
    SupermartingaleRow row;
    row.t = (*grid)[j];
    double sum = 0.0;
    for (std::size_t k = 0; k < stopped.size(); ++k) {
      sum += stopped[k][j];
      row.outside += static_cast<std::size_t>(active[k][j]);
    }
    row.stopped_mean = count > 0 ? sum / count : 0.0;
    // Increments at j come from paths outside D at j-1.
    const std::size_t population = j > 0 ? report.rows.back().outside : row.outside;
    row.low_power = population < min_population;
    if (j > 0 && count > 0) {
      double d1 = 0.0, d2 = 0.0;
      for (std::size_t k = 0; k < stopped.size(); ++k) {
        const double d = stopped[k][j] - stopped[k][j - 1];
        d1 += d;
        d2 += d * d;
      }
      const double mean_inc = d1 / count;
      const double var =
          count > 1 ? std::max(0.0, (d2 - count * mean_inc * mean_inc) / (count - 1)) : 0.0;
      row.increment_se = std::sqrt(var / count);
      row.flagged = !row.low_power && mean_inc > 0.0 && mean_inc > 2.0 * row.increment_se;
    }
    report.flags += row.flagged ? 1 : 0;
    report.low_power_rows += row.low_power ? 1 : 0;
    report.rows.push_back(row);
  }
  return report;
}

ItoConsistencyReport ItoConsistency(const sde::TrajectoryEnsemble& ensemble,
                                    const SizeFunction& v,
                                    const sde::DiffusionModel& model,
                                    const sde::CovarianceSchedule& schedule) {
  if (ensemble.paths.empty()) throw InvalidArgument("ItoConsistency: empty ensemble");
  ItoConsistencyReport report;
  std::vector<double> residual;
  double change = 0.0, integral = 0.0;
  for (const auto& p : ensemble.paths) {
    if (p.exited_domain()) continue;
    double integ = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const Vec x = p.states.col(static_cast<Eigen::Index>(j));
      const double lv = GeneratorApply(v, model, x, schedule.Sigma(p.times[j]));
      if (j > 0) integ += 0.5 * (lv + prev) * (p.times[j] - p.times[j - 1]);
      prev = lv;
    }
    const double dv = v.Value(p.states.col(p.states.cols() - 1)) - v.Value(p.states.col(0));
    change += dv;
    integral += integ;
    residual.push_back(dv - integ);
  }
  const double n = static_cast<double>(residual.size());
  if (residual.size() < 2) throw InvalidArgument("ItoConsistency: fewer than two usable paths");
  report.mean_change = change / n;
  report.mean_integral = integral / n;
  double mean = 0.0;
  for (double r : residual) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : residual) var += (r - mean) * (r - mean);
  var /= (n - 1);
  report.standard_error = std::sqrt(var / n);
  report.z_score = report.standard_error > 0 ? mean / report.standard_error
                                             : (mean == 0.0 ? 0.0 : INFINITY);
  report.consistent = std::abs(report.z_score) <= 3.0;
  return report;
}

void WriteViolationsCsv(const DissipationCertificate& cert, std::ostream& out) {
  const Eigen::Index n =
      cert.violations.empty() ? 0 : cert.violations.front().state.size();
  for (Eigen::Index i = 0; i < n; ++i) out << "state_" << i << ',';
  out << "theta_norm,lhs,rhs\n";
  for (const auto& v : cert.violations) {
    for (Eigen::Index i = 0; i < v.state.size(); ++i)
      out << sde::FormatDouble(v.state[i]) << ',';
    out << sde::FormatDouble(v.theta_intensity) << ',' << sde::FormatDouble(v.lhs)
        << ',' << sde::FormatDouble(v.rhs) << '\n';
  }
}

std::string SummaryText(const DissipationCertificate& cert,
                        const std::string& label) {
  std::ostringstream os;
  os << "certificate " << label << '\n'
     << "  kind: " << ToString(cert.kind()) << '\n'
     << "  alpha: " << cert.alpha().description() << " ["
     << compfun::ToString(cert.alpha().declared_class()) << "]\n"
     << "  gamma: " << cert.gamma().description() << " ["
     << compfun::ToString(cert.gamma().declared_class()) << "]\n";
  if (std::isfinite(cert.d())) os << "  cap d: " << cert.d() << '\n';
  os << "  pairs checked: " << cert.pairs_checked << '\n'
     << "  violations: " << cert.violations.size() << '\n';
  if (cert.violations.empty()) {
    os << "  result: no counterexample found on samples\n";
  } else {
    const auto worst = std::max_element(
        cert.violations.begin(), cert.violations.end(),
        [](const Violation& a, const Violation& b) { return a.lhs - a.rhs < b.lhs - b.rhs; });
    os << "  worst: lhs=" << worst->lhs << " rhs=" << worst->rhs
       << " intensity=" << worst->theta_intensity << '\n';
  }
  return os.str();
}

}  // namespace nsslab::lyapcert
