#include "nsslab/langevin.h"

#include <algorithm>
#include <limits>
#include <ostream>
#include <sstream>

#include "nsslab/errors.h"
#include "nsslab/parallel.h"
#include "nsslab/rng.h"

namespace nsslab::langevin {
namespace {

using compfun::FunctionClass;
using compfun::ScalarClassFunction;
using lyapcert::CertificateKind;
using objectives::PLKind;

constexpr double kInf = std::numeric_limits<double>::infinity();

double Subopt(const objectives::Objective& obj, const Vec& z) {
  return std::max(0.0, obj.Suboptimality(z));
}

// Suboptimality, or +∞ outside the objective's domain.
double SafeSubopt(const objectives::Objective& obj, const Vec& z) {
  if (!obj.InDomain(z)) return kInf;
  try {
    const double h = obj.Suboptimality(z);
    return std::isfinite(h) ? h : kInf;
  } catch (const Error&) {
    return kInf;
  }
}

// Distance along `dir` from the minimiser to the boundary of Z_h.
double RayRadius(const objectives::Objective& obj, const Vec& dir, double h) {
  const Vec& z0 = obj.minimizer();
  auto f = [&](double rho) { return SafeSubopt(obj, z0 + rho * dir); };
  double lo = 0.0;
  double hi = 1.0;
  if (f(hi) <= h) {
    lo = hi;
    while (f(2 * lo) <= h) {
      lo *= 2;
      if (lo > 1e12) return lo;
    }
    hi = 2 * lo;
  }
  for (int it = 0; it < 100 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) <= h ? lo : hi) = mid;
  }
  return lo;
}

Vec RandomDirection(int n, rng::CounterStream& s) {
  Vec d(n);
  do {
    for (int i = 0; i < n; ++i) d[i] = s.Normal();
  } while (d.norm() == 0.0);
  return d.normalized();
}

FunctionClass ClassOf(PLKind kind) {
  switch (kind) {
    case PLKind::kClassicPL:
    case PLKind::kKInfinity:
      return FunctionClass::kKInfinity;
    case PLKind::kK:
      return FunctionClass::kK;
    case PLKind::kPositiveDefinite:
      break;
  }
  return FunctionClass::kPositiveDefinite;
}

CertificateKind KindOf(PLKind kind) {
  switch (ClassOf(kind)) {
    case FunctionClass::kKInfinity:
      return CertificateKind::kNss;
    case FunctionClass::kK:
      return CertificateKind::kScNss;
    default:
      return CertificateKind::kInss;
  }
}

const objectives::PLEnvelope& RequireEnvelope(const objectives::Objective& obj) {
  if (!obj.envelope())
    throw ConfigurationError("objective '" + obj.label() + "' carries no PL envelope");
  return *obj.envelope();
}

// Assembles the certificate for γ(s) = slope·s; scNSS uses d = sup α / slope.
CertificateTriple Assemble(lyapcert::SizeFunction v, PLKind kind, ScalarClassFunction::Map alpha,
                           const std::string& alpha_desc, double slope, std::string statement) {
  if (!(slope > 0.0)) throw InvalidArgument("noise gain slope must be positive");
  const FunctionClass cls = ClassOf(kind);
  ScalarClassFunction a(std::move(alpha), cls, alpha_desc);
  std::ostringstream gd;
  gd << slope << " s";
  const auto gamma = ScalarClassFunction::Linear(slope, gd.str());
  const CertificateKind ck = KindOf(kind);
  double d = kInf;
  if (ck == CertificateKind::kScNss) d = a(1e15) / slope;
  return {std::move(v), lyapcert::DissipationCertificate::Make(ck, a, gamma, d),
          std::move(statement)};
}

// Central differences of a gradient block in z, symmetrised.
Mat ZBlockHessian(const std::function<Vec(const Vec&)>& grad_z, const Vec& z) {
  const auto n = z.size();
  Mat h(n, n);
  const double step = 1e-5 * (1.0 + z.norm());
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec zp = z, zm = z;
    zp[i] += step;
    zm[i] -= step;
    h.col(i) = (grad_z(zp) - grad_z(zm)) / (2 * step);
  }
  return 0.5 * (h + h.transpose());
}

}  // namespace

NoiseFactor::NoiseFactor(int rows, int cols, Fn fn, double k_g, std::string label,
                         bool state_independent)
    : rows_(rows),
      cols_(cols),
      fn_(std::move(fn)),
      k_g_(k_g),
      label_(std::move(label)),
      state_independent_(state_independent) {
  if (rows < 1 || cols < 1) throw InvalidArgument("NoiseFactor: dimensions must be positive");
  if (!(k_g >= 0.0) || !std::isfinite(k_g))
    throw InvalidArgument("NoiseFactor: K_G must be finite and nonnegative");
}

NoiseFactor NoiseFactor::Identity(int n) {
  return NoiseFactor(
      n, n, [n](const Vec&, Mat& out) { out = Mat::Identity(n, n); },
      std::sqrt(static_cast<double>(n)), "I", true);
}

NoiseFactor NoiseFactor::Constant(const Mat& g) {
  return NoiseFactor(
      static_cast<int>(g.rows()), static_cast<int>(g.cols()),
      [g](const Vec&, Mat& out) { out = g; }, g.norm(), "constant", true);
}

Mat NoiseFactor::At(const Vec& x) const {
  Mat out(rows_, cols_);
  fn_(x, out);
  return out;
}

double NoiseFactor::BoundExcess(const std::vector<Vec>& probes) const {
  double worst = -kInf;
  for (const Vec& x : probes) worst = std::max(worst, At(x).norm() - k_g_);
  return worst;
}

RateSchedule RateSchedule::Constant(double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("learning rate must be positive");
  std::ostringstream label;
  label << eta;
  return {[eta](double) { return eta; }, label.str(), true};
}

sde::DiffusionModel BuildOverdamped(const OverdampedConfig& config) {
  const auto& obj = config.objective;
  const int n = obj.dim();
  if (config.g.rows() != n) throw InvalidArgument("BuildOverdamped: G must have n rows");
  auto drift = [obj, eta = config.eta](const Vec& z, Vec& out) {
    obj.GradientInto(z, out);
    const double rate = eta.constant ? eta(0.0) : eta(Subopt(obj, z));
    out *= -rate;
  };
  auto diffusion = [g = config.g](const Vec& z, Mat& out) { g.Into(z, out); };
  auto domain = [obj](const Vec& z) { return obj.InDomain(z); };
  return sde::DiffusionModel(n, config.g.cols(), drift, diffusion, domain, obj.minimizer(),
                             "overdamped " + obj.label() + " eta=" + config.eta.label,
                             config.g.state_independent());
}

SmoothnessLadder::SmoothnessLadder(std::vector<double> h, std::vector<double> lbar2,
                                   std::vector<double> lbar, std::string source)
    : h_(std::move(h)), lbar2_(std::move(lbar2)), lbar_(std::move(lbar)), source_(std::move(source)) {}

namespace {

void ValidateGrid(const std::vector<double>& h) {
  if (h.size() < 2 || h.front() != 0.0)
    throw InvalidArgument("ladder grid must start at 0 and have at least two levels");
  for (std::size_t i = 1; i < h.size(); ++i)
    if (!(h[i] > h[i - 1])) throw InvalidArgument("ladder grid must be strictly increasing");
}

void RunningMax(std::vector<double>& t) {
  for (std::size_t i = 1; i < t.size(); ++i) t[i] = std::max(t[i], t[i - 1]);
}

}  // namespace

SmoothnessLadder SmoothnessLadder::Sample(const objectives::Objective& obj, const NoiseFactor& g,
                                          std::vector<double> h_grid,
                                          const LadderOptions& options) {
  ValidateGrid(h_grid);
  if (options.samples_per_level < 1 || options.ray_dirs < 1)
    throw InvalidArgument("SmoothnessLadder: sample counts must be positive");
  const int n = obj.dim();
  const Vec& z0 = obj.minimizer();
  std::vector<double> lbar2(h_grid.size()), lbar(h_grid.size());
  ParallelFor(h_grid.size(), options.threads, [&](std::size_t j) {
    const double h = h_grid[j];
    double best2 = 0.0;
    double best = 0.0;
    auto visit = [&](const Vec& z) {
      const double hn = obj.HessianNorm(z);
      best2 = std::max(best2, hn);
      best = std::max(best, 0.5 * hn * g.At(z).squaredNorm());
    };
    visit(z0);
    if (h > 0.0) {
      rng::CounterStream s(options.seed, j);
      double radius = 0.0;
      for (int k = 0; k < options.ray_dirs; ++k) {
        const Vec d = RandomDirection(n, s);
        const double rho = RayRadius(obj, d, h);
        radius = std::max(radius, rho);
        const Vec edge = z0 + rho * d;
        if (SafeSubopt(obj, edge) <= h) visit(edge);
      }
      int accepted = 0;
      const long max_attempts = 200L * options.samples_per_level;
      for (long attempt = 0; attempt < max_attempts && accepted < options.samples_per_level;
           ++attempt) {
        const Vec d = RandomDirection(n, s);
        const double r = radius * std::pow(s.Uniform(), 1.0 / n);
        const Vec z = z0 + r * d;
        if (SafeSubopt(obj, z) <= h) {
          visit(z);
          ++accepted;
        }
      }
    }
    lbar2[j] = best2;
    lbar[j] = best;
  });
  RunningMax(lbar2);
  RunningMax(lbar);
  std::ostringstream src;
  src << "sampled: " << options.samples_per_level << " points per level, " << h_grid.size()
      << " levels, seed " << options.seed;
  return SmoothnessLadder(std::move(h_grid), std::move(lbar2), std::move(lbar), src.str());
}

SmoothnessLadder SmoothnessLadder::Analytic(const std::function<double(double)>& lbar2_fn,
                                            double k_g, std::vector<double> h_grid,
                                            std::string source) {
  ValidateGrid(h_grid);
  std::vector<double> lbar2(h_grid.size()), lbar(h_grid.size());
  for (std::size_t j = 0; j < h_grid.size(); ++j) {
    lbar2[j] = lbar2_fn(h_grid[j]);
    if (!std::isfinite(lbar2[j]) || lbar2[j] < 0.0)
      throw NumericalError("SmoothnessLadder: analytic profile is not finite and nonnegative");
    lbar[j] = 0.5 * lbar2[j] * k_g * k_g;
  }
  RunningMax(lbar2);
  RunningMax(lbar);
  return SmoothnessLadder(std::move(h_grid), std::move(lbar2), std::move(lbar),
                          "analytic: " + source);
}

double SmoothnessLadder::Interpolate(const std::vector<double>& table, double h) const {
  if (!(h >= 0.0) || h > h_.back() * (1 + 1e-12)) {
    std::ostringstream msg;
    msg << "smoothness ladder queried at h = " << h << " outside [0, " << h_.back() << "]";
    throw DomainViolation(msg.str());
  }
  if (h >= h_.back()) return table.back();
  const auto it = std::upper_bound(h_.begin(), h_.end(), h);
  const std::size_t k = static_cast<std::size_t>(it - h_.begin()) - 1;
  const double w = (h - h_[k]) / (h_[k + 1] - h_[k]);
  return table[k] + w * (table[k + 1] - table[k]);
}

double SmoothnessLadder::Lbar2(double h) const { return Interpolate(lbar2_, h); }
double SmoothnessLadder::Lbar(double h) const { return Interpolate(lbar_, h); }

std::vector<double> SmoothnessLadder::M1(const RateSchedule& eta,
                                         const ScalarClassFunction& mu) const {
  std::vector<double> out(h_.size());
  double running = kInf;
  for (std::size_t j = h_.size(); j-- > 0;) {
    const double lt = lbar_[j] - lbar_.front();
    const double m = mu(h_[j]);
    const double ratio = lt > 0.0 ? eta(h_[j]) * m * m / lt : kInf;
    running = std::min(running, ratio);
    out[j] = running;
  }
  return out;
}

void SmoothnessLadder::WriteCsv(std::ostream& out, const RateSchedule& eta,
                                const ScalarClassFunction& mu) const {
  const auto m1 = M1(eta, mu);
  out << "h,Lbar,Ltilde,Lbar2,m1\n";
  for (std::size_t j = 0; j < h_.size(); ++j)
    out << sde::FormatDouble(h_[j]) << ',' << sde::FormatDouble(lbar_[j]) << ','
        << sde::FormatDouble(lbar_[j] - lbar_.front()) << ',' << sde::FormatDouble(lbar2_[j])
        << ',' << sde::FormatDouble(m1[j]) << '\n';
}

std::vector<double> LadderGrid(double h_max, int points) {
  if (!(h_max > 0.0) || points < 2) throw InvalidArgument("LadderGrid: need h_max > 0, points >= 2");
  auto grid = objectives::GeometricGrid(1e-4 * h_max, h_max, points);
  grid.insert(grid.begin(), 0.0);
  return grid;
}

PhiFunctions::PhiFunctions(std::shared_ptr<const SmoothnessLadder> ladder, double delta)
    : ladder_(std::move(ladder)) {
  if (!ladder_) throw InvalidArgument("PhiFunctions: ladder is required");
  delta_ = delta > 0.0 ? delta : 1e-2 * (1.0 + ladder_->h_max());
  if (!(delta_ < ladder_->h_max()))
    throw DomainViolation("PhiFunctions: ladder grid does not cover h + delta");
  const auto& h = ladder_->h_grid();
  cumulative_.assign(h.size(), 0.0);
  for (std::size_t k = 1; k < h.size(); ++k) {
    const double a = h[k - 1];
    const double b = h[k];
    cumulative_[k] = cumulative_[k - 1] +
                     (b - a) / 6.0 * (Phi1(a) + 4.0 * Phi1(0.5 * (a + b)) + Phi1(b));
  }
}

double PhiFunctions::Phi1(double h) const { return (2.0 * ladder_->Lbar2(h) + 2.5) * h; }

double PhiFunctions::Phi1Integral(double h) const {
  const auto& grid = ladder_->h_grid();
  if (h >= grid.back()) return cumulative_.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), h);
  const std::size_t k = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double a = grid[k];
  // φ₁ is quadratic on each grid cell, so Simpson's rule is exact.
  return cumulative_[k] + (h - a) / 6.0 * (Phi1(a) + 4.0 * Phi1(0.5 * (a + h)) + Phi1(h));
}

double PhiFunctions::Phi2(double h) const {
  if (!(h >= 0.0) || h > h_max() * (1 + 1e-12)) {
    std::ostringstream msg;
    msg << "phi2 queried at h = " << h << " beyond the covered range [0, " << h_max() << "]";
    throw DomainViolation(msg.str());
  }
  return (Phi1Integral(h + delta_) - Phi1Integral(h)) / delta_;
}

double PhiFunctions::Phi2Prime(double h) const {
  if (!(h >= 0.0) || h > h_max() * (1 + 1e-12)) {
    std::ostringstream msg;
    msg << "phi2' queried at h = " << h << " beyond the covered range [0, " << h_max() << "]";
    throw DomainViolation(msg.str());
  }
  return (Phi1(std::min(h + delta_, ladder_->h_max())) - Phi1(h)) / delta_;
}

double PhiFunctions::Phi2Inverse(double y) const {
  if (y <= Phi2(0.0)) return 0.0;
  double hi = h_max();
  if (y >= Phi2(hi)) return hi;
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (Phi2(mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

UnderdampedConfig UnderdampedConfig::Constant(objectives::Objective objective, NoiseFactor g,
                                              double eta, double c, double fraction) {
  if (!objective.global_lipschitz())
    throw ConfigurationError("objective '" + objective.label() +
                             "' has no global Lipschitz constant; use the scheduled mode");
  if (!(eta > 0.0) || !(c > 0.0)) throw InvalidArgument("eta and c must be positive");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("fraction must lie in (0, 1]");
  const double l = *objective.global_lipschitz();
  double bound = std::min(1.0 / (2 * eta + c), c / (2 * (eta * l + c * c)));
  if (l > 0.0) bound = std::min(bound, 1.0 / (2 * l));
  UnderdampedConfig cfg{std::move(objective), std::move(g), {}, 1.0, 1.0, 0.0, 0.0, nullptr};
  cfg.mode = UnderdampedMode::kConstant;
  cfg.eta = eta;
  cfg.c = c;
  cfg.lambda1 = fraction * bound;
  cfg.lambda2 = (1.0 - cfg.lambda1 * c) / eta;
  return cfg;
}

UnderdampedConfig UnderdampedConfig::Scheduled(objectives::Objective objective, NoiseFactor g,
                                               std::shared_ptr<const PhiFunctions> phi) {
  if (!phi) throw ConfigurationError("scheduled mode needs phi functions");
  UnderdampedConfig cfg{std::move(objective), std::move(g), {}, 1.0, 1.0, 0.0, 0.0, nullptr};
  cfg.mode = UnderdampedMode::kScheduled;
  cfg.phi = std::move(phi);
  return cfg;
}

double UnderdampedConfig::Damping(const Vec& z) const {
  if (mode == UnderdampedMode::kConstant) return c;
  return 0.5 * objective.HessianNorm(z) + 0.5;
}

double UnderdampedConfig::Rate(const Vec& z) const {
  if (mode == UnderdampedMode::kConstant) return eta;
  return 0.5 * (phi->Phi2Prime(Subopt(objective, z)) - Damping(z));
}

sde::DiffusionModel BuildUnderdamped(const UnderdampedConfig& config) {
  const int n = config.n();
  if (config.g.rows() != n) throw InvalidArgument("BuildUnderdamped: G must have n rows");
  auto drift = [config, n](const Vec& x, Vec& out) {
    const Vec z = x.head(n);
    const Vec v = x.tail(n);
    Vec grad(n);
    config.objective.GradientInto(z, grad);
    out.head(n) = v;
    out.tail(n) = -config.Rate(z) * grad - config.Damping(z) * v;
  };
  auto diffusion = [g = config.g, n](const Vec& x, Mat& out) {
    out.setZero();
    Mat block(n, g.cols());
    g.Into(x, block);
    out.bottomRows(n) = block;
  };
  auto domain = [config, n](const Vec& x) {
    const Vec z = x.head(n);
    if (!config.objective.InDomain(z)) return false;
    if (config.mode == UnderdampedMode::kScheduled)
      return config.objective.Suboptimality(z) <= config.phi->h_max();
    return true;
  };
  Vec eq = Vec::Zero(2 * n);
  eq.head(n) = config.objective.minimizer();
  const std::string mode = config.mode == UnderdampedMode::kConstant ? "constant" : "scheduled";
  return sde::DiffusionModel(2 * n, config.g.cols(), drift, diffusion, domain, eq,
                             "underdamped " + config.objective.label() + " " + mode,
                             config.g.state_independent());
}

lyapcert::SizeFunction SuboptimalitySize(const objectives::Objective& obj) {
  return lyapcert::SizeFunction([obj](const Vec& z) { return obj.Suboptimality(z); },
                                "J - J*", [obj](const Vec& z) { return obj.Gradient(z); },
                                [obj](const Vec& z) { return obj.Hessian(z); });
}

lyapcert::SizeFunction MomentumSize(const UnderdampedConfig& config) {
  if (config.mode != UnderdampedMode::kConstant)
    throw ConfigurationError("V2 requires the constant-coefficient mode");
  const int n = config.n();
  const auto& obj = config.objective;
  const double l1 = config.lambda1;
  const double l2 = config.lambda2;
  auto grad_z = [obj, l1, n](const Vec& z, const Vec& v) {
    return Vec(obj.Gradient(z) + l1 * obj.Hessian(z) * v);
  };
  auto value = [obj, l1, l2, n](const Vec& x) {
    const Vec z = x.head(n);
    const Vec v = x.tail(n);
    return obj.Suboptimality(z) + l1 * v.dot(obj.Gradient(z)) + 0.5 * l2 * v.squaredNorm();
  };
  auto gradient = [obj, l1, l2, n, grad_z](const Vec& x) {
    const Vec z = x.head(n);
    const Vec v = x.tail(n);
    Vec g(2 * n);
    g.head(n) = grad_z(z, v);
    g.tail(n) = l1 * obj.Gradient(z) + l2 * v;
    return g;
  };
  auto hessian = [obj, l1, l2, n, grad_z](const Vec& x) {
    const Vec z = x.head(n);
    const Vec v = x.tail(n);
    Mat h(2 * n, 2 * n);
    h.topLeftCorner(n, n) = ZBlockHessian([&](const Vec& y) { return grad_z(y, v); }, z);
    const Mat hz = obj.Hessian(z);
    h.topRightCorner(n, n) = l1 * hz;
    h.bottomLeftCorner(n, n) = l1 * hz;
    h.bottomRightCorner(n, n) = l2 * Mat::Identity(n, n);
    return h;
  };
  return lyapcert::SizeFunction(value, "V2", gradient, hessian);
}

lyapcert::SizeFunction ScheduledMomentumSize(const UnderdampedConfig& config) {
  if (config.mode != UnderdampedMode::kScheduled)
    throw ConfigurationError("V3 requires the scheduled mode");
  const int n = config.n();
  const auto& obj = config.objective;
  const auto phi = config.phi;
  auto grad_z = [obj, phi](const Vec& z, const Vec& v) {
    return Vec(phi->Phi2Prime(Subopt(obj, z)) * obj.Gradient(z) + obj.Hessian(z) * v);
  };
  auto value = [obj, phi, n](const Vec& x) {
    const Vec z = x.head(n);
    const Vec v = x.tail(n);
    return phi->Phi2(Subopt(obj, z)) + obj.Gradient(z).dot(v) + v.squaredNorm();
  };
  auto gradient = [obj, n, grad_z](const Vec& x) {
    const Vec z = x.head(n);
    const Vec v = x.tail(n);
    Vec g(2 * n);
    g.head(n) = grad_z(z, v);
    g.tail(n) = obj.Gradient(z) + 2.0 * v;
    return g;
  };
  auto hessian = [obj, n, grad_z](const Vec& x) {
    const Vec z = x.head(n);
    const Vec v = x.tail(n);
    Mat h(2 * n, 2 * n);
    h.topLeftCorner(n, n) = ZBlockHessian([&](const Vec& y) { return grad_z(y, v); }, z);
    const Mat hz = obj.Hessian(z);
    h.topRightCorner(n, n) = hz;
    h.bottomLeftCorner(n, n) = hz;
    h.bottomRightCorner(n, n) = 2.0 * Mat::Identity(n, n);
    return h;
  };
  return lyapcert::SizeFunction(value, "V3", gradient, hessian);
}

Sandwich MomentumSandwich(const UnderdampedConfig& config, const Vec& z, const Vec& v) {
  if (config.mode != UnderdampedMode::kConstant)
    throw ConfigurationError("V2 requires the constant-coefficient mode");
  const double h = config.objective.Suboptimality(z);
  const double vv = v.squaredNorm();
  const double l = *config.objective.global_lipschitz();
  Sandwich s;
  s.value = h + config.lambda1 * v.dot(config.objective.Gradient(z)) + 0.5 * config.lambda2 * vv;
  s.lower = 0.5 * h + 0.25 * config.lambda2 * vv;
  s.upper = (1 + config.lambda1 * l) * h + 0.5 * (config.lambda1 + config.lambda2) * vv;
  return s;
}

Sandwich ScheduledMomentumSandwich(const UnderdampedConfig& config, const Vec& z, const Vec& v) {
  if (config.mode != UnderdampedMode::kScheduled)
    throw ConfigurationError("V3 requires the scheduled mode");
  const double p = config.phi->Phi2(Subopt(config.objective, z));
  const double vv = v.squaredNorm();
  Sandwich s;
  s.value = p + config.objective.Gradient(z).dot(v) + vv;
  s.lower = 0.5 * p + 0.5 * vv;
  s.upper = 1.5 * p + 1.5 * vv;
  return s;
}

GeneratorBound OverdampedGeneratorBound(const OverdampedConfig& config, const Vec& z,
                                        const Mat& sigma, const SmoothnessLadder* ladder) {
  const auto& obj = config.objective;
  const auto& env = RequireEnvelope(obj);
  const double h = Subopt(obj, z);
  const double rate = config.eta(h);
  const Vec grad = obj.Gradient(z);
  const Mat gs = config.g.At(z) * sigma;
  const double intensity = NoiseIntensity(sigma);
  GeneratorBound out;
  out.lhs = -rate * grad.squaredNorm() + 0.5 * (gs.transpose() * obj.Hessian(z) * gs).trace();
  const double mu = env.mu(h);
  if (ladder) {
    out.rhs = -rate * mu * mu + ladder->Lbar(h) * intensity;
  } else if (obj.global_lipschitz() && config.eta.constant) {
    const double kg = config.g.k_g();
    out.rhs = -rate * mu * mu + 0.5 * *obj.global_lipschitz() * kg * kg * intensity;
  } else {
    throw ConfigurationError("generator bound needs a global L with constant rate, or a ladder");
  }
  return out;
}

CertificateTriple GradientFlowTriple(const OverdampedConfig& config) {
  const auto& obj = config.objective;
  const auto& env = RequireEnvelope(obj);
  if (!obj.global_lipschitz())
    throw ConfigurationError("gradient-flow certificate needs a global Lipschitz constant");
  if (!config.eta.constant)
    throw ConfigurationError("gradient-flow certificate needs a constant learning rate");
  const double rate = config.eta(0.0);
  const double kg = config.g.k_g();
  const auto mu = env.mu;
  return Assemble(
      SuboptimalitySize(obj), env.kind,
      [mu, rate](double r) {
        const double m = mu(r);
        return rate * m * m;
      },
      "eta mu(r)^2", 0.5 * *obj.global_lipschitz() * kg * kg,
      ToString(env.kind) + " envelope with global L: J - J* dissipates under the gradient diffusion");
}

CertificateTriple MomentumTriple(const UnderdampedConfig& config) {
  const auto& obj = config.objective;
  const auto& env = RequireEnvelope(obj);
  auto v = MomentumSize(config);
  const double l = *obj.global_lipschitz();
  const double l1 = config.lambda1;
  const double l2 = config.lambda2;
  const double eta = config.eta;
  const double lambda3 = std::max(1 + l1 * l, 0.5 * (l1 + l2));
  const double slope = config.c / (2 * l1 * eta * eta);
  const auto mu = env.mu;
  const double kg = config.g.k_g();
  return Assemble(
      std::move(v), env.kind,
      [=](double r) {
        const double h = r / (2 * lambda3);
        const double m = mu(h);
        return l1 * eta * std::min(m * m, slope * h);
      },
      "lambda1 eta mu1(r / (2 lambda3))", 0.5 * l2 * kg * kg,
      ToString(env.kind) + " envelope with global L: V2 dissipates under the heavy-ball diffusion");
}

CertificateTriple ScheduledMomentumTriple(const UnderdampedConfig& config) {
  const auto& env = RequireEnvelope(config.objective);
  auto v = ScheduledMomentumSize(config);
  const auto phi = config.phi;
  const auto mu = env.mu;
  const double kg = config.g.k_g();
  return Assemble(
      std::move(v), env.kind,
      [phi, mu](double r) {
        const double h = r / 3.0;
        const double m = mu(phi->Phi2Inverse(h));
        return std::min(m * m, h);
      },
      "mu3(r / 3), zero on [0, 3 phi2(0)]", kg * kg,
      ToString(env.kind) +
          " envelope with scheduled (eta, c): V3 dissipates under the heavy-ball diffusion");
}

}  // namespace nsslab::langevin
