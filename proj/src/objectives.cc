#include "nsslab/objectives.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "nsslab/errors.h"
#include "nsslab/parallel.h"
#include "nsslab/rng.h"
#include "nsslab/sde.h"
#include "simplex.h"

namespace nsslab::objectives {
namespace {

double Sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double Softplus(double s) {
  // log(1 + e^s)
  if (s > 0.0) return s + std::log1p(std::exp(-s));
  return std::log1p(std::exp(s));
}

bool AllTrue(const Vec&) { return true; }

}  // namespace

std::string ToString(PLKind kind) {
  switch (kind) {
    case PLKind::kClassicPL:
      return "classic_PL";
    case PLKind::kKInfinity:
      return "Kinf";
    case PLKind::kK:
      return "K";
    case PLKind::kPositiveDefinite:
      return "PD";
  }
  return "?";
}

Objective::Objective(int dim, ValueFn value, GradientFn gradient, Vec minimizer,
                     double optimum_value, std::string label)
    : dim_(dim),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      domain_(AllTrue),
      minimizer_(std::move(minimizer)),
      optimum_value_(optimum_value),
      label_(std::move(label)) {
  if (dim_ <= 0) throw InvalidArgument("Objective: dimension must be positive");
  if (!value_ || !gradient_) throw InvalidArgument("Objective: value and gradient required");
  if (minimizer_.size() != dim_) throw InvalidArgument("Objective: minimizer has wrong size");
}

Objective& Objective::set_hessian(HessianFn hessian) {
  hessian_ = std::move(hessian);
  return *this;
}

Objective& Objective::set_domain(DomainFn domain) {
  domain_ = domain ? std::move(domain) : DomainFn(AllTrue);
  return *this;
}

Objective& Objective::set_global_lipschitz(double l) {
  if (!(l >= 0.0)) throw InvalidArgument("Objective: Lipschitz constant must be nonnegative");
  lipschitz_ = l;
  return *this;
}

Objective& Objective::set_envelope(PLEnvelope envelope) {
  envelope_ = std::move(envelope);
  return *this;
}

Vec Objective::Gradient(const Vec& z) const {
  Vec out = Vec::Zero(dim_);
  gradient_(z, out);
  return out;
}

Mat Objective::Hessian(const Vec& z) const {
  if (hessian_) return hessian_(z);
  const double h = 1e-5 * (1.0 + z.norm());
  Mat hess(dim_, dim_);
  Vec probe = z;
  Vec up(dim_), down(dim_);
  for (int i = 0; i < dim_; ++i) {
    probe[i] = z[i] + h;
    gradient_(probe, up);
    probe[i] = z[i] - h;
    gradient_(probe, down);
    probe[i] = z[i];
    hess.col(i) = (up - down) / (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

double Objective::HessianNorm(const Vec& z) const { return SpectralNorm(Hessian(z)); }

double MaxGradientMismatch(const Objective& obj, const std::vector<Vec>& probes) {
  double worst = 0.0;
  for (const Vec& z : probes) {
    const double h = 1e-5 * (1.0 + z.norm());
    Vec fd(z.size());
    Vec probe = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      probe[i] = z[i] + h;
      const double up = obj.Value(probe);
      probe[i] = z[i] - h;
      const double down = obj.Value(probe);
      probe[i] = z[i];
      fd[i] = (up - down) / (2.0 * h);
    }
    const Vec g = obj.Gradient(z);
    worst = std::max(worst, (g - fd).norm() / std::max(1.0, g.norm()));
  }
  return worst;
}

Objective QuadraticObjective(const Mat& a, const Vec& b, double j0) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw InvalidArgument("QuadraticObjective: shape mismatch");
  if (!a.isApprox(a.transpose(), 1e-12))
    throw InvalidArgument("QuadraticObjective: A must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> eig(a, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 0.0)) throw InvalidArgument("QuadraticObjective: A must be positive definite");
  const Vec zstar = a.ldlt().solve(b);
  const int n = static_cast<int>(a.rows());
  Objective obj(
      n,
      [a, zstar, j0](const Vec& z) {
        const Vec d = z - zstar;
        return 0.5 * d.dot(a * d) + j0;
      },
      [a, azstar = Vec(a * zstar)](const Vec& z, Vec& out) {
        const auto n = z.size();
        for (Eigen::Index i = 0; i < n; ++i) {
          double acc = -azstar[i];
          for (Eigen::Index j = 0; j < n; ++j) acc += a(i, j) * z[j];
          out[i] = acc;
        }
      },
      zstar, j0,
      "quadratic");
  obj.set_hessian([a](const Vec&) { return a; });
  obj.set_global_lipschitz(lmax);
  const double c = 2.0 * lmin;
  std::ostringstream desc;
  desc << "sqrt(" << c << "*h)";
  obj.set_envelope(PLEnvelope{
      compfun::ScalarClassFunction([c](double h) { return std::sqrt(c * h); },
                                   compfun::FunctionClass::kKInfinity, desc.str()),
      PLKind::kClassicPL, "analytic: c = 2*lambda_min(A)"});
  return obj;
}

LogisticModel::LogisticModel(Mat x, Vec y) : x_(std::move(x)), y_(std::move(y)) {
  if (x_.cols() < 1) throw InvalidArgument("LogisticModel: need at least one sample");
  if (x_.rows() < 1) throw InvalidArgument("LogisticModel: need at least one feature");
  if (x_.cols() != y_.size())
    throw InvalidArgument("LogisticModel: label count differs from sample count");
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    if (y_[i] != 0.0 && y_[i] != 1.0)
      throw InvalidArgument("LogisticModel: labels must be 0 or 1");
  }
}

double LogisticLoss(const LogisticModel& model, const Vec& theta) {
  if (theta.size() != model.dim()) throw InvalidArgument("LogisticLoss: theta has wrong size");
  const Vec logits = model.x().transpose() * theta;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double signed_logit = model.y()[i] == 1.0 ? logits[i] : -logits[i];
    sum += Softplus(-signed_logit);
  }
  return sum / model.samples();
}

void LogisticGradientInto(const LogisticModel& model, const Vec& theta, Vec& out) {
  const Vec logits = model.x().transpose() * theta;
  Vec residual(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    residual[i] = Sigmoid(logits[i]) - model.y()[i];
  out.noalias() = model.x() * residual;
  out /= model.samples();
}

Vec LogisticGradient(const LogisticModel& model, const Vec& theta) {
  if (theta.size() != model.dim())
    throw InvalidArgument("LogisticGradient: theta has wrong size");
  Vec out(model.dim());
  LogisticGradientInto(model, theta, out);
  return out;
}

Mat LogisticHessian(const LogisticModel& model, const Vec& theta) {
  if (theta.size() != model.dim())
    throw InvalidArgument("LogisticHessian: theta has wrong size");
  const Vec logits = model.x().transpose() * theta;
  Vec w(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double p = Sigmoid(logits[i]);
    w[i] = p * (1.0 - p);
  }
  Mat h = model.x() * w.asDiagonal() * model.x().transpose();
  h /= model.samples();
  return 0.5 * (h + h.transpose());
}

double LogisticLipschitzConstant(const LogisticModel& model) {
  const Mat gram = model.x() * model.x().transpose();
  return SymmetricSpectralNorm(gram) / (4.0 * model.samples());
}

SeparabilityReport CheckNonseparable(const LogisticModel& model) {
  const Eigen::Index n = model.dim();
  const Eigen::Index samples = model.samples();
  SeparabilityReport report;
  if (model.x().isZero(0.0)) {
    report.separable = true;
    report.weakly = true;
    report.witness = Vec::Unit(n, 0);
    return report;
  }
  // Signed rows m_i = s_i x_iᵀ with s_i = +1 for y = 1 and -1 for y = 0.
  Mat signed_rows(samples, n);
  for (Eigen::Index i = 0; i < samples; ++i)
    signed_rows.row(i) = (model.y()[i] == 1.0 ? 1.0 : -1.0) * model.x().col(i).transpose();

  // Variables (θ⁺, θ⁻, t). max t s.t. t - m_i(θ⁺ - θ⁻) <= 0, θ± <= 1.
  {
    Mat a = Mat::Zero(samples + 2 * n, 2 * n + 1);
    a.block(0, 0, samples, n) = -signed_rows;
    a.block(0, n, samples, n) = signed_rows;
    a.col(2 * n).head(samples).setOnes();
    a.block(samples, 0, 2 * n, 2 * n).setIdentity();
    Vec b = Vec::Zero(samples + 2 * n);
    b.tail(2 * n).setOnes();
    Vec c = Vec::Zero(2 * n + 1);
    c[2 * n] = 1.0;
    const auto lp = detail::SolveCanonicalLp(a, b, c);
    const Vec theta = lp.x.head(n) - lp.x.segment(n, n);
    report.margin = lp.value;
    if (lp.value > 1e-9) {
      report.separable = true;
      report.witness = theta;
      return report;
    }
  }
  // Weak separation: a nonzero θ in the cone {m_i θ >= 0} has some
  // coordinate that can be pushed positive or negative.
  Mat a = Mat::Zero(samples + 2 * n, 2 * n);
  a.block(0, 0, samples, n) = -signed_rows;
  a.block(0, n, samples, n) = signed_rows;
  a.block(samples, 0, 2 * n, 2 * n).setIdentity();
  Vec b = Vec::Zero(samples + 2 * n);
  b.tail(2 * n).setOnes();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (double sign : {1.0, -1.0}) {
      Vec c = Vec::Zero(2 * n);
      c[j] = sign;
      c[n + j] = -sign;
      const auto lp = detail::SolveCanonicalLp(a, b, c);
      if (lp.value > 1e-9) {
        report.separable = true;
        report.weakly = true;
        report.witness = lp.x.head(n) - lp.x.segment(n, n);
        return report;
      }
    }
  }
  return report;
}

double RaySlope(const LogisticModel& model, const Vec& theta0, double r,
                const Vec& dir) {
  if (std::abs(dir.norm() - 1.0) > 1e-9)
    throw InvalidArgument("RaySlope: direction must be a unit vector");
  if (r < 0.0) throw InvalidArgument("RaySlope: r must be nonnegative");
  return LogisticGradient(model, theta0 + r * dir).dot(dir);
}

double RaySlopeLimit(const LogisticModel& model, const Vec& dir) {
  if (std::abs(dir.norm() - 1.0) > 1e-9)
    throw InvalidArgument("RaySlopeLimit: direction must be a unit vector");
  double sum = 0.0;
  for (int i = 0; i < model.samples(); ++i) {
    const double proj = dir.dot(model.x().col(i));
    sum += model.y()[i] == 1.0 ? std::max(0.0, -proj) : std::max(0.0, proj);
  }
  return sum / model.samples();
}

Vec LogisticMinimizer(const LogisticModel& model, double tol) {
  const double l = LogisticLipschitzConstant(model);
  if (!(l > 0.0)) throw InvalidArgument("LogisticMinimizer: degenerate data (X = 0)");
  Vec theta = Vec::Zero(model.dim());
  Vec g(model.dim());
  LogisticGradientInto(model, theta, g);
  const double dt = 1.0 / l;
  for (int it = 0; it < 200000 && g.norm() > std::max(tol, 1e-6); ++it) {
    theta -= dt * g;
    LogisticGradientInto(model, theta, g);
  }
  for (int it = 0; it < 100 && g.norm() > tol; ++it) {
    const Vec step = LogisticHessian(model, theta).ldlt().solve(g);
    double t = 1.0;
    const double j0 = LogisticLoss(model, theta);
    while (t > 1e-12 && LogisticLoss(model, theta - t * step) > j0 - 1e-4 * t * g.dot(step))
      t *= 0.5;
    theta -= t * step;
    LogisticGradientInto(model, theta, g);
  }
  if (!(g.norm() <= tol)) {
    std::ostringstream msg;
    msg << "LogisticMinimizer: gradient norm " << g.norm() << " above tolerance " << tol;
    throw NumericalError(msg.str());
  }
  return theta;
}

Objective MakeLogisticObjective(const LogisticModel& model) {
  const auto sep = CheckNonseparable(model);
  if (sep.separable)
    throw InvalidArgument("MakeLogisticObjective: data are separable, no minimizer exists");
  const Vec theta_star = LogisticMinimizer(model);
  const double jstar = LogisticLoss(model, theta_star);
  Objective obj(
      model.dim(), [model](const Vec& t) { return LogisticLoss(model, t); },
      [model](const Vec& t, Vec& out) { LogisticGradientInto(model, t, out); }, theta_star,
      jstar, "logistic");
  obj.set_hessian([model](const Vec& t) { return LogisticHessian(model, t); });
  obj.set_global_lipschitz(LogisticLipschitzConstant(model));
  return obj;
}

std::vector<double> GeometricGrid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2)
    throw InvalidArgument("GeometricGrid: need 0 < lo < hi and at least two points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double ratio = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = lo * std::exp(ratio * i);
  grid.back() = hi;
  return grid;
}

PLEnvelope EstimateKplEnvelope(const Objective& obj, const Vec& theta_star,
                               const EnvelopeOptions& options) {
  if (options.n_dirs < 1) throw InvalidArgument("EstimateKplEnvelope: n_dirs must be >= 1");
  if (options.refine_rounds < 0)
    throw InvalidArgument("EstimateKplEnvelope: refine_rounds must be >= 0");
  const double gnorm = obj.Gradient(theta_star).norm();
  if (!(gnorm <= 1e-6)) {
    std::ostringstream msg;
    msg << "EstimateKplEnvelope: theta_star is not stationary (gradient norm " << gnorm << ")";
    throw InvalidArgument(msg.str());
  }
  std::vector<double> r_grid =
      options.r_grid.empty() ? GeometricGrid(1e-4, 1e2, 200) : options.r_grid;
  if (r_grid.front() != 0.0) r_grid.insert(r_grid.begin(), 0.0);
  const std::size_t nr = r_grid.size();
  const int n = obj.dim();

  struct Profile {
    std::vector<double> zeta, psi, mu;
  };
  auto trace = [&](const Vec& d) {
    Profile p;
    p.zeta.resize(nr);
    p.psi.resize(nr);
    Vec g(n);
    for (std::size_t j = 0; j < nr; ++j) {
      obj.GradientInto(theta_star + r_grid[j] * d, g);
      p.zeta[j] = std::max(0.0, g.dot(d));
    }
    p.zeta[0] = 0.0;
    p.psi[0] = 0.0;
    for (std::size_t j = 1; j < nr; ++j)
      p.psi[j] = p.psi[j - 1] + 0.5 * (p.zeta[j] + p.zeta[j - 1]) * (r_grid[j] - r_grid[j - 1]);
    return p;
  };
  std::vector<double> h_grid;
  auto compose = [&](Profile& p) {
    const auto psi_fn = compfun::PiecewiseLinear(r_grid, p.psi, compfun::FunctionClass::kK, "psi");
    const auto zeta_fn =
        compfun::PiecewiseLinear(r_grid, p.zeta, compfun::FunctionClass::kK, "zeta");
    p.mu.resize(h_grid.size());
    for (std::size_t j = 0; j < h_grid.size(); ++j) {
      const double h = h_grid[j];
      p.mu[j] = h >= p.psi.back() ? p.zeta.back()
                                  : zeta_fn(compfun::Invert(psi_fn, h, r_grid.back()));
    }
  };

  std::vector<Vec> dirs;
  if (n == 1) {
    dirs = {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
  } else {
    for (int k = 0; k < options.n_dirs; ++k) {
      rng::CounterStream stream(options.seed, static_cast<std::uint64_t>(k));
      Vec d(n);
      do {
        for (int i = 0; i < n; ++i) d[i] = stream.Normal();
      } while (d.norm() == 0.0);
      dirs.push_back(d.normalized());
    }
  }
  const std::size_t initial = dirs.size();
  std::vector<Profile> profiles(dirs.size());
  ParallelFor(dirs.size(), options.threads, [&](std::size_t k) { profiles[k] = trace(dirs[k]); });

  double h_lo = std::numeric_limits<double>::infinity();
  double h_hi = 0.0;
  for (const auto& p : profiles) {
    h_lo = std::min(h_lo, p.psi[1]);
    h_hi = std::max(h_hi, p.psi.back());
  }
  if (!(h_lo > 0.0) || !(h_hi > h_lo))
    throw NumericalError("EstimateKplEnvelope: degenerate slope profile");
  h_grid = GeometricGrid(h_lo, h_hi, 400);
  h_grid.insert(h_grid.begin(), 0.0);
  ParallelFor(profiles.size(), options.threads, [&](std::size_t k) { compose(profiles[k]); });

  std::vector<double> mu(h_grid.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> argmin(h_grid.size(), 0);
  auto absorb = [&](std::size_t first) {
    for (std::size_t k = first; k < profiles.size(); ++k)
      for (std::size_t j = 0; j < h_grid.size(); ++j)
        if (profiles[k].mu[j] < mu[j]) {
          mu[j] = profiles[k].mu[j];
          argmin[j] = k;
        }
  };
  absorb(0);

  // Pattern search around the minimizing directions, halving the step each round.
  double step = n == 1 ? 0.0 : std::numbers::pi * std::pow(static_cast<double>(options.n_dirs),
                                                           -1.0 / (n - 1));
  for (int round = 0; round < options.refine_rounds && n > 1; ++round, step *= 0.5) {
    std::vector<std::size_t> centers(argmin.begin() + 1, argmin.end());
    std::sort(centers.begin(), centers.end());
    centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
    const std::size_t first = dirs.size();
    for (std::size_t c : centers) {
      const Vec center = dirs[c];
      for (int i = 0; i < n; ++i)
        for (double sign : {-1.0, 1.0}) {
          Vec d = center;
          d[i] += sign * step;
          if (d.norm() > 0.0) dirs.push_back(d.normalized());
        }
    }
    profiles.resize(dirs.size());
    ParallelFor(dirs.size() - first, options.threads, [&](std::size_t k) {
      profiles[first + k] = trace(dirs[first + k]);
      compose(profiles[first + k]);
    });
    absorb(first);
  }
  mu[0] = 0.0;
  for (std::size_t j = 1; j < mu.size(); ++j) mu[j] = std::max(mu[j], mu[j - 1]);

  std::ostringstream meta;
  meta << "empirical: " << initial << " directions + " << dirs.size() - initial
       << " refined, " << nr << " ray points, h in [" << h_lo << ", " << h_hi << "], seed "
       << options.seed;
  return PLEnvelope{compfun::PiecewiseLinear(h_grid, mu, compfun::FunctionClass::kK,
                                             "empirical K-PL envelope"),
                    PLKind::kK, meta.str()};
}

PlReport VerifyPl(const Objective& obj, const PLEnvelope& envelope,
                  const std::vector<Vec>& points, double tol) {
  PlReport report;
  report.min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double h = std::max(0.0, obj.Suboptimality(points[i]));
    const double g = obj.Gradient(points[i]).norm();
    const double bound = envelope.mu(h);
    report.min_slack = std::min(report.min_slack, g - bound);
    if (g < bound - tol) report.violations.push_back({i, g, bound});
  }
  report.checked = points.size();
  if (points.empty()) report.min_slack = 0.0;
  return report;
}

GradientBoundReport GradientBoundCheck(const LogisticModel& model,
                                       const std::vector<Vec>& points) {
  GradientBoundReport report;
  const double bound = SpectralNorm(model.x()) / std::sqrt(static_cast<double>(model.samples()));
  for (const Vec& theta : points) {
    const double g = LogisticGradient(model, theta).norm();
    if (bound > 0.0) {
      report.max_ratio = std::max(report.max_ratio, g / bound);
    } else if (g > 0.0) {
      report.max_ratio = std::numeric_limits<double>::infinity();
    }
    if (g > bound * (1.0 + 1e-12)) report.holds = false;
  }
  return report;
}

LogisticModel ReadLogisticCsv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw InvalidArgument(source + ":" + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line)) {
    line_no = 1;
    fail("missing header row");
  }
  ++line_no;
  std::size_t columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2) fail("need at least one feature column and a label column");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) fail("bad number '" + cell + "'");
      } catch (const std::logic_error&) {
        fail("bad number '" + cell + "'");
      }
    }
    if (row.size() != columns)
      fail("expected " + std::to_string(columns) + " columns, found " + std::to_string(row.size()));
    if (row.back() != 0.0 && row.back() != 1.0) fail("label must be 0 or 1");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail("no data rows");
  const auto n = static_cast<Eigen::Index>(columns - 1);
  Mat x(n, static_cast<Eigen::Index>(rows.size()));
  Vec y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < n; ++j)
      x(j, static_cast<Eigen::Index>(i)) = rows[i][static_cast<std::size_t>(j)];
    y[static_cast<Eigen::Index>(i)] = rows[i].back();
  }
  return LogisticModel(std::move(x), std::move(y));
}

LogisticModel ReadLogisticCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open dataset " + path);
  return ReadLogisticCsv(in, path);
}

void WriteEnvelopeCsv(const PLEnvelope& envelope, const std::vector<double>& h_grid,
                      std::ostream& out) {
  out << "h,mu\n";
  for (double h : h_grid)
    out << sde::FormatDouble(h) << ',' << sde::FormatDouble(envelope.mu(h)) << '\n';
}

}  // namespace nsslab::objectives
