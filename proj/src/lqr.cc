#include "nsslab/lqr.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "nsslab/errors.h"
#include "nsslab/rng.h"
#include "nsslab/sde.h"


namespace nsslab::lqr {
namespace {

using sde::FormatDouble;

constexpr int kMaxLyapunovDim = 30;

double MinEigenvalue(const Mat& s) {
  return Eigen::SelfAdjointEigenSolver<Mat>(s, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

double MaxEigenvalue(const Mat& s) {
  const auto ev = Eigen::SelfAdjointEigenSolver<Mat>(s, Eigen::EigenvaluesOnly).eigenvalues();
  return ev(ev.size() - 1);
}

void RequireSpd(const Mat& s, const char* name) {
  if (s.rows() != s.cols() || s.rows() == 0)
    throw InvalidArgument(std::string(name) + " must be a nonempty square matrix");
  if ((s - s.transpose()).norm() > 1e-12 * std::max(1.0, s.norm()))
    throw InvalidArgument(std::string(name) + " must be symmetric");
  if (!(MinEigenvalue(s) > 0.0))
    throw InvalidArgument(std::string(name) + " must be positive definite");
}

void RequireStable(const Mat& a_cl, const char* who) {
  const double abscissa = SpectralAbscissa(a_cl);
  if (!(abscissa < -kHurwitzMargin)) {
    std::ostringstream msg;
    msg << who << ": closed loop is not Hurwitz (spectral abscissa " << abscissa << ")";
    throw StabilityError(msg.str(), abscissa);
  }
}

Mat LyapunovResidual(const Mat& a_cl, const Mat& p, const Mat& m) {
  return a_cl.transpose() * p + p * a_cl + m;
}

}  // namespace

double SpectralAbscissa(const Mat& a) {
  if (a.size() == 0) return -std::numeric_limits<double>::infinity();
  return Eigen::EigenSolver<Mat>(a, false).eigenvalues().real().maxCoeff();
}

bool IsHurwitz(const Mat& a, double margin) { return SpectralAbscissa(a) < -margin; }

Mat SolveLyapunov(const Mat& a_cl, const Mat& m) {
  const Eigen::Index n = a_cl.rows();
  if (a_cl.cols() != n || m.rows() != n || m.cols() != n)
    throw InvalidArgument("SolveLyapunov: dimension mismatch");
  if (n > kMaxLyapunovDim) throw InvalidArgument("SolveLyapunov: n exceeds 30");
  if ((m - m.transpose()).norm() > 1e-12 * std::max(1.0, m.norm()))
    throw InvalidArgument("SolveLyapunov: M must be symmetric");
  RequireStable(a_cl, "SolveLyapunov");
  if (n == 0) return Mat(0, 0);

  const Mat eye = Mat::Identity(n, n);
  const Mat at = a_cl.transpose();
  Mat op = Mat::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      // I⊗Aᵀ + Aᵀ⊗I in column-major vec ordering.
      op.block(j * n, i * n, n, n) += (i == j ? at : Mat::Zero(n, n));
      op.block(j * n, i * n, n, n) += at(j, i) * eye;
    }
  Eigen::PartialPivLU<Mat> lu(op);
  if (!(lu.rcond() > 1e-14))
    throw ConditioningError("SolveLyapunov: vectorised operator is numerically singular");
  const Vec rhs = -Eigen::Map<const Vec>(m.data(), n * n);
  Vec x = lu.solve(rhs);
  Mat p = Eigen::Map<Mat>(x.data(), n, n);
  p = 0.5 * (p + p.transpose());
  const double scale = m.norm() + p.norm();
  Mat res = LyapunovResidual(a_cl, p, m);
  if (res.norm() > 1e-10 * scale) {
    const Vec dx = lu.solve(-Eigen::Map<const Vec>(res.data(), n * n));
    p += Eigen::Map<const Mat>(dx.data(), n, n);
    p = 0.5 * (p + p.transpose());
    res = LyapunovResidual(a_cl, p, m);
  }
  if (!p.allFinite() || res.norm() > 1e-10 * (m.norm() + p.norm())) {
    std::ostringstream msg;
    msg << "SolveLyapunov: residual " << res.norm() << " exceeds contract";
    throw ConditioningError(msg.str());
  }
  return p;
}

LqrPlProfile SolveRiccati(const Mat& a, const Mat& f, const Mat& q, const Mat& r,
                          const Mat& k0) {
  const Eigen::LDLT<Mat> r_fact(r);
  LqrPlProfile out;
  Mat k = k0;
  double prev_step = std::numeric_limits<double>::infinity();
  constexpr int kMaxIterations = 200;
  for (int it = 1; it <= kMaxIterations; ++it) {
    const Mat a_cl = a - f * k;
    if (!IsHurwitz(a_cl))
      throw StabilityError("SolveRiccati: iterate left the stabilising set",
                           SpectralAbscissa(a_cl));
    const Mat p = SolveLyapunov(a_cl, q + k.transpose() * r * k);
    out.cost_history.push_back(p.trace());
    const Mat next = r_fact.solve(f.transpose() * p);
    const double step = (next - k).norm();
    k = next;
    out.iterations = it;
    const bool converged = step <= 1e-12;
    const bool stagnated = step <= 1e-10 * std::max(1.0, k.norm()) && step >= prev_step;
    if (converged || stagnated) break;
    if (it == kMaxIterations)
      throw NumericalError("SolveRiccati: Kleinman iteration did not converge");
    prev_step = step;
  }
  const Mat a_cl = a - f * k;
  RequireStable(a_cl, "SolveRiccati");
  out.k_star = k;
  out.p_star = SolveLyapunov(a_cl, q + k.transpose() * r * k);
  out.y_star = SolveLyapunov(a_cl.transpose(), Mat::Identity(a.rows(), a.rows()));
  out.j2_star = out.p_star.trace();

  const double f_norm = SpectralNorm(f);
  const double r_min = MinEigenvalue(r);
  const double y_min = MinEigenvalue(out.y_star);
  const double y_max = MaxEigenvalue(out.y_star);
  out.b1 = f_norm * std::sqrt(2.0 * (y_min + y_max)) / (r_min * std::sqrt(y_min));
  out.b2 = a_cl.squaredNorm() * std::sqrt(y_min) * std::sqrt(y_min + y_max) /
           (std::sqrt(2.0) * f_norm);
  out.a1 = 2.0 * f_norm / r_min;
  out.a2 = std::sqrt(2.0 * SpectralNorm(a) / r_min);
  return out;
}

LqrProblem::LqrProblem(Mat a, Mat f, Mat q, Mat r, std::optional<Mat> k0)
    : a_(std::move(a)), f_(std::move(f)), q_(std::move(q)), r_(std::move(r)) {
  const auto n = a_.rows();
  if (a_.cols() != n || n == 0) throw InvalidArgument("LqrProblem: A must be nonempty square");
  if (n > kMaxLyapunovDim) throw InvalidArgument("LqrProblem: n exceeds 30");
  if (f_.rows() != n || f_.cols() == 0)
    throw InvalidArgument("LqrProblem: F must have n rows and at least one column");
  if (q_.rows() != n) throw InvalidArgument("LqrProblem: Q must be n x n");
  if (r_.rows() != f_.cols()) throw InvalidArgument("LqrProblem: R must be m x m");
  RequireSpd(q_, "Q");
  RequireSpd(r_, "R");
  if (f_.norm() == 0.0) throw InvalidArgument("LqrProblem: F = 0 admits no K-PL constants");
  Mat start;
  if (k0) {
    if (k0->rows() != f_.cols() || k0->cols() != n)
      throw InvalidArgument("LqrProblem: K0 must be m x n");
    start = *k0;
  } else if (IsHurwitz(a_)) {
    start = Mat::Zero(f_.cols(), n);
  } else {
    std::ostringstream msg;
    msg << "LqrProblem: A is not Hurwitz (spectral abscissa " << SpectralAbscissa(a_)
        << "); a stabilising initial gain K0 is required";
    throw StabilityError(msg.str(), SpectralAbscissa(a_));
  }
  RequireStable(a_ - f_ * start, "LqrProblem: initial gain");
  profile_ = SolveRiccati(a_, f_, q_, r_, start);
}

GainPoint EvaluateGain(const LqrProblem& problem, const Mat& k) {
  if (k.rows() != problem.m() || k.cols() != problem.n())
    throw InvalidArgument("EvaluateGain: K must be m x n");
  GainPoint g;
  g.k = k;
  const Mat a_cl = problem.ClosedLoop(k);
  RequireStable(a_cl, "EvaluateGain");
  g.p = SolveLyapunov(a_cl, problem.q() + k.transpose() * problem.r() * k);
  g.y = SolveLyapunov(a_cl.transpose(), Mat::Identity(problem.n(), problem.n()));
  g.cost = g.p.trace();
  g.grad = 2.0 * (problem.r() * k - problem.f().transpose() * g.p) * g.y;
  return g;
}

double LqrCost(const LqrProblem& problem, const Mat& k) {
  const Mat a_cl = problem.ClosedLoop(k);
  RequireStable(a_cl, "LqrCost");
  return SolveLyapunov(a_cl, problem.q() + k.transpose() * problem.r() * k).trace();
}

Mat LqrGradient(const LqrProblem& problem, const Mat& k) { return EvaluateGain(problem, k).grad; }

double Mu5(const LqrPlProfile& profile, double h) {
  if (h < 0.0) throw DomainViolation("Mu5: h must be nonnegative");
  return h / (profile.b1 * h + profile.b2);
}

compfun::ScalarClassFunction Mu5Function(const LqrPlProfile& profile) {
  const double b1 = profile.b1;
  const double b2 = profile.b2;
  std::ostringstream desc;
  desc << "h/(" << b1 << " h + " << b2 << ")";
  return compfun::ScalarClassFunction([b1, b2](double h) { return h / (b1 * h + b2); },
                                      compfun::FunctionClass::kK, desc.str());
}

double SmoothnessL3(const LqrPlProfile& profile, const LqrProblem& problem, double h) {
  if (h < 0.0) throw DomainViolation("SmoothnessL3: h must be nonnegative");
  const double r_norm = SpectralNorm(problem.r());
  const double f_norm = SpectralNorm(problem.f());
  const double q_min = MinEigenvalue(problem.q());
  const double s = profile.j2_star + h;
  return 2.0 * r_norm / q_min * s +
         8.0 * profile.a2 * f_norm * r_norm / (q_min * q_min) * std::pow(s, 2.5) +
         8.0 * f_norm * (profile.a1 * r_norm + f_norm) / (q_min * q_min) * s * s * s;
}

EtaMode ParseEtaMode(const std::string& mode) {
  if (mode == "nss") return EtaMode::kNss;
  if (mode == "scnss") return EtaMode::kScnss;
  throw InvalidArgument("unknown learning-rate mode '" + mode + "' (expected nss or scnss)");
}

std::string ToString(EtaMode mode) { return mode == EtaMode::kNss ? "nss" : "scnss"; }

double EtaScheduleLqr(EtaMode mode, double h) {
  if (h < 0.0) throw DomainViolation("EtaScheduleLqr: h must be nonnegative");
  const double c = (1.0 + h) * (1.0 + h) * (1.0 + h);
  return mode == EtaMode::kNss ? c * (1.0 + h) : c;
}

Vec VecGain(const Mat& k) { return Eigen::Map<const Vec>(k.data(), k.size()); }

Mat UnvecGain(const Vec& v, int m, int n) {
  if (v.size() != static_cast<Eigen::Index>(m) * n)
    throw InvalidArgument("UnvecGain: size mismatch");
  return Eigen::Map<const Mat>(v.data(), m, n);
}

objectives::Objective MakeLqrObjective(const LqrProblem& problem_in) {
  auto shared = std::make_shared<const LqrProblem>(problem_in);
  const LqrProblem& problem = *shared;
  const int m = problem.m();
  const int n = problem.n();
  const LqrPlProfile& prof = problem.profile();
  objectives::Objective obj(
      m * n,
      [shared, m, n](const Vec& z) { return LqrCost(*shared, UnvecGain(z, m, n)); },
      [shared, m, n](const Vec& z, Vec& out) {
        out = VecGain(LqrGradient(*shared, UnvecGain(z, m, n)));
      },
      VecGain(prof.k_star), prof.j2_star, "lqr");
  obj.set_domain([shared, m, n](const Vec& z) {
    return z.allFinite() && shared->Stabilizes(UnvecGain(z, m, n));
  });
  obj.set_envelope({Mu5Function(prof), objectives::PLKind::kK, "analytic h/(b1 h + b2)"});
  return obj;
}

std::vector<Mat> RandomStabilizingGains(const LqrProblem& problem, std::size_t count,
                                        std::uint64_t seed, const std::vector<double>& scales) {
  if (scales.empty()) throw InvalidArgument("RandomStabilizingGains: scales must be nonempty");
  rng::CounterStream stream(seed, 0x1A9);
  std::vector<Mat> out;
  const Mat& k_star = problem.profile().k_star;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 1000 * (count + 1))
      throw NumericalError("RandomStabilizingGains: too few stabilising draws");
    Mat delta(k_star.rows(), k_star.cols());
    for (Eigen::Index i = 0; i < delta.size(); ++i) delta.data()[i] = stream.Normal();
    if (delta.norm() == 0.0) continue;
    const Mat k = k_star + scales[attempts % scales.size()] * delta / delta.norm();
    if (problem.Stabilizes(k)) out.push_back(k);
  }
  return out;
}

std::map<std::string, Mat> ReadMatrices(std::istream& in, const std::string& source) {
  struct Token {
    std::string text;
    int line;
  };
  std::vector<Token> tokens;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string t;
    while (ls >> t) tokens.push_back({t, line_no});
  }
  auto fail = [&](int at, const std::string& what) -> void {
    throw InvalidArgument(source + ":" + std::to_string(at) + ": " + what);
  };
  auto number = [&](const Token& t) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t.text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.text.size()) fail(t.line, "expected a number, got '" + t.text + "'");
    return v;
  };
  std::map<std::string, Mat> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const Token& name = tokens[i];
    if (i + 2 >= tokens.size()) fail(name.line, "incomplete header for '" + name.text + "'");
    const double rows = number(tokens[i + 1]);
    const double cols = number(tokens[i + 2]);
    if (rows < 0 || cols < 0 || rows != std::floor(rows) || cols != std::floor(cols))
      fail(name.line, "dimensions must be nonnegative integers");
    if (out.count(name.text)) fail(name.line, "duplicate matrix '" + name.text + "'");
    i += 3;
    Mat mat(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < mat.rows(); ++r)
      for (Eigen::Index c = 0; c < mat.cols(); ++c) {
        if (i >= tokens.size())
          fail(tokens.back().line, "matrix '" + name.text + "' has too few entries");
        mat(r, c) = number(tokens[i++]);
      }
    out.emplace(name.text, std::move(mat));
  }
  return out;
}

std::map<std::string, Mat> ReadMatrixFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open matrix file '" + path + "'");
  return ReadMatrices(in, path);
}

void WriteMatrices(const std::map<std::string, Mat>& mats, std::ostream& out) {
  for (const auto& [name, mat] : mats) {
    out << name << ' ' << mat.rows() << ' ' << mat.cols() << '\n';
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      for (Eigen::Index c = 0; c < mat.cols(); ++c)
        out << (c ? " " : "") << FormatDouble(mat(r, c));
      out << '\n';
    }
  }
}

LqrProblem ReadLqrProblem(const std::string& path) {
  auto mats = ReadMatrixFile(path);
  for (const char* key : {"A", "F", "Q", "R"})
    if (!mats.count(key))
      throw InvalidArgument(path + ": missing matrix '" + std::string(key) + "'");
  std::optional<Mat> k0;
  if (mats.count("K0")) k0 = mats.at("K0");
  return LqrProblem(mats.at("A"), mats.at("F"), mats.at("Q"), mats.at("R"), k0);
}

void WriteGainSweepCsv(const LqrProblem& problem, const std::vector<Mat>& gains,
                       std::ostream& out) {
  out << "gain_id,cost,suboptimality,grad_norm,mu5,spectral_abscissa\n";
  const auto& prof = problem.profile();
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const GainPoint g = EvaluateGain(problem, gains[i]);
    const double h = std::max(0.0, g.cost - prof.j2_star);
    out << i << ',' << FormatDouble(g.cost) << ',' << FormatDouble(h) << ','
        << FormatDouble(g.grad.norm()) << ',' << FormatDouble(Mu5(prof, h)) << ','
        << FormatDouble(SpectralAbscissa(problem.ClosedLoop(gains[i]))) << '\n';
  }
}

}  // namespace nsslab::lqr
