#pragma once

// Continuous-time LQR policy optimisation: Lyapunov and Riccati solvers,
// cost and gradient over the stabilising gains, the K-PL constants and the
// sublevel smoothness profile.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsslab/compfun.h"
#include "nsslab/objectives.h"
#include "nsslab/types.h"

namespace nsslab::lqr {

/// Gains whose closed loop has spectral abscissa >= -margin are treated as
/// outside the stabilising set.
inline constexpr double kHurwitzMargin = 1e-10;

/// Largest real part of the eigenvalues.
double SpectralAbscissa(const Mat& a);
bool IsHurwitz(const Mat& a, double margin = kHurwitzMargin);

/// Solves A_clᵀP + P·A_cl + M = 0 by Kronecker vectorisation (n <= 30).
/// Throws StabilityError for non-Hurwitz A_cl and ConditioningError when the
/// vectorised system is numerically singular or the residual contract
/// ‖res‖_F <= 1e-10·(‖M‖_F + ‖P‖_F) cannot be met.
Mat SolveLyapunov(const Mat& a_cl, const Mat& m);

struct LqrPlProfile {
  double b1 = 0.0;
  double b2 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  Mat k_star;
  Mat p_star;
  Mat y_star;
  double j2_star = 0.0;
  int iterations = 0;
  /// Tr P_{K_i} along the Kleinman iteration.
  std::vector<double> cost_history;
};

class LqrProblem {
 public:
  /// Validates shapes and Q, R ≻ 0, then solves the Riccati equation from
  /// K0 = 0 when A is Hurwitz, otherwise from the supplied k0 (required).
  LqrProblem(Mat a, Mat f, Mat q, Mat r, std::optional<Mat> k0 = std::nullopt);

  const Mat& a() const { return a_; }
  const Mat& f() const { return f_; }
  const Mat& q() const { return q_; }
  const Mat& r() const { return r_; }
  int n() const { return static_cast<int>(a_.rows()); }
  int m() const { return static_cast<int>(f_.cols()); }
  const LqrPlProfile& profile() const { return profile_; }
  Mat ClosedLoop(const Mat& k) const { return a_ - f_ * k; }
  bool Stabilizes(const Mat& k) const { return IsHurwitz(ClosedLoop(k)); }

 private:
  Mat a_, f_, q_, r_;
  LqrPlProfile profile_;
};

/// Kleinman–Newton iteration K_{i+1} = R⁻¹FᵀP_{K_i} from a stabilising k0,
/// until ‖K_{i+1} - K_i‖_F <= 1e-12 (or stagnation at roundoff level).
LqrPlProfile SolveRiccati(const Mat& a, const Mat& f, const Mat& q, const Mat& r,
                          const Mat& k0);

struct GainPoint {
  Mat k;
  Mat p;
  Mat y;
  double cost = 0.0;
  Mat grad;
};

/// P_K, Y_K, Tr P_K and ∇J(K) = 2(RK - FᵀP_K)Y_K. StabilityError if K ∉ 𝒢.
GainPoint EvaluateGain(const LqrProblem& problem, const Mat& k);
double LqrCost(const LqrProblem& problem, const Mat& k);
Mat LqrGradient(const LqrProblem& problem, const Mat& k);

/// h / (b1·h + b2).
double Mu5(const LqrPlProfile& profile, double h);
compfun::ScalarClassFunction Mu5Function(const LqrPlProfile& profile);

/// Sublevel Lipschitz bound of ∇J on {J - J* <= h}.
double SmoothnessL3(const LqrPlProfile& profile, const LqrProblem& problem, double h);

enum class EtaMode { kNss, kScnss };

/// "nss" or "scnss"; anything else is InvalidArgument.
EtaMode ParseEtaMode(const std::string& mode);
std::string ToString(EtaMode mode);
/// (1+h)⁴ for nss (h³/η → 0) and (1+h)³ for scnss (h³/η → 1).
double EtaScheduleLqr(EtaMode mode, double h);

/// Column-major vec(K) ↔ K.
Vec VecGain(const Mat& k);
Mat UnvecGain(const Vec& v, int m, int n);

/// J(vec K) over the stabilising set with minimiser vec K*, J* = Tr P* and
/// the μ5 envelope. Evaluating outside 𝒢 throws StabilityError.
objectives::Objective MakeLqrObjective(const LqrProblem& problem);

/// K* + s·Δ with Δ a standard Gaussian m×n matrix normalised to unit
/// Frobenius norm and s drawn from `scales` in turn; only stabilising draws
/// are kept.
std::vector<Mat> RandomStabilizingGains(const LqrProblem& problem, std::size_t count,
                                        std::uint64_t seed,
                                        const std::vector<double>& scales = {0.1, 0.5, 1.0,
                                                                             2.0});

/// Matrix text format: repeated blocks "name rows cols" followed by rows·cols
/// row-major entries; '#' starts a comment.
std::map<std::string, Mat> ReadMatrices(std::istream& in, const std::string& source);
std::map<std::string, Mat> ReadMatrixFile(const std::string& path);
void WriteMatrices(const std::map<std::string, Mat>& mats, std::ostream& out);
/// Problem from a matrix file with blocks A, F, Q, R and optionally K0.
LqrProblem ReadLqrProblem(const std::string& path);

/// gain_id,cost,suboptimality,grad_norm,mu5,spectral_abscissa
void WriteGainSweepCsv(const LqrProblem& problem, const std::vector<Mat>& gains,
                       std::ostream& out);

}  // namespace nsslab::lqr
