#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace nsslab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Spectral norm of a symmetric positive semidefinite matrix.
inline double SymmetricSpectralNorm(const Mat& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> eig(s, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

/// Spectral (operator 2-) norm of an arbitrary matrix.
inline double SpectralNorm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

/// ‖ΘΘᵀ‖, the instantaneous noise intensity of a covariance factor.
inline double NoiseIntensity(const Mat& theta) {
  return SymmetricSpectralNorm(theta * theta.transpose());
}

}  // namespace nsslab
