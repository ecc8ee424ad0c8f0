#pragma once

#include <Eigen/Dense>

namespace oblique {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct EigenDecomposition {
    Vec values;   // ascending
    Mat vectors;  // columns
    int sweeps = 0;
};

/// Cyclic Jacobi eigensolver for small symmetric matrices.
/// Only the upper triangle is read. Iterates until the off-diagonal
/// Frobenius norm drops below tol * ||A||_F.
EigenDecomposition jacobi_eigen(const Mat& a, double tol = 1e-13, int max_sweeps = 100);

/// Spectral norm of a symmetric matrix (largest |eigenvalue|).
double symmetric_norm(const Mat& a);

/// Spectral norm of a general matrix, via the eigenvalues of A^T A.
double spectral_norm(const Mat& a);

}  // namespace oblique
