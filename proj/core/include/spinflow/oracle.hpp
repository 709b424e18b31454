#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "spinflow/pauli.hpp"

namespace spinflow {

// Dense operator in the Z-product basis (site 1 most significant bit).
struct DenseOperator {
    DenseMatrix matrix;
    bool hermitian = false;

    std::int64_t dim() const { return matrix.rows(); }

    static DenseOperator from_matrix(DenseMatrix M, bool claim_hermitian,
                                     double tol = 1e-10);
};

struct Spectrum {
    Eigen::VectorXd eigenvalues;  // ascending
    DenseMatrix eigenvectors;     // empty unless requested
};

// Ascending eigenvalues; eigenvector residuals ||Mv - lambda v|| are checked
// against `residual_tol` when vectors are requested.
Spectrum dense_spectrum(const DenseOperator& M, bool with_vectors = false,
                        double residual_tol = 1e-10);

// Max |e_i(A) - e_i(B)| over sorted eigenvalue lists of equal length.
double spectrum_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct SpectralLemmaResult {
    double max_ratio = 0.0;      // max over trials of dist(lambda, spec(D)) / eps
    double max_distance = 0.0;   // max over trials of dist(lambda, spec(D))
    double constant = 0.0;       // the proof constant 4/(sqrt(2)-1)
};

// Random D (diagonal), N (upper triangular, |entries| <= 1), E (lower
// triangular, |E_ij| <= eps^{|i-j|+1}): every eigenvalue of D+N+E must lie
// within C*eps of spec(D) with C = 4/(sqrt(2)-1).
SpectralLemmaResult spectral_lemma_check(int d, double eps, int n_trials,
                                         std::uint64_t seed = 7);

// Scalar check of the five-term resolvent expansion of 1/D_{R,R}. Families
// are built from random increments keyed by exact offsets; any draw with an
// intermediate |D_{u,v}| below 1e-6 is resampled. Returns the max absolute
// residual over trials.
double resolvent_identity_check(int R, int n_trials, std::uint64_t seed = 11);

// Haar-ish random unitary via QR of a complex Gaussian matrix.
DenseMatrix random_unitary(int dim, std::uint64_t seed);

}  // namespace spinflow
