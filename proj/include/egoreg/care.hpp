#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <vector>

namespace egoreg {

class SynthesisError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct LinearPlant {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;

    /// Position/velocity double integrator with `axes` independent channels,
    /// states ordered [positions..., velocities...].
    static LinearPlant double_integrator(int axes);

    int states() const { return static_cast<int>(A.rows()); }
    int inputs() const { return static_cast<int>(B.cols()); }
};

/// Weights, Riccati solution and feedback gain (u = K x). Immutable once built.
struct GainSynthesis {
    Eigen::MatrixXd Q1;
    Eigen::MatrixXd Q2;
    Eigen::MatrixXd P;
    Eigen::MatrixXd K;
};

bool is_controllable(const LinearPlant& plant, double tol = 1e-9);

/// Stabilizing solution of A^T P + P A - P B Q2^-1 B^T P + Q1 = 0 from the
/// stable invariant subspace of the Hamiltonian matrix.
Eigen::MatrixXd solve_care(const LinearPlant& plant, const Eigen::MatrixXd& Q1,
                           const Eigen::MatrixXd& Q2);

/// Same equation by Newton-Kleinman iteration. Without a seed, a stabilizing
/// gain is obtained from a shifted Lyapunov equation (Bass's method).
Eigen::MatrixXd solve_care_newton_kleinman(const LinearPlant& plant, const Eigen::MatrixXd& Q1,
                                           const Eigen::MatrixXd& Q2,
                                           const Eigen::MatrixXd* seed_gain = nullptr,
                                           int max_iterations = 100, double tol = 1e-13);

/// Solves X F + F^T X + W = 0 for X by vectorization (small systems only).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& F, const Eigen::MatrixXd& W);

/// K = -Q2^-1 B^T P.
Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q2);

/// Infinity norm of the CARE residual.
double care_residual(const LinearPlant& plant, const Eigen::MatrixXd& Q1, const Eigen::MatrixXd& Q2,
                     const Eigen::MatrixXd& P);

/// Eigenvalues of A + B K sorted by real part (then imaginary part).
std::vector<std::complex<double>> closed_loop_spectrum(const LinearPlant& plant, const Eigen::MatrixXd& K);

/// Validates the weights, solves the CARE and checks the result (symmetry,
/// definiteness, residual < 1e-9, Hurwitz closed loop). Throws SynthesisError
/// naming the first violated condition.
GainSynthesis synthesize_gains(const LinearPlant& plant, const Eigen::MatrixXd& Q1,
                               const Eigen::MatrixXd& Q2);

GainSynthesis synthesize_gains(const LinearPlant& plant, const Eigen::VectorXd& q1_diag,
                               const Eigen::VectorXd& q2_diag);

}  // namespace egoreg
