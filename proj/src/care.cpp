#include "egoreg/care.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace egoreg {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;

double inf_norm(const MatrixXd& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

bool is_diagonal(const MatrixXd& m, double tol = 0.0) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            if (i != j && std::abs(m(i, j)) > tol) return false;
    return true;
}

void check_dimensions(const LinearPlant& plant, const MatrixXd& Q1, const MatrixXd& Q2) {
    const int n = plant.states();
    const int m = plant.inputs();
    if (plant.A.cols() != n || plant.B.rows() != n)
        throw SynthesisError("plant dimensions: A must be n x n and B n x m");
    if (Q1.rows() != n || Q1.cols() != n) throw SynthesisError("Q1 must be n x n");
    if (Q2.rows() != m || Q2.cols() != m) throw SynthesisError("Q2 must be m x m");
}

MatrixXd input_weighting(const MatrixXd& B, const MatrixXd& Q2) {
    return B * Q2.llt().solve(B.transpose());
}

// P from a basis [U1; U2] of the stable invariant subspace.
MatrixXd riccati_from_subspace(const MatrixXcd& basis, int n) {
    const MatrixXcd u1 = basis.topRows(n);
    const MatrixXcd u2 = basis.bottomRows(n);
    Eigen::PartialPivLU<MatrixXcd> lu(u1.transpose());
    const MatrixXcd pt = lu.solve(u2.transpose());
    const MatrixXd p = pt.transpose().real();
    return 0.5 * (p + p.transpose());
}

// Spectral projector route for Hamiltonians whose eigenvector basis is
// numerically deficient (repeated eigenvalues from identical channels).
MatrixXd riccati_from_sign_function(const MatrixXd& h, int n) {
    MatrixXd z = h;
    const int dim = static_cast<int>(h.rows());
    for (int it = 0; it < 100; ++it) {
        Eigen::PartialPivLU<MatrixXd> lu(z);
        const double det = std::abs(lu.determinant());
        const double c = std::pow(det, -1.0 / dim);
        const MatrixXd next = 0.5 * (c * z + lu.inverse() / c);
        const double change = (next - z).lpNorm<1>();
        z = next;
        if (change <= 1e-14 * z.lpNorm<1>()) break;
    }
    const MatrixXd w11 = z.topLeftCorner(n, n);
    const MatrixXd w12 = z.topRightCorner(n, n);
    const MatrixXd w21 = z.bottomLeftCorner(n, n);
    const MatrixXd w22 = z.bottomRightCorner(n, n);
    MatrixXd lhs(2 * n, n);
    lhs << w12, w22 + MatrixXd::Identity(n, n);
    MatrixXd rhs(2 * n, n);
    rhs << w11 + MatrixXd::Identity(n, n), w21;
    const MatrixXd p = -lhs.colPivHouseholderQr().solve(rhs);
    return 0.5 * (p + p.transpose());
}

}  // namespace

LinearPlant LinearPlant::double_integrator(int axes) {
    LinearPlant plant;
    plant.A = MatrixXd::Zero(2 * axes, 2 * axes);
    plant.A.topRightCorner(axes, axes).setIdentity();
    plant.B = MatrixXd::Zero(2 * axes, axes);
    plant.B.bottomRows(axes).setIdentity();
    return plant;
}

bool is_controllable(const LinearPlant& plant, double tol) {
    const int n = plant.states();
    const int m = plant.inputs();
    MatrixXd ctrb(n, n * m);
    MatrixXd block = plant.B;
    for (int k = 0; k < n; ++k) {
        ctrb.middleCols(k * m, m) = block;
        block = plant.A * block;
    }
    Eigen::JacobiSVD<MatrixXd> svd(ctrb);
    const auto& s = svd.singularValues();
    return s.size() >= n && s(n - 1) > tol * std::max(1.0, s(0));
}

MatrixXd solve_care(const LinearPlant& plant, const MatrixXd& Q1, const MatrixXd& Q2) {
    check_dimensions(plant, Q1, Q2);
    const int n = plant.states();
    MatrixXd h(2 * n, 2 * n);
    h << plant.A, -input_weighting(plant.B, Q2), -Q1, -plant.A.transpose();

    Eigen::EigenSolver<MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw SynthesisError("Hamiltonian eigendecomposition failed");
    const auto& values = es.eigenvalues();
    const MatrixXcd vectors = es.eigenvectors();

    MatrixXcd basis(2 * n, n);
    int found = 0;
    for (int i = 0; i < 2 * n; ++i) {
        if (values(i).real() < 0.0) {
            if (found == n) break;
            basis.col(found++) = vectors.col(i);
        }
    }
    if (found != n)
        throw SynthesisError("Hamiltonian has eigenvalues on the imaginary axis (pair not stabilizable/detectable)");

    MatrixXd p = riccati_from_subspace(basis, n);
    const double scale = std::max(1.0, inf_norm(p));
    if (!p.allFinite() || care_residual(plant, Q1, Q2, p) > 1e-10 * scale) {
        p = riccati_from_sign_function(h, n);
    }

    // Defect correction: Newton steps from the gain of p, kept while the
    // residual drops. Recovers accuracy on poorly conditioned subspaces.
    double res = care_residual(plant, Q1, Q2, p);
    for (int it = 0; it < 8 && p.allFinite() && res > 1e-14 * std::max(1.0, inf_norm(p)); ++it) {
        const MatrixXd k = lqr_gain(p, plant.B, Q2);
        const MatrixXd acl = plant.A + plant.B * k;
        if (acl.eigenvalues().real().maxCoeff() >= 0.0) break;
        MatrixXd next = solve_lyapunov(acl, Q1 + k.transpose() * Q2 * k);
        next = 0.5 * (next + next.transpose());
        const double next_res = care_residual(plant, Q1, Q2, next);
        if (!(next_res < res)) break;
        p = next;
        res = next_res;
    }
    return p;
}

MatrixXd solve_lyapunov(const MatrixXd& F, const MatrixXd& W) {
    const int n = static_cast<int>(F.rows());
    const MatrixXd eye = MatrixXd::Identity(n, n);
    // vec(X F) = (F^T kron I) vec(X), vec(F^T X) = (I kron F^T) vec(X)
    MatrixXd op = MatrixXd::Zero(n * n, n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            op.block(i * n, j * n, n, n) += F(j, i) * eye;
            if (i == j) op.block(i * n, j * n, n, n) += F.transpose();
        }
    const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(W.data(), n * n);
    const Eigen::VectorXd x = op.partialPivLu().solve(rhs);
    MatrixXd out = Eigen::Map<const MatrixXd>(x.data(), n, n);
    return out;
}

MatrixXd solve_care_newton_kleinman(const LinearPlant& plant, const MatrixXd& Q1, const MatrixXd& Q2,
                                    const MatrixXd* seed_gain, int max_iterations, double tol) {
    check_dimensions(plant, Q1, Q2);
    const int n = plant.states();
    MatrixXd k;
    if (seed_gain != nullptr) {
        k = *seed_gain;
    } else {
        // Bass: (A + bI) W + W (A + bI)^T = 2 B B^T, K0 = -B^T W^-1. Any b
        // making A + bI anti-stable works; the smallest margin keeps K0 (and
        // the first Lyapunov solve) well scaled.
        const Eigen::VectorXcd ev = plant.A.eigenvalues();
        const double beta = std::max(0.0, -ev.real().minCoeff()) + 1.0;
        const MatrixXd shifted = plant.A + beta * MatrixXd::Identity(n, n);
        const MatrixXd w = solve_lyapunov(shifted.transpose(), -2.0 * plant.B * plant.B.transpose());
        k = -plant.B.transpose() * w.inverse();
    }
    MatrixXd p = MatrixXd::Zero(n, n);
    for (int it = 0; it < max_iterations; ++it) {
        const MatrixXd acl = plant.A + plant.B * k;
        if (acl.eigenvalues().real().maxCoeff() >= 0.0)
            throw SynthesisError("Newton-Kleinman iterate lost closed-loop stability");
        MatrixXd next = solve_lyapunov(acl, Q1 + k.transpose() * Q2 * k);
        next = 0.5 * (next + next.transpose());
        const double change = inf_norm(next - p);
        p = next;
        k = lqr_gain(p, plant.B, Q2);
        if (change <= tol * std::max(1.0, inf_norm(p))) break;
    }
    return p;
}

MatrixXd lqr_gain(const MatrixXd& P, const MatrixXd& B, const MatrixXd& Q2) {
    return -Q2.llt().solve(B.transpose() * P);
}

double care_residual(const LinearPlant& plant, const MatrixXd& Q1, const MatrixXd& Q2, const MatrixXd& P) {
    const MatrixXd r = P * plant.A + plant.A.transpose() * P -
                       P * input_weighting(plant.B, Q2) * P + Q1;
    return inf_norm(r);
}

std::vector<std::complex<double>> closed_loop_spectrum(const LinearPlant& plant, const MatrixXd& K) {
    if (K.rows() != plant.inputs() || K.cols() != plant.states())
        throw std::invalid_argument("closed_loop_spectrum: K must be m x n");
    const MatrixXd acl = plant.A + plant.B * K;
    Eigen::EigenSolver<MatrixXd> es(acl, false);
    std::vector<std::complex<double>> out(es.eigenvalues().data(),
                                          es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return out;
}

GainSynthesis synthesize_gains(const LinearPlant& plant, const MatrixXd& Q1, const MatrixXd& Q2) {
    check_dimensions(plant, Q1, Q2);
    if (!is_diagonal(Q1) || (Q1.diagonal().array() < 0.0).any())
        throw SynthesisError("Q1 must be diagonal positive semi-definite");
    if (!is_diagonal(Q2) || (Q2.diagonal().array() <= 0.0).any())
        throw SynthesisError("Q2 must be diagonal positive definite");
    if (!is_controllable(plant)) throw SynthesisError("(A, B) is not controllable");

    GainSynthesis g;
    g.Q1 = Q1;
    g.Q2 = Q2;
    g.P = solve_care(plant, Q1, Q2);
    g.K = lqr_gain(g.P, plant.B, Q2);

    Eigen::SelfAdjointEigenSolver<MatrixXd> sym(g.P);
    if (sym.eigenvalues().minCoeff() <= 0.0)
        throw SynthesisError("Riccati solution is not positive definite (Q1 does not make the pair detectable)");
    const double residual = care_residual(plant, Q1, Q2, g.P);
    if (residual >= 1e-9) {
        std::ostringstream msg;
        msg << "CARE residual " << residual << " exceeds 1e-9";
        throw SynthesisError(msg.str());
    }
    for (const auto& ev : closed_loop_spectrum(plant, g.K)) {
        if (ev.real() >= 0.0) throw SynthesisError("closed loop A + B K is not Hurwitz");
    }
    return g;
}

GainSynthesis synthesize_gains(const LinearPlant& plant, const Eigen::VectorXd& q1_diag,
                               const Eigen::VectorXd& q2_diag) {
    return synthesize_gains(plant, MatrixXd(q1_diag.asDiagonal()), MatrixXd(q2_diag.asDiagonal()));
}

}  // namespace egoreg
