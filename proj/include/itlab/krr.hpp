#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace itlab::krr {

struct Kernel {
    enum class Kind { rbf, min };
    Kind kind = Kind::rbf;
    double gamma = 1.0; ///< rbf only: exp(-gamma ||x - y||^2)

    static Kernel rbf(double gamma) { return {Kind::rbf, gamma}; }
    static Kernel min_kernel() { return {Kind::min, 0.0}; }
};

/// Symmetrized Gram matrix (M + M^T) / 2. The min kernel needs scalar
/// points in [0, 1].
Eigen::MatrixXd gram_matrix(const std::vector<Eigen::VectorXd>& points, const Kernel& kernel);

/// G = V^T diag(d) V with eigenvalues descending and V's rows the
/// eigenvectors.
struct KernelSpectrum {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd basis;
    bool clamped = false; ///< some eigenvalue was raised to the floor

    std::size_t size() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
    Eigen::MatrixXd reconstruct() const;
};

inline constexpr double kEigenvalueFloor = 1e-12;

KernelSpectrum eigendecompose(const Eigen::MatrixXd& matrix);

/// Regularization strength per generation: either fixed, or solved so the
/// mean squared training residual equals a tolerance.
struct CSchedule {
    enum class Mode { fixed, tolerance };
    Mode mode = Mode::fixed;
    double value = 1.0; ///< c for fixed, epsilon for tolerance

    static CSchedule fixed(double c) { return {Mode::fixed, c}; }
    static CSchedule tolerance(double epsilon) { return {Mode::tolerance, epsilon}; }
};

struct DistillTrajectory {
    Eigen::VectorXd initial_targets;
    std::vector<double> c_schedule;
    std::vector<Eigen::VectorXd> predictions;    ///< f*_t
    std::vector<Eigen::VectorXd> shrink_products; ///< diagonal of prod_{i<=t} A_i

    std::size_t generations() const noexcept { return predictions.size(); }
};

/// Self-distillation: generation t fits Y_t = f*_{t-1} (Y_0 given), so
/// f*_t = V^T (prod_{i<=t} D (c_i I + D)^-1) V Y_0.
DistillTrajectory distill_trajectory(const KernelSpectrum& spectrum, const Eigen::VectorXd& initial_targets,
                                     const CSchedule& schedule, std::size_t generations);

/// Mean squared residual of one ridge step at strength c on targets given
/// in the eigenbasis.
double ridge_residual(const Eigen::VectorXd& eigenvalues, const Eigen::VectorXd& targets_in_basis, double c);

/// Per generation, the number of product entries above threshold times the
/// generation's largest entry.
std::vector<std::size_t> active_basis_count(const DistillTrajectory& trajectory, double threshold = 1e-3);

} // namespace itlab::krr
