#include "itlab/krr.hpp"

#include "itlab/errors.hpp"

#include <cmath>
#include <sstream>

namespace itlab::krr {

Eigen::MatrixXd gram_matrix(const std::vector<Eigen::VectorXd>& points, const Kernel& kernel)
{
    const auto n = static_cast<Eigen::Index>(points.size());
    require(n > 0, ErrorCode::empty_input, "no points");
    if (kernel.kind == Kernel::Kind::rbf) {
        require(kernel.gamma > 0.0, ErrorCode::invalid_argument, "rbf needs gamma > 0");
    } else {
        for (const auto& p : points)
            require(p.size() == 1 && p(0) >= 0.0 && p(0) <= 1.0, ErrorCode::domain_error,
                    "the min kernel needs scalar points in [0, 1]");
    }
    for (const auto& p : points)
        require(p.size() == points.front().size(), ErrorCode::dimension_mismatch, "points differ in dimension");

    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& a = points[static_cast<std::size_t>(i)];
            const auto& b = points[static_cast<std::size_t>(j)];
            g(i, j) = kernel.kind == Kernel::Kind::rbf ? std::exp(-kernel.gamma * (a - b).squaredNorm())
                                                       : std::min(a(0), b(0));
        }
    }
    return 0.5 * (g + g.transpose());
}

Eigen::MatrixXd KernelSpectrum::reconstruct() const
{
    return basis.transpose() * eigenvalues.asDiagonal() * basis;
}

KernelSpectrum eigendecompose(const Eigen::MatrixXd& matrix)
{
    require(matrix.rows() == matrix.cols() && matrix.rows() > 0, ErrorCode::dimension_mismatch,
            "need a nonempty square matrix");
    require((matrix - matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-10, ErrorCode::not_symmetric,
            "matrix is not symmetric within 1e-10");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix);
    require(solver.info() == Eigen::Success, ErrorCode::invalid_argument, "eigendecomposition did not converge");

    const Eigen::Index n = matrix.rows();
    const Eigen::VectorXd ascending = solver.eigenvalues();
    require(ascending(0) >= -1e-6, ErrorCode::indefinite_beyond_tolerance,
            "smallest eigenvalue below -1e-6");

    KernelSpectrum spectrum;
    spectrum.eigenvalues.resize(n);
    spectrum.basis.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = n - 1 - k;
        double d = ascending(src);
        if (d < kEigenvalueFloor) {
            d = kEigenvalueFloor;
            spectrum.clamped = true;
        }
        spectrum.eigenvalues(k) = d;
        spectrum.basis.row(k) = solver.eigenvectors().col(src).transpose();
    }
    return spectrum;
}

double ridge_residual(const Eigen::VectorXd& eigenvalues, const Eigen::VectorXd& targets_in_basis, double c)
{
    // residual component j is c / (c + d_j) * y_j (the basis is orthonormal)
    double sum = 0.0;
    for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
        const double r = c / (c + eigenvalues(j)) * targets_in_basis(j);
        sum += r * r;
    }
    return sum / static_cast<double>(eigenvalues.size());
}

namespace {

double solve_c_for_tolerance(const Eigen::VectorXd& d, const Eigen::VectorXd& y, double epsilon)
{
    double lo = 1e-12;
    double hi = 1e12;
    // the residual is increasing in c; widen the bracket geometrically if needed
    for (int i = 0; i < 8 && ridge_residual(d, y, lo) > epsilon; ++i)
        lo *= 1e-6;
    for (int i = 0; i < 8 && ridge_residual(d, y, hi) < epsilon; ++i)
        hi *= 1e6;
    const double r_lo = ridge_residual(d, y, lo);
    const double r_hi = ridge_residual(d, y, hi);
    if (!(r_lo <= epsilon && epsilon <= r_hi)) {
        std::ostringstream msg;
        msg << "tolerance " << epsilon << " is outside the achievable residual range [" << r_lo << ", " << r_hi
            << "]";
        fail(ErrorCode::bisection_failure, msg.str());
    }
    // bisect in log space
    for (int iter = 0; iter < 400; ++iter) {
        const double mid = std::sqrt(lo * hi);
        const double r = ridge_residual(d, y, mid);
        if (std::abs(r - epsilon) <= 1e-10 * std::max(1.0, epsilon) && iter > 0)
            return mid;
        if (r < epsilon)
            lo = mid;
        else
            hi = mid;
        if (hi / lo - 1.0 < 1e-15)
            break;
    }
    return std::sqrt(lo * hi);
}

} // namespace

DistillTrajectory distill_trajectory(const KernelSpectrum& spectrum, const Eigen::VectorXd& initial_targets,
                                     const CSchedule& schedule, std::size_t generations)
{
    require(generations >= 1, ErrorCode::invalid_argument, "need at least one generation");
    require(initial_targets.size() == spectrum.eigenvalues.size(), ErrorCode::dimension_mismatch,
            "targets do not match the spectrum size");
    require(schedule.value > 0.0, ErrorCode::invalid_argument,
            schedule.mode == CSchedule::Mode::fixed ? "c must be > 0" : "epsilon must be > 0");

    const Eigen::VectorXd& d = spectrum.eigenvalues;
    const Eigen::VectorXd y0 = spectrum.basis * initial_targets;

    DistillTrajectory traj;
    traj.initial_targets = initial_targets;
    Eigen::VectorXd product = Eigen::VectorXd::Ones(d.size());
    Eigen::VectorXd current = y0; // Y_t in the eigenbasis
    for (std::size_t t = 0; t < generations; ++t) {
        const double c =
            schedule.mode == CSchedule::Mode::fixed ? schedule.value : solve_c_for_tolerance(d, current, schedule.value);
        const Eigen::VectorXd shrink = d.array() / (c + d.array());
        product = product.cwiseProduct(shrink);
        current = product.cwiseProduct(y0);

        traj.c_schedule.push_back(c);
        traj.shrink_products.push_back(product);
        traj.predictions.push_back(spectrum.basis.transpose() * current);
    }
    return traj;
}

std::vector<std::size_t> active_basis_count(const DistillTrajectory& trajectory, double threshold)
{
    require(threshold > 0.0 && threshold < 1.0, ErrorCode::invalid_argument, "threshold must lie in (0, 1)");
    std::vector<std::size_t> counts;
    counts.reserve(trajectory.shrink_products.size());
    for (const auto& p : trajectory.shrink_products) {
        const double cutoff = threshold * p.maxCoeff();
        counts.push_back(static_cast<std::size_t>((p.array() > cutoff).count()));
    }
    return counts;
}

} // namespace itlab::krr
