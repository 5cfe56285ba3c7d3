#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "itlab/errors.hpp"
#include "itlab/krr.hpp"
#include "itlab/random.hpp"

using namespace itlab;
using namespace itlab::krr;

namespace {

Eigen::MatrixXd random_psd(Rng& rng, int n)
{
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a(i, j) = standard_normal(rng);
    return a * a.transpose() / n + 0.05 * Eigen::MatrixXd::Identity(n, n);
}

Eigen::VectorXd random_vector(Rng& rng, int n)
{
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i)
        v(i) = standard_normal(rng);
    return v;
}

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const LabError& e) {
        return e.code();
    }
    FAIL("expected a LabError");
    return ErrorCode::invalid_argument;
}

} // namespace

TEST_CASE("gram matrices")
{
    std::vector<Eigen::VectorXd> pts{Eigen::VectorXd::Constant(1, 0.2), Eigen::VectorXd::Constant(1, 0.7)};
    const Eigen::MatrixXd g = gram_matrix(pts, Kernel::rbf(2.0));
    CHECK(g(0, 0) == 1.0);
    CHECK(g(0, 1) == doctest::Approx(std::exp(-2.0 * 0.25)));
    const Eigen::MatrixXd m = gram_matrix(pts, Kernel::min_kernel());
    CHECK(m(0, 1) == doctest::Approx(0.2));
    CHECK(m(1, 1) == doctest::Approx(0.7));
    pts.push_back(Eigen::VectorXd::Constant(1, 1.5));
    CHECK(code_of([&] { gram_matrix(pts, Kernel::min_kernel()); }) == ErrorCode::domain_error);
    CHECK(code_of([] { gram_matrix({}, Kernel::rbf(1.0)); }) == ErrorCode::empty_input);
}

TEST_CASE("eigendecomposition is orthonormal, sorted and reconstructs")
{
    Rng rng = make_rng(1);
    const Eigen::MatrixXd g = random_psd(rng, 10);
    const KernelSpectrum s = eigendecompose(g);
    CHECK((s.basis * s.basis.transpose() - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((s.reconstruct() - g).cwiseAbs().maxCoeff() < 1e-8);
    for (int j = 1; j < 10; ++j)
        CHECK(s.eigenvalues(j - 1) >= s.eigenvalues(j));
    CHECK_FALSE(s.clamped);
}

TEST_CASE("eigendecomposition guards")
{
    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
    asym(0, 1) = 0.5;
    CHECK(code_of([&] { eigendecompose(asym); }) == ErrorCode::not_symmetric);
    Eigen::MatrixXd indef = Eigen::MatrixXd::Identity(2, 2);
    indef(1, 1) = -0.1;
    CHECK(code_of([&] { eigendecompose(indef); }) == ErrorCode::indefinite_beyond_tolerance);
    Eigen::MatrixXd slight = Eigen::MatrixXd::Identity(2, 2);
    slight(1, 1) = -1e-9;
    CHECK(eigendecompose(slight).clamped);
}

TEST_CASE("closed form matches repeated ridge solves")
{
    Rng rng = make_rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::MatrixXd g = random_psd(rng, 10);
        const Eigen::VectorXd y0 = random_vector(rng, 10);
        const double c = 0.05 + uniform01(rng);
        const DistillTrajectory traj = distill_trajectory(eigendecompose(g), y0, CSchedule::fixed(c), 4);
        Eigen::VectorXd y = y0;
        for (std::size_t t = 0; t < 4; ++t) {
            const Eigen::MatrixXd reg = g + c * Eigen::MatrixXd::Identity(10, 10);
            y = g * reg.partialPivLu().solve(y);
            CHECK((traj.predictions[t] - y).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("shrink products decrease and active basis shrinks")
{
    Rng rng = make_rng(3);
    const KernelSpectrum s = eigendecompose(random_psd(rng, 10));
    const DistillTrajectory traj = distill_trajectory(s, random_vector(rng, 10), CSchedule::fixed(0.5), 10);
    for (std::size_t t = 1; t < traj.generations(); ++t)
        CHECK((traj.shrink_products[t].array() < traj.shrink_products[t - 1].array()).all());
    for (const auto& p : traj.shrink_products)
        for (Eigen::Index j = 1; j < p.size(); ++j)
            CHECK(p(j - 1) >= p(j));
    const auto counts = active_basis_count(traj, 1e-3);
    for (std::size_t t = 1; t < counts.size(); ++t)
        CHECK(counts[t] <= counts[t - 1]);
    CHECK(code_of([&] { active_basis_count(traj, 1.0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("tolerance schedule hits the requested residual")
{
    Rng rng = make_rng(4);
    const Eigen::MatrixXd g = random_psd(rng, 8);
    const Eigen::VectorXd y0 = random_vector(rng, 8);
    const double eps = 0.01;
    const DistillTrajectory traj = distill_trajectory(eigendecompose(g), y0, CSchedule::tolerance(eps), 3);
    Eigen::VectorXd y = y0;
    for (std::size_t t = 0; t < 3; ++t) {
        const double c = traj.c_schedule[t];
        const Eigen::VectorXd f = g * (g + c * Eigen::MatrixXd::Identity(8, 8)).partialPivLu().solve(y);
        CHECK((f - y).squaredNorm() / 8.0 == doctest::Approx(eps).epsilon(1e-6));
        y = f;
    }
    CHECK(code_of([&] { distill_trajectory(eigendecompose(g), y0, CSchedule::tolerance(100.0), 1); }) ==
          ErrorCode::bisection_failure);
}

TEST_CASE("ridge residual in the eigenbasis")
{
    const Eigen::Vector2d d(2.0, 1.0);
    const Eigen::Vector2d y(1.0, -1.0);
    const double expected = ((1.0 / 3.0) * (1.0 / 3.0) + 0.25) / 2.0;
    CHECK(ridge_residual(d, y, 1.0) == doctest::Approx(expected));
}

TEST_CASE("trajectory guards")
{
    const KernelSpectrum s = eigendecompose(Eigen::MatrixXd::Identity(3, 3));
    CHECK(code_of([&] { distill_trajectory(s, Eigen::VectorXd::Ones(2), CSchedule::fixed(1.0), 1); }) ==
          ErrorCode::dimension_mismatch);
    CHECK(code_of([&] { distill_trajectory(s, Eigen::VectorXd::Ones(3), CSchedule::fixed(0.0), 1); }) ==
          ErrorCode::invalid_argument);
    CHECK(code_of([&] { distill_trajectory(s, Eigen::VectorXd::Ones(3), CSchedule::fixed(1.0), 0); }) ==
          ErrorCode::invalid_argument);
}
