#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "itlab/errors.hpp"
#include "itlab/network.hpp"
#include "itlab/random.hpp"

#include <cmath>

using namespace itlab;
using namespace itlab::nn;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c)
{
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = standard_normal(rng);
    return m;
}

Eigen::MatrixXd random_blocks(Rng& rng, int blocks, int width, Eigen::Index n)
{
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(blocks * width, n);
    for (Eigen::Index c = 0; c < n; ++c)
        for (int k = 0; k < blocks; ++k)
            t(k * width + static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(width))), c) = 1.0;
    return t;
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

// Scalar reimplementation of the forward pass for one input.
Eigen::VectorXd reference_output(const NetworkParams& p, const Eigen::VectorXd& x)
{
    const Layer& l0 = p.layers[0];
    const Layer& l1 = p.layers[1];
    const Layer& l2 = p.layers[2];
    std::vector<double> h(static_cast<std::size_t>(l0.w.rows()));
    for (Eigen::Index i = 0; i < l0.w.rows(); ++i) {
        double s = l0.b(i);
        for (Eigen::Index j = 0; j < l0.w.cols(); ++j)
            s += l0.w(i, j) * x(j);
        h[static_cast<std::size_t>(i)] = s > 0.0 ? s : 0.0;
    }
    std::vector<double> z(static_cast<std::size_t>(l1.w.rows()));
    for (Eigen::Index i = 0; i < l1.w.rows(); ++i) {
        double s = l1.b(i);
        for (Eigen::Index j = 0; j < l1.w.cols(); ++j)
            s += l1.w(i, j) * h[static_cast<std::size_t>(j)];
        z[static_cast<std::size_t>(i)] = s;
    }
    if (p.arch.sem) {
        const int w = p.arch.sem->block_width;
        for (std::size_t k = 0; k < z.size(); k += static_cast<std::size_t>(w)) {
            double total = 0.0;
            for (int j = 0; j < w; ++j)
                total += std::exp(z[k + static_cast<std::size_t>(j)] / p.arch.sem->temperature);
            for (int j = 0; j < w; ++j)
                z[k + static_cast<std::size_t>(j)] = std::exp(z[k + static_cast<std::size_t>(j)] / p.arch.sem->temperature) / total;
        }
    }
    Eigen::VectorXd out(l2.w.rows());
    for (Eigen::Index i = 0; i < l2.w.rows(); ++i) {
        double s = l2.b(i);
        for (Eigen::Index j = 0; j < l2.w.cols(); ++j)
            s += l2.w(i, j) * z[static_cast<std::size_t>(j)];
        out(i) = s;
    }
    return out;
}

} // namespace

TEST_CASE("block softmax normalizes each block and sharpens with low temperature")
{
    Eigen::MatrixXd logits(4, 1);
    logits << 1.0, 2.0, 1000.0, 1000.0;
    const Eigen::MatrixXd p = block_softmax(logits, 2, 1.0);
    CHECK(p(0, 0) + p(1, 0) == doctest::Approx(1.0));
    CHECK(p(1, 0) == doctest::Approx(std::exp(1.0) / (1.0 + std::exp(1.0))));
    CHECK(p(2, 0) == doctest::Approx(0.5));
    const Eigen::MatrixXd sharp = block_softmax(logits, 2, 0.01);
    CHECK(sharp(1, 0) > 0.999999);
    CHECK(code_of([&] { block_softmax(logits, 3, 1.0); }) == ErrorCode::dimension_mismatch);
}

TEST_CASE("forward pass matches a scalar reimplementation")
{
    Rng rng = make_rng(8);
    for (const Architecture& arch : {Architecture::with_sem(7, 2, SemConfig{3, 4, 0.7}, 9),
                                     Architecture::plain(7, 5, 3, 6)}) {
        const NetworkParams p = NetworkParams::init(arch, 3);
        const Eigen::MatrixXd x = random_matrix(rng, 7, 5);
        const ForwardCache c = forward(p, x);
        for (Eigen::Index i = 0; i < 5; ++i)
            CHECK((c.output.col(i) - reference_output(p, x.col(i))).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("initialization is seeded and sized")
{
    const Architecture arch = Architecture::with_sem(10, 1, SemConfig{4, 10, 1.0}, 64);
    const NetworkParams a = NetworkParams::init(arch, 1);
    const NetworkParams b = NetworkParams::init(arch, 1);
    const NetworkParams c = NetworkParams::init(arch, 2);
    CHECK(a.layers[0].w == b.layers[0].w);
    CHECK(a.layers[0].w != c.layers[0].w);
    CHECK(a.num_parameters() == 10 * 64 + 64 + 64 * 40 + 40 + 40 + 1);
    CHECK(a.layers[1].b.isZero());
    const double limit = std::sqrt(6.0 / (10 + 64));
    CHECK(a.layers[0].w.cwiseAbs().maxCoeff() <= limit);
    NetworkParams d = a;
    d.reinit_head(5);
    CHECK(d.layers[0].w == a.layers[0].w);
    CHECK(d.layers[2].w != a.layers[2].w);
    CHECK(d.revision > a.revision);
}

TEST_CASE("architecture validation")
{
    CHECK(code_of([] { NetworkParams::init(Architecture::with_sem(3, 1, SemConfig{2, 1, 1.0}), 0); }) ==
          ErrorCode::config_invalid);
    CHECK(code_of([] { NetworkParams::init(Architecture::with_sem(3, 1, SemConfig{2, 3, 0.0}), 0); }) ==
          ErrorCode::config_invalid);
    Architecture bad = Architecture::with_sem(3, 1, SemConfig{2, 3, 1.0});
    bad.code_dim = 5;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::config_invalid);
}

TEST_CASE("gradients agree with finite differences")
{
    Rng rng = make_rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const SemConfig sem{3, 4, 0.5 + uniform01(rng)};
        const NetworkParams semnet = NetworkParams::init(Architecture::with_sem(6, 2, sem, 8), 100 + trial);
        const NetworkParams plain = NetworkParams::init(Architecture::plain(6, 5, 2, 8), 200 + trial);
        const NetworkParams ce = NetworkParams::init(Architecture::plain(6, 5, 6, 8), 300 + trial);
        const Eigen::MatrixXd x = random_matrix(rng, 6, 4);
        CHECK(gradient_check(semnet, x, {LossKind::mse, random_matrix(rng, 2, 4), 0}) < 1e-5);
        CHECK(gradient_check(semnet, x, {LossKind::multilabel_ce, random_blocks(rng, 3, 4, 4), 0}) < 1e-5);
        CHECK(gradient_check(plain, x, {LossKind::mse, random_matrix(rng, 2, 4), 0}) < 1e-5);
        CHECK(gradient_check(ce, x, {LossKind::cross_entropy, random_blocks(rng, 2, 3, 4), 3}) < 1e-5);
    }
}

TEST_CASE("one weight checked by hand with a central difference")
{
    Rng rng = make_rng(2);
    NetworkParams p = NetworkParams::init(Architecture::with_sem(4, 1, SemConfig{2, 3, 1.0}, 5), 1);
    const Eigen::MatrixXd x = random_matrix(rng, 4, 3);
    const Objective obj{LossKind::mse, random_matrix(rng, 1, 3), 0};
    auto loss = [&](const NetworkParams& q) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < 3; ++i)
            s += std::pow(reference_output(q, x.col(i))(0) - obj.target(0, i), 2);
        return s / 3.0;
    };
    Gradients g;
    CHECK(evaluate_objective(p, x, obj, &g) == doctest::Approx(loss(p)).epsilon(1e-12));
    const double h = 1e-6;
    NetworkParams up = p, down = p;
    up.layers[1].w(2, 3) += h;
    down.layers[1].w(2, 3) -= h;
    CHECK(g[1].w(2, 3) == doctest::Approx((loss(up) - loss(down)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("loss values")
{
    Eigen::MatrixXd pred(1, 2), target(1, 2);
    pred << 1.0, 3.0;
    target << 0.0, 1.0;
    CHECK(mse_loss(pred, target).value == doctest::Approx(2.5));

    Eigen::MatrixXd logits(2, 1), t(2, 1);
    logits << 0.0, std::log(3.0);
    t << 0.0, 1.0;
    CHECK(block_cross_entropy(logits, t, 2).value == doctest::Approx(-std::log(0.75)));

    Eigen::MatrixXd probs(2, 1);
    probs << 0.25, 0.0;
    const LossValue ml = multilabel_cross_entropy(probs, t);
    CHECK(std::isfinite(ml.value));
    CHECK(ml.value == doctest::Approx(-std::log(1e-300)));
    CHECK(code_of([&] { mse_loss(pred, t); }) == ErrorCode::dimension_mismatch);
}

TEST_CASE("stale caches and mode mismatches are rejected")
{
    NetworkParams p = NetworkParams::init(Architecture::plain(3, 4, 1, 5), 0);
    const ForwardCache c = forward(p, Eigen::MatrixXd(Eigen::MatrixXd::Ones(3, 2)));
    p.touch();
    CHECK(code_of([&] { backward(p, c, {Eigen::MatrixXd::Ones(1, 2), {}}); }) == ErrorCode::stale_cache);
    const NetworkParams copy = p;
    const ForwardCache c2 = forward(p, Eigen::MatrixXd(Eigen::MatrixXd::Ones(3, 2)));
    CHECK(code_of([&] { backward(copy, c2, {Eigen::MatrixXd::Ones(1, 2), {}}); }) == ErrorCode::stale_cache);
    CHECK(code_of([&] { backward(p, c2, {Eigen::MatrixXd::Ones(2, 2), {}}); }) == ErrorCode::dimension_mismatch);
    CHECK(code_of([&] {
              evaluate_objective(p, Eigen::MatrixXd::Ones(3, 2), {LossKind::multilabel_ce, Eigen::MatrixXd::Ones(4, 2), 0});
          }) == ErrorCode::mode_mismatch);
    CHECK(code_of([&] { forward(p, Eigen::MatrixXd(Eigen::MatrixXd::Ones(2, 2))); }) == ErrorCode::dimension_mismatch);
    CHECK(code_of([&] { gradient_check(p, Eigen::MatrixXd::Ones(3, 2), {LossKind::mse, Eigen::MatrixXd::Ones(1, 2), 0}, 0.1); }) ==
          ErrorCode::invalid_argument);
}

TEST_CASE("SGD applies weight decay and lowers a simple loss")
{
    NetworkParams p = NetworkParams::init(Architecture::plain(2, 3, 1, 4), 0);
    const NetworkParams before = p;
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.5;
    sgd_step(p, p.zeros_like(), cfg);
    CHECK(p.layers[0].w.isApprox(before.layers[0].w * 0.95));
    CHECK(p.revision == before.revision + 1);

    Rng rng = make_rng(1);
    NetworkParams q = NetworkParams::init(Architecture::plain(2, 3, 1, 8), 4);
    const Eigen::MatrixXd x = random_matrix(rng, 2, 16);
    const Objective obj{LossKind::mse, x.row(0) - 0.5 * x.row(1), 0};
    cfg.weight_decay = 0.0;
    cfg.learning_rate = 0.05;
    const double start = evaluate_objective(q, x, obj);
    for (int s = 0; s < 200; ++s) {
        Gradients g;
        evaluate_objective(q, x, obj, &g);
        sgd_step(q, g, cfg);
    }
    CHECK(evaluate_objective(q, x, obj) < 0.1 * start);
}

TEST_CASE("block entropy and argmax")
{
    Eigen::VectorXd code(6);
    code << 0.5, 0.5, 0.0, 0.2, 0.2, 0.6;
    const auto h = block_entropies(code, 3);
    CHECK(h[0] == doctest::Approx(std::log(2.0)));
    CHECK(block_argmax(code, 3) == std::vector<int>{0, 2});
    CHECK_THROWS_AS(block_entropies(code, 4), LabError);
}

TEST_CASE("checkpoint round trip")
{
    const NetworkParams p = NetworkParams::init(Architecture::with_sem(5, 2, SemConfig{2, 3, 0.4}, 7), 9);
    nlohmann::json j = p;
    const NetworkParams back = params_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.arch == p.arch);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.layers[i].w == p.layers[i].w);
        CHECK(back.layers[i].b == p.layers[i].b);
    }
    j["version"] = 99;
    CHECK(code_of([&] { params_from_json(j); }) == ErrorCode::parse_error);
    CHECK(code_of([] { params_from_json(nlohmann::json::parse("{}")); }) == ErrorCode::parse_error);
}

TEST_CASE("loss kind names")
{
    for (LossKind k : {LossKind::mse, LossKind::cross_entropy, LossKind::multilabel_ce})
        CHECK(loss_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(loss_kind_from_string("hinge"), LabError);
}
