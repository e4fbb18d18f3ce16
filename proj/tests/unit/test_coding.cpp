#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "spikedict/coding.hpp"
#include "spikedict/engine.hpp"
#include "spikedict/oracle.hpp"
#include "spikedict/rng.hpp"

using namespace spikedict;

namespace {

Dictionary random_dict(Index m, Index n, std::uint64_t seed) {
    Rng rng(seed);
    return random_unit_dictionary(m, n, rng);
}

Vector random_nonneg_unit(Index m, std::uint64_t seed) {
    Rng rng(seed);
    Vector x(m);
    for (Index i = 0; i < m; ++i) x[i] = rng.uniform();
    return x / x.norm();
}

}  // namespace

TEST_SUITE("coding") {

TEST_CASE("identity dictionary soft-thresholds the input") {
    const auto w = weights_from_dictionary(Dictionary{Matrix::Identity(2, 2)}, 0.5, 0.0);
    Vector x(2);
    x << 1.0, 0.1;
    const auto res = sparse_code(w, x, 200.0, 1.0 / 32.0, 0.0);
    CHECK(std::abs(res.a[0] - 0.5) <= 0.02);
    CHECK(res.a[1] == 0.0);  // drive 0.1 < penalty 0.5, never spikes
}

TEST_CASE("zero input codes to zero") {
    const auto w = weights_from_dictionary(random_dict(8, 16, 3), 0.1, 0.0);
    const auto res = sparse_code(w, Vector::Zero(8), 50.0, 1.0 / 32.0, 0.0);
    CHECK(res.a.maxCoeff() == 0.0);
}

TEST_CASE("network code matches the oracle on a random instance") {
    const auto d = random_dict(16, 32, 13);
    const auto w = weights_from_dictionary(d, 0.1, 0.0);
    const Vector x = random_nonneg_unit(16, 14);
    const auto net = sparse_code(w, x, 200.0, 1.0 / 32.0, 0.0);
    const auto oracle = solve_nn_lasso({d.atoms, x, 0.1, w.s}, 1e-10, 100000);
    REQUIRE(oracle.converged);
    CHECK((net.a - oracle.a).lpNorm<Eigen::Infinity>() <= 0.05);
    CHECK(code_support(net.a, 200.0) == code_support(oracle.a, 200.0));
}

TEST_CASE("the code is invariant to the feedback strength") {
    const auto d = random_dict(16, 32, 23);
    const auto w = weights_from_dictionary(d, 0.1, 0.0);
    const Vector x = random_nonneg_unit(16, 24);
    // One simulation; the feedback phase is measured after a short settle
    // window so the comparison sees limiting states, not switch transients.
    NetworkSim sim(w, x);
    const PhaseSnapshot s0 = sim.run_phase(0.0, 200.0, 1.0 / 32.0);
    sim.run_phase(0.7, 20.0, 1.0 / 32.0);
    const PhaseSnapshot sk = sim.run_phase(0.7, 200.0, 1.0 / 32.0);
    CHECK((s0.a - sk.a).lpNorm<Eigen::Infinity>() <= 0.05);
    CHECK(code_support(s0.a, 200.0) == code_support(sk.a, 200.0));
}

TEST_CASE("complementarity residual shrinks like 1/T") {
    const auto w = weights_from_dictionary(random_dict(8, 16, 33), 0.1, 0.0);
    const Vector x = random_nonneg_unit(8, 34);
    auto comp = [&](double T) {
        const auto res = sparse_code(w, x, T, 1.0 / 32.0, 0.0);
        return kkt_residuals(res.snap, w, x).complementarity;
    };
    const double c50 = comp(50.0), c100 = comp(100.0), c200 = comp(200.0);
    CHECK(c100 < c50);
    CHECK(c200 < c100);
    CHECK(c200 <= 0.5 * c50);
}

TEST_CASE("support threshold keeps one spike above the noise floor") {
    Vector a(3);
    a << 0.009, 0.004, 0.0;
    const auto sup = code_support(a, 200.0);  // eps = 0.0075
    REQUIRE(sup.size() == 1);
    CHECK(sup[0] == 0);
}

TEST_CASE("verify_perturbation reduces to sparse coding when delta_H = 0") {
    const auto d = random_dict(16, 32, 43);
    const Vector x = random_nonneg_unit(16, 44);
    RunConfig cfg;
    cfg.lambda1 = 0.1;
    cfg.T_phase = 200.0;
    for (double gamma : {0.0, 0.7}) {
        const auto rep = verify_perturbation(d, Matrix::Zero(32, 32), gamma, x, cfg);
        CHECK(rep.gap_linf <= 0.05);
        CHECK(rep.s_shift_linf == 0.0);
        CHECK(rep.s_condition_ok);
    }
}

TEST_CASE("verify_perturbation admits a small random perturbation") {
    const auto d = random_dict(16, 32, 53);
    const Vector x = random_nonneg_unit(16, 54);
    RunConfig cfg;
    cfg.lambda1 = 0.1;
    cfg.T_phase = 200.0;

    // Scale a random non-negative perturbation to a tenth of the allowed size,
    // using the unperturbed rates as the reference.
    const auto base = verify_perturbation(d, Matrix::Zero(32, 32), 0.0, x, cfg);
    const double a_inf = base.a_net.lpNorm<Eigen::Infinity>();
    Rng rng(55);
    Matrix delta(32, 32);
    for (Index i = 0; i < delta.size(); ++i) delta.data()[i] = rng.uniform();
    const double rowsum = delta.cwiseAbs().rowwise().sum().maxCoeff();
    delta *= 0.1 * base.min_s / (4.0 * rowsum * a_inf);

    const auto rep = verify_perturbation(d, delta, 0.0, x, cfg);
    CHECK(rep.gap_linf <= 0.05);
    CHECK(rep.s_condition_ok);
    CHECK(rep.precondition_lhs < rep.min_s);
}

TEST_CASE("verify_perturbation rejects an oversized perturbation") {
    const auto d = random_dict(8, 12, 63);
    const Vector x = random_nonneg_unit(8, 64);
    RunConfig cfg;
    cfg.lambda1 = 0.1;
    cfg.T_phase = 50.0;
    const Matrix delta = Matrix::Constant(12, 12, 0.5);
    CHECK_THROWS_WITH_AS(verify_perturbation(d, delta, 0.0, x, cfg),
                         doctest::Contains("perturbation too large"),
                         std::invalid_argument);
}

}  // TEST_SUITE
