#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "spikedict/data_io.hpp"
#include "spikedict/metrics.hpp"
#include "spikedict/oracle.hpp"
#include "spikedict/rng.hpp"

using namespace spikedict;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
    return m;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("consistency closed forms") {
    const Matrix F = random_matrix(6, 4, 3);
    const Matrix B = random_matrix(4, 6, 4);
    const Matrix H = F * B;
    CHECK(consistency(H, F, B) == 1.0);

    CHECK(consistency(Matrix::Identity(3, 3), Matrix::Zero(3, 5), Matrix::Zero(5, 3)) ==
          0.0);

    Rng rng(5);
    Matrix e(6, 6);
    for (Index i = 0; i < e.size(); ++i) e.data()[i] = rng.normal();
    e *= 0.1 * H.norm() / e.norm();
    CHECK(consistency(H + e, F, B) ==
          doctest::Approx(1.0 - e.norm() / (H + e).norm()).epsilon(1e-12));

    CHECK_THROWS_WITH_AS(consistency(Matrix::Zero(2, 2), Matrix::Zero(2, 2),
                                     Matrix::Zero(2, 2)),
                         doctest::Contains("zero H"), std::invalid_argument);
}

TEST_CASE("symmetry closed forms and brute-force cross-check") {
    const Matrix F = random_matrix(5, 7, 13);
    CHECK(symmetry(F, Matrix(F.transpose())) == doctest::Approx(1.0).epsilon(1e-14));

    Matrix f(2, 2), b(2, 2);
    f << 1, 0, 0, 1;
    b << 0, 1, 1, 0;  // column i orthogonal to row i
    CHECK(symmetry(f, b) == 0.0);

    const Matrix F2 = random_matrix(8, 8, 14);
    const Matrix B2 = random_matrix(8, 8, 15);
    double brute = 0.0;
    for (Index i = 0; i < 8; ++i) {
        double dot = 0.0, fn = 0.0, bn = 0.0;
        for (Index j = 0; j < 8; ++j) {
            dot += F2(i, j) * B2(j, i);
            fn += F2(i, j) * F2(i, j);
            bn += B2(j, i) * B2(j, i);
        }
        brute += dot / (std::sqrt(fn) * std::sqrt(bn));
    }
    brute /= 8.0;
    CHECK(symmetry(F2, B2) == doctest::Approx(brute).epsilon(1e-12));
    CHECK(symmetry(F2, B2) > -1.0);
    CHECK(symmetry(F2, B2) < 1.0);

    // a zero pair contributes zero and is not fatal
    Matrix F3 = F2;
    F3.row(2).setZero();
    CHECK(std::isfinite(symmetry(F3, B2)));
}

TEST_CASE("psnr closed forms") {
    Image a, b;
    a.width = b.width = 4;
    a.height = b.height = 4;
    a.pix = Vector::Constant(16, 0.5);
    b.pix = a.pix;
    CHECK(psnr(a, b) == std::numeric_limits<double>::infinity());

    b.pix = Vector::Constant(16, 0.6);  // uniform 0.1 difference -> MSE 0.01
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));

    Image c;
    c.width = 2;
    c.height = 2;
    c.pix = Vector::Zero(4);
    CHECK_THROWS_AS(psnr(a, c), std::invalid_argument);
}

TEST_CASE("noise-free input with a complete dictionary reconstructs above 40 dB") {
    const Image img = synthetic_scene(32, 31);
    const Index p = 4;
    const auto w =
        weights_from_dictionary(Dictionary{Matrix::Identity(2 * p * p, 2 * p * p)},
                                1e-5, 0.0);
    DenoiseOptions opt;
    opt.lambda1 = 1e-5;
    const DenoiseResult res = denoise(w, img, p, opt);
    CHECK(psnr(img, res.image) >= 40.0);
}

TEST_CASE("stride = patch size equals direct stitched reconstruction") {
    const Image img = synthetic_scene(32, 37);
    const Index p = 4;
    Rng rng(38);
    const auto w = weights_from_dictionary(random_unit_dictionary(2 * p * p, 24, rng),
                                           0.05, 0.0);
    DenoiseOptions opt;
    opt.lambda1 = 0.05;
    opt.stride = p;
    const DenoiseResult res = denoise(w, img, p, opt);

    const NnLassoSolver solver(w.B);
    Image direct = img;
    for (Index oy = 0; oy + p <= 32; oy += p)
        for (Index ox = 0; ox + p <= 32; ox += p) {
            Vector raw(p * p), y;
            Index k = 0;
            for (Index dy = 0; dy < p; ++dy)
                for (Index dx = 0; dx < p; ++dx) raw[k++] = img.at(oy + dy, ox + dx);
            const PatchTransform t = split_patch(raw, y);
            Vector rec;
            if (t.degenerate) {
                rec = Vector::Constant(p * p, t.mean);
            } else {
                const auto sol = solver.solve(y, w.s, opt.lambda1, opt.oracle_tol, 100000);
                rec = unsplit_patch(w.B * sol.a, t);
            }
            k = 0;
            for (Index dy = 0; dy < p; ++dy)
                for (Index dx = 0; dx < p; ++dx)
                    direct.at(oy + dy, ox + dx) = std::clamp(rec[k++], 0.0, 1.0);
        }
    CHECK((res.image.pix - direct.pix).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("denoise is deterministic across thread counts") {
    const Image img = add_gaussian_noise(synthetic_scene(24, 41), 0.1, 42);
    Rng rng(43);
    const auto w = weights_from_dictionary(random_unit_dictionary(32, 20, rng), 0.1, 0.0);
    DenoiseOptions o1;
    o1.threads = 1;
    DenoiseOptions o4;
    o4.threads = 4;
    const auto r1 = denoise(w, img, 4, o1);
    const auto r4 = denoise(w, img, 4, o4);
    CHECK((r1.image.pix - r4.image.pix).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r1.mean_l0 == r4.mean_l0);
}

TEST_CASE("atlas tiles atoms into a grid") {
    Vector atom = Vector::LinSpaced(4, 0.0, 0.9);
    const Image single = dictionary_atlas(atom, 2, 2);
    REQUIRE(single.width == 2);
    REQUIRE(single.height == 2);
    CHECK(single.pix[0] == 0.0);
    CHECK(single.pix[3] == 1.0);  // min-max normalized

    const Image grid = dictionary_atlas(Matrix::Identity(64, 64), 8, 8);
    REQUIRE(grid.width == 64);
    REQUIRE(grid.height == 64);
    // every tile holds exactly one bright pixel
    double total = 0.0;
    for (Index i = 0; i < grid.pix.size(); ++i) total += grid.pix[i];
    CHECK(total == doctest::Approx(64.0));

    const Image again = dictionary_atlas(Matrix::Identity(64, 64), 8, 8);
    CHECK((grid.pix - again.pix).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_WITH_AS(dictionary_atlas(Matrix::Identity(10, 10), 3, 3),
                         doctest::Contains("shape mismatch"), std::invalid_argument);
}

TEST_CASE("metrics csv is stable and carries the full schema") {
    std::vector<MetricsRecord> log(2);
    log[0].iteration = 0;
    log[0].objective = std::nan("");
    log[1].iteration = 50;
    log[1].objective = 0.25;
    log[1].surrogate = 0.5;
    const std::string csv = metrics_csv_string(log);
    CHECK(csv.find("iteration,objective,surrogate,consistency,symmetry,"
                   "mean_atom_norm,max_abs_current,g_h_norm,max_s\n") == 0);
    CHECK(csv.find("\n0,nan,") != std::string::npos);
    CHECK(csv.find("\n50,0.25,0.5,") != std::string::npos);
    CHECK(metrics_csv_string(log) == csv);

    write_metrics_jsonl("t_log.jsonl", log);
    std::ifstream f("t_log.jsonl");
    std::string line;
    std::getline(f, line);
    CHECK(line.find("\"iteration\":0") != std::string::npos);
    std::remove("t_log.jsonl");

    write_convergence_svg("t_chart.svg", log);
    std::ifstream svg("t_chart.svg");
    std::string all((std::istreambuf_iterator<char>(svg)), std::istreambuf_iterator<char>());
    CHECK(all.find("<svg") != std::string::npos);
    CHECK(all.find("polyline") != std::string::npos);
    std::remove("t_chart.svg");
}

}  // TEST_SUITE
