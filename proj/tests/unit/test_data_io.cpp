#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "spikedict/data_io.hpp"
#include "spikedict/metrics.hpp"
#include "spikedict/rng.hpp"

using namespace spikedict;

namespace {

void write_bytes(const std::string& path, const std::string& header,
                 const std::vector<unsigned char>& payload) {
    std::ofstream f(path, std::ios::binary);
    f << header;
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
}

void write_be32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("data_io") {

TEST_CASE("pgm reader follows the P5 byte layout") {
    TempFile t("t_basic.pgm");
    write_bytes(t.path, "P5\n2 2\n255\n", {0, 255, 128, 64});
    const Image img = load_pgm(t.path);
    REQUIRE(img.width == 2);
    REQUIRE(img.height == 2);
    CHECK(img.pix[0] == 0.0);
    CHECK(img.pix[1] == 1.0);
    CHECK(img.pix[2] == doctest::Approx(128.0 / 255.0));
    CHECK(img.pix[3] == doctest::Approx(64.0 / 255.0));
}

TEST_CASE("pgm reader handles comments and 16-bit rasters") {
    TempFile t("t_16bit.pgm");
    // 1x1, maxval 65535, single big-endian sample 0x0100 = 256
    write_bytes(t.path, "P5\n# a comment\n1 1\n65535\n", {0x01, 0x00});
    const Image img = load_pgm(t.path);
    CHECK(img.pix[0] == doctest::Approx(256.0 / 65535.0));
}

TEST_CASE("pgm reader error taxonomy") {
    TempFile a("t_ascii.pgm"), b("t_trunc.pgm"), c("t_maxval.pgm");
    write_bytes(a.path, "P2\n2 2\n255\n", {0, 1, 2, 3});
    CHECK_THROWS_WITH_AS(load_pgm(a.path), doctest::Contains("bad magic"),
                         std::runtime_error);
    write_bytes(b.path, "P5\n2 2\n255\n", {0, 1});
    CHECK_THROWS_WITH_AS(load_pgm(b.path), doctest::Contains("truncated"),
                         std::runtime_error);
    write_bytes(c.path, "P5\n1 1\n70000\n", {0, 0});
    CHECK_THROWS_WITH_AS(load_pgm(c.path), doctest::Contains("unsupported maxval"),
                         std::runtime_error);
}

TEST_CASE("pgm writer round trips quantized images exactly") {
    Image img;
    img.width = 3;
    img.height = 2;
    img.pix.resize(6);
    for (Index i = 0; i < 6; ++i) img.pix[i] = double(i * 51) / 255.0;
    TempFile t("t_roundtrip.pgm");
    save_pgm(t.path, img);
    const Image back = load_pgm(t.path);
    for (Index i = 0; i < 6; ++i) CHECK(back.pix[i] == img.pix[i]);
}

TEST_CASE("idx reader accepts synthetic files and scales by 255") {
    std::vector<unsigned char> payload;
    write_be32(payload, 2051);
    write_be32(payload, 3);
    write_be32(payload, 2);
    write_be32(payload, 2);
    for (int p = 0; p < 3; ++p)
        for (int i = 0; i < 4; ++i)
            payload.push_back(static_cast<unsigned char>(p == 0 ? 0 : p * 40 + i));
    TempFile t("t_images.idx");
    write_bytes(t.path, "", payload);

    const PatchSet set = load_mnist_idx(t.path);
    REQUIRE(set.count() == 3);
    REQUIRE(set.dim() == 4);
    CHECK(set.data.col(0).maxCoeff() == 0.0);  // all-zero image -> zero patch
    CHECK(set.data(1, 1) == doctest::Approx(41.0 / 255.0));
    CHECK(set.provenance.find("dimension mismatch") != std::string::npos);  // 2x2 flagged
}

TEST_CASE("idx reader rejects label files and truncation") {
    std::vector<unsigned char> labels;
    write_be32(labels, 2049);
    write_be32(labels, 1);
    TempFile a("t_labels.idx");
    write_bytes(a.path, "", labels);
    CHECK_THROWS_WITH_AS(load_mnist_idx(a.path), doctest::Contains("bad magic"),
                         std::runtime_error);

    std::vector<unsigned char> trunc;
    write_be32(trunc, 2051);
    write_be32(trunc, 2);
    write_be32(trunc, 28);
    write_be32(trunc, 28);
    trunc.push_back(7);
    TempFile b("t_trunc.idx");
    write_bytes(b.path, "", trunc);
    CHECK_THROWS_WITH_AS(load_mnist_idx(b.path), doctest::Contains("truncated"),
                         std::runtime_error);
}

TEST_CASE("patch sampling is deterministic and respects bounds") {
    const Image img = synthetic_scene(32, 3);
    CHECK(sample_patches(img, 8, 0, 1).cols() == 0);
    const Matrix a = sample_patches(img, 8, 20, 5);
    const Matrix b = sample_patches(img, 8, 20, 5);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(sample_patches(img, 64, 1, 1), std::invalid_argument);

    Image tiny;
    tiny.width = tiny.height = 8;
    tiny.pix = Vector::LinSpaced(64, 0.0, 1.0);
    const Matrix only = sample_patches(tiny, 8, 3, 99);
    for (Index p = 0; p < 3; ++p)
        CHECK((only.col(p) - tiny.pix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("split preprocessing: definition, inverse, and channel disjointness") {
    Vector raw(2);
    raw << 1.0, -1.0;
    Vector y;
    const PatchTransform t = split_patch(raw, y);
    CHECK(!t.degenerate);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(y[0] == doctest::Approx(r));
    CHECK(y[1] == doctest::Approx(0.0));
    CHECK(y[2] == doctest::Approx(0.0));
    CHECK(y[3] == doctest::Approx(r));
    const Vector back = unsplit_patch(y, t);
    CHECK((back - raw).cwiseAbs().maxCoeff() <= 1e-12);

    Rng rng(11);
    for (int k = 0; k < 50; ++k) {
        Vector v(16);
        for (Index i = 0; i < 16; ++i) v[i] = rng.normal();
        Vector out;
        const PatchTransform tr = split_patch(v, out);
        REQUIRE(!tr.degenerate);
        CHECK(out.norm() == doctest::Approx(1.0).epsilon(1e-12));
        for (Index i = 0; i < 16; ++i) CHECK(out[i] * out[i + 16] == 0.0);
        CHECK(out.minCoeff() >= 0.0);
        CHECK((unsplit_patch(out, tr) - v).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("constant patches are dropped and counted") {
    Matrix raw(4, 3);
    raw.col(0) = Vector::Constant(4, 0.7);
    raw.col(1) = Vector::LinSpaced(4, 0.0, 1.0);
    raw.col(2) = Vector::Constant(4, 0.0);
    const SplitPatchSet out = preprocess_split(raw);
    CHECK(out.dropped == 2);
    REQUIRE(out.set.count() == 1);
    CHECK(out.set.dim() == 8);
}

TEST_CASE("gaussian noise is seed-deterministic and clamped") {
    const Image img = synthetic_scene(32, 5);
    const Image same = add_gaussian_noise(img, 0.0, 9);
    CHECK((same.pix - img.pix).cwiseAbs().maxCoeff() == 0.0);

    const Image n1 = add_gaussian_noise(img, 0.2, 9);
    const Image n2 = add_gaussian_noise(img, 0.2, 9);
    CHECK((n1.pix - n2.pix).cwiseAbs().maxCoeff() == 0.0);
    CHECK(n1.pix.minCoeff() >= 0.0);
    CHECK(n1.pix.maxCoeff() <= 1.0);
    CHECK((n1.pix - img.pix).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("noise calibration hits a target psnr") {
    const Image img = synthetic_scene(128, 7);
    const double sigma = calibrate_noise_sigma(img, 18.69, 13);
    const double got = psnr(img, add_gaussian_noise(img, sigma, 13));
    CHECK(std::abs(got - 18.69) <= 0.1);
}

TEST_CASE("pst cache round trip is bit-exact") {
    PatchSet set;
    set.data.resize(6, 9);
    Rng rng(15);
    for (Index i = 0; i < set.data.size(); ++i) set.data.data()[i] = rng.uniform();
    TempFile t("t_cache.pst");
    save_pst(t.path, set);
    const PatchSet back = load_pst(t.path);
    REQUIRE(back.dim() == 6);
    REQUIRE(back.count() == 9);
    for (Index i = 0; i < set.data.size(); ++i)
        CHECK(back.data.data()[i] == set.data.data()[i]);
}

TEST_CASE("synthetic scenes are deterministic and in range") {
    const Image a = synthetic_scene(64, 21);
    const Image b = synthetic_scene(64, 21);
    CHECK((a.pix - b.pix).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.pix.minCoeff() >= 0.0);
    CHECK(a.pix.maxCoeff() <= 1.0);
    // enough variation to sample training patches from
    CHECK((a.pix.maxCoeff() - a.pix.minCoeff()) > 0.3);
}

}  // TEST_SUITE
