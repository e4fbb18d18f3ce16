#include "spikedict/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "spikedict/metrics.hpp"
#include "spikedict/rng.hpp"

namespace spikedict {

namespace {

int next_header_token(std::istream& in) {
    // Skips whitespace and '#' comment lines inside a PGM header.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    return c;
}

long read_pgm_int(std::istream& in) {
    int c = next_header_token(in);
    if (c == EOF || !std::isdigit(c)) throw std::runtime_error("truncated");
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        c = in.get();
    }
    if (c != EOF) in.unget();
    return v;
}

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw std::runtime_error("truncated: " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void doubles_to_le(double* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, data + i, 8);
            std::uint64_t r = 0;
            for (int k = 0; k < 8; ++k) r = (r << 8) | ((bits >> (8 * k)) & 0xffULL);
            std::memcpy(data + i, &r, 8);
        }
    } else {
        (void)data;
        (void)count;
    }
}

}  // namespace

Image load_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    char m0 = 0, m1 = 0;
    f.get(m0);
    f.get(m1);
    if (m0 != 'P' || m1 != '5') throw std::runtime_error("bad magic in " + path);
    const long width = read_pgm_int(f);
    const long height = read_pgm_int(f);
    const long maxval = read_pgm_int(f);
    if (maxval < 1 || maxval > 65535)
        throw std::runtime_error("unsupported maxval in " + path);
    f.get();  // single whitespace byte before the raster

    Image img;
    img.width = width;
    img.height = height;
    img.pix.resize(width * height);
    const bool two_byte = maxval > 255;
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<unsigned char> buf(n * (two_byte ? 2 : 1));
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (f.gcount() != static_cast<std::streamsize>(buf.size()))
        throw std::runtime_error("truncated: " + path);
    for (std::size_t i = 0; i < n; ++i) {
        const double raw = two_byte
            ? double((std::uint32_t(buf[2 * i]) << 8) | buf[2 * i + 1])  // big-endian
            : double(buf[i]);
        img.pix[static_cast<Index>(i)] = raw / double(maxval);
    }
    return img;
}

void save_pgm(const std::string& path, const Image& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> buf(static_cast<std::size_t>(img.width * img.height));
    for (Index i = 0; i < img.pix.size(); ++i) {
        const double v = std::clamp(img.pix[i], 0.0, 1.0);
        buf[static_cast<std::size_t>(i)] =
            static_cast<unsigned char>(std::lround(v * 255.0));
    }
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

PatchSet load_mnist_idx(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    const std::uint32_t magic = read_be32(f, path);
    if (magic != 2051)
        throw std::runtime_error("bad magic in " + path + " (expected IDX3 2051, got " +
                                 std::to_string(magic) + ")");
    const std::uint32_t count = read_be32(f, path);
    const std::uint32_t rows = read_be32(f, path);
    const std::uint32_t cols = read_be32(f, path);
    const Index dim = Index(rows) * Index(cols);

    PatchSet set;
    set.data.resize(dim, Index(count));
    std::vector<unsigned char> buf(static_cast<std::size_t>(dim));
    for (std::uint32_t p = 0; p < count; ++p) {
        f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (f.gcount() != static_cast<std::streamsize>(buf.size()))
            throw std::runtime_error("truncated: " + path);
        for (Index i = 0; i < dim; ++i)
            set.data(i, Index(p)) = double(buf[static_cast<std::size_t>(i)]) / 255.0;
    }
    set.provenance = "idx3:" + path;
    if (rows != 28 || cols != 28)
        set.provenance += " [dimension mismatch: " + std::to_string(rows) + "x" +
                          std::to_string(cols) + "]";
    return set;
}

Matrix sample_patches(const Image& img, Index patch_size, Index count,
                      std::uint64_t seed) {
    if (patch_size > img.width || patch_size > img.height)
        throw std::invalid_argument("patch larger than image");
    Rng rng(seed);
    Matrix out(patch_size * patch_size, count);
    const std::uint64_t max_y = static_cast<std::uint64_t>(img.height - patch_size + 1);
    const std::uint64_t max_x = static_cast<std::uint64_t>(img.width - patch_size + 1);
    for (Index p = 0; p < count; ++p) {
        const Index y0 = static_cast<Index>(rng.uniform_index(max_y));
        const Index x0 = static_cast<Index>(rng.uniform_index(max_x));
        Index k = 0;
        for (Index dy = 0; dy < patch_size; ++dy)
            for (Index dx = 0; dx < patch_size; ++dx)
                out(k++, p) = img.at(y0 + dy, x0 + dx);
    }
    return out;
}

PatchTransform split_patch(const Vector& raw, Vector& out) {
    const Index d = raw.size();
    out.resize(2 * d);
    PatchTransform t;
    t.mean = raw.mean();
    Vector v = raw.array() - t.mean;
    t.norm = v.norm();
    if (t.norm <= 1e-12) {
        t.degenerate = true;
        out.setZero();
        return t;
    }
    v /= t.norm;
    out.head(d) = v.cwiseMax(0.0);
    out.tail(d) = (-v).cwiseMax(0.0);
    return t;
}

Vector unsplit_patch(const Vector& y, const PatchTransform& t) {
    const Index d = y.size() / 2;
    if (t.degenerate) return Vector::Constant(d, t.mean);
    Vector v = y.head(d) - y.tail(d);
    return (v * t.norm).array() + t.mean;
}

SplitPatchSet preprocess_split(const Matrix& raw_patches) {
    const Index d = raw_patches.rows();
    SplitPatchSet out;
    out.dropped = 0;
    std::vector<Index> keep;
    Matrix cols(2 * d, raw_patches.cols());
    Vector y;
    for (Index p = 0; p < raw_patches.cols(); ++p) {
        const Vector raw = raw_patches.col(p);
        const PatchTransform t = split_patch(raw, y);
        if (t.degenerate) {
            ++out.dropped;
            continue;
        }
        cols.col(static_cast<Index>(keep.size())) = y;
        keep.push_back(p);
    }
    out.set.data = cols.leftCols(static_cast<Index>(keep.size()));
    out.set.provenance = "split:" + std::to_string(d) + "->" + std::to_string(2 * d);
    return out;
}

Image add_gaussian_noise(const Image& img, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
    Rng rng(seed);
    Image out = img;
    for (Index i = 0; i < out.pix.size(); ++i) {
        const double n = rng.normal();
        out.pix[i] = std::clamp(img.pix[i] + sigma * n, 0.0, 1.0);
    }
    return out;
}

double calibrate_noise_sigma(const Image& img, double target_psnr_db,
                             std::uint64_t seed, double tol) {
    // psnr decreases monotonically in sigma (same noise field throughout).
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double p = psnr(img, add_gaussian_noise(img, mid, seed));
        if (std::abs(p - target_psnr_db) <= tol) return mid;
        if (p > target_psnr_db)
            lo = mid;  // too clean, needs more noise
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

void save_pst(const std::string& path, const PatchSet& set) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "PST1 " << set.count() << " " << set.dim() << "\n";
    std::vector<double> patch(static_cast<std::size_t>(set.dim()));
    for (Index p = 0; p < set.count(); ++p) {
        for (Index i = 0; i < set.dim(); ++i) patch[static_cast<std::size_t>(i)] = set.data(i, p);
        doubles_to_le(patch.data(), patch.size());
        f.write(reinterpret_cast<const char*>(patch.data()),
                static_cast<std::streamsize>(patch.size() * 8));
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

PatchSet load_pst(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    long long count = -1, dim = -1;
    f >> magic >> count >> dim;
    if (magic != "PST1") throw std::runtime_error("bad magic in " + path);
    if (!f || count < 0 || dim < 1) throw std::runtime_error("bad header in " + path);
    f.get();
    PatchSet set;
    set.data.resize(dim, count);
    std::vector<double> patch(static_cast<std::size_t>(dim));
    for (long long p = 0; p < count; ++p) {
        f.read(reinterpret_cast<char*>(patch.data()),
               static_cast<std::streamsize>(patch.size() * 8));
        if (f.gcount() != static_cast<std::streamsize>(patch.size() * 8))
            throw std::runtime_error("truncated: " + path);
        doubles_to_le(patch.data(), patch.size());
        for (long long i = 0; i < dim; ++i) set.data(i, p) = patch[static_cast<std::size_t>(i)];
    }
    set.provenance = "pst1:" + path;
    return set;
}

Image synthetic_scene(Index size, std::uint64_t seed) {
    Rng rng(seed);
    Image img;
    img.width = img.height = size;
    img.pix = Vector::Zero(size * size);

    struct Wave {
        double cx, sx, freq, phase, amp;
    };
    std::vector<Wave> waves;
    for (int k = 0; k < 4; ++k) {
        const double theta = rng.uniform(0.0, 3.14159265358979323846);
        const double cycles = rng.uniform(3.0, 14.0);
        waves.push_back({std::cos(theta), std::sin(theta),
                         2.0 * 3.14159265358979323846 * cycles / double(size),
                         rng.uniform(0.0, 6.28), rng.uniform(0.05, 0.14)});
    }
    struct Disc {
        double cy, cx, r, v;
    };
    std::vector<Disc> discs;
    for (int k = 0; k < 5; ++k) {
        discs.push_back({rng.uniform(0.0, double(size)), rng.uniform(0.0, double(size)),
                         rng.uniform(double(size) / 16.0, double(size) / 5.0),
                         rng.uniform(-0.25, 0.25)});
    }

    for (Index y = 0; y < size; ++y) {
        for (Index x = 0; x < size; ++x) {
            double v = 0.45 + 0.15 * (double(x) + double(y)) / (2.0 * double(size));
            for (const auto& w : waves)
                v += w.amp * std::sin(w.freq * (w.cx * double(x) + w.sx * double(y)) + w.phase);
            for (const auto& d : discs) {
                const double dy = double(y) - d.cy, dx = double(x) - d.cx;
                if (dy * dy + dx * dx < d.r * d.r) v += d.v;
            }
            img.at(y, x) = std::clamp(v, 0.0, 1.0);
        }
    }
    return img;
}

}  // namespace spikedict
