#pragma once

#include <cstdint>
#include <string>

#include "spikedict/types.hpp"

namespace spikedict {

/// Grayscale image, row-major, values in [0,1].
struct Image {
    Index width = 0;
    Index height = 0;
    Vector pix;  // height * width entries, row-major

    double& at(Index y, Index x) { return pix[y * width + x]; }
    double at(Index y, Index x) const { return pix[y * width + x]; }
};

/// Set of non-negative training vectors, one per column.
struct PatchSet {
    Matrix data;             // dim x count
    std::string provenance;  // source descriptor (file, patch size, seed)

    Index dim() const { return data.rows(); }
    Index count() const { return data.cols(); }
};

/// Binary PGM ("P5") reader; pixel values are divided by maxval.
/// Throws: "bad magic", "truncated", "unsupported maxval".
Image load_pgm(const std::string& path);

/// Writes a binary PGM with maxval 255. Values are clamped to [0,1].
void save_pgm(const std::string& path, const Image& img);

/// IDX3 image file reader (big-endian magic 2051). Images are flattened
/// row-major and scaled by 1/255. A rows/cols other than 28x28 is flagged in
/// the provenance string, not fatal.
PatchSet load_mnist_idx(const std::string& path);

/// Uniformly random patches (top-left corners from the seeded RNG), returned
/// raw and signed, one patch per column in row-major pixel order.
Matrix sample_patches(const Image& img, Index patch_size, Index count,
                      std::uint64_t seed);

/// Centering/normalization/splitting of one raw patch. `mean` and `norm` are
/// what the inverse needs; `degenerate` marks patches with zero norm after
/// centering (output is all zeros in that case).
struct PatchTransform {
    double mean = 0.0;
    double norm = 0.0;
    bool degenerate = false;
};

/// out must have size 2 * raw.size(): out = [max(v,0); max(-v,0)] where
/// v = (raw - mean) / ||raw - mean||.
PatchTransform split_patch(const Vector& raw, Vector& out);

/// Inverse of split_patch: recombines channels as pos - neg, rescales by the
/// stored norm and re-adds the mean.
Vector unsplit_patch(const Vector& y, const PatchTransform& t);

struct SplitPatchSet {
    PatchSet set;     // dim doubles: 2 * p^2
    Index dropped;    // degenerate (constant) patches removed
};

/// Applies split_patch to every column, dropping degenerate patches.
SplitPatchSet preprocess_split(const Matrix& raw_patches);

/// Adds clamped pixel-wise N(0, sigma^2) noise from the seeded RNG.
Image add_gaussian_noise(const Image& img, double sigma, std::uint64_t seed);

/// Bisects sigma until psnr(img, noisy(sigma)) is within `tol` of
/// target_psnr_db (same seed for every probe, so the search is monotone).
double calibrate_noise_sigma(const Image& img, double target_psnr_db,
                             std::uint64_t seed, double tol = 0.01);

/// PST1 patch cache: ASCII header "PST1 <count> <dim>\n" followed by
/// count*dim little-endian doubles, one patch after another.
void save_pst(const std::string& path, const PatchSet& set);
PatchSet load_pst(const std::string& path);

/// Deterministic synthetic grayscale scene (oriented waves, a few flat
/// discs, a gentle ramp). Stands in for a natural test image in demos and
/// tests; the statistics are patch-learnable.
Image synthetic_scene(Index size, std::uint64_t seed);

}  // namespace spikedict
