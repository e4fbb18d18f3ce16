#pragma once

#include <string>
#include <vector>

#include "spikedict/data_io.hpp"
#include "spikedict/types.hpp"

namespace spikedict {

/// Weight consistency, 1 - ||H - F B||_F / ||H||_F. Throws on ||H||_F = 0.
double consistency(const Matrix& H, const Matrix& F, const Matrix& B);

/// Average normalized inner product between row i of F and column i of B.
/// Pairs where either side is zero contribute 0.
double symmetry(const Matrix& F, const Matrix& B);

/// 10*log10(1/MSE) with peak fixed at 1.0; +infinity when the images are
/// identical. Throws on dimension mismatch.
double psnr(const Image& clean, const Image& test);

struct DenoiseOptions {
    double lambda1 = 0.1;
    Index stride = 1;
    int threads = 1;
    bool use_network = false;  // default coder is the coordinate-descent oracle
    double T = 200.0;          // network coder phase length
    double dt = 1.0 / 32.0;
    double current_bound = 100.0;
    double oracle_tol = 1e-8;
};

struct DenoiseResult {
    Image image;
    double mean_l0 = 0.0;  // mean nonzero coefficients per patch
    Index patches = 0;
};

/// Sliding-window denoising: every stride-offset patch is preprocessed the
/// same way training patches are, sparse coded, reconstructed, mapped back to
/// pixel space and averaged into the output over all overlaps. Works with
/// split-channel weights (input dim 2*p^2) or plain ones (p^2).
DenoiseResult denoise(const NetworkWeights& w, const Image& noisy, Index patch_size,
                      const DenoiseOptions& opt = {});

/// Tiles atoms into one grayscale grid, each atom min-max normalized to
/// [0,1]. Split-channel atoms (rows == 2*tile area) are recombined as
/// pos - neg first.
Image dictionary_atlas(const Matrix& D, Index tile_h, Index tile_w);

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& log);
std::string metrics_csv_string(const std::vector<MetricsRecord>& log);
void write_metrics_jsonl(const std::string& path, const std::vector<MetricsRecord>& log);

/// Static SVG line chart of the logged convergence curves.
void write_convergence_svg(const std::string& path, const std::vector<MetricsRecord>& log);

}  // namespace spikedict
