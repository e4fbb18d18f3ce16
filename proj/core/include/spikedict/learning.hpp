#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spikedict/data_io.hpp"
#include "spikedict/types.hpp"

namespace spikedict {

/// The two limiting-state snapshots of one contrastive run.
struct ContrastivePair {
    PhaseSnapshot snap0;  // gamma = 0
    PhaseSnapshot snapK;  // gamma = kappa
    double kappa = 0.0;
};

struct Gradients {
    Vector g_D;  // input layer, length M: rate difference b_K - b_0
    Vector g_H;  // coding layer, length N: consistency correction direction
};

/// One simulation, two consecutive phases (gamma = 0 then gamma = kappa) with
/// neuron state preserved across the boundary.
ContrastivePair contrastive_run(const NetworkWeights& w, const Vector& x,
                                const RunConfig& cfg);

/// g_D = snapK.b - snap0.b;
/// g_H = (1-kappa) * H * (snap0.a - snapK.a) + ((1-kappa)*snap0.e - snapK.e).
/// Entry i of either vector depends only on neuron i's own measurements, its
/// stored row of H, and rates it receives.
Gradients extract_gradients(const ContrastivePair& pair, const NetworkWeights& w);

/// F_ij -= eta_D * (kappa^-1 * aK_i * gD_j + lambda2 * F_ij), B transposed
/// likewise, then projection onto the non-negative quadrant (when
/// cfg.project_weights). The gradient term for F(i,j) and B(j,i) is computed
/// with identical operation order, so F^T = B is preserved bit-exactly.
void update_FB(NetworkWeights& w, const ContrastivePair& pair, const Gradients& g,
               const RunConfig& cfg);

/// H_ij -= eta_H * kappa^-1 * gH_i * aK_j + 2*eta_D*lambda2*H_ij; then
/// off-diagonals are projected to >= 0 (when cfg.project_weights) and the
/// diagonal is floored at cfg.theta_floor (always; thresholds must stay
/// positive for the neuron model to be defined).
void update_H(NetworkWeights& w, const ContrastivePair& pair, const Gradients& g,
              const RunConfig& cfg);

/// s <- diag(H). Throws "threshold underflow" if any H_ii <= 0 survived.
void scaling_update(NetworkWeights& w);

// Per-neuron recomputation of the updates from strictly local views. These
// mirror the arithmetic of update_FB / update_H / extract_gradients entry for
// entry and exist so tests can audit that the matrix-level implementations
// never read anything a neuron does not store or observe.
double local_g_D_entry(double b0_i, double bK_i);
double local_g_H_entry(const Vector& H_row_i, const Vector& a0, const Vector& aK,
                       double e0_i, double eK_i, double kappa);
Vector local_F_row_update(const Vector& F_row_i, double aK_i, const Vector& g_D,
                          double kappa, double eta_D, double lambda2, bool project);
Vector local_B_row_update(const Vector& B_row_i, double gD_i, const Vector& aK,
                          double kappa, double eta_D, double lambda2, bool project);
Vector local_H_row_update(const Vector& H_row_i, Index i, double gH_i, const Vector& aK,
                          double kappa, double eta_H, double eta_D, double lambda2,
                          bool project, double theta_floor);

/// Initial weights for a training run. `consistent` builds fully consistent
/// weights from a random unit-column dictionary; `asymmetric` draws F^T and B
/// as independent column-normalized random matrices and fills H with uniform
/// [0,1.5) off-diagonals and a 1.5 diagonal.
NetworkWeights init_weights(const RunConfig& cfg, Index input_dim, Rng& rng);

/// lambda1 * mean coefficient of oracle codes on a small presample; the decay
/// strength at which atom norms neither grow nor shrink to first order.
double calibrate_lambda2(const Matrix& D, const PatchSet& dataset, const RunConfig& cfg);

struct TrainResult {
    NetworkWeights weights;
    std::vector<MetricsRecord> log;
    bool aborted = false;
    std::string abort_reason;
    long completed_iterations = 0;
    double lambda2_used = 0.0;
};

using MetricsHook =
    std::function<void(long iteration, const NetworkWeights&, const MetricsRecord&)>;

/// Algorithm: sample an image, contrastive run, extract gradients, update
/// F/B/H, project, refresh the scaling vector; metrics every
/// cfg.metrics_every iterations (plus iteration 0 and the final one). On a
/// current-bound abort the result carries the last consistent weights and
/// aborted = true.
TrainResult train(const PatchSet& dataset, const RunConfig& cfg,
                  const PatchSet* testset = nullptr, const MetricsHook& hook = {});

}  // namespace spikedict
