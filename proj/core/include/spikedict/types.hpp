#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spikedict/rng.hpp"

namespace spikedict {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Non-negative dictionary of atoms, one atom per column.
struct Dictionary {
    Matrix atoms;  // pixel_count x atom_count, entries >= 0

    Index pixel_count() const { return atoms.rows(); }
    Index atom_count() const { return atoms.cols(); }
};

/// Random non-negative dictionary with unit-norm columns.
/// Entries are drawn uniform [0,1) column by column, then each column is
/// scaled to unit Euclidean norm.
Dictionary random_unit_dictionary(Index pixels, Index atoms, Rng& rng);

/// The distributed weight encoding of one two-layer network.
///
/// F (coding rows) carries feedforward weights, B (input rows) feedback
/// weights, and H combines lateral inhibition with the firing thresholds:
/// the lateral weight from coding neuron j to i is -H(i,j), the threshold of
/// coding neuron i is H(i,i). Thresholds are stored only as diag(H).
struct NetworkWeights {
    Matrix F;             // n_coding x n_input, >= 0
    Matrix B;             // n_input x n_coding, >= 0
    Matrix H;             // n_coding x n_coding, positive diagonal
    Vector s;             // n_coding, positive l1 scaling
    double lambda1 = 0.1; // sparsity weight, > 0
    double gamma = 0.0;   // feedback strength, in [0,1)

    Index coding_count() const { return F.rows(); }
    Index input_count() const { return F.cols(); }
    Vector thresholds() const { return H.diagonal(); }
};

/// Checks every NetworkWeights invariant; returns one message per violation
/// (with indices), empty when the weights are valid. Total function.
std::vector<std::string> validate(const NetworkWeights& w);

/// Fully consistent configuration for a dictionary: F = D^T, B = D,
/// H = D^T D, s = 1. Rejects dictionaries with a zero atom, which would
/// produce a zero firing threshold.
NetworkWeights weights_from_dictionary(const Dictionary& d, double lambda1,
                                       double gamma);

/// Per-phase limiting states: average spike rates and currents over the
/// measuring window, plus the derived slack vectors e = u - diag(H) .* a and
/// f = v - b.
struct PhaseSnapshot {
    Vector a;  // coding spike rates, >= 0
    Vector b;  // input spike rates, >= 0
    Vector u;  // coding average currents
    Vector v;  // input average currents
    Vector e;  // u - diag(H) .* a
    Vector f;  // v - b
    double gamma_used = 0.0;
    double window_begin = 0.0;
    double window_end = 0.0;
    double max_abs_current = 0.0;  // diagnostic: max |mu| seen in the window
};

enum class InitScheme { consistent, asymmetric };
enum class AvgReset { reset_at_phase, cumulative };

/// All simulation and learning hyperparameters for one run.
struct RunConfig {
    double dt = 1.0 / 32.0;
    double T_phase = 20.0;
    double kappa = 0.7;
    double eta_D = 0.01;
    double eta_H = 0.15;       // default 15 * eta_D
    double lambda1 = 0.1;
    double lambda2 = -1.0;     // < 0 means calibrate from a short pre-run
    Index n_atoms = 64;
    std::uint64_t seed = 1;
    InitScheme init_scheme = InitScheme::consistent;
    double current_bound = 100.0;
    double theta_floor = 1e-3;
    AvgReset avg_reset = AvgReset::reset_at_phase;

    // run-control knobs
    long iterations = 2000;
    long metrics_every = 50;
    int threads = 1;
    bool project_weights = true;

    /// Returns one message per violated invariant, empty when valid.
    std::vector<std::string> validate() const;
};

/// One row of the shared metrics log (train-snn and train-sgd emit the same
/// schema so convergence curves are directly comparable).
struct MetricsRecord {
    long iteration = 0;
    double objective = 0.0;        // per-sample learning objective
    double surrogate = 0.0;        // test-set surrogate objective (NaN if none)
    double consistency = 1.0;
    double symmetry = 1.0;
    double mean_atom_norm = 0.0;
    double max_abs_current = 0.0;
    double g_h_norm = 0.0;         // ||G||_F of the catch-up correction
    double max_s = 0.0;            // observed max of the scaling vector
};

}  // namespace spikedict
