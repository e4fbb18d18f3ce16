#pragma once

#include "spikedict/engine.hpp"
#include "spikedict/types.hpp"

namespace spikedict {

struct CodingResult {
    Vector a;
    PhaseSnapshot snap;
};

/// Runs a fresh network on x for one phase at the given gamma and returns the
/// measured code (the coding-layer spike rates).
CodingResult sparse_code(const NetworkWeights& w, const Vector& x, double T,
                         double dt, double gamma, double current_bound = 100.0,
                         int threads = 1);

/// Support of a measured code: one spike above the noise floor,
/// {i : a_i > 1.5 / T}.
std::vector<Index> code_support(const Vector& a, double T);

struct PerturbationReport {
    Vector a_net;
    Vector a_oracle;
    double gap_linf = 0.0;          // ||a_net - a_oracle||_inf
    double s_shift_linf = 0.0;      // ||s - s_tilde||_inf
    double min_s = 0.0;
    bool s_condition_ok = false;    // s_shift_linf < min(s)/2
    double precondition_lhs = 0.0;  // 4 * ||delta_H||_rowsum * ||a_net||_inf
    double oracle_kkt_gap = 0.0;
};

/// Runs the network with H = D^T D + lambda1*(1-gamma)*delta_H, derives the
/// implied rescaled weighting s_tilde = s - delta_H * a, solves the coding
/// problem with s_tilde through the coordinate-descent solver, and reports
/// the code gap plus whether the rescaling stayed within min(s)/2.
/// Throws "perturbation too large" when the smallness precondition
/// 4*||delta_H||*||a||_inf < min(s) fails (checked against the measured
/// rates) or when the perturbed thresholds stop being positive.
PerturbationReport verify_perturbation(const Dictionary& d, const Matrix& delta_H,
                                       double gamma, const Vector& x,
                                       const RunConfig& cfg);

}  // namespace spikedict
