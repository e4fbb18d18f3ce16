#pragma once

#include "spikedict/data_io.hpp"
#include "spikedict/types.hpp"

namespace spikedict {

/// One non-negative weighted-l1 sparse coding instance:
/// minimize 0.5*||x - D a||^2 + lambda * ||S a||_1 over a >= 0.
struct LassoProblem {
    Matrix D;       // pixels x atoms
    Vector x;       // pixels, >= 0
    double lambda;  // > 0
    Vector s;       // atoms, > 0
};

struct LassoSolution {
    Vector a;
    double kkt_gap = 0.0;  // max of positive-part stationarity and complementarity
    long sweeps = 0;
    bool converged = false;
};

/// Cyclic coordinate minimization with the closed-form non-negative
/// soft-threshold per coordinate. Precomputes the Gram matrix once, so one
/// instance can code many inputs against the same dictionary.
class NnLassoSolver {
public:
    explicit NnLassoSolver(Matrix dictionary);

    /// max_sweeps <= 0 selects the default of 10 * atom_count full sweeps.
    /// A non-converged result carries the best iterate and converged=false.
    LassoSolution solve(const Vector& x, const Vector& s, double lambda,
                        double tol = 1e-8, long max_sweeps = 0) const;

    const Matrix& dictionary() const { return d_; }

private:
    Matrix d_;
    Matrix gram_;
};

LassoSolution solve_nn_lasso(const LassoProblem& p, double tol = 1e-8,
                             long max_sweeps = 0);

/// The per-sample learning objective
/// 0.5*||x - D a||^2 + lambda1*||S a||_1 + 0.5*lambda2*||D||_F^2.
double objective(const Matrix& D, const Vector& x, const Vector& a,
                 double lambda1, const Vector& s, double lambda2);

/// Mean test-set coding cost 0.5*||x - D a*||^2 + lambda1*||a*||_1 with unit
/// scaling (s = 1) and the lambda2 term excluded; the one fixed definition
/// every method is compared under. Throws if the solver fails to converge on
/// any sample.
double surrogate_objective(const Matrix& D, const PatchSet& testset,
                           double lambda1, double tol = 1e-8, int threads = 1);

struct SgdResult {
    Matrix D;
    std::vector<MetricsRecord> log;
};

/// Online gradient-descent dictionary learning baseline: sample, code with
/// the coordinate-descent solver, take a reconstruction gradient step,
/// project to the non-negative quadrant and renormalize every atom to unit
/// norm (dead atoms are re-randomized). Uses cfg.eta_D, cfg.lambda1,
/// cfg.iterations, cfg.metrics_every, cfg.seed, cfg.n_atoms, cfg.threads.
SgdResult sgd_train(const PatchSet& dataset, const RunConfig& cfg,
                    const PatchSet* testset = nullptr);

}  // namespace spikedict
