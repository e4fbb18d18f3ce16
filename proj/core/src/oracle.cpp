#include "spikedict/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spikedict/parallel.hpp"
#include "spikedict/rng.hpp"

namespace spikedict {

// Sweep budget for internal callers that must converge. Coherent
// dictionaries occasionally need a few hundred sweeps for tight tolerances;
// sweeps are cheap (one N^2 pass).
constexpr long kDeepSweepBudget = 100000;

NnLassoSolver::NnLassoSolver(Matrix dictionary)
    : d_(std::move(dictionary)), gram_(d_.transpose() * d_) {}

LassoSolution NnLassoSolver::solve(const Vector& x, const Vector& s, double lambda,
                                   double tol, long max_sweeps) const {
    const Index n = d_.cols();
    if (x.size() != d_.rows()) throw std::invalid_argument("x dimension mismatch");
    if (s.size() != n) throw std::invalid_argument("s dimension mismatch");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (max_sweeps <= 0) max_sweeps = 10 * static_cast<long>(n);

    const Vector c = d_.transpose() * x;
    LassoSolution sol;
    sol.a = Vector::Zero(n);
    Vector r = Vector::Zero(n);  // gram_ * a, maintained incrementally

    for (long sweep = 1; sweep <= max_sweeps; ++sweep) {
        for (Index i = 0; i < n; ++i) {
            const double gii = gram_(i, i);
            if (gii <= 0.0) continue;  // zero atom, a_i stays 0
            const double excl = r[i] - gii * sol.a[i];  // sum_{j != i} G_ij a_j
            const double ai = std::max(0.0, (c[i] - lambda * s[i] - excl) / gii);
            const double delta = ai - sol.a[i];
            if (delta != 0.0) {
                r += delta * gram_.col(i);
                sol.a[i] = ai;
            }
        }
        // Exact residual for the KKT gap; also resets incremental drift.
        r = gram_ * sol.a;
        const Vector q = c - lambda * s - r;
        double gap = 0.0;
        for (Index i = 0; i < n; ++i) {
            gap = std::max(gap, std::max(q[i], 0.0));
            gap = std::max(gap, std::abs(sol.a[i] * q[i]));
        }
        sol.kkt_gap = gap;
        sol.sweeps = sweep;
        if (gap <= tol) {
            sol.converged = true;
            break;
        }
    }
    return sol;
}

LassoSolution solve_nn_lasso(const LassoProblem& p, double tol, long max_sweeps) {
    return NnLassoSolver(p.D).solve(p.x, p.s, p.lambda, tol, max_sweeps);
}

double objective(const Matrix& D, const Vector& x, const Vector& a,
                 double lambda1, const Vector& s, double lambda2) {
    if (D.rows() != x.size() || D.cols() != a.size() || s.size() != a.size())
        throw std::invalid_argument("objective: dimension mismatch");
    const double fit = 0.5 * (x - D * a).squaredNorm();
    const double l1 = lambda1 * s.cwiseProduct(a.cwiseAbs()).sum();
    const double decay = 0.5 * lambda2 * D.squaredNorm();
    return fit + l1 + decay;
}

double surrogate_objective(const Matrix& D, const PatchSet& testset,
                           double lambda1, double tol, int threads) {
    if (testset.count() < 1) throw std::invalid_argument("empty test set");
    if (testset.dim() != D.rows()) throw std::invalid_argument("test set dimension mismatch");
    const NnLassoSolver solver(D);
    const Vector ones = Vector::Ones(D.cols());
    std::vector<double> cost(static_cast<std::size_t>(testset.count()), 0.0);
    std::vector<char> ok(static_cast<std::size_t>(testset.count()), 1);
    parallel_for(testset.count(), threads, [&](Index begin, Index end) {
        for (Index p = begin; p < end; ++p) {
            const Vector x = testset.data.col(p);
            const LassoSolution sol = solver.solve(x, ones, lambda1, tol, kDeepSweepBudget);
            ok[static_cast<std::size_t>(p)] = sol.converged ? 1 : 0;
            cost[static_cast<std::size_t>(p)] =
                0.5 * (x - D * sol.a).squaredNorm() + lambda1 * sol.a.sum();
        }
    });
    for (std::size_t p = 0; p < ok.size(); ++p)
        if (!ok[p])
            throw std::runtime_error("surrogate: solver not converged on sample " +
                                     std::to_string(p));
    double total = 0.0;
    for (double v : cost) total += v;  // fixed order, independent of threads
    return total / static_cast<double>(testset.count());
}

SgdResult sgd_train(const PatchSet& dataset, const RunConfig& cfg,
                    const PatchSet* testset) {
    if (dataset.count() < 1) throw std::invalid_argument("empty dataset");
    const auto issues = cfg.validate();
    if (!issues.empty()) throw std::invalid_argument("bad config: " + issues.front());

    const Index m = dataset.dim();
    const Index n = cfg.n_atoms;
    Rng rng_init(Rng::mix(cfg.seed, 1));
    Rng rng_sample(Rng::mix(cfg.seed, 2));
    Rng rng_dead(Rng::mix(cfg.seed, 3));

    SgdResult out;
    out.D = random_unit_dictionary(m, n, rng_init).atoms;
    const Vector unit_s = Vector::Ones(n);

    auto record = [&](long iter, double obj) {
        MetricsRecord rec;
        rec.iteration = iter;
        rec.objective = obj;
        rec.surrogate = testset ? surrogate_objective(out.D, *testset, cfg.lambda1,
                                                      1e-8, cfg.threads)
                                : std::nan("");
        rec.consistency = 1.0;  // D is global, H = F B holds by construction
        rec.symmetry = 1.0;
        double norm_sum = 0.0;
        for (Index j = 0; j < n; ++j) norm_sum += out.D.col(j).norm();
        rec.mean_atom_norm = norm_sum / static_cast<double>(n);
        rec.max_abs_current = 0.0;
        rec.g_h_norm = 0.0;
        rec.max_s = 1.0;
        out.log.push_back(rec);
    };

    record(0, std::nan(""));
    for (long iter = 1; iter <= cfg.iterations; ++iter) {
        const Index pick = static_cast<Index>(
            rng_sample.uniform_index(static_cast<std::uint64_t>(dataset.count())));
        const Vector x = dataset.data.col(pick);

        const NnLassoSolver solver(out.D);
        const LassoSolution sol = solver.solve(x, unit_s, cfg.lambda1, 1e-8, kDeepSweepBudget);
        if (!sol.converged)
            throw std::runtime_error("sgd_train: solver not converged at iteration " +
                                     std::to_string(iter));

        const Vector residual = out.D * sol.a - x;
        out.D.noalias() -= cfg.eta_D * (residual * sol.a.transpose());
        out.D = out.D.cwiseMax(0.0);
        for (Index j = 0; j < n; ++j) {
            const double nj = out.D.col(j).norm();
            if (nj < 1e-9) {
                // dead atom: replace with a fresh random unit direction
                for (Index i = 0; i < m; ++i) out.D(i, j) = rng_dead.uniform();
                out.D.col(j) /= out.D.col(j).norm();
            } else {
                out.D.col(j) /= nj;
            }
        }

        if (iter % cfg.metrics_every == 0 || iter == cfg.iterations)
            record(iter, objective(out.D, x, sol.a, cfg.lambda1, unit_s, 0.0));
    }
    return out;
}

}  // namespace spikedict
