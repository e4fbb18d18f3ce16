#include "spikedict/learning.hpp"

#include <cmath>
#include <stdexcept>

#include "spikedict/engine.hpp"
#include "spikedict/metrics.hpp"
#include "spikedict/oracle.hpp"

namespace spikedict {

ContrastivePair contrastive_run(const NetworkWeights& w, const Vector& x,
                                const RunConfig& cfg) {
    NetworkSim sim(w, x, cfg.avg_reset, cfg.current_bound, cfg.threads);
    ContrastivePair pair;
    pair.snap0 = sim.run_phase(0.0, cfg.T_phase, cfg.dt);
    pair.snapK = sim.run_phase(cfg.kappa, cfg.T_phase, cfg.dt);
    pair.kappa = cfg.kappa;
    return pair;
}

double local_g_D_entry(double b0_i, double bK_i) { return bK_i - b0_i; }

double local_g_H_entry(const Vector& H_row_i, const Vector& a0, const Vector& aK,
                       double e0_i, double eK_i, double kappa) {
    const double kbar = 1.0 - kappa;
    double acc = 0.0;
    for (Index j = 0; j < H_row_i.size(); ++j) acc += H_row_i[j] * (a0[j] - aK[j]);
    return kbar * acc + (kbar * e0_i - eK_i);
}

Vector local_F_row_update(const Vector& F_row_i, double aK_i, const Vector& g_D,
                          double kappa, double eta_D, double lambda2, bool project) {
    const double inv_kappa = 1.0 / kappa;
    Vector out(F_row_i.size());
    for (Index j = 0; j < F_row_i.size(); ++j) {
        const double grad = inv_kappa * (aK_i * g_D[j]);
        double v = F_row_i[j] - eta_D * (grad + lambda2 * F_row_i[j]);
        if (project && v < 0.0) v = 0.0;
        out[j] = v;
    }
    return out;
}

Vector local_B_row_update(const Vector& B_row_i, double gD_i, const Vector& aK,
                          double kappa, double eta_D, double lambda2, bool project) {
    const double inv_kappa = 1.0 / kappa;
    Vector out(B_row_i.size());
    for (Index j = 0; j < B_row_i.size(); ++j) {
        const double grad = inv_kappa * (aK[j] * gD_i);
        double v = B_row_i[j] - eta_D * (grad + lambda2 * B_row_i[j]);
        if (project && v < 0.0) v = 0.0;
        out[j] = v;
    }
    return out;
}

Vector local_H_row_update(const Vector& H_row_i, Index i, double gH_i, const Vector& aK,
                          double kappa, double eta_H, double eta_D, double lambda2,
                          bool project, double theta_floor) {
    const double inv_kappa = 1.0 / kappa;
    const double decay = 2.0 * eta_D * lambda2;
    Vector out(H_row_i.size());
    for (Index j = 0; j < H_row_i.size(); ++j) {
        const double catch_up = eta_H * (inv_kappa * (gH_i * aK[j]));
        double v = H_row_i[j] - catch_up - decay * H_row_i[j];
        if (j == i) {
            if (v < theta_floor) v = theta_floor;
        } else if (project && v < 0.0) {
            v = 0.0;
        }
        out[j] = v;
    }
    return out;
}

Gradients extract_gradients(const ContrastivePair& pair, const NetworkWeights& w) {
    const Index n = w.coding_count();
    const Index m = w.input_count();
    Gradients g;
    g.g_D.resize(m);
    for (Index i = 0; i < m; ++i)
        g.g_D[i] = local_g_D_entry(pair.snap0.b[i], pair.snapK.b[i]);
    g.g_H.resize(n);
    for (Index i = 0; i < n; ++i)
        g.g_H[i] = local_g_H_entry(w.H.row(i), pair.snap0.a, pair.snapK.a,
                                   pair.snap0.e[i], pair.snapK.e[i], pair.kappa);
    return g;
}

void update_FB(NetworkWeights& w, const ContrastivePair& pair, const Gradients& g,
               const RunConfig& cfg) {
    const Index n = w.coding_count();
    const Index m = w.input_count();
    const Vector& aK = pair.snapK.a;
    for (Index i = 0; i < n; ++i)
        w.F.row(i) = local_F_row_update(w.F.row(i), aK[i], g.g_D, pair.kappa,
                                        cfg.eta_D, cfg.lambda2, cfg.project_weights);
    for (Index i = 0; i < m; ++i)
        w.B.row(i) = local_B_row_update(w.B.row(i), g.g_D[i], aK, pair.kappa,
                                        cfg.eta_D, cfg.lambda2, cfg.project_weights);
}

void update_H(NetworkWeights& w, const ContrastivePair& pair, const Gradients& g,
              const RunConfig& cfg) {
    const Index n = w.coding_count();
    const Vector& aK = pair.snapK.a;
    for (Index i = 0; i < n; ++i)
        w.H.row(i) = local_H_row_update(w.H.row(i), i, g.g_H[i], aK, pair.kappa,
                                        cfg.eta_H, cfg.eta_D, cfg.lambda2,
                                        cfg.project_weights, cfg.theta_floor);
}

void scaling_update(NetworkWeights& w) {
    for (Index i = 0; i < w.coding_count(); ++i)
        if (!(w.H(i, i) > 0.0))
            throw std::runtime_error("threshold underflow at index " + std::to_string(i));
    w.s = w.H.diagonal();
}

NetworkWeights init_weights(const RunConfig& cfg, Index input_dim, Rng& rng) {
    const Index n = cfg.n_atoms;
    const Index m = input_dim;
    if (cfg.init_scheme == InitScheme::consistent) {
        const Dictionary d = random_unit_dictionary(m, n, rng);
        return weights_from_dictionary(d, cfg.lambda1, 0.0);
    }
    NetworkWeights w;
    w.F = random_unit_dictionary(m, n, rng).atoms.transpose();
    w.B = random_unit_dictionary(m, n, rng).atoms;
    w.H.resize(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            w.H(i, j) = (i == j) ? 1.5 : rng.uniform(0.0, 1.5);
    w.s = Vector::Ones(n);
    w.lambda1 = cfg.lambda1;
    w.gamma = 0.0;
    return w;
}

double calibrate_lambda2(const Matrix& D, const PatchSet& dataset, const RunConfig& cfg) {
    Rng rng(Rng::mix(cfg.seed, 4));
    const Index samples = std::min<Index>(100, dataset.count());
    const NnLassoSolver solver(D);
    const Vector ones = Vector::Ones(D.cols());
    double coeff_sum = 0.0;
    for (Index k = 0; k < samples; ++k) {
        const Index pick = static_cast<Index>(
            rng.uniform_index(static_cast<std::uint64_t>(dataset.count())));
        coeff_sum += solver.solve(dataset.data.col(pick), ones, cfg.lambda1, 1e-8, 100000).a.sum();
    }
    const double mean_coeff =
        coeff_sum / (static_cast<double>(samples) * static_cast<double>(D.cols()));
    return cfg.lambda1 * mean_coeff;
}

TrainResult train(const PatchSet& dataset, const RunConfig& cfg,
                  const PatchSet* testset, const MetricsHook& hook) {
    if (dataset.count() < 1) throw std::invalid_argument("empty dataset");
    const auto issues = cfg.validate();
    if (!issues.empty()) throw std::invalid_argument("bad config: " + issues.front());

    Rng rng_init(Rng::mix(cfg.seed, 1));
    Rng rng_sample(Rng::mix(cfg.seed, 2));

    TrainResult result;
    result.weights = init_weights(cfg, dataset.dim(), rng_init);
    NetworkWeights& w = result.weights;

    RunConfig eff = cfg;
    eff.lambda2 = cfg.lambda2 >= 0.0 ? cfg.lambda2 : calibrate_lambda2(w.B, dataset, cfg);
    result.lambda2_used = eff.lambda2;

    auto emit = [&](long iter, const ContrastivePair* pair, const Vector* x,
                    const Gradients* grads) {
        MetricsRecord rec;
        rec.iteration = iter;
        rec.objective = (pair && x)
            ? objective(w.B, *x, pair->snap0.a, eff.lambda1, w.s, eff.lambda2)
            : std::nan("");
        rec.surrogate = testset ? surrogate_objective(Matrix(w.F.transpose()), *testset,
                                                      eff.lambda1, 1e-8, eff.threads)
                                : std::nan("");
        rec.consistency = consistency(w.H, w.F, w.B);
        rec.symmetry = symmetry(w.F, w.B);
        double norm_sum = 0.0;
        for (Index i = 0; i < w.coding_count(); ++i) norm_sum += w.F.row(i).norm();
        rec.mean_atom_norm = norm_sum / static_cast<double>(w.coding_count());
        rec.max_abs_current = pair ? std::max(pair->snap0.max_abs_current,
                                              pair->snapK.max_abs_current)
                                   : 0.0;
        rec.g_h_norm = (pair && grads)
            ? (1.0 / pair->kappa) * grads->g_H.norm() * pair->snapK.a.norm()
            : 0.0;
        rec.max_s = w.s.maxCoeff();
        result.log.push_back(rec);
        if (hook) hook(iter, w, rec);
    };

    emit(0, nullptr, nullptr, nullptr);
    for (long iter = 1; iter <= cfg.iterations; ++iter) {
        const Index pick = static_cast<Index>(
            rng_sample.uniform_index(static_cast<std::uint64_t>(dataset.count())));
        const Vector x = dataset.data.col(pick);

        ContrastivePair pair;
        try {
            pair = contrastive_run(w, x, eff);
        } catch (const EngineAbort& e) {
            result.aborted = true;
            result.abort_reason = e.what();
            result.completed_iterations = iter - 1;
            return result;
        }
        const Gradients grads = extract_gradients(pair, w);
        update_FB(w, pair, grads, eff);
        update_H(w, pair, grads, eff);
        scaling_update(w);

        if (iter % cfg.metrics_every == 0 || iter == cfg.iterations)
            emit(iter, &pair, &x, &grads);
    }
    result.completed_iterations = cfg.iterations;
    return result;
}

}  // namespace spikedict
