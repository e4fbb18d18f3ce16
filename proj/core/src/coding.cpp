#include "spikedict/coding.hpp"

#include <cmath>
#include <stdexcept>

#include "spikedict/oracle.hpp"

namespace spikedict {

CodingResult sparse_code(const NetworkWeights& w, const Vector& x, double T,
                         double dt, double gamma, double current_bound,
                         int threads) {
    NetworkSim sim(w, x, AvgReset::reset_at_phase, current_bound, threads);
    PhaseSnapshot snap = sim.run_phase(gamma, T, dt);
    Vector a = snap.a;
    return CodingResult{std::move(a), std::move(snap)};
}

std::vector<Index> code_support(const Vector& a, double T) {
    std::vector<Index> out;
    const double eps = 1.5 / T;
    for (Index i = 0; i < a.size(); ++i)
        if (a[i] > eps) out.push_back(i);
    return out;
}

PerturbationReport verify_perturbation(const Dictionary& d, const Matrix& delta_H,
                                       double gamma, const Vector& x,
                                       const RunConfig& cfg) {
    const Index n = d.atom_count();
    if (delta_H.rows() != n || delta_H.cols() != n)
        throw std::invalid_argument("delta_H must be atom_count x atom_count");

    NetworkWeights w = weights_from_dictionary(d, cfg.lambda1, gamma);
    w.H += cfg.lambda1 * (1.0 - gamma) * delta_H;
    for (Index i = 0; i < n; ++i)
        if (!(w.H(i, i) > 0.0))
            throw std::invalid_argument("perturbation too large: threshold " +
                                        std::to_string(i) + " is not positive");

    PerturbationReport rep;
    rep.min_s = w.s.minCoeff();

    const CodingResult net =
        sparse_code(w, x, cfg.T_phase, cfg.dt, gamma, cfg.current_bound, cfg.threads);
    rep.a_net = net.a;

    // Row-sum norm gives ||delta_H * a||_inf <= norm * ||a||_inf.
    const double row_sum_norm = delta_H.cwiseAbs().rowwise().sum().maxCoeff();
    rep.precondition_lhs = 4.0 * row_sum_norm * net.a.lpNorm<Eigen::Infinity>();
    if (!(rep.precondition_lhs < rep.min_s))
        throw std::invalid_argument("perturbation too large: 4*||delta_H||*||a||_inf = " +
                                    std::to_string(rep.precondition_lhs) +
                                    " >= min(s) = " + std::to_string(rep.min_s));

    const Vector s_tilde = w.s - delta_H * net.a;
    rep.s_shift_linf = (w.s - s_tilde).lpNorm<Eigen::Infinity>();
    rep.s_condition_ok = rep.s_shift_linf < rep.min_s / 2.0;
    if (s_tilde.minCoeff() <= 0.0)
        throw std::invalid_argument("perturbation too large: rescaled s not positive");

    const LassoSolution sol =
        solve_nn_lasso(LassoProblem{d.atoms, x, cfg.lambda1, s_tilde}, 1e-10, 100000);
    rep.a_oracle = sol.a;
    rep.oracle_kkt_gap = sol.kkt_gap;
    rep.gap_linf = (net.a - sol.a).lpNorm<Eigen::Infinity>();
    return rep;
}

}  // namespace spikedict
