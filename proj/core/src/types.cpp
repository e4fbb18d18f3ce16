#include "spikedict/types.hpp"

#include <cmath>
#include <stdexcept>

namespace spikedict {

Dictionary random_unit_dictionary(Index pixels, Index atoms, Rng& rng) {
    Matrix d(pixels, atoms);
    for (Index j = 0; j < atoms; ++j) {
        for (Index i = 0; i < pixels; ++i) d(i, j) = rng.uniform();
        const double n = d.col(j).norm();
        if (n > 0.0) d.col(j) /= n;
    }
    return Dictionary{std::move(d)};
}

std::vector<std::string> validate(const NetworkWeights& w) {
    std::vector<std::string> out;
    const Index n = w.F.rows();
    const Index m = w.F.cols();

    if (n < 1 || m < 1)
        out.push_back("network must have at least one coding and one input neuron");
    if (w.B.rows() != m || w.B.cols() != n)
        out.push_back("B must be input_count x coding_count");
    if (w.H.rows() != n || w.H.cols() != n)
        out.push_back("H must be coding_count x coding_count");
    if (w.s.size() != n) out.push_back("s must have coding_count entries");
    if (!w.F.allFinite() || !w.B.allFinite() || !w.H.allFinite() || !w.s.allFinite())
        out.push_back("weights must be finite");
    if (!(w.lambda1 > 0.0)) out.push_back("lambda1 > 0");
    if (!(w.gamma >= 0.0 && w.gamma < 1.0)) out.push_back("gamma must lie in [0,1)");
    if (!out.empty()) return out;  // index checks need coherent dimensions

    // Reports the first offending entry per matrix constraint; every violated
    // diagonal/scaling entry is reported individually.
    auto first_negative = [&out](const Matrix& mat, const char* name) {
        for (Index j = 0; j < mat.cols(); ++j)
            for (Index i = 0; i < mat.rows(); ++i)
                if (mat(i, j) < 0.0) {
                    out.push_back(std::string(name) + " >= 0 violated at (" +
                                  std::to_string(i) + "," + std::to_string(j) + ")");
                    return;
                }
    };
    first_negative(w.F, "F");
    first_negative(w.B, "B");
    for (Index i = 0; i < n; ++i)
        if (!(w.H(i, i) > 0.0))
            out.push_back("diag(H) > 0 violated at index " + std::to_string(i));
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i)
            if (i != j && w.H(i, j) < 0.0) {
                out.push_back("off-diagonal H >= 0 violated at (" + std::to_string(i) +
                              "," + std::to_string(j) + ")");
                j = n;  // report only the first
                break;
            }
    for (Index i = 0; i < n; ++i)
        if (!(w.s(i) > 0.0))
            out.push_back("s > 0 violated at index " + std::to_string(i));
    return out;
}

NetworkWeights weights_from_dictionary(const Dictionary& d, double lambda1,
                                       double gamma) {
    if (d.pixel_count() < 1 || d.atom_count() < 1)
        throw std::invalid_argument("dictionary must be non-empty");
    if (!(lambda1 > 0.0)) throw std::invalid_argument("lambda1 must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw std::invalid_argument("gamma must lie in [0,1)");
    for (Index j = 0; j < d.atom_count(); ++j)
        if (d.atoms.col(j).norm() == 0.0)
            throw std::invalid_argument("zero atom at column " + std::to_string(j));

    NetworkWeights w;
    w.F = d.atoms.transpose();
    w.B = d.atoms;
    // Same product the consistency metric evaluates, so fresh weights measure
    // exactly 1.
    w.H = w.F * w.B;
    w.s = Vector::Ones(d.atom_count());
    w.lambda1 = lambda1;
    w.gamma = gamma;
    return w;
}

std::vector<std::string> RunConfig::validate() const {
    std::vector<std::string> out;
    if (!(dt > 0.0)) out.push_back("dt > 0");
    if (!(T_phase >= dt)) out.push_back("T_phase >= dt");
    if (!(kappa > 0.0 && kappa < 1.0)) out.push_back("kappa in (0,1)");
    if (!(eta_D > 0.0)) out.push_back("eta_D > 0");
    if (!(eta_H >= eta_D)) out.push_back("eta_H >= eta_D");
    if (!(lambda1 >= 0.0)) out.push_back("lambda1 >= 0");
    if (!(n_atoms >= 1)) out.push_back("n_atoms >= 1");
    if (!(current_bound > 0.0)) out.push_back("current_bound > 0");
    if (!(theta_floor > 0.0)) out.push_back("theta_floor > 0");
    if (iterations < 0) out.push_back("iterations >= 0");
    if (metrics_every < 1) out.push_back("metrics_every >= 1");
    if (threads < 1) out.push_back("threads >= 1");
    return out;
}

}  // namespace spikedict
