#include "spikedict/engine.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "spikedict/parallel.hpp"

namespace spikedict {

SpikingSystem::SpikingSystem(Vector bias, Vector theta, Matrix weights,
                             double current_bound, int threads)
    : bias_(std::move(bias)),
      theta_(std::move(theta)),
      w_(std::move(weights)),
      current_bound_(current_bound),
      threads_(threads) {
    const Index n = bias_.size();
    if (theta_.size() != n || w_.rows() != n || w_.cols() != n)
        throw std::invalid_argument("SpikingSystem: dimension mismatch");
    if (!(current_bound_ > 0.0))
        throw std::invalid_argument("SpikingSystem: current bound must be positive");
    for (Index i = 0; i < n; ++i)
        if (!(theta_(i) > 0.0))
            throw std::invalid_argument("SpikingSystem: thresholds must be positive");
    mu_ = Eigen::ArrayXd::Zero(n);
    rho_ = Eigen::ArrayXd::Zero(n);
    trace_ = Eigen::ArrayXd::Zero(n);
    integral_ = Eigen::ArrayXd::Zero(n);
    count_.assign(static_cast<std::size_t>(n), 0);
    spiked_.assign(static_cast<std::size_t>(n), 0);
}

const std::vector<Index>& SpikingSystem::step(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
    const Index n = size();
    const double decay = std::exp(-dt);

    parallel_for(n, threads_, [&](Index begin, Index end) {
        for (Index i = begin; i < end; ++i) {
            trace_[i] *= decay;
            const double mu = bias_[i] + trace_[i];
            mu_[i] = mu;
            const double dq = mu * dt;
            rho_[i] += dq;
            integral_[i] += dq;
            if (rho_[i] >= theta_[i]) {
                rho_[i] = 0.0;  // reset discards any overshoot
                ++count_[static_cast<std::size_t>(i)];
                spiked_[static_cast<std::size_t>(i)] = 1;
            } else {
                spiked_[static_cast<std::size_t>(i)] = 0;
            }
        }
    });

    // Serial pass: abort check, window maximum, ascending spike list.
    spike_buffer_.clear();
    for (Index i = 0; i < n; ++i) {
        const double am = std::abs(mu_[i]);
        if (am > current_bound_) throw EngineAbort(t_ + dt, i, mu_[i]);
        if (am > window_max_mu_) window_max_mu_ = am;
        if (spiked_[static_cast<std::size_t>(i)]) spike_buffer_.push_back(i);
    }

    // Buffered delivery: every spike adds its outgoing weights to the
    // destination traces, scaled so that the discrete trace reproduces the
    // continuous kernel's time integral exactly at any dt (a unit-rate train
    // then drives exactly its weight on average; without the gain the drive
    // is low by the factor dt/(e^dt - 1), which measurably distorts codes).
    // Accumulation runs in ascending source index per destination, so the
    // result is independent of the thread count.
    if (!spike_buffer_.empty()) {
        const double kernel_gain = (1.0 - decay) / (decay * dt);
        parallel_for(n, threads_, [&](Index begin, Index end) {
            for (Index i = begin; i < end; ++i) {
                double acc = trace_[i];
                for (const Index j : spike_buffer_) acc += kernel_gain * w_(i, j);
                trace_[i] = acc;
            }
        });
    }

    t_ += dt;
    return spike_buffer_;
}

void SpikingSystem::reset_window() {
    integral_.setZero();
    std::fill(count_.begin(), count_.end(), 0);
    window_start_ = t_;
    window_max_mu_ = 0.0;
}

Vector SpikingSystem::rates() const {
    const double elapsed = t_ - window_start_;
    Vector r = Vector::Zero(size());
    if (elapsed <= 0.0) return r;
    for (Index i = 0; i < size(); ++i)
        r[i] = static_cast<double>(count_[static_cast<std::size_t>(i)]) / elapsed;
    return r;
}

Vector SpikingSystem::mean_currents() const {
    const double elapsed = t_ - window_start_;
    if (elapsed <= 0.0) return Vector::Zero(size());
    return (integral_ / elapsed).matrix();
}

NeuronState SpikingSystem::neuron(Index i) const {
    return NeuronState{mu_[i],      rho_[i],          trace_[i],
                       count_[static_cast<std::size_t>(i)], integral_[i],
                       window_start_};
}

SpikingSystem NetworkSim::build_system(const NetworkWeights& w, const Vector& x,
                                       double current_bound, int threads) {
    const Index n = w.coding_count();
    const Index m = w.input_count();
    if (n < 1 || m < 1) throw std::invalid_argument("NetworkSim: empty network");
    if (w.B.rows() != m || w.B.cols() != n || w.H.rows() != n || w.H.cols() != n ||
        w.s.size() != n)
        throw std::invalid_argument("NetworkSim: weight dimension mismatch");
    if (x.size() != m) throw std::invalid_argument("NetworkSim: input dimension mismatch");
    if (!(w.gamma >= 0.0 && w.gamma < 1.0))
        throw std::invalid_argument("NetworkSim: gamma must lie in [0,1)");
    for (Index i = 0; i < m; ++i)
        if (!(x[i] >= 0.0)) throw std::invalid_argument("NetworkSim: input must be >= 0");
    if (!w.F.allFinite() || !w.B.allFinite() || !w.H.allFinite() || !w.s.allFinite() ||
        !x.allFinite())
        throw std::invalid_argument("NetworkSim: weights and input must be finite");

    Vector bias(n + m);
    bias.head(n) = -(1.0 - w.gamma) * w.lambda1 * w.s;
    bias.tail(m) = (1.0 - w.gamma) * x;

    Vector theta(n + m);
    theta.head(n) = w.H.diagonal();
    theta.tail(m).setOnes();

    Matrix conn = Matrix::Zero(n + m, n + m);
    conn.topLeftCorner(n, n) = -w.H;
    conn.topLeftCorner(n, n).diagonal().setZero();  // no self-connections
    conn.topRightCorner(n, m) = w.F;
    conn.bottomLeftCorner(m, n) = w.gamma * w.B;

    return SpikingSystem(std::move(bias), std::move(theta), std::move(conn),
                         current_bound, threads);
}

NetworkSim::NetworkSim(NetworkWeights weights, Vector x, AvgReset avg_reset,
                       double current_bound, int threads)
    : w_(std::move(weights)),
      x_(std::move(x)),
      avg_reset_(avg_reset),
      current_bound_(current_bound),
      sys_(build_system(w_, x_, current_bound, threads)) {}

void NetworkSim::set_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw std::invalid_argument("set_gamma: gamma must lie in [0,1)");
    const Index n = w_.coding_count();
    const Index m = w_.input_count();
    w_.gamma = gamma;
    sys_.bias().head(n) = -(1.0 - gamma) * w_.lambda1 * w_.s;
    sys_.bias().tail(m) = (1.0 - gamma) * x_;
    sys_.weights().bottomLeftCorner(m, n) = gamma * w_.B;
}

std::pair<std::vector<Index>, std::vector<Index>> NetworkSim::step(double dt) {
    const Index n = w_.coding_count();
    const auto& all = sys_.step(dt);
    std::pair<std::vector<Index>, std::vector<Index>> out;
    for (const Index i : all) {
        if (i < n)
            out.first.push_back(i);
        else
            out.second.push_back(i - n);
    }
    if (log_enabled_) {
        const double t = sys_.time();
        for (const Index i : out.first) log_.push_back({Layer::coding, i, t});
        for (const Index i : out.second) log_.push_back({Layer::input, i, t});
    }
    return out;
}

PhaseSnapshot NetworkSim::run_phase(double gamma, double T, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("run_phase: dt must be positive");
    if (!(T >= dt)) throw std::invalid_argument("run_phase: T must be >= dt");
    set_gamma(gamma);
    if (avg_reset_ == AvgReset::reset_at_phase) sys_.reset_window();

    const double theta_min = sys_.theta().minCoeff();
    if (dt >= theta_min / current_bound_) dt_cap_warning_ = true;

    const long nsteps = std::lround(T / dt);
    for (long k = 0; k < nsteps; ++k) step(dt);

    const Index n = w_.coding_count();
    const Index m = w_.input_count();
    const Vector rate = sys_.rates();
    const Vector mean = sys_.mean_currents();

    PhaseSnapshot snap;
    snap.a = rate.head(n);
    snap.b = rate.tail(m);
    snap.u = mean.head(n);
    snap.v = mean.tail(m);
    snap.e = snap.u - w_.H.diagonal().cwiseProduct(snap.a);
    snap.f = snap.v - snap.b;
    snap.gamma_used = gamma;
    snap.window_begin = sys_.window_start();
    snap.window_end = sys_.time();
    snap.max_abs_current = sys_.window_max_abs_current();
    return snap;
}

KktResiduals kkt_residuals(const PhaseSnapshot& snap, const NetworkWeights& w,
                           const Vector& x) {
    const Vector q = w.F * x - w.lambda1 * w.s - w.H * snap.a;
    KktResiduals r;
    r.stationarity_gap = q.cwiseMax(0.0);
    r.complementarity = snap.a.cwiseProduct(q).cwiseAbs().maxCoeff();
    r.negativity = (-snap.a).cwiseMax(0.0).maxCoeff();
    return r;
}

std::string raster_csv_string(const std::vector<SpikeEvent>& events) {
    std::string out = "layer,neuron,t\n";
    char line[64];
    for (const auto& ev : events) {
        std::snprintf(line, sizeof(line), "%s,%lld,%.6f\n",
                      ev.layer == Layer::coding ? "coding" : "input",
                      static_cast<long long>(ev.neuron), ev.t);
        out += line;
    }
    return out;
}

void write_raster_csv(const std::string& path, const std::vector<SpikeEvent>& events) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << raster_csv_string(events);
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace spikedict
