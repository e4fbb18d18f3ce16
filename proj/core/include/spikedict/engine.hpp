#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "spikedict/types.hpp"

namespace spikedict {

/// Raised when any |current| exceeds the configured bound (runaway
/// feedback). Carries the offending time and neuron.
class EngineAbort : public std::runtime_error {
public:
    EngineAbort(double t, Index neuron_index, double current_value)
        : std::runtime_error("current bound exceeded at t=" + std::to_string(t) +
                             ", neuron " + std::to_string(neuron_index) +
                             ", current " + std::to_string(current_value)),
          time(t),
          neuron(neuron_index),
          current(current_value) {}

    double time;
    Index neuron;
    double current;
};

/// Read-only view of one neuron's state.
struct NeuronState {
    double current;           // mu, from the last step
    double potential;         // rho
    double trace;             // aggregated synaptic drive sum_j W_ij (alpha*sigma_j)
    long spike_count;         // since the window started
    double current_integral;  // integral of mu over the window
    double window_start;
};

enum class Layer { coding, input };

struct SpikeEvent {
    Layer layer;
    Index neuron;  // index within the layer
    double t;
};

/// Fixed-step synchronous simulation of an integrate-and-fire population
/// with exponential synaptic traces (unit time constant).
///
/// One step: decay traces by exp(-dt); mu = bias + trace; integrate
/// rho += mu*dt; every neuron with rho >= theta spikes once, resets rho to 0;
/// spikes are buffered and added to destination traces after all potentials
/// updated, so they take effect the next step and the update is
/// order-independent. Identical inputs give bit-identical states for every
/// thread count (per-neuron work writes only its own slots; spike delivery
/// accumulates in ascending source index).
class SpikingSystem {
public:
    SpikingSystem(Vector bias, Vector theta, Matrix weights, double current_bound,
                  int threads = 1);

    /// Advances one step; returns spiking neuron indices in ascending order.
    /// The reference stays valid until the next step() call.
    /// Throws EngineAbort when any |mu| exceeds the current bound.
    const std::vector<Index>& step(double dt);

    /// Restarts rate/current averaging at the present time.
    void reset_window();

    Index size() const { return bias_.size(); }
    double time() const { return t_; }
    double window_start() const { return window_start_; }

    /// Average spike rates over the current window (spike_count / elapsed).
    Vector rates() const;
    /// Average currents over the current window (integral / elapsed).
    Vector mean_currents() const;
    double window_max_abs_current() const { return window_max_mu_; }

    NeuronState neuron(Index i) const;

    Vector& bias() { return bias_; }
    const Vector& bias() const { return bias_; }
    Matrix& weights() { return w_; }
    const Matrix& weights() const { return w_; }
    const Vector& theta() const { return theta_; }

private:
    Vector bias_;
    Vector theta_;
    Matrix w_;  // w_(i,j): weight from neuron j to neuron i, zero diagonal
    double current_bound_;
    int threads_;

    Eigen::ArrayXd mu_, rho_, trace_, integral_;
    std::vector<long> count_;
    std::vector<unsigned char> spiked_;
    std::vector<Index> spike_buffer_;
    double t_ = 0.0;
    double window_start_ = 0.0;
    double window_max_mu_ = 0.0;
};

/// The two-layer sparse-coding network: N coding neurons (thresholds
/// diag(H), bias -(1-gamma)*lambda1*s, lateral weights -H off-diagonal,
/// feedforward F from the input layer) over M input neurons (threshold 1,
/// bias (1-gamma)*x, feedback gamma*B from the coding layer).
class NetworkSim {
public:
    /// Structural preconditions only (dimensions, finiteness, positive
    /// thresholds, gamma in [0,1), x >= 0); sign constraints on F/B/H are
    /// checked by validate() at the API boundaries that require them so that
    /// experiments with unprojected weights can still run.
    NetworkSim(NetworkWeights weights, Vector x,
               AvgReset avg_reset = AvgReset::reset_at_phase,
               double current_bound = 100.0, int threads = 1);

    /// Switches feedback strength; biases and the feedback block are
    /// recomputed, neuron state (mu, rho, traces) is preserved.
    void set_gamma(double gamma);

    /// One step; returns (coding spikes, input spikes), ascending.
    std::pair<std::vector<Index>, std::vector<Index>> step(double dt);

    /// Runs one gamma-phase of duration T and returns its limiting states.
    /// With AvgReset::reset_at_phase the averaging window restarts at the
    /// phase boundary; neuron state always carries over.
    PhaseSnapshot run_phase(double gamma, double T, double dt);

    void enable_spike_log() { log_enabled_ = true; }
    const std::vector<SpikeEvent>& spike_log() const { return log_; }

    const NetworkWeights& weights() const { return w_; }
    const Vector& input() const { return x_; }
    double time() const { return sys_.time(); }
    const SpikingSystem& system() const { return sys_; }

    /// True when a phase started with dt >= theta_min / current_bound, the
    /// regime where the one-spike-per-step cap can bind.
    bool dt_cap_warning() const { return dt_cap_warning_; }

private:
    NetworkWeights w_;
    Vector x_;
    AvgReset avg_reset_;
    double current_bound_;
    SpikingSystem sys_;
    bool log_enabled_ = false;
    bool dt_cap_warning_ = false;
    std::vector<SpikeEvent> log_;

    static SpikingSystem build_system(const NetworkWeights& w, const Vector& x,
                                      double current_bound, int threads);
};

struct KktResiduals {
    Vector stationarity_gap;  // positive part of (F x - lambda1 s - H a)
    double complementarity;   // || a .* (F x - lambda1 s - H a) ||_inf
    double negativity;        // || min(a, 0) ||_inf
};

KktResiduals kkt_residuals(const PhaseSnapshot& snap, const NetworkWeights& w,
                           const Vector& x);

/// Spike raster CSV: header "layer,neuron,t", one row per spike, t at fixed
/// 6-decimal precision.
void write_raster_csv(const std::string& path, const std::vector<SpikeEvent>& events);
std::string raster_csv_string(const std::vector<SpikeEvent>& events);

}  // namespace spikedict
