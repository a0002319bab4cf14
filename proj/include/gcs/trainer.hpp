#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gcs/channel.hpp"
#include "gcs/constellation.hpp"
#include "gcs/errors.hpp"
#include "gcs/metrics.hpp"
#include "gcs/mlp.hpp"

namespace gcs {

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
    int m = 64;
    int n = 2;
    std::vector<std::size_t> hidden = {32, 32};
    int batch = 512;
    int iterations = 20000;
    Optimizer optimizer = Optimizer::Adam;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
    ModelKind kind = ModelKind::Nlin;
    int trace_every = 200;

    void validate() const;
};

struct SweepSpec {
    std::vector<double> powers_dbm;
    std::vector<int> span_counts;

    void validate() const;  // non-empty; powers within [-10, 10] dBm
};

struct TrainedResult {
    Constellation constellation;  // canonical, unit power
    std::vector<std::pair<int, double>> loss_trace;
    double kappa = 0.0;
    double kappa3 = 0.0;
    double power_dbm = 0.0;
    int span_count = 0;
    TrainConfig config;
};

// Divergence during training; carries the loss trace collected so far.
struct TrainDivergence : Error {
    std::vector<std::pair<int, double>> trace;
    TrainDivergence(const std::string& msg, std::vector<std::pair<int, double>> t)
        : Error(msg), trace(std::move(t)) {}
};

// B rows, each e_i with i uniform on [0, M); deterministic given the seed.
Tensor sample_one_hot(int m, int batch, std::uint64_t seed, std::vector<int>* labels = nullptr);

// On-tape rescale to unit average energy per complex pair (differentiable).
Val normalize_power(Tape& tape, Val points);

struct TrainState {
    TrainConfig cfg;
    ChannelParams channel;
    Mlp encoder;
    Mlp decoder;
    std::vector<Tensor> opt_m;  // Adam first moments, one per parameter tensor
    std::vector<Tensor> opt_v;
    long opt_steps = 0;

    static TrainState init(const TrainConfig& cfg, const ChannelParams& channel);
    std::vector<Tensor*> parameters();
};

// One forward graph: encode the full codebook, normalize, take moments,
// map the batch one-hots to their points, apply the channel, decode,
// cross-entropy against the transmitted indices. Exposed so tests can
// probe gradients along the variance path.
struct StepGraph {
    Tape tape;
    MlpOnTape enc_params;
    MlpOnTape dec_params;
    Val points;   // normalized codebook [M x N]
    Moments moms;
    Val loss;     // scalar, nats
};

StepGraph build_step_graph(const TrainState& state, const Tensor& one_hots,
                           const std::vector<int>& labels, std::uint64_t noise_seed);

// Forward + backward + one optimizer update. Throws on non-finite loss
// with the iteration, moments and noise variance in the message.
double train_step(TrainState& state, int iteration);

TrainedResult train(const TrainConfig& cfg, const ChannelParams& channel,
                    const std::string& label);

struct GridFailure {
    double power_dbm = 0.0;
    int span_count = 0;
    std::string message;
};

struct SweepOutcome {
    std::vector<TrainedResult> trained;       // successful grid points, grid order
    std::vector<EvalResult> evaluations;      // aligned with trained
    std::vector<GridFailure> failures;
};

// One independently trained and evaluated model per (power, span count)
// grid point. Grid points are independent; jobs > 1 runs them on a small
// thread pool with per-point derived seeds, so results do not depend on
// scheduling.
SweepOutcome sweep(const SweepSpec& spec, const TrainConfig& base, const LinkConfig& link,
                   const ChiTable& chi, const MetricsConfig& metrics, const std::string& label,
                   int jobs = 1);

}  // namespace gcs
