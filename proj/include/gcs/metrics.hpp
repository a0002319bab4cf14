#pragma once

#include <cstdint>

#include "gcs/channel.hpp"
#include "gcs/constellation.hpp"

namespace gcs {

// Mutual information of the discrete-input Gaussian channel, reported per
// 4D (two polarizations x complex symbol): value == 2 * per2d when N == 2.
struct MiEstimate {
    double value = 0.0;      // bit / 4D
    double per2d = 0.0;      // bit / 2D
    double std_error = 0.0;  // bit / 4D
    long samples = 0;
    double sigma2 = 0.0;     // normalized total noise variance per complex pair
};

// Monte-Carlo MI with exact decoding metric and log-sum-exp stabilization.
// sigma2 is the total noise variance per complex pair at unit signal power;
// each real dimension receives sigma2/2. The standard error is estimated
// over sample batches.
MiEstimate mi_montecarlo(const Constellation& c, double sigma2, long samples, std::uint64_t seed);

// One received sample's information gap, log2 sum_j exp((d_i - d_j)/sigma2),
// log-sum-exp stabilized. MI = log2(M) - mean(gap). Shared between the
// Monte-Carlo estimator and the SSF receiver path.
double mi_gap_term_bits(const Constellation& c, const double* y, int tx_index, double sigma2);

struct MetricsConfig {
    long mi_samples = 200000;
    std::uint64_t seed = 1;
};

struct EvalResult {
    MiEstimate mi;
    double kappa = 0.0;
    double kappa3 = 0.0;
    double eff_snr_db = 0.0;
};

// Closes the loop between geometry and impairment: the noise variance is
// computed from the constellation's own moments, then MI is estimated at
// that variance.
EvalResult evaluate(const Constellation& c, const ChannelParams& params, const MetricsConfig& cfg);

}  // namespace gcs
