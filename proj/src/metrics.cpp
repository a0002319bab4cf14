#include "gcs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gcs/errors.hpp"
#include "gcs/rng.hpp"

namespace gcs {

double mi_gap_term_bits(const Constellation& c, const double* y, int tx_index, double sigma2) {
    const int m = c.m, n = c.n;
    const double* pts = c.points.data.data();
    double di = 0.0;
    {
        const double* xi = pts + static_cast<std::size_t>(tx_index) * n;
        for (int dim = 0; dim < n; ++dim) {
            const double d = y[dim] - xi[dim];
            di += d * d;
        }
    }
    double tmax = 0.0;  // the j == tx_index term is exactly 0
    thread_local std::vector<double> t;
    t.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const double* xj = pts + static_cast<std::size_t>(j) * n;
        double dj = 0.0;
        for (int dim = 0; dim < n; ++dim) {
            const double d = y[dim] - xj[dim];
            dj += d * d;
        }
        t[static_cast<std::size_t>(j)] = (di - dj) / sigma2;
        tmax = std::max(tmax, t[static_cast<std::size_t>(j)]);
    }
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += std::exp(t[static_cast<std::size_t>(j)] - tmax);
    return (tmax + std::log(s)) / std::log(2.0);
}

MiEstimate mi_montecarlo(const Constellation& c, double sigma2, long samples, std::uint64_t seed) {
    c.validate();
    if (!(sigma2 > 0.0)) fail(strf("mi_montecarlo: sigma2 %g must be > 0", sigma2));
    if (samples < 1) fail("mi_montecarlo: need at least 1 sample");

    const int m = c.m, n = c.n;
    const int pairs = n / 2;
    const double log2m = std::log2(static_cast<double>(m));
    const double sigma_dim = std::sqrt(sigma2 / 2.0);  // per real dimension

    constexpr int kBatches = 16;
    // per-point draws, rounded up to a whole number of batches
    long k_per_point = (samples + m - 1) / m;
    k_per_point = ((k_per_point + kBatches - 1) / kBatches) * kBatches;
    const long k_batch = k_per_point / kBatches;

    std::vector<double> batch_gap(kBatches, 0.0);
    std::vector<double> y(static_cast<std::size_t>(n));

    Rng rng(derive_seed(seed, 0x3141));
    for (int i = 0; i < m; ++i) {
        const double* xi = c.points.data.data() + static_cast<std::size_t>(i) * n;
        for (long k = 0; k < k_per_point; ++k) {
            for (int dim = 0; dim < n; ++dim)
                y[static_cast<std::size_t>(dim)] = xi[dim] + sigma_dim * rng.normal();
            batch_gap[static_cast<std::size_t>(k / k_batch)] +=
                mi_gap_term_bits(c, y.data(), i, sigma2);
        }
    }

    const double per_batch_count = static_cast<double>(m) * static_cast<double>(k_batch);
    std::vector<double> batch_mi(kBatches);
    double mean = 0.0;
    for (int b = 0; b < kBatches; ++b) {
        batch_mi[static_cast<std::size_t>(b)] =
            log2m - batch_gap[static_cast<std::size_t>(b)] / per_batch_count;
        mean += batch_mi[static_cast<std::size_t>(b)];
    }
    mean /= kBatches;
    double var = 0.0;
    for (double bm : batch_mi) var += (bm - mean) * (bm - mean);
    var /= (kBatches - 1);
    const double stderr_per_nd = std::sqrt(var / kBatches);

    // bits per N-dim symbol -> per 2D -> per 4D
    const double per2d_raw = mean / pairs;
    MiEstimate est;
    est.per2d = std::clamp(per2d_raw, 0.0, log2m);
    est.value = 2.0 * est.per2d;
    est.std_error = 2.0 * stderr_per_nd / pairs;
    est.samples = static_cast<long>(k_per_point) * m;
    est.sigma2 = sigma2;
    return est;
}

EvalResult evaluate(const Constellation& c, const ChannelParams& params, const MetricsConfig& cfg) {
    params.validate();
    auto [kappa, kappa3] = moments_of(c.points);
    const double nlin =
        nlin_variance_mw(params.launch_power_mw, kappa, kappa3, params.chi, params.kind);
    const double sigma2_norm = (params.sigma2_ase_mw + nlin) / params.launch_power_mw;
    EvalResult r;
    r.mi = mi_montecarlo(c, sigma2_norm, cfg.mi_samples, cfg.seed);
    r.kappa = kappa;
    r.kappa3 = kappa3;
    r.eff_snr_db = effective_snr_db(params, kappa, kappa3);
    return r;
}

}  // namespace gcs
