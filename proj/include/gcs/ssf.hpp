#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "gcs/channel.hpp"
#include "gcs/constellation.hpp"
#include "gcs/metrics.hpp"

namespace gcs {

// Split-step Fourier validation channel: dual-polarization WDM over the
// Manakov equation with lumped amplification, plus an idealized receiver
// (perfect CD compensation, matched RRC filter, data-aided single-tap fit).

struct SsfConfig {
    LinkConfig link;
    int samples_per_symbol = 16;
    int symbols_per_channel = 16384;
    int steps_per_span = 50;
    double rrc_rolloff = 0.05;
    double launch_power_dbm = 0.0;  // per WDM channel
    std::uint64_t seed = 1;

    double sample_rate_hz() const { return samples_per_symbol * link.symbol_rate_gbd * 1e9; }
    void validate() const;
};

struct FieldGrid {
    std::vector<std::complex<double>> pol_x;
    std::vector<std::complex<double>> pol_y;
    double sample_rate_hz = 0.0;

    double mean_power_w() const;
    double total_energy() const;  // sum |a|^2, both polarizations
};

// Center-channel transmitted data; everything the receiver needs.
struct TxRecord {
    std::vector<int> symbols_x;
    std::vector<int> symbols_y;
    Constellation constellation;
    double launch_power_w = 0.0;
};

struct RxSymbols {
    std::vector<std::complex<double>> x;  // normalized to the unit-power grid
    std::vector<std::complex<double>> y;
    std::complex<double> gain_x{1.0, 0.0};  // fitted single taps
    std::complex<double> gain_y{1.0, 0.0};
};

// Uniform symbol draws per channel and polarization, frequency-domain RRC
// shaping, channels placed on the WDM grid. Per-channel average power is
// the configured launch power.
std::pair<FieldGrid, TxRecord> modulate(const Constellation& c, const SsfConfig& cfg,
                                        std::uint64_t data_seed);

// Symmetric split-step solution of the Manakov equation (8/9 factor on the
// combined-polarization power), one lumped amplifier per span restoring
// the span loss exactly, ASE injected per the amplifier noise figure.
// Relaxed parameter checks (attenuation/dispersion may be zero) so idealized
// physics cases are expressible.
FieldGrid propagate(const FieldGrid& in, const LinkConfig& link, int steps_per_span,
                    std::uint64_t noise_seed, bool with_ase = true);

// Center-channel selection + CD compensation + matched filter + downsample
// + data-aided complex single-tap (phase/scale) removal per polarization.
RxSymbols receive(const FieldGrid& field, const SsfConfig& cfg, const TxRecord& tx);

// Fits a circularly symmetric Gaussian noise variance per polarization from
// (received - transmitted) and evaluates the exact-decoding metric at the
// actual received samples (mismatched Gaussian receiver).
MiEstimate mi_from_samples(const RxSymbols& rx, const TxRecord& tx);

// Fitted residual variance (normalized units, per complex symbol), averaged
// over both polarizations. Multiply by launch power for physical units.
double fit_noise_variance(const RxSymbols& rx, const TxRecord& tx);

}  // namespace gcs
