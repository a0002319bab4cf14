#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "gcs/tape.hpp"
#include "gcs/tensor.hpp"

namespace gcs {

// Physical link description. Defaults follow the reference scenario:
// 20 x 100 km spans, 0.2 dB/km, D = 16.46 ps/(nm km), gamma = 1.3 /(W km),
// 5 WDM channels at 50 GHz spacing, 32 GBd, lumped EDFAs with NF = 5 dB.
struct LinkConfig {
    int span_count = 20;
    double span_length_km = 100.0;
    double attenuation_db_per_km = 0.2;
    double dispersion_ps_nm_km = 16.46;
    double gamma_per_w_km = 1.3;
    double symbol_rate_gbd = 32.0;
    double channel_spacing_ghz = 50.0;
    int wdm_channels = 5;
    double center_wavelength_nm = 1550.0;
    double noise_figure_db = 5.0;

    void validate() const;  // all physical quantities strictly positive
    double span_gain_linear() const;  // amplifier gain exactly compensating span loss
};

// Per-link nonlinear-interference variance coefficients, 1/W^2 per complex
// symbol, valid for one span count. Values are configuration inputs.
struct NlinCoefficients {
    double chi1 = 0.0;
    double chi2 = 0.0;
    double chi3 = 0.0;
};

// chi coefficients keyed by span count; lookups require an exact key.
struct ChiTable {
    std::map<int, NlinCoefficients> by_spans;

    const NlinCoefficients& lookup(int span_count) const;

    // Illustrative defaults spanning 5..55 spans. They produce an optimum
    // launch power near 0 dBm for the 20-span reference link and are meant
    // to be replaced by calibrated values where absolute accuracy matters.
    static ChiTable illustrative_default();
};

enum class ModelKind { Gn, Nlin };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from(const std::string& name);

struct ChannelParams {
    ModelKind kind = ModelKind::Nlin;
    double launch_power_mw = 1.0;
    double sigma2_ase_mw = 0.0;
    NlinCoefficients chi;

    static ChannelParams make(const LinkConfig& link, const ChiTable& table, ModelKind kind,
                              double launch_power_dbm);
    void validate() const;
};

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

// ASE variance accumulated over the link, in mW within the matched-filter
// (symbol-rate) bandwidth: span_count * (G - 1) * h*nu * NF * R_s.
double ase_variance_mw(const LinkConfig& link);

// sigma^2_NLIN = P^3 (chi1 + chi2 (kappa - 2) + chi3 kappa3); the GN kind
// keeps only chi1. P in mW, chi in 1/W^2, result in mW.
double nlin_variance_mw(double launch_power_mw, double kappa, double kappa3,
                        const NlinCoefficients& chi, ModelKind kind);

// 10 log10(P / (sigma^2_ASE + sigma^2_NLIN))
double effective_snr_db(const ChannelParams& params, double kappa, double kappa3);

// Normalized 4th and 6th order moments of a constellation, uniform point
// probabilities, per complex pair:
//   kappa  = E|x|^4 / (E|x|^2)^2,  kappa3 = E|x|^6 / (E|x|^2)^3
struct Moments {
    Val kappa;
    Val kappa3;
};

Moments moments(Tape& tape, Val points);
std::pair<double, double> moments_of(const Tensor& points);

// On-tape NLIN variance in mW; gradient w.r.t. the moments is exact
// (d sigma^2 / d kappa = P^3 chi2 etc.).
Val nlin_variance(Tape& tape, const ChannelParams& params, Moments m);

// y = x + sigma_total/sqrt(P) * eps with eps standard Gaussian per real
// dimension and the per-pair variance split equally across its two real
// dims. Gradient flows through x and, via the reparameterized scale,
// through the moments.
Val channel_apply(Tape& tape, Val x, const ChannelParams& params, Moments m,
                  std::uint64_t noise_seed);

}  // namespace gcs
