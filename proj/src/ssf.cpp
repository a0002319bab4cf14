#include "gcs/ssf.hpp"

#include <cmath>
#include <numbers>

#include "gcs/errors.hpp"
#include "gcs/fft.hpp"
#include "gcs/rng.hpp"

namespace gcs {

namespace {

constexpr double kPlanck = 6.62607015e-34;   // J s
constexpr double kLightSpeed = 299792458.0;  // m/s
constexpr double kPi = std::numbers::pi;

// signed frequency of DFT bin k on an N-point grid at spacing df
inline double bin_freq(std::size_t k, std::size_t n, double df) {
    const auto kf = static_cast<long long>(k) -
                    (k >= n / 2 ? static_cast<long long>(n) : 0);
    return static_cast<double>(kf) * df;
}

// root-raised-cosine spectral amplitude, G(0) = 1, sqrt of the Nyquist RC
double rrc_amplitude(double f, double symbol_rate, double rolloff) {
    const double af = std::fabs(f);
    const double f1 = (1.0 - rolloff) * symbol_rate / 2.0;
    const double f2 = (1.0 + rolloff) * symbol_rate / 2.0;
    if (af <= f1) return 1.0;
    if (af >= f2) return 0.0;
    return std::cos(kPi / (2.0 * rolloff * symbol_rate) * (af - f1));
}

// beta2 in s^2/m from D in ps/(nm km)
double beta2_si(const LinkConfig& link) {
    const double d_si = link.dispersion_ps_nm_km * 1e-6;  // s/m^2
    const double lambda = link.center_wavelength_nm * 1e-9;
    return -d_si * lambda * lambda / (2.0 * kPi * kLightSpeed);
}

// field attenuation exponent alpha/2 in 1/m (power decays with exp(-alpha z))
double alpha_per_m(const LinkConfig& link) {
    return link.attenuation_db_per_km * std::log(10.0) / 10.0 / 1e3;
}

void relaxed_link_check(const LinkConfig& link) {
    if (link.span_count < 1) fail(strf("ssf: span_count %d < 1", link.span_count));
    if (!(link.span_length_km > 0.0)) fail("ssf: span length must be > 0");
    if (link.attenuation_db_per_km < 0.0) fail("ssf: negative attenuation");
    if (link.dispersion_ps_nm_km < 0.0) fail("ssf: negative dispersion");
    if (link.gamma_per_w_km < 0.0) fail("ssf: negative nonlinear coefficient");
    if (!(link.symbol_rate_gbd > 0.0)) fail("ssf: symbol rate must be > 0");
}

}  // namespace

void SsfConfig::validate() const {
    link.validate();
    if (samples_per_symbol < 2) fail(strf("ssf: samples_per_symbol %d < 2", samples_per_symbol));
    if (symbols_per_channel < 16) fail(strf("ssf: symbols_per_channel %d < 16", symbols_per_channel));
    if (steps_per_span < 10) fail(strf("ssf: steps_per_span %d < 10", steps_per_span));
    if (!(rrc_rolloff > 0.0) || rrc_rolloff > 1.0)
        fail(strf("ssf: rrc_rolloff %g outside (0, 1]", rrc_rolloff));

    const double fs = sample_rate_hz();
    const double spacing = link.channel_spacing_ghz * 1e9;
    const double rs = link.symbol_rate_gbd * 1e9;
    if (fs < link.wdm_channels * spacing)
        fail(strf("ssf: sampling rate %.3g Hz < total WDM bandwidth %.3g Hz (aliasing)", fs,
                  link.wdm_channels * spacing));
    const double outer_edge =
        (link.wdm_channels - 1) / 2.0 * spacing + (1.0 + rrc_rolloff) * rs / 2.0;
    if (outer_edge > fs / 2.0)
        fail(strf("ssf: outer channel edge %.3g Hz beyond Nyquist %.3g Hz (aliasing)", outer_edge,
                  fs / 2.0));

    // channel offsets must land on DFT bins (circular spectral construction)
    const double df = fs / (static_cast<double>(samples_per_symbol) * symbols_per_channel);
    const double ratio = spacing / df;
    if (std::fabs(ratio - std::round(ratio)) > 1e-6)
        fail(strf("ssf: channel spacing %.6g GHz is not a multiple of the grid resolution "
                  "%.6g GHz; adjust symbols_per_channel",
                  spacing / 1e9, df / 1e9));
}

double FieldGrid::mean_power_w() const {
    double acc = 0.0;
    for (const auto& a : pol_x) acc += std::norm(a);
    for (const auto& a : pol_y) acc += std::norm(a);
    return acc / static_cast<double>(pol_x.size());
}

double FieldGrid::total_energy() const {
    double acc = 0.0;
    for (const auto& a : pol_x) acc += std::norm(a);
    for (const auto& a : pol_y) acc += std::norm(a);
    return acc;
}

std::pair<FieldGrid, TxRecord> modulate(const Constellation& c, const SsfConfig& cfg,
                                        std::uint64_t data_seed) {
    cfg.validate();
    c.validate();
    if (c.n != 2) fail(strf("ssf modulate: need a 2D constellation, got N=%d", c.n));

    const std::size_t n_sym = static_cast<std::size_t>(cfg.symbols_per_channel);
    const std::size_t n = n_sym * static_cast<std::size_t>(cfg.samples_per_symbol);
    const double fs = cfg.sample_rate_hz();
    const double df = fs / static_cast<double>(n);
    const double rs = cfg.link.symbol_rate_gbd * 1e9;
    const double spacing = cfg.link.channel_spacing_ghz * 1e9;
    // launch power is per channel, split equally across the polarizations
    const double power_w = dbm_to_mw(cfg.launch_power_dbm) * 1e-3;
    const double g0 = static_cast<double>(cfg.samples_per_symbol) * std::sqrt(power_w / 2.0);
    const int channels = cfg.link.wdm_channels;
    const int center = (channels - 1) / 2;

    // band-limited bins of one channel: |f| <= (1 + rolloff) Rs / 2
    const auto k_edge = static_cast<long long>(std::floor((1.0 + cfg.rrc_rolloff) * rs / 2.0 / df));

    FieldGrid field;
    field.sample_rate_hz = fs;
    TxRecord record;
    record.constellation = c;
    record.launch_power_w = power_w;

    std::vector<std::complex<double>> spec_x(n, {0.0, 0.0});
    std::vector<std::complex<double>> spec_y(n, {0.0, 0.0});
    std::vector<std::complex<double>> symbols(n_sym);

    for (int ch = 0; ch < channels; ++ch) {
        const auto offset_bins =
            static_cast<long long>(std::llround((ch - center) * spacing / df));
        for (int pol = 0; pol < 2; ++pol) {
            Rng rng(derive_seed(data_seed, 0xda7a,
                                static_cast<std::uint64_t>(ch) * 2 + static_cast<std::uint64_t>(pol)));
            std::vector<int> indices(n_sym);
            for (std::size_t k = 0; k < n_sym; ++k) {
                const int idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(c.m)));
                indices[k] = idx;
                symbols[k] = {c.points.at(static_cast<std::size_t>(idx), 0),
                              c.points.at(static_cast<std::size_t>(idx), 1)};
            }
            if (ch == center) {
                if (pol == 0)
                    record.symbols_x = indices;
                else
                    record.symbols_y = indices;
            }
            fft::forward(symbols);  // [n_sym] symbol spectrum
            auto& spec = pol == 0 ? spec_x : spec_y;
            for (long long kf = -k_edge; kf <= k_edge; ++kf) {
                const double amp = g0 * rrc_amplitude(static_cast<double>(kf) * df, rs,
                                                      cfg.rrc_rolloff);
                if (amp == 0.0) continue;
                const std::size_t m =
                    static_cast<std::size_t>(((kf % static_cast<long long>(n_sym)) +
                                              static_cast<long long>(n_sym)) %
                                             static_cast<long long>(n_sym));
                const std::size_t bin = static_cast<std::size_t>(
                    (((kf + offset_bins) % static_cast<long long>(n)) +
                     static_cast<long long>(n)) %
                    static_cast<long long>(n));
                spec[bin] += amp * symbols[m];
            }
        }
    }

    fft::inverse(spec_x);
    fft::inverse(spec_y);
    field.pol_x = std::move(spec_x);
    field.pol_y = std::move(spec_y);
    return {std::move(field), std::move(record)};
}

FieldGrid propagate(const FieldGrid& in, const LinkConfig& link, int steps_per_span,
                    std::uint64_t noise_seed, bool with_ase) {
    relaxed_link_check(link);
    if (steps_per_span < 1) fail("ssf: steps_per_span < 1");
    if (in.pol_x.size() != in.pol_y.size() || in.pol_x.empty())
        fail("ssf: polarizations must be the same nonzero length");
    if (!(in.sample_rate_hz > 0.0)) fail("ssf: field sample rate missing");

    const std::size_t n = in.pol_x.size();
    const double fs = in.sample_rate_hz;
    const double df = fs / static_cast<double>(n);
    const double beta2 = beta2_si(link);
    const double alpha = alpha_per_m(link);
    const double gamma = link.gamma_per_w_km * 1e-3;           // 1/(W m)
    const double span_m = link.span_length_km * 1e3;
    const double h = span_m / steps_per_span;
    const double nl_factor = 8.0 / 9.0 * gamma * h;            // Manakov

    // linear operator over half and full steps
    std::vector<std::complex<double>> lin_half(n), lin_full(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 2.0 * kPi * bin_freq(k, n, df);
        const std::complex<double> expo(-alpha / 2.0, beta2 / 2.0 * w * w);
        lin_half[k] = std::exp(expo * (h / 2.0));
        lin_full[k] = lin_half[k] * lin_half[k];
    }

    const double gain = std::pow(10.0, link.attenuation_db_per_km * link.span_length_km / 10.0);
    const double field_gain = std::sqrt(gain);
    const double nu = kLightSpeed / (link.center_wavelength_nm * 1e-9);
    const double nf_linear = std::pow(10.0, link.noise_figure_db / 10.0);
    // per-polarization ASE variance per complex sample across the full
    // sampled bandwidth; matched filtering later reduces it to the
    // symbol-rate value of ase_variance_mw
    const double sigma2_samp = nf_linear * (gain - 1.0) * kPlanck * nu * fs;

    FieldGrid out = in;
    std::vector<std::complex<double>>* pols[2] = {&out.pol_x, &out.pol_y};

    double prev_energy = out.total_energy();
    for (int span = 1; span <= link.span_count; ++span) {
        for (auto* p : pols) {
            fft::forward(*p);
            for (std::size_t k = 0; k < n; ++k) (*p)[k] *= lin_half[k];
        }
        for (int step = 1; step <= steps_per_span; ++step) {
            for (auto* p : pols) fft::inverse(*p);
            for (std::size_t k = 0; k < n; ++k) {
                const double power = std::norm(out.pol_x[k]) + std::norm(out.pol_y[k]);
                const double theta = nl_factor * power;
                const std::complex<double> rot(std::cos(theta), std::sin(theta));
                out.pol_x[k] *= rot;
                out.pol_y[k] *= rot;
            }
            const std::complex<double>* lin = step == steps_per_span ? lin_half.data()
                                                                     : lin_full.data();
            for (auto* p : pols) {
                fft::forward(*p);
                for (std::size_t k = 0; k < n; ++k) (*p)[k] *= lin[k];
            }
            // guard against numerical blow-up (spectral multipliers never
            // amplify, so any growth beyond rounding is a failure)
            double energy = 0.0;
            for (const auto& a : out.pol_x) energy += std::norm(a);
            for (const auto& a : out.pol_y) energy += std::norm(a);
            energy /= static_cast<double>(n);  // Parseval: spectrum is unnormalized
            if (!std::isfinite(energy) || energy > 10.0 * prev_energy + 1e-300)
                fail(strf("ssf: numerical blow-up at span %d step %d (energy %.3g -> %.3g)",
                          span, step, prev_energy, energy));
            prev_energy = energy;
        }
        for (auto* p : pols) fft::inverse(*p);

        // lumped amplifier: exact span-loss compensation + ASE
        if (gain != 1.0)
            for (auto* p : pols)
                for (auto& a : *p) a *= field_gain;
        if (with_ase && sigma2_samp > 0.0) {
            const double s = std::sqrt(sigma2_samp / 2.0);
            for (int pol = 0; pol < 2; ++pol) {
                Rng rng(derive_seed(noise_seed, 0xa5e,
                                    static_cast<std::uint64_t>(span) * 2 + pol));
                auto& p = pol == 0 ? out.pol_x : out.pol_y;
                for (auto& a : p) a += std::complex<double>(s * rng.normal(), s * rng.normal());
            }
        }
        prev_energy = out.total_energy();
    }
    return out;
}

RxSymbols receive(const FieldGrid& field, const SsfConfig& cfg, const TxRecord& tx) {
    cfg.validate();
    const std::size_t n_sym = static_cast<std::size_t>(cfg.symbols_per_channel);
    const std::size_t sps = static_cast<std::size_t>(cfg.samples_per_symbol);
    const std::size_t n = n_sym * sps;
    if (field.pol_x.size() != n)
        fail(strf("ssf receive: field length %zu does not match config (%zu)", field.pol_x.size(),
                  n));
    if (tx.symbols_x.size() != n_sym || tx.symbols_y.size() != n_sym)
        fail("ssf receive: transmitted record length mismatch");

    const double fs = cfg.sample_rate_hz();
    const double df = fs / static_cast<double>(n);
    const double rs = cfg.link.symbol_rate_gbd * 1e9;
    const double beta2 = beta2_si(cfg.link);
    const double total_m = cfg.link.span_count * cfg.link.span_length_km * 1e3;
    const double scale = 1.0 / (static_cast<double>(sps) * std::sqrt(tx.launch_power_w / 2.0));

    RxSymbols rx;
    for (int pol = 0; pol < 2; ++pol) {
        std::vector<std::complex<double>> spec = pol == 0 ? field.pol_x : field.pol_y;
        fft::forward(spec);
        // full electronic CD compensation
        for (std::size_t k = 0; k < n; ++k) {
            const double w = 2.0 * kPi * bin_freq(k, n, df);
            const double phi = -beta2 / 2.0 * w * w * total_m;
            spec[k] *= std::complex<double>(std::cos(phi), std::sin(phi));
        }
        // matched RRC filter + downsample to one sample per symbol
        // (spectral aliasing form of time-domain decimation)
        std::vector<std::complex<double>> sym_spec(n_sym, {0.0, 0.0});
        for (std::size_t j = 0; j < sps; ++j) {
            for (std::size_t m = 0; m < n_sym; ++m) {
                const std::size_t k = m + j * n_sym;
                const double g = rrc_amplitude(bin_freq(k, n, df), rs, cfg.rrc_rolloff);
                if (g != 0.0) sym_spec[m] += spec[k] * g;
            }
        }
        fft::inverse(sym_spec);
        for (auto& v : sym_spec) v *= scale;

        // data-aided single complex tap (constant phase + residual scale)
        const auto& idx = pol == 0 ? tx.symbols_x : tx.symbols_y;
        std::complex<double> num{0.0, 0.0};
        double den = 0.0, rx_energy = 0.0;
        for (std::size_t k = 0; k < n_sym; ++k) {
            const std::complex<double> s(tx.constellation.points.at(static_cast<std::size_t>(idx[k]), 0),
                                         tx.constellation.points.at(static_cast<std::size_t>(idx[k]), 1));
            num += sym_spec[k] * std::conj(s);
            den += std::norm(s);
            rx_energy += std::norm(sym_spec[k]);
        }
        if (den == 0.0 || rx_energy == 0.0) fail("ssf receive: synchronization failure (empty correlation)");
        const std::complex<double> tap = num / den;
        const double corr = std::abs(num) / std::sqrt(den * rx_energy);
        if (corr < 0.1)
            fail(strf("ssf receive: synchronization failure (correlation %.3f)", corr));
        for (auto& v : sym_spec) v /= tap;
        if (pol == 0) {
            rx.x = std::move(sym_spec);
            rx.gain_x = tap;
        } else {
            rx.y = std::move(sym_spec);
            rx.gain_y = tap;
        }
    }
    return rx;
}

double fit_noise_variance(const RxSymbols& rx, const TxRecord& tx) {
    double acc = 0.0;
    std::size_t count = 0;
    for (int pol = 0; pol < 2; ++pol) {
        const auto& r = pol == 0 ? rx.x : rx.y;
        const auto& idx = pol == 0 ? tx.symbols_x : tx.symbols_y;
        for (std::size_t k = 0; k < r.size(); ++k) {
            const std::complex<double> s(
                tx.constellation.points.at(static_cast<std::size_t>(idx[k]), 0),
                tx.constellation.points.at(static_cast<std::size_t>(idx[k]), 1));
            acc += std::norm(r[k] - s);
        }
        count += r.size();
    }
    return acc / static_cast<double>(count);
}

MiEstimate mi_from_samples(const RxSymbols& rx, const TxRecord& tx) {
    const std::size_t n_sym = rx.x.size();
    if (n_sym < 1000 || rx.y.size() < 1000)
        fail(strf("mi_from_samples: %zu symbols per polarization, need >= 1000", n_sym));
    const Constellation& c = tx.constellation;
    const double log2m = std::log2(static_cast<double>(c.m));

    constexpr int kBatches = 16;
    double value = 0.0, se2 = 0.0, sigma2_mean = 0.0;
    for (int pol = 0; pol < 2; ++pol) {
        const auto& r = pol == 0 ? rx.x : rx.y;
        const auto& idx = pol == 0 ? tx.symbols_x : tx.symbols_y;
        // circularly symmetric Gaussian fit per polarization
        double sigma2 = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            const std::complex<double> s(
                c.points.at(static_cast<std::size_t>(idx[k]), 0),
                c.points.at(static_cast<std::size_t>(idx[k]), 1));
            sigma2 += std::norm(r[k] - s);
        }
        sigma2 = std::max(sigma2 / static_cast<double>(r.size()), 1e-100);
        sigma2_mean += sigma2 / 2.0;

        std::vector<double> batch_gap(kBatches, 0.0);
        std::vector<long> batch_count(kBatches, 0);
        for (std::size_t k = 0; k < r.size(); ++k) {
            const double y[2] = {r[k].real(), r[k].imag()};
            const int b = static_cast<int>(k % kBatches);
            batch_gap[static_cast<std::size_t>(b)] += mi_gap_term_bits(c, y, idx[k], sigma2);
            batch_count[static_cast<std::size_t>(b)] += 1;
        }
        double mean = 0.0;
        std::vector<double> batch_mi(kBatches);
        for (int b = 0; b < kBatches; ++b) {
            batch_mi[static_cast<std::size_t>(b)] =
                log2m - batch_gap[static_cast<std::size_t>(b)] /
                            static_cast<double>(batch_count[static_cast<std::size_t>(b)]);
            mean += batch_mi[static_cast<std::size_t>(b)];
        }
        mean /= kBatches;
        double var = 0.0;
        for (double bm : batch_mi) var += (bm - mean) * (bm - mean);
        var /= (kBatches - 1);
        value += std::clamp(mean, 0.0, log2m);
        se2 += var / kBatches;
    }

    MiEstimate est;
    est.value = value;  // bit/4D: sum over both polarizations
    est.per2d = value / 2.0;
    est.std_error = std::sqrt(se2);
    est.samples = static_cast<long>(2 * n_sym);
    est.sigma2 = sigma2_mean;
    return est;
}

}  // namespace gcs
