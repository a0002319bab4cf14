#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "gcs/errors.hpp"
#include "gcs/fft.hpp"
#include "gcs/rng.hpp"
#include "gcs/ssf.hpp"

using namespace gcs;

namespace {

SsfConfig desk_config(int symbols = 1024, int sps = 8, int channels = 1) {
    SsfConfig cfg;
    cfg.link.wdm_channels = channels;
    cfg.samples_per_symbol = sps;
    cfg.symbols_per_channel = symbols;
    cfg.steps_per_span = 30;
    cfg.launch_power_dbm = 0.0;
    return cfg;
}

LinkConfig linear_link(const LinkConfig& base) {
    LinkConfig l = base;
    l.gamma_per_w_km = 0.0;  // propagate() accepts the relaxed value
    return l;
}

double evm(const RxSymbols& rx, const TxRecord& tx) {
    double err = 0.0, sig = 0.0;
    for (int pol = 0; pol < 2; ++pol) {
        const auto& r = pol == 0 ? rx.x : rx.y;
        const auto& idx = pol == 0 ? tx.symbols_x : tx.symbols_y;
        for (std::size_t k = 0; k < r.size(); ++k) {
            const std::complex<double> s(
                tx.constellation.points.at(static_cast<std::size_t>(idx[k]), 0),
                tx.constellation.points.at(static_cast<std::size_t>(idx[k]), 1));
            err += std::norm(r[k] - s);
            sig += std::norm(s);
        }
    }
    return std::sqrt(err / sig);
}

}  // namespace

TEST_CASE("config validation catches aliasing and step/symbol floors") {
    SsfConfig cfg = desk_config();
    CHECK_NOTHROW(cfg.validate());

    SsfConfig bad = cfg;
    bad.link.wdm_channels = 5;
    bad.samples_per_symbol = 2;  // 64 GHz < 5 x 50 GHz
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("aliasing"), Error);

    bad = cfg;
    bad.steps_per_span = 5;
    CHECK_THROWS_AS(bad.validate(), Error);

    bad = cfg;
    bad.link.channel_spacing_ghz = 50.0 + 1e-4;  // off the DFT grid
    bad.link.wdm_channels = 3;
    bad.samples_per_symbol = 16;
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("grid"), Error);
}

TEST_CASE("modulate: power budget, band edge, determinism") {
    // constant-modulus QPSK makes the power budget exact
    SsfConfig cfg = desk_config(2048, 8, 5);
    cfg.samples_per_symbol = 16;  // 5 channels need the wider grid
    Constellation qpsk = qam(4);
    auto [field, record] = modulate(qpsk, cfg, 11);

    const double expect_w = 5.0 * 1e-3;  // 5 channels x 0 dBm
    CHECK(field.mean_power_w() == doctest::Approx(expect_w).epsilon(0.005));
    CHECK(record.symbols_x.size() == 2048);
    CHECK(record.symbols_y.size() == 2048);

    // 16-QAM at a fixed seed stays within the same budget
    auto [field16, rec16] = modulate(qam(16), cfg, 12);
    CHECK(field16.mean_power_w() == doctest::Approx(expect_w).epsilon(0.005));

    auto [field2, rec2] = modulate(qpsk, cfg, 11);
    CHECK(field2.pol_x == field.pol_x);
    CHECK(field2.pol_y == field.pol_y);
    CHECK(rec2.symbols_x == record.symbols_x);

    auto [field3, rec3] = modulate(qpsk, cfg, 99);
    CHECK(field3.pol_x != field.pol_x);
}

TEST_CASE("modulate: single-channel PSD follows the RRC spectrum") {
    SsfConfig cfg = desk_config(4096, 8, 1);
    auto [field, record] = modulate(qam(4), cfg, 5);

    auto spec = field.pol_x;
    fft::forward(spec);
    const std::size_t n = spec.size();
    const double fs = cfg.sample_rate_hz();
    const double df = fs / static_cast<double>(n);
    const double rs = cfg.link.symbol_rate_gbd * 1e9;

    // average in-band PSD (|f| < (1-b)Rs/2) vs past the (1+b)Rs/2 edge
    double inband = 0.0, beyond = 0.0;
    long n_in = 0, n_out = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = (k < n / 2 ? static_cast<double>(k) : static_cast<double>(k) - n) * df;
        const double p = std::norm(spec[k]);
        if (std::fabs(f) < (1.0 - cfg.rrc_rolloff) * rs / 2.0) {
            inband += p;
            ++n_in;
        } else if (std::fabs(f) >= (1.0 + cfg.rrc_rolloff) * rs / 2.0) {
            beyond += p;
            ++n_out;
        }
    }
    inband /= static_cast<double>(n_in);
    beyond /= static_cast<double>(n_out);
    CHECK(beyond <= 1e-2 * inband);  // at least -20 dB past the edge

    // spectral shape matches |G(f)|^2 = raised cosine in the transition band
    const double f_probe = 0.5 * rs;  // middle of the roll-off
    const auto k_probe = static_cast<std::size_t>(std::llround(f_probe / df));
    double measured = 0.0, reference = 0.0;
    for (std::size_t k = k_probe - 2; k <= k_probe + 2; ++k) {
        measured += std::norm(spec[k]);
        reference += std::norm(spec[n / 16]);  // well inside the flat band
    }
    const double rc = [&] {
        const double arg = 3.14159265358979 / (2.0 * cfg.rrc_rolloff * rs) *
                           (f_probe - (1.0 - cfg.rrc_rolloff) * rs / 2.0);
        const double g = std::cos(arg);
        return g * g;
    }();
    CHECK(measured / reference == doctest::Approx(rc).epsilon(0.25));
}

TEST_CASE("linear lossless round trip preserves the spectrum magnitude") {
    SsfConfig cfg = desk_config(1024, 8, 1);
    auto [field, record] = modulate(qam(16), cfg, 21);
    FieldGrid out = propagate(field, linear_link(cfg.link), cfg.steps_per_span, 1, false);

    auto in_spec = field.pol_x;
    auto out_spec = out.pol_x;
    fft::forward(in_spec);
    fft::forward(out_spec);
    for (std::size_t k = 0; k < in_spec.size(); k += 7) {
        const double a = std::abs(in_spec[k]), b = std::abs(out_spec[k]);
        CHECK(std::fabs(a - b) <= 1e-6 * std::max(1e-12, a));
    }
}

TEST_CASE("gamma = 0: CD compensation restores the constellation to 1e-4 EVM") {
    SsfConfig cfg = desk_config(2048, 8, 1);
    auto [field, record] = modulate(qam(16), cfg, 31);
    FieldGrid out = propagate(field, linear_link(cfg.link), cfg.steps_per_span, 2, false);
    RxSymbols rx = receive(out, cfg, record);
    CHECK(evm(rx, record) <= 1e-4);

    // mi_from_samples in the noiseless limit reaches log2 M
    MiEstimate mi = mi_from_samples(rx, record);
    CHECK(std::fabs(mi.per2d - 4.0) <= 1e-3);
}

TEST_CASE("an artificial constant phase rotation is removed exactly") {
    SsfConfig cfg = desk_config(1024, 8, 1);
    auto [field, record] = modulate(qam(4), cfg, 41);
    FieldGrid rotated = field;
    const std::complex<double> rot(std::cos(0.6), std::sin(0.6));
    for (auto& a : rotated.pol_x) a *= rot;
    for (auto& a : rotated.pol_y) a *= rot;
    RxSymbols rx = receive(rotated, cfg, record);
    CHECK(evm(rx, record) <= 1e-9);
    CHECK(std::arg(rx.gain_x) == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("CW self-phase modulation matches 8/9 gamma P L_eff") {
    LinkConfig link;
    link.dispersion_ps_nm_km = 0.0;  // relaxed in propagate
    link.span_count = 1;
    const std::size_t n = 512;
    const double p_w = 1e-3;
    FieldGrid cw;
    cw.sample_rate_hz = 256e9;
    cw.pol_x.assign(n, {std::sqrt(p_w), 0.0});
    cw.pol_y.assign(n, {0.0, 0.0});

    FieldGrid out = propagate(cw, link, 50, 3, false);
    const double alpha = link.attenuation_db_per_km * std::log(10.0) / 10.0;  // 1/km
    const double l_eff_km = (1.0 - std::exp(-alpha * link.span_length_km)) / alpha;
    const double expect = 8.0 / 9.0 * link.gamma_per_w_km * p_w * l_eff_km;
    const double got = std::arg(out.pol_x[0] / cw.pol_x[0]);
    CHECK(std::fabs(got - expect) <= 1e-4);

    // amplitude restored by the amplifier
    CHECK(std::abs(out.pol_x[0]) == doctest::Approx(std::sqrt(p_w)).epsilon(1e-9));
}

TEST_CASE("energy is conserved without loss and noise") {
    LinkConfig link;
    link.attenuation_db_per_km = 0.0;  // relaxed in propagate; no gain either
    link.span_count = 2;
    SsfConfig cfg = desk_config(1024, 8, 1);
    cfg.launch_power_dbm = 3.0;
    auto [field, record] = modulate(qam(16), cfg, 51);
    const double e_in = field.total_energy();
    FieldGrid out = propagate(field, link, 30, 4, false);
    CHECK(std::fabs(out.total_energy() - e_in) <= 2e-8 * e_in);
}

TEST_CASE("numerical blow-up is reported with span and step") {
    LinkConfig link;
    SsfConfig cfg = desk_config(256, 8, 1);
    auto [field, record] = modulate(qam(4), cfg, 61);
    field.pol_x[0] = {1e200, 0.0};  // poisoned sample
    CHECK_THROWS_WITH_AS(propagate(field, link, 30, 5, false), doctest::Contains("span 1"),
                         Error);
}

TEST_CASE("gamma = 0 with ASE reduces to AWGN at the ase_variance level") {
    SsfConfig cfg = desk_config(4096, 8, 1);
    cfg.link.span_count = 10;
    auto [field, record] = modulate(qam(4), cfg, 71);
    FieldGrid out = propagate(field, linear_link(cfg.link), cfg.steps_per_span, 6, true);
    RxSymbols rx = receive(out, cfg, record);

    const double sigma2_norm = fit_noise_variance(rx, record);
    LinkConfig measured_link = cfg.link;
    const double expect_norm =
        ase_variance_mw(measured_link) / (dbm_to_mw(cfg.launch_power_dbm));
    CHECK(sigma2_norm == doctest::Approx(expect_norm).epsilon(0.05));
}

TEST_CASE("received cloud variance grows with launch power beyond the optimum") {
    double prev = 0.0;
    for (double p : {1.0, 3.0, 5.0}) {
        SsfConfig cfg = desk_config(1024, 8, 1);
        cfg.steps_per_span = 20;
        cfg.launch_power_dbm = p;
        auto [field, record] = modulate(qam(16), cfg, 81);
        FieldGrid out = propagate(field, cfg.link, cfg.steps_per_span, 7, true);
        RxSymbols rx = receive(out, cfg, record);
        const double v = fit_noise_variance(rx, record);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("mi_from_samples fits an injected AWGN variance within 3 percent") {
    Constellation q16 = qam(16);
    const std::size_t n = 20000;
    const double sigma2 = 0.05;
    Rng rng(17);
    TxRecord tx;
    tx.constellation = q16;
    tx.launch_power_w = 1e-3;
    RxSymbols rx;
    for (int pol = 0; pol < 2; ++pol) {
        auto& idx = pol == 0 ? tx.symbols_x : tx.symbols_y;
        auto& r = pol == 0 ? rx.x : rx.y;
        for (std::size_t k = 0; k < n; ++k) {
            const int i = static_cast<int>(rng.below(16));
            idx.push_back(i);
            const double s = std::sqrt(sigma2 / 2.0);
            r.emplace_back(q16.points.at(static_cast<std::size_t>(i), 0) + s * rng.normal(),
                           q16.points.at(static_cast<std::size_t>(i), 1) + s * rng.normal());
        }
    }
    MiEstimate mi = mi_from_samples(rx, tx);
    CHECK(mi.sigma2 == doctest::Approx(sigma2).epsilon(0.03));
    CHECK(mi.value > 0.0);

    // too few symbols for a reliable estimate
    RxSymbols small;
    small.x.assign(100, {0, 0});
    small.y.assign(100, {0, 0});
    TxRecord tiny = tx;
    tiny.symbols_x.resize(100);
    tiny.symbols_y.resize(100);
    CHECK_THROWS_WITH_AS(mi_from_samples(small, tiny), doctest::Contains("1000"), Error);
}

TEST_CASE("SSF MI at low power matches the model-evaluated MI for 16-QAM") {
    SsfConfig cfg = desk_config(4096, 16, 5);
    cfg.steps_per_span = 25;
    cfg.launch_power_dbm = -3.0;  // ASE dominated
    auto [field, record] = modulate(qam(16), cfg, 91);
    FieldGrid out = propagate(field, cfg.link, cfg.steps_per_span, 8, true);
    RxSymbols rx = receive(out, cfg, record);
    MiEstimate ssf_mi = mi_from_samples(rx, record);

    ChannelParams params = ChannelParams::make(cfg.link, ChiTable::illustrative_default(),
                                               ModelKind::Nlin, cfg.launch_power_dbm);
    MetricsConfig mc;
    mc.mi_samples = 100000;
    EvalResult model = evaluate(qam(16), params, mc);
    CHECK(std::fabs(ssf_mi.value - model.mi.value) <= 0.1);
}

TEST_CASE("halving the step size changes the received field by less than 1e-3 RMS") {
    SsfConfig cfg = desk_config(1024, 8, 1);
    cfg.link.span_count = 4;
    cfg.launch_power_dbm = 2.0;
    auto [field, record] = modulate(qam(16), cfg, 101);
    FieldGrid coarse = propagate(field, cfg.link, 50, 9, false);
    FieldGrid fine = propagate(field, cfg.link, 100, 9, false);
    double diff = 0.0, ref = 0.0;
    for (std::size_t k = 0; k < coarse.pol_x.size(); ++k) {
        diff += std::norm(coarse.pol_x[k] - fine.pol_x[k]) +
                std::norm(coarse.pol_y[k] - fine.pol_y[k]);
        ref += std::norm(fine.pol_x[k]) + std::norm(fine.pol_y[k]);
    }
    CHECK(std::sqrt(diff / ref) <= 1e-3);
}
