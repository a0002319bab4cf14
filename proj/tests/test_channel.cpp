#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gcs/channel.hpp"
#include "gcs/constellation.hpp"
#include "gcs/errors.hpp"
#include "gcs/rng.hpp"

using namespace gcs;

namespace {

// brute-force moment oracle, independent of the tape path
std::pair<double, double> moments_brute(const Tensor& pts) {
    const std::size_t m = pts.shape[0], pairs = pts.shape[1] / 2;
    double mu2 = 0, mu4 = 0, mu6 = 0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < pairs; ++p) {
            const double re = pts.at(i, 2 * p), im = pts.at(i, 2 * p + 1);
            const double a = re * re + im * im;
            mu2 += a;
            mu4 += a * a;
            mu6 += a * a * a;
        }
    const double count = static_cast<double>(m * pairs);
    mu2 /= count;
    mu4 /= count;
    mu6 /= count;
    return {mu4 / (mu2 * mu2), mu6 / (mu2 * mu2 * mu2)};
}

ChannelParams reference_params(ModelKind kind, double power_dbm) {
    return ChannelParams::make(LinkConfig{}, ChiTable::illustrative_default(), kind, power_dbm);
}

}  // namespace

TEST_CASE("QPSK moments are exactly (1, 1)") {
    Constellation qpsk = qam(4);
    auto [kappa, kappa3] = moments_of(qpsk.points);
    CHECK(kappa == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(kappa3 == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("16-QAM moments match the brute-force oracle and the known values") {
    Constellation q16 = qam(16);
    auto [kappa, kappa3] = moments_of(q16.points);
    auto [bk, bk3] = moments_brute(q16.points);
    CHECK(std::fabs(kappa - bk) <= 1e-12);
    CHECK(std::fabs(kappa3 - bk3) <= 1e-12);
    CHECK(std::fabs(kappa - 1.32) <= 1e-12);
    CHECK(std::fabs(kappa3 - 1.96) <= 1e-12);
}

TEST_CASE("moments are scale invariant") {
    Constellation q16 = qam(16);
    auto [k1, k31] = moments_of(q16.points);
    Tensor scaled = q16.points;
    for (auto& v : scaled.data) v *= 7.3;
    auto [k2, k32] = moments_of(scaled);
    CHECK(k1 == doctest::Approx(k2).epsilon(1e-13));
    CHECK(k31 == doctest::Approx(k32).epsilon(1e-13));
}

TEST_CASE("moments reject the all-zero constellation") {
    Tape t;
    CHECK_THROWS_WITH_AS(moments(t, t.constant(Tensor::zeros({4, 2}))),
                         doctest::Contains("zero"), Error);
}

TEST_CASE("span loss is 20 dB for 100 km at 0.2 dB/km") {
    LinkConfig link;
    CHECK(link.span_gain_linear() == doctest::Approx(100.0));
}

TEST_CASE("ASE variance: independent oracle, span-count linearity") {
    LinkConfig link;  // NF 5 dB, 20 spans, 32 GBd
    const double got = ase_variance_mw(link);

    // independently coded one-line evaluation
    const double oracle = 20.0 * (std::pow(10.0, 0.2 * 100.0 / 10.0) - 1.0) * 6.62607015e-34 *
                          (299792458.0 / 1550e-9) * std::pow(10.0, 0.5) * 32e9 * 1e3;
    CHECK(got == doctest::Approx(oracle).epsilon(1e-12));

    LinkConfig doubled = link;
    doubled.span_count = 40;
    CHECK(ase_variance_mw(doubled) == doctest::Approx(2.0 * got).epsilon(1e-12));
}

TEST_CASE("invalid link parameters are rejected") {
    LinkConfig link;
    link.span_count = 0;
    CHECK_THROWS_AS(link.validate(), Error);
    link = LinkConfig{};
    link.attenuation_db_per_km = -0.1;
    CHECK_THROWS_AS(link.validate(), Error);
}

TEST_CASE("NLIN variance: GN/NLIN coincide when chi2 = chi3 = 0, cubic power law") {
    NlinCoefficients chi{5e3, 0.0, 0.0};
    const double gn = nlin_variance_mw(1.0, 1.32, 1.96, chi, ModelKind::Gn);
    const double nlin = nlin_variance_mw(1.0, 1.32, 1.96, chi, ModelKind::Nlin);
    CHECK(gn == nlin);

    CHECK(nlin_variance_mw(2.0, 1.32, 1.96, chi, ModelKind::Nlin) ==
          doctest::Approx(8.0 * nlin).epsilon(1e-13));
}

TEST_CASE("NLIN variance grows with the moments when chi2, chi3 > 0") {
    NlinCoefficients chi{1.2e4, 6e3, 2e2};
    auto [kq, kq3] = moments_of(qam(4).points);    // 1, 1
    auto [k16, k163] = moments_of(qam(16).points); // 1.32, 1.96
    const double v_qpsk = nlin_variance_mw(1.0, kq, kq3, chi, ModelKind::Nlin);
    const double v_16 = nlin_variance_mw(1.0, k16, k163, chi, ModelKind::Nlin);
    CHECK(v_16 > v_qpsk);
}

TEST_CASE("negative NLIN variance carries the offending values") {
    NlinCoefficients chi{1.0, 1e6, 0.0};
    CHECK_THROWS_WITH_AS(nlin_variance_mw(1.0, 1.0, 1.0, chi, ModelKind::Nlin),
                         doctest::Contains("kappa"), Error);
}

TEST_CASE("on-tape NLIN gradient w.r.t. moments is exactly P^3 chi") {
    ChannelParams params = reference_params(ModelKind::Nlin, 2.0);
    Tape tape;
    Val kappa = tape.input(Tensor::scalar(1.4), true);
    Val kappa3 = tape.input(Tensor::scalar(2.2), true);
    Val var = nlin_variance(tape, params, Moments{kappa, kappa3});
    tape.backward(var);
    const double p = params.launch_power_mw;
    const double p3u = 1e-6 * p * p * p;
    CHECK(tape.grad(kappa).scalar_value() == p3u * params.chi.chi2);
    CHECK(tape.grad(kappa3).scalar_value() == p3u * params.chi.chi3);
}

TEST_CASE("sigma2_NLIN gradient w.r.t. constellation coordinates matches finite differences") {
    ChannelParams params = reference_params(ModelKind::Nlin, 1.0);
    Rng rng(5);
    Tensor pts = Tensor::zeros({8, 2});
    for (auto& v : pts.data) v = rng.uniform(-1.5, 1.5);

    Tape tape;
    Val p = tape.input(pts, true);
    Val var = nlin_variance(tape, params, moments(tape, p));
    tape.backward(var);
    const Tensor grad = tape.grad(p);

    auto eval = [&](std::size_t i, double delta) {
        Tensor shifted = pts;
        shifted.data[i] += delta;
        auto [kappa, kappa3] = moments_of(shifted);
        return nlin_variance_mw(params.launch_power_mw, kappa, kappa3, params.chi, params.kind);
    };
    const double h = 1e-6;
    for (std::size_t i = 0; i < pts.data.size(); ++i) {
        const double fd = (eval(i, h) - eval(i, -h)) / (2.0 * h);
        const double scale = std::max({1.0, std::fabs(fd), std::fabs(grad.data[i])});
        CHECK(std::fabs(grad.data[i] - fd) <= 1e-5 * scale);
    }
}

TEST_CASE("GN-kind noise variance ignores constellation reshaping") {
    ChannelParams params = reference_params(ModelKind::Gn, 1.0);
    Tape tape;
    Val a = tape.constant(qam(16).points);
    Val b = tape.constant(qam(4).points);
    Val va = nlin_variance(tape, params, moments(tape, a));
    Val vb = nlin_variance(tape, params, moments(tape, b));
    CHECK(tape.value(va).scalar_value() == tape.value(vb).scalar_value());
}

TEST_CASE("channel_apply: determinism, noiseless limit, gradient flow into moments") {
    ChannelParams params = reference_params(ModelKind::Nlin, 0.0);
    Constellation q16 = qam(16);

    auto apply_once = [&](std::uint64_t seed) {
        Tape tape;
        Val x = tape.constant(q16.points);
        Val y = channel_apply(tape, x, params, moments(tape, x), seed);
        return tape.value(y).data;
    };
    auto y1 = apply_once(42), y2 = apply_once(42), y3 = apply_once(43);
    CHECK(y1 == y2);
    CHECK(y1 != y3);

    // sigma -> 0: y == x bit-exactly
    ChannelParams silent = params;
    silent.sigma2_ase_mw = 1e-300;
    silent.chi = {1e-300, 0.0, 0.0};
    Tape tape;
    Val x = tape.input(q16.points, true);
    Val y = channel_apply(tape, x, silent, moments(tape, x), 1);
    for (std::size_t i = 0; i < q16.points.data.size(); ++i)
        CHECK(tape.value(y).data[i] == doctest::Approx(q16.points.data[i]).epsilon(1e-12));
}

TEST_CASE("channel_apply per-dimension variance matches sigma2_total/(2P) over many draws") {
    ChannelParams params = reference_params(ModelKind::Nlin, 1.0);
    Constellation qpsk = qam(4);
    auto [kappa, kappa3] = moments_of(qpsk.points);
    const double nlin =
        nlin_variance_mw(params.launch_power_mw, kappa, kappa3, params.chi, params.kind);
    const double per_dim = (params.sigma2_ase_mw + nlin) / params.launch_power_mw / 2.0;

    // 4 points x 2 dims x draws; accumulate empirical variance of (y - x)
    double acc = 0.0;
    long count = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Tape tape;
        Tensor big = Tensor::zeros({128, 2});
        for (std::size_t r = 0; r < 128; ++r)
            for (std::size_t c = 0; c < 2; ++c) big.at(r, c) = qpsk.points.at(r % 4, c);
        Val x = tape.constant(big);
        Val y = channel_apply(tape, x, params, moments(tape, tape.constant(qpsk.points)), seed);
        const Tensor& ty = tape.value(y);
        for (std::size_t i = 0; i < ty.data.size(); ++i) {
            const double d = ty.data[i] - big.data[i];
            acc += d * d;
            ++count;
        }
    }
    const double measured = acc / static_cast<double>(count);
    CHECK(measured == doctest::Approx(per_dim).epsilon(0.02));
}

TEST_CASE("effective SNR: slopes and unimodality over the power grid") {
    // chi2=chi3=0 keeps the moments out of the picture
    ChiTable table;
    for (int s = 5; s <= 55; s += 5) table.by_spans[s] = {1.2e4, 0.0, 0.0};
    LinkConfig link;

    // linear regime: +1 dB power -> +1 dB SNR (NLIN negligible)
    ChiTable tiny;
    for (int s = 5; s <= 55; s += 5) tiny.by_spans[s] = {1e-12, 0.0, 0.0};
    ChannelParams lo = ChannelParams::make(link, tiny, ModelKind::Gn, -3.0);
    ChannelParams lo2 = ChannelParams::make(link, tiny, ModelKind::Gn, -2.0);
    CHECK(effective_snr_db(lo2, 1, 1) - effective_snr_db(lo, 1, 1) == doctest::Approx(1.0).epsilon(1e-6));

    // deep NLIN regime: +1 dB power -> -2 dB SNR
    ChiTable huge;
    for (int s = 5; s <= 55; s += 5) huge.by_spans[s] = {1e12, 0.0, 0.0};
    ChannelParams hi = ChannelParams::make(link, huge, ModelKind::Gn, 4.0);
    ChannelParams hi2 = ChannelParams::make(link, huge, ModelKind::Gn, 5.0);
    CHECK(effective_snr_db(hi2, 1, 1) - effective_snr_db(hi, 1, 1) == doctest::Approx(-2.0).epsilon(1e-3));

    // unique maximum over -5..5 dBm
    int rises = 0, falls = 0;
    double prev = -1e9;
    bool fell = false;
    for (int p = -5; p <= 5; ++p) {
        ChannelParams params = ChannelParams::make(link, table, ModelKind::Gn, p);
        const double snr = effective_snr_db(params, 1, 1);
        if (snr > prev) {
            CHECK(!fell);  // once falling, never rises again
            ++rises;
        } else {
            fell = true;
            ++falls;
        }
        prev = snr;
    }
    CHECK(rises > 0);
    CHECK(falls > 0);
}

TEST_CASE("chi table: exact lookup and missing-key error") {
    ChiTable t = ChiTable::illustrative_default();
    CHECK(t.lookup(20).chi1 == doctest::Approx(1.2e4));
    CHECK_THROWS_WITH_AS(t.lookup(21), doctest::Contains("span count 21"), Error);
    // positivity across the admissible moment range
    for (const auto& [spans, chi] : t.by_spans) {
        CHECK(chi.chi1 - chi.chi2 + chi.chi3 > 0.0);  // worst case kappa=1, kappa3=1
    }
}
