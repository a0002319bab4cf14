#include "gcs/channel.hpp"

#include <cmath>
#include <string>

#include "gcs/errors.hpp"
#include "gcs/rng.hpp"

namespace gcs {

namespace {
constexpr double kPlanck = 6.62607015e-34;       // J s
constexpr double kLightSpeed = 299792458.0;      // m/s
}  // namespace

void LinkConfig::validate() const {
    if (span_count < 1) fail(strf("link: span_count %d < 1", span_count));
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) fail(strf("link: %s must be > 0, got %g", name, v));
    };
    positive(span_length_km, "span_length_km");
    positive(attenuation_db_per_km, "attenuation_db_per_km");
    positive(dispersion_ps_nm_km, "dispersion_ps_nm_km");
    positive(gamma_per_w_km, "gamma_per_w_km");
    positive(symbol_rate_gbd, "symbol_rate_gbd");
    positive(channel_spacing_ghz, "channel_spacing_ghz");
    if (wdm_channels < 1) fail(strf("link: wdm_channels %d < 1", wdm_channels));
    positive(center_wavelength_nm, "center_wavelength_nm");
    positive(noise_figure_db, "noise_figure_db");
}

double LinkConfig::span_gain_linear() const {
    return std::pow(10.0, attenuation_db_per_km * span_length_km / 10.0);
}

const NlinCoefficients& ChiTable::lookup(int span_count) const {
    auto it = by_spans.find(span_count);
    if (it == by_spans.end())
        fail(strf("chi table: no entry for span count %d (table has %zu entries)", span_count,
                  by_spans.size()));
    return it->second;
}

ChiTable ChiTable::illustrative_default() {
    // Anchored at 20 spans; chi1 grows slightly super-linearly with span
    // count, the modulation-dependent terms accumulate sub-linearly as
    // dispersion decorrelates successive spans.
    ChiTable t;
    for (int spans = 5; spans <= 55; spans += 5) {
        const double r = static_cast<double>(spans) / 20.0;
        NlinCoefficients c;
        c.chi1 = 1.2e4 * std::pow(r, 1.05);
        c.chi2 = 6.0e3 * std::pow(r, 0.8);
        c.chi3 = 2.0e2 * std::pow(r, 0.8);
        t.by_spans[spans] = c;
    }
    return t;
}

const char* model_kind_name(ModelKind k) { return k == ModelKind::Gn ? "gn" : "nlin"; }

ModelKind model_kind_from(const std::string& name) {
    if (name == "gn" || name == "GN") return ModelKind::Gn;
    if (name == "nlin" || name == "NLIN") return ModelKind::Nlin;
    fail(strf("unknown channel model kind '%s' (expected gn or nlin)", name.c_str()));
}

ChannelParams ChannelParams::make(const LinkConfig& link, const ChiTable& table, ModelKind kind,
                                  double launch_power_dbm) {
    link.validate();
    ChannelParams p;
    p.kind = kind;
    p.launch_power_mw = dbm_to_mw(launch_power_dbm);
    p.sigma2_ase_mw = ase_variance_mw(link);
    p.chi = table.lookup(link.span_count);
    p.validate();
    return p;
}

void ChannelParams::validate() const {
    if (!(launch_power_mw > 0.0)) fail(strf("channel: launch power %g mW must be > 0", launch_power_mw));
    if (!(sigma2_ase_mw > 0.0)) fail(strf("channel: sigma2_ase %g mW must be > 0", sigma2_ase_mw));
    if (!(chi.chi1 > 0.0)) fail(strf("channel: chi1 %g must be > 0", chi.chi1));
    if (!std::isfinite(chi.chi2) || !std::isfinite(chi.chi3))
        fail("channel: chi2/chi3 must be finite");
}

double ase_variance_mw(const LinkConfig& link) {
    link.validate();
    const double gain = link.span_gain_linear();
    const double nu = kLightSpeed / (link.center_wavelength_nm * 1e-9);
    const double nf_linear = std::pow(10.0, link.noise_figure_db / 10.0);
    const double rs = link.symbol_rate_gbd * 1e9;
    const double watts = link.span_count * (gain - 1.0) * kPlanck * nu * nf_linear * rs;
    return watts * 1e3;
}

double nlin_variance_mw(double launch_power_mw, double kappa, double kappa3,
                        const NlinCoefficients& chi, ModelKind kind) {
    const double p3 = launch_power_mw * launch_power_mw * launch_power_mw;
    // chi is in 1/W^2; with P in mW the product needs a 1e-6 scale to land in mW
    const double factor =
        kind == ModelKind::Gn ? chi.chi1 : chi.chi1 + chi.chi2 * (kappa - 2.0) + chi.chi3 * kappa3;
    const double var = 1e-6 * p3 * factor;
    if (var < 0.0)
        fail(strf("nlin variance negative: kappa=%g kappa3=%g chi=(%g, %g, %g)", kappa, kappa3,
                  chi.chi1, chi.chi2, chi.chi3));
    return var;
}

double effective_snr_db(const ChannelParams& params, double kappa, double kappa3) {
    const double nlin =
        nlin_variance_mw(params.launch_power_mw, kappa, kappa3, params.chi, params.kind);
    return 10.0 * std::log10(params.launch_power_mw / (params.sigma2_ase_mw + nlin));
}

Moments moments(Tape& tape, Val points) {
    const Tensor& pts = tape.value(points);
    if (pts.rank() != 2 || pts.shape[1] % 2 != 0)
        fail(strf("moments: points must be [M x N] with N even, got [%s]",
                  shape_str(pts.shape).c_str()));
    bool all_zero = true;
    for (double v : pts.data)
        if (v != 0.0) {
            all_zero = false;
            break;
        }
    if (all_zero) fail("moments: all-zero constellation (zero mean power)");

    Val a = tape.abs2_pairs(points);             // |x|^2 per complex pair
    Val mu2 = tape.reduce_mean(a);               // E|x|^2
    Val mu4 = tape.reduce_mean(tape.square(a));  // E|x|^4
    Val mu6 = tape.reduce_mean(tape.mul(tape.square(a), a));
    Val mu2sq = tape.square(mu2);
    Moments m;
    m.kappa = tape.div(mu4, mu2sq);
    m.kappa3 = tape.div(mu6, tape.mul(mu2sq, mu2));
    return m;
}

std::pair<double, double> moments_of(const Tensor& points) {
    Tape tape;
    Moments m = moments(tape, tape.constant(points));
    return {tape.value(m.kappa).scalar_value(), tape.value(m.kappa3).scalar_value()};
}

Val nlin_variance(Tape& tape, const ChannelParams& params, Moments m) {
    const double p = params.launch_power_mw;
    const double p3u = 1e-6 * p * p * p;  // mW result for chi in 1/W^2
    if (params.kind == ModelKind::Gn) return tape.scalar(p3u * params.chi.chi1);
    // p3u * (chi1 - 2 chi2) + p3u chi2 * kappa + p3u chi3 * kappa3
    Val base = tape.scalar(p3u * (params.chi.chi1 - 2.0 * params.chi.chi2));
    Val k_term = tape.mul(tape.scalar(p3u * params.chi.chi2), m.kappa);
    Val k3_term = tape.mul(tape.scalar(p3u * params.chi.chi3), m.kappa3);
    Val var = tape.add(tape.add(base, k_term), k3_term);
    const double v = tape.value(var).scalar_value();
    if (v < 0.0)
        fail(strf("nlin variance negative: kappa=%g kappa3=%g chi=(%g, %g, %g)",
                  tape.value(m.kappa).scalar_value(), tape.value(m.kappa3).scalar_value(),
                  params.chi.chi1, params.chi.chi2, params.chi.chi3));
    return var;
}

Val channel_apply(Tape& tape, Val x, const ChannelParams& params, Moments m,
                  std::uint64_t noise_seed) {
    params.validate();
    const Tensor& tx = tape.value(x);
    if (tx.rank() != 2) fail("channel_apply: x must be rank 2");

    Val sigma2_total = tape.add(tape.scalar(params.sigma2_ase_mw), nlin_variance(tape, params, m));
    const double s2 = tape.value(sigma2_total).scalar_value();
    if (!std::isfinite(s2)) fail(strf("channel_apply: non-finite noise variance %g", s2));
    if (s2 == 0.0) return x;  // noiseless limit

    // per real dimension: sigma^2_total / (2 P) in normalized (unit-power) units
    Val scale = tape.sqrt(tape.div(sigma2_total, tape.scalar(2.0 * params.launch_power_mw)));
    Tensor eps = Tensor::zeros(tx.shape);
    Rng rng(derive_seed(noise_seed, 0xc4a11));
    for (auto& e : eps.data) e = rng.normal();
    return tape.add(x, tape.mul(scale, tape.constant(std::move(eps))));
}

}  // namespace gcs
