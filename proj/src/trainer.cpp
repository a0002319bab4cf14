#include "gcs/trainer.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "gcs/errors.hpp"
#include "gcs/rng.hpp"

namespace gcs {

namespace {
// seed stream tags
constexpr std::uint64_t kStreamEncoder = 1;
constexpr std::uint64_t kStreamDecoder = 2;
constexpr std::uint64_t kStreamBatch = 3;
constexpr std::uint64_t kStreamNoise = 4;
constexpr std::uint64_t kStreamGrid = 5;
constexpr std::uint64_t kStreamMi = 6;
}  // namespace

void TrainConfig::validate() const {
    if (m < 4 || m > 1024) fail(strf("train: M=%d outside [4, 1024]", m));
    if (n < 2 || n % 2 != 0) fail(strf("train: N=%d must be even and >= 2", n));
    if (batch < 1) fail(strf("train: batch %d < 1", batch));
    if (iterations < 1) fail(strf("train: iterations %d < 1", iterations));
    if (!(learning_rate > 0.0)) fail(strf("train: learning rate %g must be > 0", learning_rate));
    if (trace_every < 1) fail("train: trace_every < 1");
}

void SweepSpec::validate() const {
    if (powers_dbm.empty()) fail("sweep: empty launch power list");
    if (span_counts.empty()) fail("sweep: empty span count list");
    for (double p : powers_dbm)
        if (p < -10.0 || p > 10.0) fail(strf("sweep: power %g dBm outside [-10, 10]", p));
    for (int s : span_counts)
        if (s < 1) fail(strf("sweep: span count %d < 1", s));
}

Tensor sample_one_hot(int m, int batch, std::uint64_t seed, std::vector<int>* labels) {
    if (batch < 1 || m < 2) fail(strf("sample_one_hot: bad M=%d B=%d", m, batch));
    Tensor t = Tensor::zeros({static_cast<std::size_t>(batch), static_cast<std::size_t>(m)});
    Rng rng(derive_seed(seed, 0x04e));
    if (labels) labels->resize(static_cast<std::size_t>(batch));
    for (int r = 0; r < batch; ++r) {
        const int idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
        t.at(static_cast<std::size_t>(r), static_cast<std::size_t>(idx)) = 1.0;
        if (labels) (*labels)[static_cast<std::size_t>(r)] = idx;
    }
    return t;
}

Val normalize_power(Tape& tape, Val points) {
    Val energy = tape.reduce_mean(tape.abs2_pairs(points));
    if (tape.value(energy).scalar_value() == 0.0) fail("normalize_power: zero-energy input");
    Val scale = tape.div(tape.scalar(1.0), tape.sqrt(energy));
    return tape.mul(points, scale);
}

TrainState TrainState::init(const TrainConfig& cfg, const ChannelParams& channel) {
    cfg.validate();
    channel.validate();
    TrainState st;
    st.cfg = cfg;
    st.channel = channel;

    MlpSpec enc;
    enc.input_width = static_cast<std::size_t>(cfg.m);
    enc.output_width = static_cast<std::size_t>(cfg.n);
    enc.hidden = cfg.hidden;
    enc.init_seed = derive_seed(cfg.seed, kStreamEncoder);
    st.encoder = Mlp::init(enc);

    MlpSpec dec;
    dec.input_width = static_cast<std::size_t>(cfg.n);
    dec.output_width = static_cast<std::size_t>(cfg.m);
    dec.hidden = cfg.hidden;
    dec.init_seed = derive_seed(cfg.seed, kStreamDecoder);
    st.decoder = Mlp::init(dec);

    for (Tensor* p : st.parameters()) {
        st.opt_m.push_back(Tensor::zeros(p->shape));
        st.opt_v.push_back(Tensor::zeros(p->shape));
    }
    return st;
}

std::vector<Tensor*> TrainState::parameters() {
    std::vector<Tensor*> out;
    for (auto& layer : encoder.layers) {
        out.push_back(&layer.weights);
        out.push_back(&layer.bias);
    }
    for (auto& layer : decoder.layers) {
        out.push_back(&layer.weights);
        out.push_back(&layer.bias);
    }
    return out;
}

StepGraph build_step_graph(const TrainState& state, const Tensor& one_hots,
                           const std::vector<int>& labels, std::uint64_t noise_seed) {
    StepGraph g;
    g.enc_params = push_params(g.tape, state.encoder, true);
    g.dec_params = push_params(g.tape, state.decoder, true);

    Val codebook = g.tape.constant(Tensor::identity(static_cast<std::size_t>(state.cfg.m)));
    Val raw = mlp_forward(g.tape, state.encoder, g.enc_params, codebook);
    g.points = normalize_power(g.tape, raw);
    g.moms = moments(g.tape, g.points);

    Val x = g.tape.matmul(g.tape.constant(one_hots), g.points);
    Val y = channel_apply(g.tape, x, state.channel, g.moms, noise_seed);
    Val logits = mlp_forward(g.tape, state.decoder, g.dec_params, y);
    g.loss = g.tape.softmax_cross_entropy(logits, labels);
    return g;
}

double train_step(TrainState& state, int iteration) {
    const std::uint64_t it = static_cast<std::uint64_t>(iteration);
    std::vector<int> labels;
    Tensor batch = sample_one_hot(state.cfg.m, state.cfg.batch,
                                  derive_seed(state.cfg.seed, kStreamBatch, it), &labels);
    StepGraph g = build_step_graph(state, batch, labels,
                                   derive_seed(state.cfg.seed, kStreamNoise, it));

    const double loss = g.tape.value(g.loss).scalar_value();
    if (!std::isfinite(loss)) {
        const double kappa = g.tape.value(g.moms.kappa).scalar_value();
        const double kappa3 = g.tape.value(g.moms.kappa3).scalar_value();
        const double nlin = nlin_variance_mw(state.channel.launch_power_mw, kappa, kappa3,
                                             state.channel.chi, state.channel.kind);
        fail(strf("train: non-finite loss %g at iteration %d (kappa=%.6g kappa3=%.6g "
                  "sigma2=%.6g mW)",
                  loss, iteration, kappa, kappa3, state.channel.sigma2_ase_mw + nlin));
    }

    g.tape.backward(g.loss);

    std::vector<const Tensor*> grads;
    for (std::size_t l = 0; l < g.enc_params.weights.size(); ++l) {
        grads.push_back(&g.tape.grad(g.enc_params.weights[l]));
        grads.push_back(&g.tape.grad(g.enc_params.biases[l]));
    }
    for (std::size_t l = 0; l < g.dec_params.weights.size(); ++l) {
        grads.push_back(&g.tape.grad(g.dec_params.weights[l]));
        grads.push_back(&g.tape.grad(g.dec_params.biases[l]));
    }

    std::vector<Tensor*> params = state.parameters();
    if (state.cfg.optimizer == Optimizer::Adam) {
        state.opt_steps += 1;
        const double b1 = state.cfg.adam_beta1, b2 = state.cfg.adam_beta2;
        const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.opt_steps));
        const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.opt_steps));
        const double lr = state.cfg.learning_rate;
        for (std::size_t p = 0; p < params.size(); ++p) {
            auto& m = state.opt_m[p].data;
            auto& v = state.opt_v[p].data;
            auto& w = params[p]->data;
            const auto& gd = grads[p]->data;
            for (std::size_t i = 0; i < w.size(); ++i) {
                m[i] = b1 * m[i] + (1.0 - b1) * gd[i];
                v[i] = b2 * v[i] + (1.0 - b2) * gd[i] * gd[i];
                w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + state.cfg.adam_eps);
            }
        }
    } else {
        const double lr = state.cfg.learning_rate;
        for (std::size_t p = 0; p < params.size(); ++p) {
            auto& w = params[p]->data;
            const auto& gd = grads[p]->data;
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gd[i];
        }
    }
    return loss;
}

TrainedResult train(const TrainConfig& cfg, const ChannelParams& channel,
                    const std::string& label) {
    TrainState state = TrainState::init(cfg, channel);
    std::vector<std::pair<int, double>> trace;
    for (int it = 0; it < cfg.iterations; ++it) {
        double loss;
        try {
            loss = train_step(state, it);
        } catch (const Error& e) {
            throw TrainDivergence(e.what(), std::move(trace));
        }
        if (it % cfg.trace_every == 0 || it + 1 == cfg.iterations)
            trace.emplace_back(it, loss);
    }

    // extract the constellation; the networks are discarded
    Tensor pts = state.encoder.eval(Tensor::identity(static_cast<std::size_t>(cfg.m)));
    normalize_unit_power(pts);

    TrainedResult r;
    r.constellation.m = cfg.m;
    r.constellation.n = cfg.n;
    r.constellation.points = std::move(pts);
    r.constellation.label = label;
    canonicalize(r.constellation);
    normalize_unit_power(r.constellation.points);
    r.constellation.validate();
    auto [kappa, kappa3] = moments_of(r.constellation.points);
    r.kappa = kappa;
    r.kappa3 = kappa3;
    r.loss_trace = std::move(trace);
    r.config = cfg;
    return r;
}

SweepOutcome sweep(const SweepSpec& spec, const TrainConfig& base, const LinkConfig& link,
                   const ChiTable& chi, const MetricsConfig& metrics, const std::string& label,
                   int jobs) {
    spec.validate();
    base.validate();
    if (jobs < 1) jobs = 1;

    struct Cell {
        bool ok = false;
        TrainedResult result;
        EvalResult eval;
        std::string error;
    };
    const std::size_t n_powers = spec.powers_dbm.size();
    const std::size_t n_grid = n_powers * spec.span_counts.size();
    std::vector<Cell> cells(n_grid);

    auto run_cell = [&](std::size_t g) {
        const double power = spec.powers_dbm[g % n_powers];
        const int spans = spec.span_counts[g / n_powers];
        Cell& cell = cells[g];
        try {
            LinkConfig grid_link = link;
            grid_link.span_count = spans;
            ChannelParams params = ChannelParams::make(grid_link, chi, base.kind, power);
            TrainConfig cfg = base;
            cfg.seed = derive_seed(base.seed, kStreamGrid, g);
            cell.result = train(cfg, params, label);
            cell.result.power_dbm = power;
            cell.result.span_count = spans;
            MetricsConfig mc = metrics;
            mc.seed = derive_seed(metrics.seed, kStreamMi, g);
            cell.eval = evaluate(cell.result.constellation, params, mc);
            cell.ok = true;
        } catch (const Error& e) {
            cell.error = e.what();
        }
    };

    if (jobs == 1) {
        for (std::size_t g = 0; g < n_grid; ++g) run_cell(g);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t g = next.fetch_add(1); g < n_grid; g = next.fetch_add(1))
                run_cell(g);
        };
        std::vector<std::thread> pool;
        const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), n_grid);
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SweepOutcome out;
    for (std::size_t g = 0; g < n_grid; ++g) {
        if (cells[g].ok) {
            out.trained.push_back(std::move(cells[g].result));
            out.evaluations.push_back(cells[g].eval);
        } else {
            out.failures.push_back(
                {spec.powers_dbm[g % n_powers], spec.span_counts[g / n_powers], cells[g].error});
        }
    }
    return out;
}

}  // namespace gcs
