#include "gcs/mlp.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gcs/errors.hpp"
#include "gcs/rng.hpp"

namespace gcs {

Mlp Mlp::init(const MlpSpec& spec) {
    if (spec.input_width == 0 || spec.output_width == 0) fail("mlp init: zero layer width");
    for (auto h : spec.hidden)
        if (h == 0) fail("mlp init: zero hidden width");

    std::vector<std::size_t> widths;
    widths.push_back(spec.input_width);
    for (auto h : spec.hidden) widths.push_back(h);
    widths.push_back(spec.output_width);

    Rng rng(derive_seed(spec.init_seed, 0x11f0));
    Mlp mlp;
    mlp.spec = spec;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t fan_in = widths[l], fan_out = widths[l + 1];
        DenseLayer layer;
        layer.weights = Tensor::zeros({fan_in, fan_out});
        layer.bias = Tensor::zeros({fan_out});
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (auto& w : layer.weights.data) w = rng.uniform(-a, a);
        const bool last = (l + 2 == widths.size());
        layer.act = last ? Activation::Linear : spec.hidden_act;
        mlp.layers.push_back(std::move(layer));
    }
    return mlp;
}

Tensor Mlp::eval(const Tensor& x) const {
    Tape tape;
    MlpOnTape params = push_params(tape, *this, false);
    Val out = mlp_forward(tape, *this, params, tape.constant(x));
    return tape.value(out);
}

MlpOnTape push_params(Tape& tape, const Mlp& mlp, bool trainable) {
    MlpOnTape p;
    for (const auto& layer : mlp.layers) {
        p.weights.push_back(tape.input(layer.weights, trainable));
        p.biases.push_back(tape.input(layer.bias, trainable));
    }
    return p;
}

Val mlp_forward(Tape& tape, const Mlp& mlp, const MlpOnTape& params, Val x) {
    const Tensor& tx = tape.value(x);
    if (tx.rank() != 2 || tx.shape[1] != mlp.spec.input_width)
        fail(strf("mlp forward: input [%s], expected [B x %zu]", shape_str(tx.shape).c_str(),
                  mlp.spec.input_width));
    Val h = x;
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        h = tape.add(tape.matmul(h, params.weights[l]), params.biases[l]);
        if (mlp.layers[l].act == Activation::Relu) h = tape.relu(h);
    }
    return h;
}

Tensor encode(const Mlp& encoder, const Tensor& one_hots, bool validate) {
    if (validate) {
        if (one_hots.rank() != 2) fail("encode: one-hot batch must be rank 2");
        for (std::size_t r = 0; r < one_hots.shape[0]; ++r) {
            int ones = 0;
            bool clean = true;
            for (std::size_t c = 0; c < one_hots.shape[1]; ++c) {
                const double v = one_hots.at(r, c);
                if (v == 1.0)
                    ++ones;
                else if (v != 0.0)
                    clean = false;
            }
            if (ones != 1 || !clean) fail(strf("encode: row %zu is not one-hot", r));
        }
    }
    return encoder.eval(one_hots);
}

Tensor decode(const Mlp& decoder, const Tensor& points) {
    if (points.rank() != 2 || points.shape[1] != decoder.spec.input_width)
        fail(strf("decode: input [%s], expected [B x %zu]", shape_str(points.shape).c_str(),
                  decoder.spec.input_width));
    return decoder.eval(points);
}

void save_mlp(const std::string& path, const Mlp& mlp) {
    std::ostringstream os;
    os << "mlp " << mlp.layers.size() << "\n";
    os << "widths " << mlp.spec.input_width;
    for (auto h : mlp.spec.hidden) os << " " << h;
    os << " " << mlp.spec.output_width << "\n";
    os << "seed " << mlp.spec.init_seed << "\n";
    for (const auto& layer : mlp.layers) {
        os << "layer " << layer.weights.shape[0] << " " << layer.weights.shape[1] << " "
           << (layer.act == Activation::Relu ? "relu" : "linear") << "\n";
        char buf[32];
        for (std::size_t r = 0; r < layer.weights.shape[0]; ++r) {
            for (std::size_t c = 0; c < layer.weights.shape[1]; ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", layer.weights.at(r, c));
                os << buf << (c + 1 == layer.weights.shape[1] ? "" : " ");
            }
            os << "\n";
        }
        for (std::size_t c = 0; c < layer.bias.shape[0]; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", layer.bias.data[c]);
            os << buf << (c + 1 == layer.bias.shape[0] ? "" : " ");
        }
        os << "\n";
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(strf("cannot open %s for writing", path.c_str()));
    f << os.str();
}

Mlp load_mlp(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(strf("cannot open %s", path.c_str()));
    std::string tag;
    std::size_t n_layers = 0;
    if (!(f >> tag >> n_layers) || tag != "mlp") fail(strf("%s: expected 'mlp' header", path.c_str()));
    Mlp mlp;
    if (!(f >> tag) || tag != "widths") fail(strf("%s: expected 'widths'", path.c_str()));
    std::vector<std::size_t> widths(n_layers + 1);
    for (auto& w : widths)
        if (!(f >> w)) fail(strf("%s: truncated width list", path.c_str()));
    mlp.spec.input_width = widths.front();
    mlp.spec.output_width = widths.back();
    mlp.spec.hidden.assign(widths.begin() + 1, widths.end() - 1);
    if (!(f >> tag >> mlp.spec.init_seed) || tag != "seed")
        fail(strf("%s: expected 'seed'", path.c_str()));
    for (std::size_t l = 0; l < n_layers; ++l) {
        std::size_t in = 0, out = 0;
        std::string act;
        if (!(f >> tag >> in >> out >> act) || tag != "layer")
            fail(strf("%s: expected layer %zu header", path.c_str(), l));
        DenseLayer layer;
        layer.act = act == "relu" ? Activation::Relu : Activation::Linear;
        layer.weights = Tensor::zeros({in, out});
        layer.bias = Tensor::zeros({out});
        for (auto& v : layer.weights.data)
            if (!(f >> v)) fail(strf("%s: truncated weights in layer %zu", path.c_str(), l));
        for (auto& v : layer.bias.data)
            if (!(f >> v)) fail(strf("%s: truncated bias in layer %zu", path.c_str(), l));
        if (l + 1 < n_layers) mlp.spec.hidden[l] = out;
        mlp.layers.push_back(std::move(layer));
    }
    return mlp;
}

}  // namespace gcs
