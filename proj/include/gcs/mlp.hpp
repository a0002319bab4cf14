#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gcs/tape.hpp"
#include "gcs/tensor.hpp"

namespace gcs {

enum class Activation { Relu, Linear };

struct DenseLayer {
    Tensor weights;  // [in x out]
    Tensor bias;     // [out]
    Activation act = Activation::Linear;
};

struct MlpSpec {
    std::size_t input_width = 0;
    std::size_t output_width = 0;
    std::vector<std::size_t> hidden;  // empty -> single linear map
    Activation hidden_act = Activation::Relu;
    std::uint64_t init_seed = 0;
};

// Plain multilayer perceptron; hidden layers use the spec activation, the
// output layer is linear. Parameters mutate only inside an optimizer step.
struct Mlp {
    MlpSpec spec;
    std::vector<DenseLayer> layers;

    // uniform [-a, a] init with a = sqrt(6 / (fan_in + fan_out))
    static Mlp init(const MlpSpec& spec);

    Tensor eval(const Tensor& x) const;  // forward off-tape, [B x in] -> [B x out]
};

// Parameter leaves of one MLP registered on a tape.
struct MlpOnTape {
    std::vector<Val> weights;
    std::vector<Val> biases;
};

MlpOnTape push_params(Tape& tape, const Mlp& mlp, bool trainable = true);
Val mlp_forward(Tape& tape, const Mlp& mlp, const MlpOnTape& params, Val x);

// Encoder/decoder views per the auto-encoder composition: the encoder maps
// one-hot rows to constellation candidates, the decoder maps impaired
// points to logits whose softmax is the posterior estimate.
Tensor encode(const Mlp& encoder, const Tensor& one_hots, bool validate = true);
Tensor decode(const Mlp& decoder, const Tensor& points);

void save_mlp(const std::string& path, const Mlp& mlp);
Mlp load_mlp(const std::string& path);

}  // namespace gcs
