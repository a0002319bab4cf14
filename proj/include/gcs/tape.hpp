#pragma once

#include <cstdint>
#include <vector>

#include "gcs/tensor.hpp"

namespace gcs {

// Reverse-mode autodiff over a define-by-run tape. Values are computed
// eagerly as nodes are recorded; backward() walks the tape in reverse and
// accumulates adjoints. A tape is single-threaded; independent tapes may
// run concurrently.
//
// Binary elementwise ops broadcast a scalar against anything and a rank-1
// row vector against the columns of a rank-2 operand (all the MLP and
// channel graphs need). Gradients are summed over broadcast dimensions.

class Tape;

struct Val {
    int i = -1;
    bool valid() const { return i >= 0; }
};

enum class Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    MatMul,
    Exp,
    Log,
    Square,
    Sqrt,
    Relu,
    Abs2Pairs,
    ReduceMean,
    ReduceSum,
    Softmax,
    SoftmaxXent,
};

class Tape {
  public:
    // leaves
    Val input(Tensor value, bool trainable);
    Val constant(Tensor value) { return input(std::move(value), false); }
    Val scalar(double v) { return constant(Tensor::scalar(v)); }

    // elementwise / linear algebra
    Val add(Val a, Val b);
    Val sub(Val a, Val b);
    Val mul(Val a, Val b);
    Val div(Val a, Val b);
    Val matmul(Val a, Val b);
    Val exp(Val a);
    Val log(Val a);
    Val square(Val a);
    Val sqrt(Val a);
    Val relu(Val a);

    // |x|^2 per complex pair: [..., 2C] -> [..., C]
    Val abs2_pairs(Val a);

    // full reductions to a scalar
    Val reduce_mean(Val a);
    Val reduce_sum(Val a);

    // row-wise softmax ([B x M] or a single rank-1 row)
    Val softmax(Val a);

    // fused, log-sum-exp stabilized; returns mean cross-entropy in nats
    Val softmax_cross_entropy(Val logits, std::vector<int> labels);

    const Tensor& value(Val v) const;

    // Root must be scalar. Adjoints are zeroed, then accumulated in reverse
    // tape order; repeated calls on the same graph are bit-identical.
    void backward(Val root);

    const Tensor& grad(Val v) const;

    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Op op = Op::Leaf;
        int a = -1;
        int b = -1;
        Tensor value;
        Tensor adj;
        Tensor aux;               // SoftmaxXent: cached softmax
        std::vector<int> labels;  // SoftmaxXent targets
        bool needs_grad = false;
    };

    std::vector<Node> nodes_;

    int push(Node n);
    Val binary(Op op, Val a, Val b);
    Val unary(Op op, Val a);
    const Node& node(Val v) const;
    void accumulate(int idx, std::size_t at, double g);
    void backward_node(int i);
};

}  // namespace gcs
