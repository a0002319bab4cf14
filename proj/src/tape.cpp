#include "gcs/tape.hpp"

#include <algorithm>
#include <cmath>

#include "gcs/errors.hpp"

namespace gcs {

namespace {

const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::MatMul: return "matmul";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Square: return "square";
        case Op::Sqrt: return "sqrt";
        case Op::Relu: return "relu";
        case Op::Abs2Pairs: return "abs2_pairs";
        case Op::ReduceMean: return "reduce_mean";
        case Op::ReduceSum: return "reduce_sum";
        case Op::Softmax: return "softmax";
        case Op::SoftmaxXent: return "softmax_cross_entropy";
    }
    return "?";
}

// Broadcast pattern for binary elementwise ops.
struct Bcast {
    enum Kind { Same, BScalar, AScalar, BRow } kind;
    std::size_t cols = 0;  // BRow only

    static Bcast resolve(const char* op, const Tensor& a, const Tensor& b) {
        if (a.same_shape(b)) return {Same, 0};
        if (b.numel() == 1 && b.rank() == 0) return {BScalar, 0};
        if (a.numel() == 1 && a.rank() == 0) return {AScalar, 0};
        if (a.rank() == 2 && b.rank() == 1 && b.shape[0] == a.shape[1]) return {BRow, a.shape[1]};
        fail(strf("%s: shape mismatch [%s] vs [%s]", op, shape_str(a.shape).c_str(),
                  shape_str(b.shape).c_str()));
    }

    std::size_t ia(std::size_t o) const { return kind == AScalar ? 0 : o; }
    std::size_t ib(std::size_t o) const {
        switch (kind) {
            case Same: return o;
            case BScalar: return 0;
            case AScalar: return o;
            case BRow: return o % cols;
        }
        return o;
    }
    const std::vector<std::size_t>& out_shape(const Tensor& a, const Tensor& b) const {
        return kind == AScalar ? b.shape : a.shape;
    }
};

// C[n x m] = A[n x k] * B[k x m] into a zeroed buffer; ikj kernel, the
// zero-skip pays off for one-hot operands.
void matmul_nn(const double* __restrict a, const double* __restrict b, double* __restrict c,
               std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

// dA[n x k] += G[n x m] * B^T; four accumulators break the FP latency chain
// (fixed summation order, still deterministic)
void matmul_grad_a(const double* __restrict g, const double* __restrict b, double* __restrict da,
                   std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* grow = g + i * m;
        double* darow = da + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * m;
            double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
            std::size_t j = 0;
            for (; j + 4 <= m; j += 4) {
                a0 += grow[j] * brow[j];
                a1 += grow[j + 1] * brow[j + 1];
                a2 += grow[j + 2] * brow[j + 2];
                a3 += grow[j + 3] * brow[j + 3];
            }
            double acc = (a0 + a1) + (a2 + a3);
            for (; j < m; ++j) acc += grow[j] * brow[j];
            darow[p] += acc;
        }
    }
}

// dB[k x m] += A^T * G (axpy over contiguous rows)
void matmul_grad_b(const double* __restrict a, const double* __restrict g, double* __restrict db,
                   std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a + i * k;
        const double* grow = g + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* dbrow = db + p * m;
            for (std::size_t j = 0; j < m; ++j) dbrow[j] += av * grow[j];
        }
    }
}

}  // namespace

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

const Tape::Node& Tape::node(Val v) const {
    if (!v.valid() || v.i >= static_cast<int>(nodes_.size())) fail("invalid tape value handle");
    return nodes_[static_cast<std::size_t>(v.i)];
}

Val Tape::input(Tensor value, bool trainable) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.needs_grad = trainable;
    return {push(std::move(n))};
}

const Tensor& Tape::value(Val v) const { return node(v).value; }

const Tensor& Tape::grad(Val v) const {
    const Node& n = node(v);
    if (n.adj.data.empty()) fail("grad() before backward(), or node does not require gradients");
    return n.adj;
}

Val Tape::binary(Op op, Val a, Val b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    const Bcast bc = Bcast::resolve(op_name(op), ta, tb);
    Node n;
    n.op = op;
    n.a = a.i;
    n.b = b.i;
    n.needs_grad = nodes_[a.i].needs_grad || nodes_[b.i].needs_grad;
    Tensor out = Tensor::zeros(bc.out_shape(ta, tb));
    const std::size_t count = out.numel();
    switch (op) {
        case Op::Add:
            for (std::size_t o = 0; o < count; ++o)
                out.data[o] = ta.data[bc.ia(o)] + tb.data[bc.ib(o)];
            break;
        case Op::Sub:
            for (std::size_t o = 0; o < count; ++o)
                out.data[o] = ta.data[bc.ia(o)] - tb.data[bc.ib(o)];
            break;
        case Op::Mul:
            for (std::size_t o = 0; o < count; ++o)
                out.data[o] = ta.data[bc.ia(o)] * tb.data[bc.ib(o)];
            break;
        case Op::Div:
            for (std::size_t o = 0; o < count; ++o) {
                const double d = tb.data[bc.ib(o)];
                if (d == 0.0) fail("div: division by zero");
                out.data[o] = ta.data[bc.ia(o)] / d;
            }
            break;
        default: fail("binary: bad op");
    }
    n.value = std::move(out);
    return {push(std::move(n))};
}

Val Tape::add(Val a, Val b) { return binary(Op::Add, a, b); }
Val Tape::sub(Val a, Val b) { return binary(Op::Sub, a, b); }
Val Tape::mul(Val a, Val b) { return binary(Op::Mul, a, b); }
Val Tape::div(Val a, Val b) { return binary(Op::Div, a, b); }

Val Tape::matmul(Val a, Val b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (ta.rank() != 2 || tb.rank() != 2 || ta.shape[1] != tb.shape[0])
        fail(strf("matmul: shape mismatch [%s] vs [%s]", shape_str(ta.shape).c_str(),
                  shape_str(tb.shape).c_str()));
    Node n;
    n.op = Op::MatMul;
    n.a = a.i;
    n.b = b.i;
    n.needs_grad = nodes_[a.i].needs_grad || nodes_[b.i].needs_grad;
    n.value = Tensor::zeros({ta.shape[0], tb.shape[1]});
    matmul_nn(ta.data.data(), tb.data.data(), n.value.data.data(), ta.shape[0], ta.shape[1],
              tb.shape[1]);
    return {push(std::move(n))};
}

Val Tape::unary(Op op, Val a) {
    const Tensor& ta = node(a).value;
    Node n;
    n.op = op;
    n.a = a.i;
    n.needs_grad = nodes_[a.i].needs_grad;
    Tensor out = ta;
    switch (op) {
        case Op::Exp:
            for (auto& v : out.data) v = std::exp(v);
            break;
        case Op::Log:
            for (auto& v : out.data) {
                if (v <= 0.0) fail(strf("log: non-positive input %g", v));
                v = std::log(v);
            }
            break;
        case Op::Square:
            for (auto& v : out.data) v = v * v;
            break;
        case Op::Sqrt:
            for (auto& v : out.data) {
                if (v < 0.0) fail(strf("sqrt: negative input %g", v));
                v = std::sqrt(v);
            }
            break;
        case Op::Relu:
            for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
            break;
        default: fail("unary: bad op");
    }
    n.value = std::move(out);
    return {push(std::move(n))};
}

Val Tape::exp(Val a) { return unary(Op::Exp, a); }
Val Tape::log(Val a) { return unary(Op::Log, a); }
Val Tape::square(Val a) { return unary(Op::Square, a); }
Val Tape::sqrt(Val a) { return unary(Op::Sqrt, a); }
Val Tape::relu(Val a) { return unary(Op::Relu, a); }

Val Tape::abs2_pairs(Val a) {
    const Tensor& ta = node(a).value;
    Node n;
    n.op = Op::Abs2Pairs;
    n.a = a.i;
    n.needs_grad = nodes_[a.i].needs_grad;
    if (ta.rank() == 1) {
        if (ta.shape[0] % 2) fail(strf("abs2_pairs: odd length %zu", ta.shape[0]));
        const std::size_t c = ta.shape[0] / 2;
        n.value = Tensor::zeros({c});
        for (std::size_t j = 0; j < c; ++j) {
            const double re = ta.data[2 * j], im = ta.data[2 * j + 1];
            n.value.data[j] = re * re + im * im;
        }
    } else if (ta.rank() == 2) {
        if (ta.shape[1] % 2) fail(strf("abs2_pairs: odd column count %zu", ta.shape[1]));
        const std::size_t rows = ta.shape[0], c = ta.shape[1] / 2;
        n.value = Tensor::zeros({rows, c});
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < c; ++j) {
                const double re = ta.at(r, 2 * j), im = ta.at(r, 2 * j + 1);
                n.value.data[r * c + j] = re * re + im * im;
            }
    } else {
        fail(strf("abs2_pairs: rank-%zu input", ta.rank()));
    }
    return {push(std::move(n))};
}

Val Tape::reduce_mean(Val a) {
    const Tensor& ta = node(a).value;
    if (ta.numel() == 0) fail("reduce_mean: empty tensor");
    Node n;
    n.op = Op::ReduceMean;
    n.a = a.i;
    n.needs_grad = nodes_[a.i].needs_grad;
    double s = 0.0;
    for (double v : ta.data) s += v;
    n.value = Tensor::scalar(s / static_cast<double>(ta.numel()));
    return {push(std::move(n))};
}

Val Tape::reduce_sum(Val a) {
    const Tensor& ta = node(a).value;
    Node n;
    n.op = Op::ReduceSum;
    n.a = a.i;
    n.needs_grad = nodes_[a.i].needs_grad;
    double s = 0.0;
    for (double v : ta.data) s += v;
    n.value = Tensor::scalar(s);
    return {push(std::move(n))};
}

Val Tape::softmax(Val a) {
    const Tensor& ta = node(a).value;
    if (ta.rank() != 1 && ta.rank() != 2) fail(strf("softmax: rank-%zu input", ta.rank()));
    const std::size_t rows = ta.rank() == 2 ? ta.shape[0] : 1;
    const std::size_t m = ta.rank() == 2 ? ta.shape[1] : ta.shape[0];
    Node n;
    n.op = Op::Softmax;
    n.a = a.i;
    n.needs_grad = nodes_[a.i].needs_grad;
    Tensor out = ta;
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = out.data.data() + r * m;
        const double mx = *std::max_element(row, row + m);
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            row[j] = std::exp(row[j] - mx);
            s += row[j];
        }
        for (std::size_t j = 0; j < m; ++j) row[j] /= s;
    }
    n.value = std::move(out);
    return {push(std::move(n))};
}

Val Tape::softmax_cross_entropy(Val logits, std::vector<int> labels) {
    const Tensor& ta = node(logits).value;
    if (ta.rank() != 2) fail(strf("softmax_cross_entropy: rank-%zu logits", ta.rank()));
    const std::size_t rows = ta.shape[0], m = ta.shape[1];
    if (labels.size() != rows)
        fail(strf("softmax_cross_entropy: %zu labels for %zu rows", labels.size(), rows));
    Node n;
    n.op = Op::SoftmaxXent;
    n.a = logits.i;
    n.needs_grad = nodes_[logits.i].needs_grad;
    n.aux = ta;  // softmax cached for backward
    double loss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= m)
            fail(strf("softmax_cross_entropy: label %d out of range [0,%zu)", labels[r], m));
        double* row = n.aux.data.data() + r * m;
        const double mx = *std::max_element(row, row + m);
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            row[j] = std::exp(row[j] - mx);
            s += row[j];
        }
        // -log p[label] = log(sum) - (z_label - mx)
        loss += std::log(s) - std::log(row[static_cast<std::size_t>(labels[r])]);
        for (std::size_t j = 0; j < m; ++j) row[j] /= s;
    }
    n.labels = std::move(labels);
    n.value = Tensor::scalar(loss / static_cast<double>(rows));
    return {push(std::move(n))};
}

void Tape::accumulate(int idx, std::size_t at, double g) {
    nodes_[static_cast<std::size_t>(idx)].adj.data[at] += g;
}

void Tape::backward(Val root) {
    const Node& rn = node(root);
    if (rn.value.numel() != 1)
        fail(strf("backward: root must be scalar, got shape [%s]",
                  shape_str(rn.value.shape).c_str()));
    // zero-init adjoints for every node that participates
    for (auto& n : nodes_) {
        if (n.needs_grad)
            n.adj = Tensor::zeros(n.value.shape);
        else
            n.adj = Tensor();
    }
    Node& r = nodes_[static_cast<std::size_t>(root.i)];
    if (!r.needs_grad) fail("backward: no trainable leaf feeds the root");
    r.adj.data[0] = 1.0;
    for (int i = root.i; i >= 0; --i) backward_node(i);
}

void Tape::backward_node(int i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.needs_grad || n.op == Op::Leaf || n.adj.data.empty()) return;
    const std::vector<double>& g = n.adj.data;
    Node& na = nodes_[static_cast<std::size_t>(n.a)];
    const bool wa = na.needs_grad;

    switch (n.op) {
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div: {
            Node& nb = nodes_[static_cast<std::size_t>(n.b)];
            const bool wb = nb.needs_grad;
            const Bcast bc = Bcast::resolve(op_name(n.op), na.value, nb.value);
            const std::size_t count = n.value.numel();
            if (bc.kind == Bcast::Same && n.op == Op::Mul) {
                // hot path: elementwise product of equal shapes
                const double* bv = nb.value.data.data();
                const double* av = na.value.data.data();
                if (wa) {
                    double* da = na.adj.data.data();
                    for (std::size_t o = 0; o < count; ++o) da[o] += g[o] * bv[o];
                }
                if (wb) {
                    double* db = nb.adj.data.data();
                    for (std::size_t o = 0; o < count; ++o) db[o] += g[o] * av[o];
                }
                break;
            }
            if (bc.kind == Bcast::Same && n.op == Op::Add) {
                if (wa) {
                    double* da = na.adj.data.data();
                    for (std::size_t o = 0; o < count; ++o) da[o] += g[o];
                }
                if (wb) {
                    double* db = nb.adj.data.data();
                    for (std::size_t o = 0; o < count; ++o) db[o] += g[o];
                }
                break;
            }
            if (bc.kind == Bcast::BRow && n.op == Op::Add) {
                // bias add: rank-2 plus a row vector
                const std::size_t cols = bc.cols, rows = count / cols;
                if (wa) {
                    double* da = na.adj.data.data();
                    for (std::size_t o = 0; o < count; ++o) da[o] += g[o];
                }
                if (wb) {
                    double* db = nb.adj.data.data();
                    for (std::size_t r = 0; r < rows; ++r) {
                        const double* gr = g.data() + r * cols;
                        for (std::size_t c = 0; c < cols; ++c) db[c] += gr[c];
                    }
                }
                break;
            }
            for (std::size_t o = 0; o < count; ++o) {
                const double go = g[o];
                if (go == 0.0) continue;
                const std::size_t ia = bc.ia(o), ib = bc.ib(o);
                switch (n.op) {
                    case Op::Add:
                        if (wa) na.adj.data[ia] += go;
                        if (wb) nb.adj.data[ib] += go;
                        break;
                    case Op::Sub:
                        if (wa) na.adj.data[ia] += go;
                        if (wb) nb.adj.data[ib] -= go;
                        break;
                    case Op::Mul:
                        if (wa) na.adj.data[ia] += go * nb.value.data[ib];
                        if (wb) nb.adj.data[ib] += go * na.value.data[ia];
                        break;
                    case Op::Div: {
                        const double d = nb.value.data[ib];
                        if (wa) na.adj.data[ia] += go / d;
                        if (wb) nb.adj.data[ib] -= go * na.value.data[ia] / (d * d);
                        break;
                    }
                    default: break;
                }
            }
            break;
        }
        case Op::MatMul: {
            Node& nb = nodes_[static_cast<std::size_t>(n.b)];
            const std::size_t rows = na.value.shape[0], k = na.value.shape[1],
                              m = nb.value.shape[1];
            if (wa)
                matmul_grad_a(g.data(), nb.value.data.data(), na.adj.data.data(), rows, k, m);
            if (nb.needs_grad)
                matmul_grad_b(na.value.data.data(), g.data(), nb.adj.data.data(), rows, k, m);
            break;
        }
        case Op::Exp:
            if (wa)
                for (std::size_t o = 0; o < g.size(); ++o)
                    na.adj.data[o] += g[o] * n.value.data[o];
            break;
        case Op::Log:
            if (wa)
                for (std::size_t o = 0; o < g.size(); ++o)
                    na.adj.data[o] += g[o] / na.value.data[o];
            break;
        case Op::Square:
            if (wa)
                for (std::size_t o = 0; o < g.size(); ++o)
                    na.adj.data[o] += g[o] * 2.0 * na.value.data[o];
            break;
        case Op::Sqrt:
            if (wa)
                for (std::size_t o = 0; o < g.size(); ++o)
                    na.adj.data[o] += g[o] * 0.5 / n.value.data[o];
            break;
        case Op::Relu:
            if (wa)
                for (std::size_t o = 0; o < g.size(); ++o)
                    if (na.value.data[o] > 0.0) na.adj.data[o] += g[o];
            break;
        case Op::Abs2Pairs:
            if (wa) {
                const std::size_t c = n.value.rank() == 2 ? n.value.shape[1] : n.value.shape[0];
                const std::size_t rows = n.value.numel() / c;
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < c; ++j) {
                        const double go = g[r * c + j];
                        if (go == 0.0) continue;
                        na.adj.data[r * 2 * c + 2 * j] +=
                            go * 2.0 * na.value.data[r * 2 * c + 2 * j];
                        na.adj.data[r * 2 * c + 2 * j + 1] +=
                            go * 2.0 * na.value.data[r * 2 * c + 2 * j + 1];
                    }
            }
            break;
        case Op::ReduceMean:
            if (wa) {
                const double go = g[0] / static_cast<double>(na.value.numel());
                for (auto& x : na.adj.data) x += go;
            }
            break;
        case Op::ReduceSum:
            if (wa) {
                const double go = g[0];
                for (auto& x : na.adj.data) x += go;
            }
            break;
        case Op::Softmax:
            if (wa) {
                const std::size_t m =
                    n.value.rank() == 2 ? n.value.shape[1] : n.value.shape[0];
                const std::size_t rows = n.value.numel() / m;
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* p = n.value.data.data() + r * m;
                    const double* gr = g.data() + r * m;
                    double dot = 0.0;
                    for (std::size_t j = 0; j < m; ++j) dot += gr[j] * p[j];
                    for (std::size_t j = 0; j < m; ++j)
                        na.adj.data[r * m + j] += p[j] * (gr[j] - dot);
                }
            }
            break;
        case Op::SoftmaxXent:
            if (wa) {
                const std::size_t rows = na.value.shape[0], m = na.value.shape[1];
                const double go = g[0] / static_cast<double>(rows);
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* p = n.aux.data.data() + r * m;
                    double* da = na.adj.data.data() + r * m;
                    for (std::size_t j = 0; j < m; ++j) da[j] += go * p[j];
                    da[static_cast<std::size_t>(n.labels[r])] -= go;
                }
            }
            break;
        case Op::Leaf: break;
    }
}

}  // namespace gcs
