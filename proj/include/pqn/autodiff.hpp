#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqn {

using Vec = std::vector<double>;

/// Trainable array with its gradient accumulator. grad is mutable so that a
/// backward pass can accumulate through const references; values are only
/// touched by the optimizer.
struct ParamTensor {
    std::string name;
    std::vector<std::size_t> shape;
    Vec values;
    mutable Vec grad;

    ParamTensor() = default;
    ParamTensor(std::string name_, std::vector<std::size_t> shape_)
        : name(std::move(name_)), shape(std::move(shape_)) {
        std::size_t total = 1;
        for (auto d : shape)
            total *= d;
        values.assign(total, 0.0);
        grad.assign(total, 0.0);
    }

    std::size_t size() const { return values.size(); }
    std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    void zero_grad() const { std::fill(grad.begin(), grad.end(), 0.0); }
};

/// Vector-valued reverse-mode tape. Each op appends a node holding the
/// forward value and, when recording, a closure that pushes adjoints to its
/// parents (and into ParamTensor::grad for parameter leaves). Nodes live in
/// a deque so references captured by the closures stay valid.
///
/// A non-recording tape evaluates forward values only; backward() on it is
/// an error. The library uses that mode for rollouts and detached branches
/// so that training and evaluation share one implementation of every op.
class Tape {
  public:
    using NodeId = int;

    explicit Tape(bool record = true) : record_(record) {}

    bool recording() const { return record_; }
    std::size_t size() const { return nodes_.size(); }

    const Vec& val(NodeId id) const { return nodes_[id].val; }
    double scalar(NodeId id) const { return nodes_[id].val[0]; }
    /// Adjoint of a node after backward(); mainly for tests.
    const Vec& adjoint(NodeId id) const { return nodes_[id].adj; }

    NodeId input(Vec v) { return push(std::move(v), {}); }
    NodeId input_scalar(double x) { return push(Vec{x}, {}); }

    /// Leaf holding a parameter vector; backward accumulates into its grad.
    NodeId param_leaf(const ParamTensor& p) {
        return push(Vec(p.values), [&p](const Vec& adj) {
            for (std::size_t i = 0; i < adj.size(); ++i)
                p.grad[i] += adj[i];
        });
    }

    /// W x (+ b). W is (m, n) row-major, x has length n.
    NodeId affine(const ParamTensor& W, NodeId x, const ParamTensor* b = nullptr) {
        const Node& xn = nodes_[x];
        std::size_t m = W.rows(), n = W.cols();
        if (xn.val.size() != n)
            throw std::invalid_argument("affine: W columns do not match input length");
        if (b && b->size() != m)
            throw std::invalid_argument("affine: bias length does not match W rows");
        Vec out(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double acc = b ? b->values[i] : 0.0;
            const double* row = W.values.data() + i * n;
            for (std::size_t j = 0; j < n; ++j)
                acc += row[j] * xn.val[j];
            out[i] = acc;
        }
        return push(std::move(out), [this, &W, x, b](const Vec& adj) {
            Node& xn2 = nodes_[x];
            std::size_t m2 = W.rows(), n2 = W.cols();
            for (std::size_t i = 0; i < m2; ++i) {
                double g = adj[i];
                if (g == 0.0)
                    continue;
                const double* row = W.values.data() + i * n2;
                double* grow = W.grad.data() + i * n2;
                for (std::size_t j = 0; j < n2; ++j) {
                    grow[j] += g * xn2.val[j];
                    xn2.adj[j] += g * row[j];
                }
                if (b)
                    b->grad[i] += g;
            }
        });
    }

    /// Wx x + Wh h + b, the fused pre-activation of one recurrent step.
    NodeId affine2(const ParamTensor& Wx, NodeId x, const ParamTensor& Wh, NodeId h,
                   const ParamTensor& b) {
        const Node& xn = nodes_[x];
        const Node& hn = nodes_[h];
        std::size_t m = Wx.rows();
        if (Wh.rows() != m || b.size() != m)
            throw std::invalid_argument("affine2: row counts disagree");
        if (xn.val.size() != Wx.cols() || hn.val.size() != Wh.cols())
            throw std::invalid_argument("affine2: input lengths do not match");
        Vec out(m);
        std::size_t nx = Wx.cols(), nh = Wh.cols();
        for (std::size_t i = 0; i < m; ++i) {
            double acc = b.values[i];
            const double* rx = Wx.values.data() + i * nx;
            for (std::size_t j = 0; j < nx; ++j)
                acc += rx[j] * xn.val[j];
            const double* rh = Wh.values.data() + i * nh;
            for (std::size_t j = 0; j < nh; ++j)
                acc += rh[j] * hn.val[j];
            out[i] = acc;
        }
        return push(std::move(out), [this, &Wx, x, &Wh, h, &b](const Vec& adj) {
            Node& xn2 = nodes_[x];
            Node& hn2 = nodes_[h];
            std::size_t m2 = Wx.rows(), nx2 = Wx.cols(), nh2 = Wh.cols();
            for (std::size_t i = 0; i < m2; ++i) {
                double g = adj[i];
                if (g == 0.0)
                    continue;
                const double* rx = Wx.values.data() + i * nx2;
                double* gx = Wx.grad.data() + i * nx2;
                for (std::size_t j = 0; j < nx2; ++j) {
                    gx[j] += g * xn2.val[j];
                    xn2.adj[j] += g * rx[j];
                }
                const double* rh = Wh.values.data() + i * nh2;
                double* gh = Wh.grad.data() + i * nh2;
                for (std::size_t j = 0; j < nh2; ++j) {
                    gh[j] += g * hn2.val[j];
                    hn2.adj[j] += g * rh[j];
                }
                b.grad[i] += g;
            }
        });
    }

    NodeId add(NodeId a, NodeId b) {
        const Vec& av = nodes_[a].val;
        const Vec& bv = nodes_[b].val;
        if (av.size() != bv.size())
            throw std::invalid_argument("add: length mismatch");
        Vec out(av.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = av[i] + bv[i];
        return push(std::move(out), [this, a, b](const Vec& adj) {
            for (std::size_t i = 0; i < adj.size(); ++i) {
                nodes_[a].adj[i] += adj[i];
                nodes_[b].adj[i] += adj[i];
            }
        });
    }

    /// Elementwise product.
    NodeId mul(NodeId a, NodeId b) {
        const Vec& av = nodes_[a].val;
        const Vec& bv = nodes_[b].val;
        if (av.size() != bv.size())
            throw std::invalid_argument("mul: length mismatch");
        Vec out(av.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = av[i] * bv[i];
        return push(std::move(out), [this, a, b](const Vec& adj) {
            Node& an = nodes_[a];
            Node& bn = nodes_[b];
            for (std::size_t i = 0; i < adj.size(); ++i) {
                an.adj[i] += adj[i] * bn.val[i];
                bn.adj[i] += adj[i] * an.val[i];
            }
        });
    }

    NodeId tanh(NodeId a) {
        Vec out(nodes_[a].val.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = std::tanh(nodes_[a].val[i]);
        NodeId id = push(std::move(out), {});
        if (record_)
            nodes_[id].back = [this, a, id](const Vec& adj) {
                const Vec& y = nodes_[id].val;
                for (std::size_t i = 0; i < adj.size(); ++i)
                    nodes_[a].adj[i] += adj[i] * (1.0 - y[i] * y[i]);
            };
        return id;
    }

    NodeId sigmoid(NodeId a) {
        Vec out(nodes_[a].val.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = 1.0 / (1.0 + std::exp(-nodes_[a].val[i]));
        NodeId id = push(std::move(out), {});
        if (record_)
            nodes_[id].back = [this, a, id](const Vec& adj) {
                const Vec& y = nodes_[id].val;
                for (std::size_t i = 0; i < adj.size(); ++i)
                    nodes_[a].adj[i] += adj[i] * y[i] * (1.0 - y[i]);
            };
        return id;
    }

    NodeId slice(NodeId a, std::size_t offset, std::size_t len) {
        const Vec& av = nodes_[a].val;
        if (offset + len > av.size())
            throw std::invalid_argument("slice: out of range");
        Vec out(av.begin() + offset, av.begin() + offset + len);
        return push(std::move(out), [this, a, offset](const Vec& adj) {
            for (std::size_t i = 0; i < adj.size(); ++i)
                nodes_[a].adj[offset + i] += adj[i];
        });
    }

    /// Scalar dot product against a parameter vector.
    NodeId dot_param(const ParamTensor& v, NodeId x) {
        const Vec& xv = nodes_[x].val;
        if (v.size() != xv.size())
            throw std::invalid_argument("dot_param: length mismatch");
        double acc = 0.0;
        for (std::size_t i = 0; i < xv.size(); ++i)
            acc += v.values[i] * xv[i];
        return push(Vec{acc}, [this, &v, x](const Vec& adj) {
            double g = adj[0];
            Node& xn = nodes_[x];
            for (std::size_t i = 0; i < xn.val.size(); ++i) {
                v.grad[i] += g * xn.val[i];
                xn.adj[i] += g * v.values[i];
            }
        });
    }

    /// Elementwise product with a constant vector (no gradient to c).
    NodeId mul_const(NodeId a, Vec c) {
        const Vec& av = nodes_[a].val;
        if (av.size() != c.size())
            throw std::invalid_argument("mul_const: length mismatch");
        Vec out(av.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = av[i] * c[i];
        return push(std::move(out), [this, a, c = std::move(c)](const Vec& adj) {
            for (std::size_t i = 0; i < adj.size(); ++i)
                nodes_[a].adj[i] += adj[i] * c[i];
        });
    }

    NodeId scale(NodeId a, double s) {
        Vec out(nodes_[a].val.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = s * nodes_[a].val[i];
        return push(std::move(out), [this, a, s](const Vec& adj) {
            for (std::size_t i = 0; i < adj.size(); ++i)
                nodes_[a].adj[i] += adj[i] * s;
        });
    }

    NodeId sub_scalar(NodeId a, double s) {
        Vec out(nodes_[a].val.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = nodes_[a].val[i] - s;
        return push(std::move(out), [this, a](const Vec& adj) {
            for (std::size_t i = 0; i < adj.size(); ++i)
                nodes_[a].adj[i] += adj[i];
        });
    }

    NodeId square(NodeId a) {
        Vec out(nodes_[a].val.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = nodes_[a].val[i] * nodes_[a].val[i];
        return push(std::move(out), [this, a](const Vec& adj) {
            Node& an = nodes_[a];
            for (std::size_t i = 0; i < adj.size(); ++i)
                an.adj[i] += adj[i] * 2.0 * an.val[i];
        });
    }

    /// Clamp with subgradient: passthrough inside [lo, hi], zero outside.
    NodeId clamp(NodeId a, double lo, double hi) {
        const Vec& av = nodes_[a].val;
        Vec out(av.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = std::min(hi, std::max(lo, av[i]));
        return push(std::move(out), [this, a, lo, hi](const Vec& adj) {
            Node& an = nodes_[a];
            for (std::size_t i = 0; i < adj.size(); ++i)
                if (an.val[i] > lo && an.val[i] < hi)
                    an.adj[i] += adj[i];
        });
    }

    /// Concatenation of any number of nodes (commonly per-action scalars).
    NodeId concat(const std::vector<NodeId>& parts) {
        if (parts.empty())
            throw std::invalid_argument("concat: no parts");
        Vec out;
        for (NodeId p : parts)
            out.insert(out.end(), nodes_[p].val.begin(), nodes_[p].val.end());
        return push(std::move(out), [this, parts](const Vec& adj) {
            std::size_t off = 0;
            for (NodeId p : parts) {
                Node& pn = nodes_[p];
                for (std::size_t i = 0; i < pn.val.size(); ++i)
                    pn.adj[i] += adj[off + i];
                off += pn.val.size();
            }
        });
    }

    NodeId sum(NodeId a) {
        double acc = 0.0;
        for (double x : nodes_[a].val)
            acc += x;
        return push(Vec{acc}, [this, a](const Vec& adj) {
            for (double& g : nodes_[a].adj)
                g += adj[0];
        });
    }

    NodeId mean(NodeId a) {
        double inv = 1.0 / static_cast<double>(nodes_[a].val.size());
        double acc = 0.0;
        for (double x : nodes_[a].val)
            acc += x;
        return push(Vec{acc * inv}, [this, a, inv](const Vec& adj) {
            for (double& g : nodes_[a].adj)
                g += adj[0] * inv;
        });
    }

    /// -log softmax(logits)[target], computed with max subtraction. The
    /// adjoint of the logits is (softmax - onehot(target)).
    NodeId softmax_cross_entropy(NodeId logits, std::size_t target) {
        const Vec& z = nodes_[logits].val;
        if (target >= z.size())
            throw std::invalid_argument("softmax_cross_entropy: target out of range");
        double zmax = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (double x : z)
            denom += std::exp(x - zmax);
        double lse = zmax + std::log(denom);
        double loss = lse - z[target];
        Vec probs(z.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            probs[i] = std::exp(z[i] - zmax) / denom;
        return push(Vec{loss}, [this, logits, target, probs = std::move(probs)](const Vec& adj) {
            Node& zn = nodes_[logits];
            for (std::size_t i = 0; i < probs.size(); ++i)
                zn.adj[i] += adj[0] * (probs[i] - (i == target ? 1.0 : 0.0));
        });
    }

    /// Reverse sweep from a scalar loss node. Parameter gradients accumulate
    /// into ParamTensor::grad; call sites are responsible for grads starting
    /// at zero (the optimizer clears them after every update).
    void backward(NodeId loss) {
        if (!record_)
            throw std::logic_error("backward on a non-recording tape");
        if (nodes_[loss].val.size() != 1)
            throw std::invalid_argument("backward: loss must be scalar");
        nodes_[loss].adj[0] = 1.0;
        for (int i = loss; i >= 0; --i)
            if (nodes_[i].back)
                nodes_[i].back(nodes_[i].adj);
    }

    void clear() { nodes_.clear(); }

  private:
    struct Node {
        Vec val;
        Vec adj;
        std::function<void(const Vec&)> back;
    };

    NodeId push(Vec val, std::function<void(const Vec&)> back) {
        Node node;
        node.val = std::move(val);
        if (record_) {
            node.adj.assign(node.val.size(), 0.0);
            node.back = std::move(back);
        }
        nodes_.push_back(std::move(node));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    std::deque<Node> nodes_;
    bool record_;
};

} // namespace pqn
