#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mmmf/error.hpp"
#include "mmmf/random.hpp"
#include "mmmf/tensor.hpp"

/// Reverse-mode automatic differentiation over dense matrices.
namespace mmmf::ad {

/// Trainable matrix with its accumulated gradient.
template <typename S>
struct Parameter {
    std::string name;
    Matrix<S> value;
    Matrix<S> grad;

    Parameter(std::string n, Matrix<S> v) : name(std::move(n)), value(std::move(v)), grad(Matrix<S>::Zero(value.rows(), value.cols())) {}
    void zero_grad() { grad.setZero(); }
    Eigen::Index size() const { return value.size(); }
};

/// Handle to a node on a Tape.
struct Var {
    int id = -1;
    bool valid() const noexcept { return id >= 0; }
};

/**
 * @brief Records matrix operations and replays them backwards.
 *
 * A tape lives for one forward/backward pass. Parameters enter through
 * param(); after backward() their `grad` fields hold the accumulated
 * gradients. With gradients disabled, no backward closures are recorded.
 */
template <typename S>
class Tape {
public:
    using Mat = Matrix<S>;

    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool grad_enabled() const noexcept { return grad_enabled_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    const Mat& value(Var v) const {
        const auto& n = nodes_.at(static_cast<std::size_t>(v.id));
        return n.ref ? *n.ref : n.value;
    }
    /// Gradient of the last backward() target w.r.t. `v`; empty if none flowed.
    const Mat& grad(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).grad; }

    Var constant(Mat m) { return push(std::move(m), false); }

    Var param(Parameter<S>& p) {
        Var v = push(Mat(), grad_enabled_);
        auto& n = node(v);
        n.ref = &p.value;
        if (n.requires_grad) {
            n.backward = [this, v, &p] { p.grad += node(v).grad; };
        }
        return v;
    }

    Var matmul(Var a, Var b) {
        Var out = push(value(a) * value(b), needs(a, b));
        on_backward(out, [this, a, b, out] {
            const Mat& g = node(out).grad;
            if (rg(a)) accum(a, g * value(b).transpose());
            if (rg(b)) accum(b, value(a).transpose() * g);
        });
        return out;
    }

    /// x W + b with b a (1, cols) row.
    Var affine(Var x, Var w, Var b) {
        if (value(b).rows() != 1 || value(b).cols() != value(w).cols() || value(x).cols() != value(w).rows()) {
            throw ContractError("affine: shape mismatch");
        }
        Mat y(value(x).rows(), value(w).cols());
        y.noalias() = value(x) * value(w);
        y.rowwise() += value(b).row(0);
        Var out = push(std::move(y), grad_enabled_ && (rg(x) || rg(w) || rg(b)));
        on_backward(out, [this, x, w, b, out] {
            const Mat& g = node(out).grad;
            if (rg(x)) accum(x, g * value(w).transpose());
            if (rg(w)) accum(w, value(x).transpose() * g);
            if (rg(b)) accum(b, g.colwise().sum());
        });
        return out;
    }

    Var add(Var a, Var b) {
        check_same(a, b, "add");
        Var out = push(value(a) + value(b), needs(a, b));
        on_backward(out, [this, a, b, out] {
            if (rg(a)) accum(a, node(out).grad);
            if (rg(b)) accum(b, node(out).grad);
        });
        return out;
    }

    Var sub(Var a, Var b) {
        check_same(a, b, "sub");
        Var out = push(value(a) - value(b), needs(a, b));
        on_backward(out, [this, a, b, out] {
            if (rg(a)) accum(a, node(out).grad);
            if (rg(b)) accum(b, -node(out).grad);
        });
        return out;
    }

    /// Elementwise product.
    Var mul(Var a, Var b) {
        check_same(a, b, "mul");
        Var out = push(value(a).cwiseProduct(value(b)), needs(a, b));
        on_backward(out, [this, a, b, out] {
            const Mat& g = node(out).grad;
            if (rg(a)) accum(a, g.cwiseProduct(value(b)));
            if (rg(b)) accum(b, g.cwiseProduct(value(a)));
        });
        return out;
    }

    /// Adds a (1, cols) row to every row of `a`.
    Var add_row(Var a, Var row) {
        if (value(row).rows() != 1 || value(row).cols() != value(a).cols()) {
            throw ContractError("add_row: bias shape mismatch");
        }
        Var out = push(value(a).rowwise() + value(row).row(0), needs(a, row));
        on_backward(out, [this, a, row, out] {
            if (rg(a)) accum(a, node(out).grad);
            if (rg(row)) accum(row, node(out).grad.colwise().sum());
        });
        return out;
    }

    Var scale(Var a, S s) {
        Var out = push(value(a) * s, needs(a));
        on_backward(out, [this, a, s, out] { accum(a, node(out).grad * s); });
        return out;
    }

    Var sigmoid(Var a) {
        Var out = push(value(a).unaryExpr([](S x) { return S(1) / (S(1) + std::exp(-x)); }), needs(a));
        on_backward(out, [this, a, out] {
            const Mat& y = value(out);
            accum(a, node(out).grad.cwiseProduct(y.cwiseProduct((S(1) - y.array()).matrix())));
        });
        return out;
    }

    Var tanh(Var a) {
        Var out = push(value(a).array().tanh().matrix(), needs(a));
        on_backward(out, [this, a, out] {
            const Mat& y = value(out);
            accum(a, node(out).grad.cwiseProduct((S(1) - y.array().square()).matrix()));
        });
        return out;
    }

    Var relu(Var a) {
        Var out = push(value(a).cwiseMax(S(0)), needs(a));
        on_backward(out, [this, a, out] {
            accum(a, node(out).grad.cwiseProduct((value(a).array() > S(0)).template cast<S>().matrix()));
        });
        return out;
    }

    Var slice_rows(Var a, Eigen::Index start, Eigen::Index n) {
        Var out = push(value(a).middleRows(start, n), needs(a));
        on_backward(out, [this, a, start, n, out] {
            ensure_grad(a).middleRows(start, n) += node(out).grad;
        });
        return out;
    }

    Var slice_cols(Var a, Eigen::Index start, Eigen::Index n) {
        Var out = push(value(a).middleCols(start, n), needs(a));
        on_backward(out, [this, a, start, n, out] {
            ensure_grad(a).middleCols(start, n) += node(out).grad;
        });
        return out;
    }

    Var concat_rows(const std::vector<Var>& parts) {
        if (parts.empty()) throw ContractError("concat_rows: no inputs");
        Eigen::Index rows = 0;
        const Eigen::Index cols = value(parts.front()).cols();
        bool req = false;
        for (Var p : parts) {
            if (value(p).cols() != cols) throw ContractError("concat_rows: column mismatch");
            rows += value(p).rows();
            req = req || rg(p);
        }
        Mat m(rows, cols);
        Eigen::Index r = 0;
        for (Var p : parts) {
            m.middleRows(r, value(p).rows()) = value(p);
            r += value(p).rows();
        }
        Var out = push(std::move(m), req && grad_enabled_);
        on_backward(out, [this, parts, out] {
            Eigen::Index r0 = 0;
            for (Var p : parts) {
                const auto n = value(p).rows();
                if (rg(p)) accum(p, node(out).grad.middleRows(r0, n));
                r0 += n;
            }
        });
        return out;
    }

    Var concat_cols(const std::vector<Var>& parts) {
        if (parts.empty()) throw ContractError("concat_cols: no inputs");
        const Eigen::Index rows = value(parts.front()).rows();
        Eigen::Index cols = 0;
        bool req = false;
        for (Var p : parts) {
            if (value(p).rows() != rows) throw ContractError("concat_cols: row mismatch");
            cols += value(p).cols();
            req = req || rg(p);
        }
        Mat m(rows, cols);
        Eigen::Index c = 0;
        for (Var p : parts) {
            m.middleCols(c, value(p).cols()) = value(p);
            c += value(p).cols();
        }
        Var out = push(std::move(m), req && grad_enabled_);
        on_backward(out, [this, parts, out] {
            Eigen::Index c0 = 0;
            for (Var p : parts) {
                const auto n = value(p).cols();
                if (rg(p)) accum(p, node(out).grad.middleCols(c0, n));
                c0 += n;
            }
        });
        return out;
    }

    /// Moves rows down by `shift`, filling the top with zeros (a causal delay in time-major layout).
    Var shift_rows(Var a, Eigen::Index shift) {
        const Mat& x = value(a);
        Mat m = Mat::Zero(x.rows(), x.cols());
        if (shift < x.rows()) m.bottomRows(x.rows() - shift) = x.topRows(x.rows() - shift);
        Var out = push(std::move(m), needs(a));
        on_backward(out, [this, a, shift, out] {
            const Mat& g = node(out).grad;
            if (shift < g.rows()) ensure_grad(a).topRows(g.rows() - shift) += g.bottomRows(g.rows() - shift);
        });
        return out;
    }

    /// Inverted dropout; identity when p == 0.
    Var dropout(Var a, double p, Rng& rng) {
        if (p <= 0.0) return a;
        if (p >= 1.0) throw ContractError("dropout rate must be < 1");
        std::bernoulli_distribution keep(1.0 - p);
        const S scale = S(1.0 / (1.0 - p));
        Mat mask(value(a).rows(), value(a).cols());
        for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : S(0);
        return mul(a, constant(std::move(mask)));
    }

    /// Row-wise layer normalization with learned (1, cols) gain and bias.
    Var layer_norm(Var a, Var gain, Var bias, S eps = S(1e-5)) {
        const Mat& x = value(a);
        const auto cols = x.cols();
        Mat xhat(x.rows(), cols);
        Eigen::Matrix<S, Eigen::Dynamic, 1> inv_std(x.rows());
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            const S mu = x.row(r).mean();
            const S var = (x.row(r).array() - mu).square().mean();
            inv_std(r) = S(1) / std::sqrt(var + eps);
            xhat.row(r) = (x.row(r).array() - mu) * inv_std(r);
        }
        Mat y = (xhat.array().rowwise() * value(gain).row(0).array()).rowwise() + value(bias).row(0).array();
        Var out = push(std::move(y), needs(a, gain) || needs(bias));
        on_backward(out, [this, a, gain, bias, out, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
            const Mat& g = node(out).grad;
            if (rg(gain)) accum(gain, g.cwiseProduct(xhat).colwise().sum());
            if (rg(bias)) accum(bias, g.colwise().sum());
            if (rg(a)) {
                Mat dxhat = g.array().rowwise() * value(gain).row(0).array();
                const auto n = static_cast<S>(dxhat.cols());
                Mat dx(dxhat.rows(), dxhat.cols());
                for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
                    const S m1 = dxhat.row(r).sum() / n;
                    const S m2 = dxhat.row(r).dot(xhat.row(r)) / n;
                    dx.row(r) = (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2) * inv_std(r);
                }
                accum(a, dx);
            }
        });
        return out;
    }

    /**
     * @brief Multi-head scaled dot-product self-attention over time-major inputs.
     *
     * q, k, v are (length * batch, width); every sample attends over all of its
     * own time steps. Returns the concatenated head outputs (before the output
     * projection).
     */
    Var attention(Var q, Var k, Var v, int heads, Eigen::Index batch) {
        const Mat& Q = value(q);
        const Mat& K = value(k);
        const Mat& V = value(v);
        const Eigen::Index width = Q.cols();
        if (heads < 1 || width % heads != 0) throw ContractError("attention: width not divisible by heads");
        if (batch < 1 || Q.rows() % batch != 0) throw ContractError("attention: rows not a multiple of batch");
        const Eigen::Index len = Q.rows() / batch;
        const Eigen::Index dh = width / heads;
        const S scale = S(1) / std::sqrt(static_cast<S>(dh));

        auto gather = [batch, len, dh](const Mat& src, Eigen::Index b, Eigen::Index h) {
            Mat m(len, dh);
            for (Eigen::Index t = 0; t < len; ++t) m.row(t) = src.block(t * batch + b, h * dh, 1, dh);
            return m;
        };

        Mat outm(Q.rows(), width);
        std::vector<Mat> probs(static_cast<std::size_t>(batch * heads));
        for (Eigen::Index b = 0; b < batch; ++b) {
            for (Eigen::Index h = 0; h < heads; ++h) {
                const Mat qb = gather(Q, b, h), kb = gather(K, b, h), vb = gather(V, b, h);
                Mat s = (qb * kb.transpose()) * scale;
                for (Eigen::Index r = 0; r < len; ++r) {
                    const S mx = s.row(r).maxCoeff();
                    s.row(r) = (s.row(r).array() - mx).exp();
                    s.row(r) /= s.row(r).sum();
                }
                const Mat o = s * vb;
                for (Eigen::Index t = 0; t < len; ++t) outm.block(t * batch + b, h * dh, 1, dh) = o.row(t);
                probs[static_cast<std::size_t>(b * heads + h)] = std::move(s);
            }
        }
        Var out = push(std::move(outm), needs(q, k) || needs(v));
        on_backward(out, [this, q, k, v, out, heads, batch, len, dh, scale, probs = std::move(probs), gather] {
            const Mat& G = node(out).grad;
            Mat dQ = Mat::Zero(G.rows(), G.cols()), dK = dQ, dV = dQ;
            for (Eigen::Index b = 0; b < batch; ++b) {
                for (Eigen::Index h = 0; h < heads; ++h) {
                    const Mat& p = probs[static_cast<std::size_t>(b * heads + h)];
                    const Mat qb = gather(value(q), b, h), kb = gather(value(k), b, h), vb = gather(value(v), b, h);
                    const Mat go = gather(G, b, h);
                    const Mat dvb = p.transpose() * go;
                    const Mat dp = go * vb.transpose();
                    Mat ds = p.cwiseProduct(dp);
                    const Eigen::Matrix<S, Eigen::Dynamic, 1> rs = ds.rowwise().sum();
                    ds -= (p.array().colwise() * rs.array()).matrix();
                    const Mat dqb = (ds * kb) * scale;
                    const Mat dkb = (ds.transpose() * qb) * scale;
                    for (Eigen::Index t = 0; t < len; ++t) {
                        dQ.block(t * batch + b, h * dh, 1, dh) = dqb.row(t);
                        dK.block(t * batch + b, h * dh, 1, dh) = dkb.row(t);
                        dV.block(t * batch + b, h * dh, 1, dh) = dvb.row(t);
                    }
                }
            }
            if (rg(q)) accum(q, dQ);
            if (rg(k)) accum(k, dK);
            if (rg(v)) accum(v, dV);
        });
        return out;
    }

    /**
     * @brief One LSTM layer over a whole time-major sequence.
     *
     * `xw` holds the input projections plus bias, shape (length * batch, 4 * hidden),
     * gate order input, forget, cell, output. `w_hidden` is (hidden, 4 * hidden).
     * Returns the hidden states (length * batch, hidden). Zero initial state.
     */
    Var lstm_sequence(Var xw, Var w_hidden, Eigen::Index batch) {
        const Mat& X = value(xw);
        const Mat& W = value(w_hidden);
        const Eigen::Index h = W.rows();
        if (W.cols() != 4 * h || X.cols() != 4 * h) throw ContractError("lstm_sequence: gate width mismatch");
        if (batch < 1 || X.rows() % batch != 0) throw ContractError("lstm_sequence: rows not a multiple of batch");
        const Eigen::Index len = X.rows() / batch;

        Mat acts(X.rows(), 4 * h);   // activated gates
        Mat cells(X.rows(), h);
        Mat hs(X.rows(), h);
        Mat pre(batch, 4 * h);
        auto sig = [](S v) { return S(1) / (S(1) + std::exp(-v)); };
        for (Eigen::Index t = 0; t < len; ++t) {
            const Eigen::Index r = t * batch;
            pre = X.middleRows(r, batch);
            if (t > 0) pre.noalias() += hs.middleRows(r - batch, batch) * W;
            auto a = acts.middleRows(r, batch);
            a.leftCols(2 * h) = pre.leftCols(2 * h).unaryExpr(sig);
            a.middleCols(2 * h, h) = pre.middleCols(2 * h, h).array().tanh().matrix();
            a.rightCols(h) = pre.rightCols(h).unaryExpr(sig);
            auto c = cells.middleRows(r, batch);
            c = a.leftCols(h).cwiseProduct(a.middleCols(2 * h, h));
            if (t > 0) c += a.middleCols(h, h).cwiseProduct(cells.middleRows(r - batch, batch));
            hs.middleRows(r, batch) = a.rightCols(h).cwiseProduct(c.array().tanh().matrix());
        }
        Var out = push(std::move(hs), needs(xw, w_hidden));
        on_backward(out, [this, xw, w_hidden, out, batch, len, h, acts = std::move(acts), cells = std::move(cells)] {
            const Mat& G = node(out).grad;
            const Mat& Wh = value(w_hidden);
            const Mat& H = value(out);
            Mat dpre(G.rows(), 4 * h);
            Mat dh_rec = Mat::Zero(batch, h), dc_rec = Mat::Zero(batch, h);
            for (Eigen::Index t = len - 1; t >= 0; --t) {
                const Eigen::Index r = t * batch;
                const auto a = acts.middleRows(r, batch);
                const auto i = a.leftCols(h).array();
                const auto f = a.middleCols(h, h).array();
                const auto g = a.middleCols(2 * h, h).array();
                const auto o = a.rightCols(h).array();
                const Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> tc = cells.middleRows(r, batch).array().tanh();
                const Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dh = G.middleRows(r, batch).array() + dh_rec.array();
                const Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dc = dc_rec.array() + dh * o * (S(1) - tc.square());
                auto d = dpre.middleRows(r, batch);
                d.leftCols(h) = (dc * g * i * (S(1) - i)).matrix();
                if (t > 0) {
                    d.middleCols(h, h) = (dc * cells.middleRows(r - batch, batch).array() * f * (S(1) - f)).matrix();
                } else {
                    d.middleCols(h, h).setZero();
                }
                d.middleCols(2 * h, h) = (dc * i * (S(1) - g.square())).matrix();
                d.rightCols(h) = (dh * tc * o * (S(1) - o)).matrix();
                dc_rec = (dc * f).matrix();
                if (t > 0) dh_rec.noalias() = d * Wh.transpose();
            }
            if (rg(xw)) accum(xw, dpre);
            if (rg(w_hidden) && len > 1) {
                const Eigen::Index n = (len - 1) * batch;
                accum(w_hidden, H.topRows(n).transpose() * dpre.bottomRows(n));
            }
        });
        return out;
    }

    /// Gathers rows `codes[i]` of `table`.
    Var embedding(Var table, const std::vector<int>& codes) {
        const Mat& w = value(table);
        Mat m(static_cast<Eigen::Index>(codes.size()), w.cols());
        for (std::size_t i = 0; i < codes.size(); ++i) {
            if (codes[i] < 0 || codes[i] >= w.rows()) throw ContractError("embedding: code out of range");
            m.row(static_cast<Eigen::Index>(i)) = w.row(codes[i]);
        }
        Var out = push(std::move(m), needs(table));
        on_backward(out, [this, table, codes, out] {
            Mat& g = ensure_grad(table);
            const Mat& go = node(out).grad;
            for (std::size_t i = 0; i < codes.size(); ++i) g.row(codes[i]) += go.row(static_cast<Eigen::Index>(i));
        });
        return out;
    }

    /// sum(weight * (a - target)^2) / sum(weight), as a (1, 1) node.
    Var weighted_mse(Var a, const Mat& target, const Mat& weight) {
        const Mat& x = value(a);
        if (x.rows() != target.rows() || x.cols() != target.cols() || x.rows() != weight.rows() ||
            x.cols() != weight.cols()) {
            throw ContractError("weighted_mse: shape mismatch");
        }
        const S denom = weight.sum();
        if (!(denom > S(0))) throw ContractError("weighted_mse: empty weight");
        Mat diff = x - target;
        Mat m(1, 1);
        m(0, 0) = diff.cwiseProduct(diff).cwiseProduct(weight).sum() / denom;
        Var out = push(std::move(m), needs(a));
        on_backward(out, [this, a, out, diff = std::move(diff), weight, denom] {
            accum(a, (diff.cwiseProduct(weight) * (S(2) * node(out).grad(0, 0) / denom)).eval());
        });
        return out;
    }

    Var mse(Var a, const Mat& target) { return weighted_mse(a, target, Mat::Ones(target.rows(), target.cols())); }

    /// sum(a .* w) as a (1, 1) node; handy for gradient checks.
    Var weighted_sum(Var a, const Mat& w) {
        if (value(a).rows() != w.rows() || value(a).cols() != w.cols()) throw ContractError("weighted_sum: shape mismatch");
        Mat m(1, 1);
        m(0, 0) = value(a).cwiseProduct(w).sum();
        Var out = push(std::move(m), needs(a));
        on_backward(out, [this, a, out, w] { accum(a, (w * node(out).grad(0, 0)).eval()); });
        return out;
    }

    /// Propagates d(out)/d(node) for every node, seeding d(out)/d(out) = 1. `out` must be (1, 1).
    void backward(Var out) {
        auto& n = node(out);
        if (value(out).size() != 1) throw ContractError("backward: target must be a scalar");
        n.grad = Mat::Ones(1, 1);
        for (int i = out.id; i >= 0; --i) {
            auto& cur = nodes_[static_cast<std::size_t>(i)];
            if (cur.backward && cur.grad.size() > 0) cur.backward();
        }
    }

private:
    struct Node {
        Mat value;
        const Mat* ref = nullptr;
        Mat grad;
        std::function<void()> backward;
        bool requires_grad = false;
    };

    Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
    bool rg(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }
    bool needs(Var a) const { return grad_enabled_ && rg(a); }
    bool needs(Var a, Var b) const { return grad_enabled_ && (rg(a) || rg(b)); }

    Var push(Mat value, bool requires_grad) {
        nodes_.push_back(Node{std::move(value), nullptr, Mat(), {}, requires_grad});
        return Var{static_cast<int>(nodes_.size() - 1)};
    }

    template <typename F>
    void on_backward(Var out, F&& f) {
        if (node(out).requires_grad) node(out).backward = std::forward<F>(f);
    }

    Mat& ensure_grad(Var v) {
        auto& n = node(v);
        if (n.grad.size() == 0) n.grad = Mat::Zero(value(v).rows(), value(v).cols());
        return n.grad;
    }

    template <typename E>
    void accum(Var v, const Eigen::MatrixBase<E>& g) {
        auto& n = node(v);
        if (n.grad.size() == 0) {
            n.grad.noalias() = g;
        } else {
            n.grad.noalias() += g;
        }
    }

    void check_same(Var a, Var b, const char* op) const {
        if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
            throw ContractError(std::string(op) + ": shape mismatch (" + std::to_string(value(a).rows()) + "x" +
                                std::to_string(value(a).cols()) + " vs " + std::to_string(value(b).rows()) + "x" +
                                std::to_string(value(b).cols()) + ")");
        }
    }

    bool grad_enabled_;
    std::deque<Node> nodes_;
};

}  // namespace mmmf::ad
