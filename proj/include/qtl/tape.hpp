#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qtl/errors.hpp"
#include "qtl/rng.hpp"
#include "qtl/tensor.hpp"

namespace qtl {

/// Handle to a node on a Tape. Creation order is the topological order.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

enum class Activation { Relu, Tanh, Sigmoid };

/// Reverse-mode tape over the fixed layer set the models need. Define-by-run:
/// each op appends a node holding the forward value and a closure that pulls
/// the node's gradient into its inputs. backward() walks nodes in reverse
/// creation order, which is a valid reverse topological order by construction.
template <typename Real>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // ---- node management -------------------------------------------------

  /// Constant input; never receives a gradient.
  Var input(Tensor<Real> value) { return add_node(std::move(value), false, {}, nullptr); }

  /// Parameter leaf. Values are copied onto the tape; after backward() the
  /// accumulated gradient is added into `param.grad` when `param.requires_grad`.
  Var leaf(Tensor<Real>& param) {
    return add_node(param, param.requires_grad, {}, param.requires_grad ? &param : nullptr);
  }

  /// Low-level node registration, used by ops below and by custom nodes
  /// (the quantum-expectation node lives in dqn.hpp).
  Var add_node(Tensor<Real> value, bool requires_grad, std::function<void(Tape&)> backprop,
               Tensor<Real>* external) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.backprop = std::move(backprop);
    node.external = external;
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  const Tensor<Real>& value(Var v) const { return node(v).value; }
  std::vector<Real>& grad_of(Var v) { return node(v).grad; }
  const std::vector<Real>& grad_of(Var v) const { return node(v).grad; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  size_t size() const { return nodes_.size(); }

  // ---- operations --------------------------------------------------------

  /// 2D cross-correlation, valid padding.
  /// input [N,C,H,W] * weight [Co,C,kh,kw] + bias [Co] -> [N,Co,Ho,Wo].
  Var conv2d(Var input, Var weight, Var bias, int stride) {
    const Tensor<Real>& in = value(input);
    const Tensor<Real>& w = value(weight);
    const Tensor<Real>& b = value(bias);
    if (in.shape.size() != 4 || w.shape.size() != 4 || b.shape.size() != 1)
      throw DimensionError("conv2d expects input[N,C,H,W] " + shape_str(in.shape) +
                           ", weight[Co,C,kh,kw] " + shape_str(w.shape));
    const int64_t N = in.shape[0], C = in.shape[1], H = in.shape[2], W = in.shape[3];
    const int64_t Co = w.shape[0], kh = w.shape[2], kw = w.shape[3];
    if (w.shape[1] != C || b.shape[0] != Co)
      throw DimensionError("conv2d channel mismatch: input " + shape_str(in.shape) +
                           " vs weight " + shape_str(w.shape));
    if (stride < 1) throw ConfigError("conv2d stride must be positive");
    if (H < kh || W < kw)
      throw DimensionError("conv2d kernel " + shape_str(w.shape) + " larger than input " +
                           shape_str(in.shape));
    const int64_t Ho = (H - kh) / stride + 1, Wo = (W - kw) / stride + 1;

    Tensor<Real> out(Shape{N, Co, Ho, Wo});
    for (int64_t n = 0; n < N; ++n)
      for (int64_t co = 0; co < Co; ++co)
        for (int64_t oy = 0; oy < Ho; ++oy)
          for (int64_t ox = 0; ox < Wo; ++ox) {
            double acc = static_cast<double>(b.values[co]);
            for (int64_t c = 0; c < C; ++c)
              for (int64_t ky = 0; ky < kh; ++ky) {
                const Real* irow = &in.values[((n * C + c) * H + oy * stride + ky) * W + ox * stride];
                const Real* wrow = &w.values[((co * C + c) * kh + ky) * kw];
                for (int64_t kx = 0; kx < kw; ++kx)
                  acc += static_cast<double>(irow[kx]) * static_cast<double>(wrow[kx]);
              }
            out.values[((n * Co + co) * Ho + oy) * Wo + ox] = static_cast<Real>(acc);
          }

    bool req = requires_grad(input) || requires_grad(weight) || requires_grad(bias);
    int iid = input.id, wid = weight.id, bid = bias.id;
    auto back = [iid, wid, bid, N, C, H, W, Co, kh, kw, Ho, Wo, stride](Tape& t) {
      int out_id = t.current_backprop_id_;
      const auto& g = t.nodes_[out_id].grad;
      const auto& inv = t.nodes_[iid].value.values;
      const auto& wv = t.nodes_[wid].value.values;
      auto& gi = t.nodes_[iid].grad;
      auto& gw = t.nodes_[wid].grad;
      auto& gb = t.nodes_[bid].grad;
      for (int64_t n = 0; n < N; ++n)
        for (int64_t co = 0; co < Co; ++co)
          for (int64_t oy = 0; oy < Ho; ++oy)
            for (int64_t ox = 0; ox < Wo; ++ox) {
              const Real go = g[((n * Co + co) * Ho + oy) * Wo + ox];
              if (go == Real(0)) continue;
              gb[co] += go;
              for (int64_t c = 0; c < C; ++c)
                for (int64_t ky = 0; ky < kh; ++ky) {
                  const int64_t ibase = ((n * C + c) * H + oy * stride + ky) * W + ox * stride;
                  const int64_t wbase = ((co * C + c) * kh + ky) * kw;
                  for (int64_t kx = 0; kx < kw; ++kx) {
                    gw[wbase + kx] += go * inv[ibase + kx];
                    gi[ibase + kx] += go * wv[wbase + kx];
                  }
                }
            }
    };
    return add_node(std::move(out), req, req ? std::function<void(Tape&)>(back) : nullptr, nullptr);
  }

  /// Max pooling; gradient routes to the first maximum in row-major scan.
  Var maxpool2d(Var input, int kernel, int stride) {
    const Tensor<Real>& in = value(input);
    if (in.shape.size() != 4)
      throw DimensionError("maxpool2d expects [N,C,H,W], got " + shape_str(in.shape));
    if (kernel < 1 || stride < 1) throw ConfigError("maxpool2d kernel/stride must be positive");
    const int64_t N = in.shape[0], C = in.shape[1], H = in.shape[2], W = in.shape[3];
    if (H < kernel || W < kernel)
      throw DimensionError("maxpool2d kernel " + std::to_string(kernel) + " larger than input " +
                           shape_str(in.shape));
    const int64_t Ho = (H - kernel) / stride + 1, Wo = (W - kernel) / stride + 1;

    Tensor<Real> out(Shape{N, C, Ho, Wo});
    std::vector<int64_t> argmax(static_cast<size_t>(numel(out.shape)));
    for (int64_t n = 0; n < N; ++n)
      for (int64_t c = 0; c < C; ++c)
        for (int64_t oy = 0; oy < Ho; ++oy)
          for (int64_t ox = 0; ox < Wo; ++ox) {
            Real best = in.values[((n * C + c) * H + oy * stride) * W + ox * stride];
            int64_t best_idx = ((n * C + c) * H + oy * stride) * W + ox * stride;
            for (int64_t ky = 0; ky < kernel; ++ky)
              for (int64_t kx = 0; kx < kernel; ++kx) {
                const int64_t idx = ((n * C + c) * H + oy * stride + ky) * W + ox * stride + kx;
                if (in.values[idx] > best) {
                  best = in.values[idx];
                  best_idx = idx;
                }
              }
            const int64_t o = ((n * C + c) * Ho + oy) * Wo + ox;
            out.values[o] = best;
            argmax[o] = best_idx;
          }

    bool req = requires_grad(input);
    int iid = input.id;
    auto back = [iid, argmax = std::move(argmax)](Tape& t) {
      const auto& g = t.nodes_[t.current_backprop_id_].grad;
      auto& gi = t.nodes_[iid].grad;
      for (size_t o = 0; o < argmax.size(); ++o) gi[argmax[o]] += g[o];
    };
    return add_node(std::move(out), req, req ? std::function<void(Tape&)>(back) : nullptr, nullptr);
  }

  /// Affine map input[N,D] * weight[D,U] + bias[U] -> [N,U].
  Var dense(Var input, Var weight, Var bias) {
    const Tensor<Real>& in = value(input);
    const Tensor<Real>& w = value(weight);
    const Tensor<Real>& b = value(bias);
    if (in.shape.size() != 2 || w.shape.size() != 2 || b.shape.size() != 1 ||
        in.shape[1] != w.shape[0] || w.shape[1] != b.shape[0])
      throw DimensionError("dense shape mismatch: input " + shape_str(in.shape) + " weight " +
                           shape_str(w.shape) + " bias " + shape_str(b.shape));
    const int64_t N = in.shape[0], D = in.shape[1], U = w.shape[1];

    Tensor<Real> out(Shape{N, U});
    for (int64_t n = 0; n < N; ++n)
      for (int64_t u = 0; u < U; ++u) {
        double acc = static_cast<double>(b.values[u]);
        for (int64_t d = 0; d < D; ++d)
          acc += static_cast<double>(in.values[n * D + d]) * static_cast<double>(w.values[d * U + u]);
        out.values[n * U + u] = static_cast<Real>(acc);
      }

    bool req = requires_grad(input) || requires_grad(weight) || requires_grad(bias);
    int iid = input.id, wid = weight.id, bid = bias.id;
    auto back = [iid, wid, bid, N, D, U](Tape& t) {
      const auto& g = t.nodes_[t.current_backprop_id_].grad;
      const auto& inv = t.nodes_[iid].value.values;
      const auto& wv = t.nodes_[wid].value.values;
      auto& gi = t.nodes_[iid].grad;
      auto& gw = t.nodes_[wid].grad;
      auto& gb = t.nodes_[bid].grad;
      for (int64_t n = 0; n < N; ++n)
        for (int64_t u = 0; u < U; ++u) {
          const Real go = g[n * U + u];
          if (go == Real(0)) continue;
          gb[u] += go;
          for (int64_t d = 0; d < D; ++d) {
            gw[d * U + u] += go * inv[n * D + d];
            gi[n * D + d] += go * wv[d * U + u];
          }
        }
    };
    return add_node(std::move(out), req, req ? std::function<void(Tape&)>(back) : nullptr, nullptr);
  }

  /// Elementwise relu/tanh/sigmoid. Rejects non-finite input.
  Var activation(Var x, Activation kind) {
    const Tensor<Real>& in = value(x);
    if (!in.all_finite()) throw NumericError("activation input contains NaN/Inf");
    Tensor<Real> out(in.shape);
    for (size_t i = 0; i < in.values.size(); ++i) {
      const double v = static_cast<double>(in.values[i]);
      double y = 0;
      switch (kind) {
        case Activation::Relu: y = v > 0 ? v : 0; break;
        case Activation::Tanh: y = std::tanh(v); break;
        case Activation::Sigmoid: y = 1.0 / (1.0 + std::exp(-v)); break;
      }
      out.values[i] = static_cast<Real>(y);
    }

    bool req = requires_grad(x);
    int iid = x.id;
    std::vector<Real> saved = out.values;  // derivative expressible via the output
    auto back = [iid, kind, saved = std::move(saved)](Tape& t) {
      const auto& g = t.nodes_[t.current_backprop_id_].grad;
      auto& gi = t.nodes_[iid].grad;
      for (size_t i = 0; i < saved.size(); ++i) {
        const double y = static_cast<double>(saved[i]);
        double d = 0;
        switch (kind) {
          case Activation::Relu: d = y > 0 ? 1.0 : 0.0; break;
          case Activation::Tanh: d = 1.0 - y * y; break;
          case Activation::Sigmoid: d = y * (1.0 - y); break;
        }
        gi[i] += static_cast<Real>(d) * g[i];
      }
    };
    return add_node(std::move(out), req, req ? std::function<void(Tape&)>(back) : nullptr, nullptr);
  }

  /// Inverted dropout: zero with probability p, scale survivors by 1/(1-p).
  /// Identity at inference time or p == 0.
  Var dropout(Var x, double p, bool training, Rng& rng) {
    if (p < 0.0 || p >= 1.0) throw ConfigError("dropout probability must be in [0,1)");
    if (!training || p == 0.0) return x;
    const Tensor<Real>& in = value(x);
    const Real keep_scale = static_cast<Real>(1.0 / (1.0 - p));
    std::vector<Real> mask(in.values.size());
    Tensor<Real> out(in.shape);
    for (size_t i = 0; i < in.values.size(); ++i) {
      mask[i] = rng.uniform() < p ? Real(0) : keep_scale;
      out.values[i] = in.values[i] * mask[i];
    }
    bool req = requires_grad(x);
    int iid = x.id;
    auto back = [iid, mask = std::move(mask)](Tape& t) {
      const auto& g = t.nodes_[t.current_backprop_id_].grad;
      auto& gi = t.nodes_[iid].grad;
      for (size_t i = 0; i < mask.size(); ++i) gi[i] += g[i] * mask[i];
    };
    return add_node(std::move(out), req, req ? std::function<void(Tape&)>(back) : nullptr, nullptr);
  }

  Var reshape(Var x, Shape new_shape) {
    const Tensor<Real>& in = value(x);
    if (numel(new_shape) != in.size())
      throw DimensionError("reshape " + shape_str(in.shape) + " -> " + shape_str(new_shape) +
                           " changes element count");
    Tensor<Real> out = Tensor<Real>::from(std::move(new_shape), in.values);
    bool req = requires_grad(x);
    int iid = x.id;
    auto back = [iid](Tape& t) {
      const auto& g = t.nodes_[t.current_backprop_id_].grad;
      auto& gi = t.nodes_[iid].grad;
      for (size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    };
    return add_node(std::move(out), req, req ? std::function<void(Tape&)>(back) : nullptr, nullptr);
  }

  Var scale(Var x, Real alpha) {
    const Tensor<Real>& in = value(x);
    Tensor<Real> out(in.shape);
    for (size_t i = 0; i < in.values.size(); ++i) out.values[i] = in.values[i] * alpha;
    bool req = requires_grad(x);
    int iid = x.id;
    auto back = [iid, alpha](Tape& t) {
      const auto& g = t.nodes_[t.current_backprop_id_].grad;
      auto& gi = t.nodes_[iid].grad;
      for (size_t i = 0; i < g.size(); ++i) gi[i] += alpha * g[i];
    };
    return add_node(std::move(out), req, req ? std::function<void(Tape&)>(back) : nullptr, nullptr);
  }

  /// Sum of all elements -> scalar [1].
  Var sum(Var x) {
    const Tensor<Real>& in = value(x);
    double acc = 0;
    for (Real v : in.values) acc += static_cast<double>(v);
    Tensor<Real> out(Shape{1});
    out.values[0] = static_cast<Real>(acc);
    bool req = requires_grad(x);
    int iid = x.id;
    auto back = [iid](Tape& t) {
      const Real g = t.nodes_[t.current_backprop_id_].grad[0];
      auto& gi = t.nodes_[iid].grad;
      for (auto& v : gi) v += g;
    };
    return add_node(std::move(out), req, req ? std::function<void(Tape&)>(back) : nullptr, nullptr);
  }

  /// Mean binary cross-entropy over the batch, computed from raw logits in
  /// log-sum-exp-stable form. logits [N,1] (or [N]), labels in {0,1}.
  Var bce_with_logits(Var logits, const Tensor<Real>& labels) {
    const Tensor<Real>& l = value(logits);
    if (l.size() != labels.size())
      throw DimensionError("bce_with_logits: logits " + shape_str(l.shape) + " vs labels " +
                           shape_str(labels.shape));
    const int64_t N = l.size();
    if (N == 0) throw DimensionError("bce_with_logits: empty batch");
    for (Real y : labels.values)
      if (y != Real(0) && y != Real(1))
        throw ConfigError("bce_with_logits: labels must be 0 or 1");

    double acc = 0;
    for (int64_t i = 0; i < N; ++i) {
      const double x = static_cast<double>(l.values[i]);
      const double y = static_cast<double>(labels.values[i]);
      // max(x,0) - x*y + log(1 + exp(-|x|))
      acc += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
    }
    Tensor<Real> out(Shape{1});
    out.values[0] = static_cast<Real>(acc / static_cast<double>(N));
    if (!out.all_finite()) throw NumericError("bce_with_logits produced non-finite loss");

    bool req = requires_grad(logits);
    int iid = logits.id;
    std::vector<Real> ycopy = labels.values;
    auto back = [iid, N, ycopy = std::move(ycopy)](Tape& t) {
      const Real g = t.nodes_[t.current_backprop_id_].grad[0];
      const auto& lv = t.nodes_[iid].value.values;
      auto& gi = t.nodes_[iid].grad;
      for (int64_t i = 0; i < N; ++i) {
        const double sig = 1.0 / (1.0 + std::exp(-static_cast<double>(lv[i])));
        gi[i] += g * static_cast<Real>((sig - static_cast<double>(ycopy[i])) / static_cast<double>(N));
      }
    };
    return add_node(std::move(out), req, req ? std::function<void(Tape&)>(back) : nullptr, nullptr);
  }

  // ---- backward ----------------------------------------------------------

  /// Reverse sweep from a scalar loss. Gradients of parameter leaves are
  /// accumulated into their external tensors. A second call without a new
  /// forward is a state error.
  void backward(Var loss) {
    if (!loss.valid() || loss.id >= static_cast<int>(nodes_.size()))
      throw StateError("backward(): loss is not a node of this tape");
    if (node(loss).value.size() != 1) throw DimensionError("backward(): loss must be scalar");
    backward_with_seed(loss, {Real(1)});
  }

  /// Reverse sweep from an arbitrary node seeded with an upstream gradient.
  void backward_with_seed(Var out, const std::vector<Real>& seed) {
    if (backward_done_) throw StateError("backward() called twice on the same tape");
    if (!out.valid() || out.id >= static_cast<int>(nodes_.size()))
      throw StateError("backward(): output is not a node of this tape");
    if (seed.size() != node(out).value.values.size())
      throw DimensionError("backward(): upstream gradient size mismatch");

    for (auto& n : nodes_) n.grad.assign(n.value.values.size(), Real(0));
    nodes_[out.id].grad = seed;
    for (int id = out.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.requires_grad && n.backprop) {
        current_backprop_id_ = id;
        n.backprop(*this);
      }
    }
    for (auto& n : nodes_) {
      if (n.external) {
        n.external->ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i) n.external->grad[i] += n.grad[i];
      }
    }
    backward_done_ = true;
  }

  bool backward_done() const { return backward_done_; }

  /// Id of the node whose backprop closure is currently running.
  int current_id() const { return current_backprop_id_; }

 private:
  struct Node {
    Tensor<Real> value;
    std::vector<Real> grad;
    std::function<void(Tape&)> backprop;
    Tensor<Real>* external = nullptr;
    bool requires_grad = false;
  };

  const Node& node(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
      throw StateError("invalid tape variable");
    return nodes_[v.id];
  }
  Node& node(Var v) {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
      throw StateError("invalid tape variable");
    return nodes_[v.id];
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
  int current_backprop_id_ = -1;
};

}  // namespace qtl
