#pragma once

#include <vector>

#include "citgan/core/autograd.hpp"

// Differentiable tensor operations. Image tensors are NCHW.
namespace citgan::ops {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double value);
Var reshape(const Var& a, std::vector<int> shape);

Var abs(const Var& a);
Var square(const Var& a);
Var tanh(const Var& a);
Var leaky_relu(const Var& a, double slope);
/// log(1 + exp(x)), evaluated without overflow.
Var softplus(const Var& a);

Var sum(const Var& a);
Var mean(const Var& a);

/// Row-wise log-softmax / softmax over the last axis of an [N,K] tensor.
Var log_softmax(const Var& logits);
Var softmax(const Var& logits);

/// out[i] = x[i, index[i]] for an [N,K] tensor; result has shape [N].
Var pick(const Var& x, const std::vector<int>& index);
/// out[i,:] = x[i, index[i], :] for an [N,D,S] tensor; result is [N,S].
Var pick_rows(const Var& x, const std::vector<int>& index);

/// x:[N,F], weight:[O,F], bias:[O] -> [N,O].
Var linear(const Var& x, const Var& weight, const Var& bias);

/// Square-kernel convolution. weight:[O,C,k,k], bias:[O].
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int padding);
Var upsample_nearest2x(const Var& x);
/// Per-sample, per-channel normalization with no learned affine.
Var instance_norm(const Var& x, double eps = 1e-5);
/// y[n,c,:,:] = x[n,c,:,:] * gain[n,c] + shift[n,c].
Var modulate(const Var& x, const Var& gain, const Var& shift);
/// Mean over spatial positions: [N,C,H,W] -> [N,C].
Var global_avg_pool(const Var& x);

}  // namespace citgan::ops
