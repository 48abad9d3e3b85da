"""Layer objects used to assemble the autoencoder.

Layers run channels-last internally ([N, H, W, C] batches) and hold their
parameters/gradients in dicts keyed "weight"/"bias"; conv weights keep the
canonical [C_out, C_in, 3, 3] shape and dense weights [out_dim, in_dim].
``forward(x, train=True)`` caches whatever backward needs; caches belong to
the most recent batch only.  Inference (train=False) caches nothing, so
concurrent forward passes over an immutable layer stack are safe.
"""

from __future__ import annotations

import numpy as np

from latent_guard.nn import ops


def glorot_uniform(rng, shape, fan_in, fan_out):
    """Glorot/Xavier uniform init: U(-limit, limit), limit = sqrt(6/(fi+fo))."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    """Base: parameter-free, cache-free layer."""

    def __init__(self):
        self.params = {}
        self.grads = {}

    def forward(self, x, train=False):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError


class Conv3x3(Layer):
    """Same-padding 3x3 convolution.

    ``needs_input_grad=False`` skips the input-gradient convolution; use it
    for the first layer of a network, where dx is discarded anyway.
    """

    def __init__(self, in_channels, out_channels, rng, needs_input_grad=True):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.needs_input_grad = needs_input_grad
        fan = 9 * in_channels, 9 * out_channels
        self.params = {
            "weight": glorot_uniform(rng, (out_channels, in_channels, 3, 3), *fan),
            "bias": np.zeros(out_channels),
        }
        self._cache = None

    def forward(self, x, train=False):
        out, cache = ops.conv3x3_fwd_nhwc(x, self.params["weight"], self.params["bias"])
        self._cache = cache if train else None
        return out

    def backward(self, dout):
        dw, db = ops.conv3x3_param_grads_nhwc(dout, self._cache, self.params["weight"].shape)
        self.grads = {"weight": dw, "bias": db}
        self._cache = None
        if not self.needs_input_grad:
            return None
        return ops.conv3x3_input_grad_nhwc(dout, self.params["weight"])


class MaxPool2x2(Layer):
    def __init__(self):
        super().__init__()
        self._idx = None

    def forward(self, x, train=False):
        out, idx = ops.maxpool2x2_fwd_nhwc(x)
        self._idx = idx if train else None
        return out

    def backward(self, dout):
        dx = ops.maxpool2x2_bwd_nhwc(dout, self._idx)
        self._idx = None
        return dx


class Upsample2x2(Layer):
    def forward(self, x, train=False):
        return ops.upsample2x2_fwd_nhwc(x)

    def backward(self, dout):
        return ops.upsample2x2_bwd_nhwc(dout)


class Dense(Layer):
    def __init__(self, in_dim, out_dim, rng):
        super().__init__()
        self.params = {
            "weight": glorot_uniform(rng, (out_dim, in_dim), in_dim, out_dim),
            "bias": np.zeros(out_dim),
        }
        self._x = None

    def forward(self, x, train=False):
        self._x = x if train else None
        return x @ self.params["weight"].T + self.params["bias"]

    def backward(self, dout):
        self.grads = {"weight": dout.T @ self._x, "bias": dout.sum(axis=0)}
        self._x = None
        return dout @ self.params["weight"]


class ReLU(Layer):
    def __init__(self):
        super().__init__()
        self._mask = None

    def forward(self, x, train=False):
        if train:
            self._mask = x > 0
        return np.maximum(x, 0.0)

    def backward(self, dout):
        dx = dout * self._mask
        self._mask = None
        return dx


class Sigmoid(Layer):
    def __init__(self):
        super().__init__()
        self._y = None

    def forward(self, x, train=False):
        y = ops.sigmoid(x)
        self._y = y if train else None
        return y

    def backward(self, dout):
        dx = dout * self._y * (1.0 - self._y)
        self._y = None
        return dx


class Flatten(Layer):
    """[N, H, W, C] -> [N, H*W*C]."""

    def __init__(self):
        super().__init__()
        self._shape = None

    def forward(self, x, train=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)


class Reshape(Layer):
    """[N, prod(target)] -> [N, *target]."""

    def __init__(self, target):
        super().__init__()
        self.target = tuple(target)

    def forward(self, x, train=False):
        return x.reshape(x.shape[0], *self.target)

    def backward(self, dout):
        return dout.reshape(dout.shape[0], -1)
