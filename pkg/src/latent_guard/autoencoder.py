"""One-class convolutional autoencoder over 28x28 grayscale images.

Architecture (bottleneck size k is configurable):

    Encoder: conv3x3(1->32) + relu -> maxpool2x2      28x28 -> 14x14
             conv3x3(32->2) + relu -> maxpool2x2      14x14 -> 7x7
             flatten (98) -> dense(98 -> k)
    Decoder: dense(k -> 98) -> reshape 7x7x2
             conv3x3(2->2) + relu -> upsample2x2       7x7 -> 14x14
             conv3x3(2->32) + relu -> upsample2x2     14x14 -> 28x28
             conv3x3(32->1) + sigmoid

The bottleneck dense layer carries an L1 activity penalty (default weight
1e-5) during training; the penalty never enters the reconstruction-error
novelty score.  All convolutions are same-padding, so spatial shape is
preserved except at the pool/upsample steps.  Weights are Glorot-uniform
from a seeded generator: the same (bottleneck_size, seed) pair always
yields bit-identical parameters.

Public array convention is channels-first ([1, 28, 28] single sample,
[N, 1, 28, 28] batch); layers run channels-last internally.
"""

from __future__ import annotations

import numpy as np

from latent_guard import serialization
from latent_guard.errors import ShapeError
from latent_guard.nn.layers import (
    Conv3x3,
    Dense,
    Flatten,
    MaxPool2x2,
    ReLU,
    Reshape,
    Sigmoid,
    Upsample2x2,
)
from latent_guard.nn.losses import bce_loss, bce_loss_per_sample

IMAGE_SHAPE = (1, 28, 28)
INPUT_SIZE = 28 * 28
_FLAT_DIM = 7 * 7 * 2  # encoder spatial trace: 28 -> 14 -> 7 with 2 channels

# Batch rows processed per internal chunk during inference; bounds the
# transient im2col buffers of the 32-channel convolutions.
_CHUNK = 128

CHECKPOINT_VERSION = 1


class Autoencoder:
    """Appendix-architecture autoencoder; see the module docstring.

    The layer stack is immutable during inference (encode/score calls cache
    nothing), so concurrent reads are safe; training mutates parameters
    through a single writer.
    """

    def __init__(self, bottleneck_size: int, seed: int, l1_lambda: float = 1e-5):
        if bottleneck_size < 1:
            raise ValueError(f"bottleneck_size must be >= 1, got {bottleneck_size}")
        self.bottleneck_size = int(bottleneck_size)
        self.seed = int(seed)
        self.l1_lambda = float(l1_lambda)
        rng = np.random.default_rng(seed)
        self.encoder_layers = [
            Conv3x3(1, 32, rng, needs_input_grad=False),
            ReLU(),
            MaxPool2x2(),
            Conv3x3(32, 2, rng),
            ReLU(),
            MaxPool2x2(),
            Flatten(),
            Dense(_FLAT_DIM, bottleneck_size, rng),
        ]
        self.decoder_layers = [
            Dense(bottleneck_size, _FLAT_DIM, rng),
            Reshape((7, 7, 2)),
            Conv3x3(2, 2, rng),
            ReLU(),
            Upsample2x2(),
            Conv3x3(2, 32, rng),
            ReLU(),
            Upsample2x2(),
            Conv3x3(32, 1, rng),
            Sigmoid(),
        ]

    # -- parameter access ---------------------------------------------------

    def named_parameters(self):
        """Live references to every parameter array, in a stable order."""
        out = {}
        for prefix, stack in (("encoder", self.encoder_layers), ("decoder", self.decoder_layers)):
            for i, layer in enumerate(stack):
                for key, arr in layer.params.items():
                    out[f"{prefix}.{i}.{key}"] = arr
        return out

    def named_grads(self):
        out = {}
        for prefix, stack in (("encoder", self.encoder_layers), ("decoder", self.decoder_layers)):
            for i, layer in enumerate(stack):
                for key, arr in layer.grads.items():
                    out[f"{prefix}.{i}.{key}"] = arr
        return out

    def num_params(self) -> int:
        return sum(p.size for p in self.named_parameters().values())

    # -- inference ----------------------------------------------------------

    def _to_nhwc_batch(self, x, check_range=True):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 3
        if single:
            x = x[None]
        if x.ndim != 4 or x.shape[1:] != IMAGE_SHAPE:
            raise ShapeError("autoencoder input", IMAGE_SHAPE, x.shape[1:] if x.ndim == 4 else x.shape)
        if check_range and x.size and (x.min() < 0.0 or x.max() > 1.0):
            raise ValueError(
                f"image values must lie in [0, 1], got range [{x.min()}, {x.max()}]"
            )
        return x.transpose(0, 2, 3, 1), single

    def _run(self, stack, x):
        for layer in stack:
            x = layer.forward(x, train=False)
        return x

    def _chunked(self, stack, x):
        if x.shape[0] <= _CHUNK:
            return self._run(stack, x)
        parts = [
            self._run(stack, x[i:i + _CHUNK]) for i in range(0, x.shape[0], _CHUNK)
        ]
        return np.concatenate(parts, axis=0)

    def encode(self, x):
        """Bottleneck embedding: [1,28,28] -> [k], or [N,1,28,28] -> [N,k]."""
        xb, single = self._to_nhwc_batch(x)
        z = self._chunked(self.encoder_layers, xb)
        return z[0] if single else z

    def decode(self, z):
        """Reconstruction from embeddings: [k] -> [1,28,28] (values in (0,1))."""
        z = np.asarray(z, dtype=np.float64)
        single = z.ndim == 1
        if single:
            z = z[None]
        if z.shape[1] != self.bottleneck_size:
            raise ShapeError("bottleneck input", (self.bottleneck_size,), z.shape[1:])
        out = self._chunked(self.decoder_layers, z).transpose(0, 3, 1, 2)
        return out[0] if single else out

    def reconstruct(self, x):
        return self.decode(self.encode(x))

    def reconstruction_error(self, x) -> float:
        """Per-sample BCE between x and its reconstruction (L1 excluded)."""
        xb, single = self._to_nhwc_batch(x)
        if not single:
            raise ShapeError("reconstruction_error input", IMAGE_SHAPE, x.shape)
        return float(self.reconstruction_errors(x[None])[0])

    def reconstruction_errors(self, x) -> np.ndarray:
        """Vectorized reconstruction error: [N,1,28,28] -> [N]."""
        return self.encode_and_reconstruction_errors(x)[1]

    def encode_and_reconstruction_errors(self, x):
        """Single forward pass yielding (embeddings [N,k], errors [N])."""
        xb, _ = self._to_nhwc_batch(x)
        n = xb.shape[0]
        embeddings = np.empty((n, self.bottleneck_size))
        errors = np.empty(n)
        for i in range(0, n, _CHUNK):
            chunk = xb[i:i + _CHUNK]
            z = self._run(self.encoder_layers, chunk)
            recon = self._run(self.decoder_layers, z)
            embeddings[i:i + chunk.shape[0]] = z
            errors[i:i + chunk.shape[0]] = bce_loss_per_sample(recon, chunk)
        return embeddings, errors

    # -- training hooks -----------------------------------------------------

    def forward_training(self, x_nhwc):
        """Caching forward pass; returns (reconstruction, bottleneck), NHWC."""
        z = x_nhwc
        for layer in self.encoder_layers:
            z = layer.forward(z, train=True)
        out = z
        for layer in self.decoder_layers:
            out = layer.forward(out, train=True)
        return out, z

    def backward_training(self, d_recon, d_bottleneck=None):
        """Backpropagates loss gradients; fills every layer's ``grads``.

        ``d_bottleneck`` (e.g. the L1 activity subgradient) is added where
        the decoder gradient reaches the encoder output.
        """
        g = d_recon
        for layer in reversed(self.decoder_layers):
            g = layer.backward(g)
        if d_bottleneck is not None:
            g = g + d_bottleneck
        for layer in reversed(self.encoder_layers):
            g = layer.backward(g)

    # -- persistence ----------------------------------------------------------

    def save(self, path) -> None:
        """Writes a bit-exact checkpoint (format version, config, parameters)."""
        header = {
            "kind": "autoencoder-checkpoint",
            "format_version": CHECKPOINT_VERSION,
            "bottleneck_size": self.bottleneck_size,
            "l1_lambda": self.l1_lambda,
            "seed": self.seed,
        }
        serialization.write_arrays(path, header, self.named_parameters())

    @classmethod
    def load(cls, path) -> "Autoencoder":
        header, arrays = serialization.read_arrays(path)
        if header.get("kind") != "autoencoder-checkpoint":
            raise ValueError(f"{path}: not an autoencoder checkpoint")
        model = cls(header["bottleneck_size"], header["seed"], header["l1_lambda"])
        params = model.named_parameters()
        if set(params) != set(arrays):
            raise ValueError(f"{path}: checkpoint parameter names do not match")
        for name, arr in arrays.items():
            if params[name].shape != arr.shape:
                raise ShapeError(f"checkpoint param {name}", params[name].shape, arr.shape)
            params[name][...] = arr
        return model


def build_autoencoder(bottleneck_size: int, seed: int, l1_lambda: float = 1e-5) -> Autoencoder:
    """Deterministic factory; same arguments give bit-identical parameters."""
    return Autoencoder(bottleneck_size, seed, l1_lambda)
