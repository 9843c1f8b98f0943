"""Torque regressor: a small CNN trained from scratch in numpy.

Architecture (fixed): conv(8 filters, 5x5, stride 2, valid) -> ReLU ->
conv(16, 5x5, stride 2, valid) -> ReLU -> flatten -> dense(64) -> ReLU ->
dense(2).  Outputs are standardized (bending, twisting); the stored
training mean/std de-standardize predictions back to N*mm.

Training is plain mini-batch gradient descent with momentum on the mean
squared error, fully seeded.  Every layer implements forward/backward
explicitly so gradients can be checked against finite differences.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "TrainingError",
    "TrainConfig",
    "TorqueRegressor",
    "train_regressor",
    "evaluate_regressor",
    "save_model",
    "load_model",
]

INPUT_SCALE = 1.0 / 255.0
MODEL_MAGIC = b"FTRQ"
MODEL_VERSION = 1


class TrainingError(RuntimeError):
    """Loss went non-finite; carries the epoch index."""

    def __init__(self, epoch: int, message: str):
        self.epoch = epoch
        super().__init__(f"epoch {epoch}: {message}")


class Conv2d:
    """Valid convolution with square kernel and fixed stride, via im2col."""

    def __init__(self, in_ch: int, out_ch: int, kernel: int, stride: int,
                 rng: np.random.Generator):
        fan_in = in_ch * kernel * kernel
        self.w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(out_ch, fan_in))
        self.b = np.zeros(out_ch)
        self.in_ch = in_ch
        self.kernel = kernel
        self.stride = stride
        self._cache = None

    def out_shape(self, h: int, w: int) -> tuple[int, int]:
        k, s = self.kernel, self.stride
        return (h - k) // s + 1, (w - k) // s + 1

    def _indices(self, c: int, h: int, w: int):
        key = (c, h, w)
        if getattr(self, "_idx_key", None) == key:
            return self._idx
        k, s = self.kernel, self.stride
        oh, ow = self.out_shape(h, w)
        i0 = np.tile(np.repeat(np.arange(k), k), c)
        j0 = np.tile(np.arange(k), k * c)
        c0 = np.repeat(np.arange(c), k * k)
        i1 = s * np.repeat(np.arange(oh), ow)
        j1 = s * np.tile(np.arange(ow), oh)
        rows = i0[:, None] + i1[None, :]
        cols = j0[:, None] + j1[None, :]
        self._idx_key = key
        self._idx = (c0[:, None], rows, cols, oh, ow)
        return self._idx

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        c0, rows, cols, oh, ow = self._indices(c, h, w)
        patch = x[:, c0, rows, cols]                       # (B, C*K*K, L)
        flat = patch.transpose(1, 0, 2).reshape(patch.shape[1], -1)  # (K, B*L)
        self._cache = (x.shape, flat)
        out = self.w @ flat + self.b[:, None]              # (F, B*L)
        return out.reshape(-1, b, oh * ow).transpose(1, 0, 2).reshape(b, -1, oh, ow)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x_shape, flat = self._cache
        b, c, h, w = x_shape
        k, s = self.kernel, self.stride
        oh, ow = self.out_shape(h, w)
        dflat = dout.reshape(b, -1, oh * ow).transpose(1, 0, 2).reshape(dout.shape[1], -1)
        self.dw = dflat @ flat.T
        self.db = dflat.sum(axis=1)
        dcols = (self.w.T @ dflat).reshape(c, k, k, b, oh, ow)
        dx = np.zeros(x_shape)
        for ki in range(k):
            for kj in range(k):
                dx[:, :, ki:ki + s * oh:s, kj:kj + s * ow:s] += \
                    dcols[:, ki, kj].transpose(1, 0, 2, 3)
        return dx

    @property
    def params(self):
        return [("w", self.w), ("b", self.b)]

    @property
    def grads(self):
        return [self.dw, self.db]


class ReLU:
    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout * self._mask

    params = ()
    grads = ()


class Dense:
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator):
        self.w = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_out, n_in))
        self.b = np.zeros(n_out)
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._cache = x
        return x @ self.w.T + self.b

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x = self._cache
        self.dw = dout.T @ x
        self.db = dout.sum(axis=0)
        return dout @ self.w

    @property
    def params(self):
        return [("w", self.w), ("b", self.b)]

    @property
    def grads(self):
        return [self.dw, self.db]


class TorqueRegressor:
    """Two-conv, two-dense torque regressor with stored target statistics."""

    def __init__(self, in_shape: tuple[int, int, int], seed: int = 0,
                 target_mean=None, target_std=None):
        c, h, w = in_shape
        rng = np.random.default_rng(seed)
        self.in_shape = (c, h, w)
        self.conv1 = Conv2d(c, 8, kernel=5, stride=2, rng=rng)
        h1, w1 = self.conv1.out_shape(h, w)
        if min(h1, w1) < 5:
            raise ValueError(f"input {h}x{w} too small for the two-stage extractor")
        self.conv2 = Conv2d(8, 16, kernel=5, stride=2, rng=rng)
        h2, w2 = self.conv2.out_shape(h1, w1)
        if min(h2, w2) < 1:
            raise ValueError(f"input {h}x{w} too small for the two-stage extractor")
        self.flat_dim = 16 * h2 * w2
        self.fc1 = Dense(self.flat_dim, 64, rng)
        self.fc2 = Dense(64, 2, rng)
        self.relu1, self.relu2, self.relu3 = ReLU(), ReLU(), ReLU()
        self.target_mean = np.zeros(2) if target_mean is None else np.asarray(target_mean, float)
        self.target_std = np.ones(2) if target_std is None else np.asarray(target_std, float)

    @property
    def layers(self):
        return [self.conv1, self.relu1, self.conv2, self.relu2, self.fc1,
                self.relu3, self.fc2]

    def parameter_arrays(self) -> list[np.ndarray]:
        return [a for layer in self.layers for _, a in layer.params]

    def gradient_arrays(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads]

    def forward(self, images: np.ndarray) -> np.ndarray:
        """images (B, C, H, W) in [0, 255] -> standardized outputs (B, 2)."""
        x = np.asarray(images, dtype=float) * INPUT_SCALE
        if x.ndim != 4 or x.shape[1:] != self.in_shape:
            raise ValueError(f"expected (B, {self.in_shape}), got {x.shape}")
        for layer in (self.conv1, self.relu1, self.conv2, self.relu2):
            x = layer.forward(x)
        x = x.reshape(x.shape[0], -1)
        for layer in (self.fc1, self.relu3, self.fc2):
            x = layer.forward(x)
        return x

    def backward(self, dout: np.ndarray):
        d = self.fc2.backward(dout)
        d = self.relu3.backward(d)
        d = self.fc1.backward(d)
        b = d.shape[0]
        h1, w1 = self.conv1.out_shape(self.in_shape[1], self.in_shape[2])
        h2, w2 = self.conv2.out_shape(h1, w1)
        d = d.reshape(b, 16, h2, w2)
        d = self.relu2.backward(d)
        d = self.conv2.backward(d)
        d = self.relu1.backward(d)
        self.conv1.backward(d)

    def loss_and_gradients(self, images: np.ndarray, targets_std: np.ndarray) -> float:
        """MSE over batch and both outputs; fills every layer's gradients."""
        pred = self.forward(images)
        diff = pred - targets_std
        loss = float(np.mean(diff ** 2))
        self.backward(2.0 * diff / diff.size)
        return loss

    def predict(self, images: np.ndarray) -> np.ndarray:
        """De-standardized (bending, twisting) predictions in N*mm."""
        return self.forward(images) * self.target_std + self.target_mean


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    momentum: float = 0.9
    seed: int = 0


def train_regressor(images: np.ndarray, targets: np.ndarray,
                    config: TrainConfig = TrainConfig()) -> tuple[TorqueRegressor, list[float]]:
    """Fit the regressor; returns (model, per-epoch mean loss history)."""
    images = np.asarray(images, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if images.ndim != 4 or len(images) != len(targets) or len(images) == 0:
        raise ValueError("need a non-empty (n, c, h, w) image stack with matching targets")
    mean = targets.mean(axis=0)
    std = targets.std(axis=0)
    std = np.where(std < 1e-9, 1.0, std)
    targets_std = (targets - mean) / std

    model = TorqueRegressor(images.shape[1:], seed=config.seed,
                            target_mean=mean, target_std=std)
    velocity = [np.zeros_like(p) for p in model.parameter_arrays()]
    rng = np.random.default_rng(config.seed + 1)
    history: list[float] = []
    n = len(images)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss = model.loss_and_gradients(images[idx], targets_std[idx])
            if not np.isfinite(loss):
                raise TrainingError(epoch, f"non-finite loss {loss}")
            epoch_loss += loss
            n_batches += 1
            for v, p, g in zip(velocity, model.parameter_arrays(), model.gradient_arrays()):
                v *= config.momentum
                v -= config.learning_rate * g
                p += v
        history.append(epoch_loss / n_batches)
    return model, history


def evaluate_regressor(model: TorqueRegressor, images: np.ndarray,
                       targets: np.ndarray) -> tuple[float, float, np.ndarray]:
    """(bending RMSE, twisting RMSE, per-sample predictions), physically scaled."""
    preds = model.predict(images)
    targets = np.asarray(targets, dtype=float)
    err = preds - targets
    rmse = np.sqrt(np.mean(err ** 2, axis=0))
    return float(rmse[0]), float(rmse[1]), preds


# ---------------------------------------------------------------------------
# Serialization: magic, version, dims, little-endian float64 parameters
# ---------------------------------------------------------------------------

def model_bytes(model: TorqueRegressor) -> bytes:
    arrays = model.parameter_arrays() + [model.target_mean, model.target_std]
    chunks = [MODEL_MAGIC, struct.pack("<I", MODEL_VERSION),
              struct.pack("<III", *model.in_shape), struct.pack("<I", len(arrays))]
    for a in arrays:
        chunks.append(struct.pack("<I", a.ndim))
        chunks.append(struct.pack(f"<{a.ndim}I", *a.shape))
        chunks.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
    return b"".join(chunks)


def save_model(model: TorqueRegressor, path):
    with open(path, "wb") as fh:
        fh.write(model_bytes(model))


def load_model(path) -> TorqueRegressor:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MODEL_MAGIC:
        raise ValueError("not a torque regressor model file")
    version, = struct.unpack_from("<I", data, 4)
    if version != MODEL_VERSION:
        raise ValueError(f"unsupported model version {version}")
    c, h, w = struct.unpack_from("<III", data, 8)
    n_arrays, = struct.unpack_from("<I", data, 20)
    offset = 24
    arrays = []
    for _ in range(n_arrays):
        ndim, = struct.unpack_from("<I", data, offset)
        offset += 4
        shape = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape)
        offset += 8 * count
        arrays.append(arr.astype(float))
    model = TorqueRegressor((c, h, w), seed=0)
    params = model.parameter_arrays()
    if len(arrays) != len(params) + 2:
        raise ValueError("model file parameter count mismatch")
    for p, a in zip(params, arrays[:-2]):
        if p.shape != a.shape:
            raise ValueError(f"parameter shape mismatch: {p.shape} vs {a.shape}")
        p[...] = a
    model.target_mean = arrays[-2]
    model.target_std = arrays[-1]
    return model
