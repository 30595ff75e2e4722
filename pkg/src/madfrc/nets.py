"""Dense networks with hand-written backprop, Adam, and checkpoint files.

Two hidden rectifier layers and a linear (optionally tanh-scaled) head; all
arithmetic is float64 numpy so analytic gradients can be verified against
central finite differences tightly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

_MAGIC = b"MADRLCK1"


class DenseNet:
    """in -> hidden -> hidden -> out with ReLU hidden activations."""

    def __init__(self, dim_in, dim_hidden, dim_out, rng, out_scale=None):
        self.dims = (dim_in, dim_hidden, dim_hidden, dim_out)
        self.out_scale = out_scale       # None: linear head; else tanh * scale
        self.weights = []
        self.biases = []
        fan_pairs = list(zip(self.dims[:-1], self.dims[1:]))
        for i, (fin, fout) in enumerate(fan_pairs):
            bound = 1.0 / np.sqrt(fin)
            if i == len(fan_pairs) - 1 and out_scale is not None:
                bound = 3e-3             # small head keeps early actions centred
            self.weights.append(rng.uniform(-bound, bound, size=(fin, fout)))
            self.biases.append(rng.uniform(-bound, bound, size=fout))

    def parameters(self):
        return self.weights + self.biases

    def forward(self, x, cache=None):
        """Batch forward; pass a dict as ``cache`` to enable backward()."""
        h = np.atleast_2d(x)
        acts = [h]
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W + b
            if i < len(self.weights) - 1:
                h = np.maximum(h, 0.0)
            acts.append(h)
        if self.out_scale is not None:
            h = self.out_scale * np.tanh(h)
            acts.append(h)
        if cache is not None:
            cache["acts"] = acts
        return h

    def backward(self, cache, grad_out):
        """Gradients of sum(grad_out * output) w.r.t. params and the input."""
        acts = cache["acts"]
        g = np.atleast_2d(grad_out)
        if self.out_scale is not None:
            y = acts[-1]
            g = g * (self.out_scale - y**2 / self.out_scale)   # d(scale*tanh(u))/du
            acts = acts[:-1]
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        for i in reversed(range(len(self.weights))):
            pre_in = acts[i]
            grads_w[i] = pre_in.T @ g
            grads_b[i] = g.sum(axis=0)
            g = g @ self.weights[i].T
            if i > 0:
                g = g * (acts[i] > 0.0)
        return grads_w + grads_b, g

    def copy(self):
        dup = DenseNet.__new__(DenseNet)
        dup.dims = self.dims
        dup.out_scale = self.out_scale
        dup.weights = [w.copy() for w in self.weights]
        dup.biases = [b.copy() for b in self.biases]
        return dup


class Adam:
    """Standard Adam on a list of parameter arrays, updated in place."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def soft_update(online: DenseNet, target: DenseNet, tau):
    """target <- tau * online + (1 - tau) * target, all parameter arrays."""
    if online.dims != target.dims:
        raise ValueError("network shapes do not match")
    for po, pt in zip(online.parameters(), target.parameters()):
        pt *= 1.0 - tau
        pt += tau * po


def save_checkpoint(path, header: dict, nets: dict):
    """Self-describing file: magic, JSON header, float64 LE arrays in order.

    ``nets`` maps names to DenseNet; the header records dims, activation and
    the array order so the file can be parsed without this library.
    """
    arrays = []
    order = []
    for name, net in nets.items():
        for i, w in enumerate(net.weights):
            order.append({"name": f"{name}/W{i}", "shape": list(w.shape)})
            arrays.append(w)
        for i, b in enumerate(net.biases):
            order.append({"name": f"{name}/b{i}", "shape": list(b.shape)})
            arrays.append(b)
    meta = dict(header)
    meta["nets"] = {
        name: {"dims": list(net.dims), "activation": "relu",
               "out_scale": net.out_scale}
        for name, net in nets.items()
    }
    meta["arrays"] = order
    blob = json.dumps(meta).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns (header dict, {name: DenseNet})."""
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise ValueError("not a checkpoint file")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        meta = json.loads(fh.read(hlen).decode("utf-8"))
        nets = {}
        for name, spec in meta["nets"].items():
            net = DenseNet.__new__(DenseNet)
            net.dims = tuple(spec["dims"])
            net.out_scale = spec["out_scale"]
            net.weights, net.biases = [], []
            nets[name] = net
        for desc in meta["arrays"]:
            shape = tuple(desc["shape"])
            count = int(np.prod(shape))
            arr = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(shape).copy()
            name, kind = desc["name"].split("/")
            if kind.startswith("W"):
                nets[name].weights.append(arr)
            else:
                nets[name].biases.append(arr)
    return meta, nets
