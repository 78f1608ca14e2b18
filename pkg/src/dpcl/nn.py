"""Dense feed-forward classifier with exact backprop and per-example gradients.

Parameters live in per-layer arrays but every gradient-facing operation works
on a single flat vector, which is what the clipping / noising / projection
pipeline consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

# A ParamVector is a flat float64 array with length == net.num_params.


def relu(z):
    return np.maximum(z, 0.0)


def log_softmax(logits):
    # log-sum-exp keeps the cross entropy stable for large logits
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


@dataclass
class DenseNet:
    """Rectifier MLP with a softmax output layer.

    layer_dims = [d, h1, ..., C]. Weights are seeded uniform in
    [-1/sqrt(fan_in), +1/sqrt(fan_in)].
    """

    layer_dims: list
    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)

    @classmethod
    def create(cls, layer_dims, seed=0):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(101,)))
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(list(layer_dims), weights, biases)

    @property
    def num_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    @property
    def num_classes(self):
        return self.layer_dims[-1]

    def get_params(self):
        """Flatten all parameters into one vector (W then b, layer by layer)."""
        return np.concatenate(
            [np.concatenate([w.ravel(), b]) for w, b in zip(self.weights, self.biases)]
        )

    def set_params(self, flat):
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.num_params,):
            raise InputError(f"expected {self.num_params} parameters, got {flat.shape}")
        off = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = flat[off:off + w.size].reshape(w.shape).copy()
            off += w.size
            self.biases[i] = flat[off:off + b.size].copy()
            off += b.size

    def clone(self):
        return DenseNet(list(self.layer_dims),
                        [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases])

    def _forward_batch(self, x):
        """Return (activations, logits); activations[l] feeds layer l."""
        acts = [x]
        a = x
        last = len(self.weights) - 1
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            if l < last:
                a = relu(z)
                acts.append(a)
            else:
                return acts, z
        raise AssertionError("network has no layers")


def forward(net: DenseNet, x) -> np.ndarray:
    """Class probabilities for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.layer_dims[0],):
        raise InputError(f"expected input of length {net.layer_dims[0]}, got {x.shape}")
    _, logits = net._forward_batch(x[None, :])
    return np.exp(log_softmax(logits))[0]


def _check_batch(net, batch):
    if len(batch) == 0:
        raise InputError("empty batch")
    if batch.x.shape[1] != net.layer_dims[0]:
        raise InputError("feature dimension mismatch")


def loss(net: DenseNet, batch) -> float:
    """Mean softmax cross entropy over the batch."""
    _check_batch(net, batch)
    _, logits = net._forward_batch(batch.x)
    logp = log_softmax(logits)
    return float(-logp[np.arange(len(batch)), batch.y].mean())


def _backprop(net, batch):
    """Per-example parameter gradients of the (unreduced) cross entropy.

    Returns an array of shape (n, num_params); averaging its rows gives the
    gradient of the mean loss.
    """
    acts, logits = net._forward_batch(batch.x)
    n = len(batch)
    probs = np.exp(log_softmax(logits))
    delta = probs
    delta[np.arange(n), batch.y] -= 1.0  # dL_i/dlogits

    grads = np.empty((n, net.num_params))
    # walk layers backward, writing each (W, b) slab into its flat slot
    offsets = []
    off = 0
    for w, b in zip(net.weights, net.biases):
        offsets.append(off)
        off += w.size + b.size
    for l in range(len(net.weights) - 1, -1, -1):
        w = net.weights[l]
        a_prev = acts[l]
        gw = np.einsum("ni,nj->nij", a_prev, delta).reshape(n, -1)
        start = offsets[l]
        grads[:, start:start + w.size] = gw
        grads[:, start + w.size:start + w.size + delta.shape[1]] = delta
        if l > 0:
            delta = (delta @ w.T) * (acts[l] > 0.0)
    return grads


def grad(net: DenseNet, batch) -> np.ndarray:
    """Exact gradient of loss() w.r.t. the flattened parameters."""
    _check_batch(net, batch)
    return _backprop(net, batch).mean(axis=0)


def per_example_grads(net: DenseNet, batch) -> list:
    """List of per-example gradient vectors; element i == grad on batch[i] alone."""
    _check_batch(net, batch)
    g = _backprop(net, batch)
    return [g[i] for i in range(len(batch))]


def accuracy(net: DenseNet, dataset) -> float:
    """Fraction of argmax-correct predictions (ties break to the lowest index)."""
    _check_batch(net, dataset)
    _, logits = net._forward_batch(dataset.x)
    return float((logits.argmax(axis=1) == dataset.y).mean())
