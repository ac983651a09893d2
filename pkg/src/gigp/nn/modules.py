"""Parameter containers: Module, Linear, MLP, and the loss functions."""
from __future__ import annotations

from collections.abc import Iterator, Sequence

import numpy as np

from .tensor import Tensor, log_softmax, matmul, swish, tsum, mean, square, sub, gather


class Module:
    """Base class collecting ``Tensor`` parameters from attributes, in definition order."""

    def named_tensors(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        """All tensor attributes: trainable parameters and fixed buffers."""
        for key, val in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(val, Tensor):
                yield name, val
            elif isinstance(val, Module):
                yield from val.named_tensors(name + ".")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_tensors(f"{name}.{i}.")
                    elif isinstance(item, Tensor):
                        yield f"{name}.{i}", item

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        return ((k, t) for k, t in self.named_tensors(prefix) if t.requires_grad)

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def n_parameters(self) -> int:
        return int(sum(p.data.size for p in self.parameters()))

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.named_tensors()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_tensors())
        missing = set(own) - set(state)
        if missing:
            raise KeyError(f"missing parameters in state: {sorted(missing)}")
        for k, p in own.items():
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != p.shape:
                raise ValueError(f"shape mismatch for {k}: {arr.shape} vs {p.shape}")
            p.data = arr.copy()


def param(data) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True)


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, zero_init: bool = False):
        if zero_init:
            w = np.zeros((n_in, n_out))
        else:
            w = rng.uniform(-1.0, 1.0, size=(n_in, n_out)) / np.sqrt(n_in)
        self.weight = param(w)
        self.bias = param(np.zeros(n_out))

    def __call__(self, x) -> Tensor:
        return matmul(x, self.weight) + self.bias


class MLP(Module):
    """Stack of Linear layers with swish between them (not after the last)."""

    def __init__(self, widths: Sequence[int], rng: np.random.Generator, zero_last: bool = False):
        if len(widths) < 2:
            raise ValueError("an MLP needs at least input and output widths")
        n = len(widths) - 1
        self.layers = [Linear(widths[i], widths[i + 1], rng, zero_init=zero_last and i == n - 1) for i in range(n)]

    def __call__(self, x) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = swish(x)
        return x


def mse_loss(pred, target) -> Tensor:
    return mean(square(sub(pred, target)))


def cross_entropy(logits, labels) -> Tensor:
    """Mean negative log-likelihood of integer ``labels`` under ``logits`` (B, C)."""
    labels = np.asarray(labels, dtype=np.int64)
    lp = log_softmax(logits, axis=-1)
    flat = lp.reshape(-1)
    picked = gather(flat.reshape(-1, 1), np.arange(len(labels)) * lp.shape[1] + labels)
    return tsum(picked) * (-1.0 / len(labels))
