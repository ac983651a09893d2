"""Central finite-difference checks of tape gradients."""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


@dataclass
class GradCheckReport:
    tol: float
    errors: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e < self.tol for e in self.errors.values())

    @property
    def failures(self) -> dict[str, float]:
        return {k: e for k, e in self.errors.items() if not e < self.tol}

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    def lines(self) -> list[str]:
        return [f"{'PASS' if e < self.tol else 'FAIL'} {k}: max rel err {e:.3e}" for k, e in self.errors.items()]


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """max |a - n| / max(|a|, |n|, floor) over elements."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if a.size == 0:
        return 0.0
    den = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / den))


def numeric_grad(f: Callable[[], Tensor], p: Tensor, step: float = 1e-6) -> np.ndarray:
    out = np.zeros_like(p.data)
    flat = p.data.reshape(-1)
    gflat = out.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + step
        fp = float(f().data.sum())
        flat[i] = old - step
        fm = float(f().data.sum())
        flat[i] = old
        gflat[i] = (fp - fm) / (2.0 * step)
    return out


def grad_check(
    f: Callable[[], Tensor],
    params: dict[str, Tensor] | list[Tensor],
    step: float = 1e-6,
    tol: float = 1e-4,
    floor: float = 1e-6,
    corrupt: float = 1.0,
) -> GradCheckReport:
    """Compare tape gradients of scalar ``f()`` with central differences.

    ``corrupt`` scales the tape gradient before comparison; it exists so the
    detector itself can be tested.
    """
    if not isinstance(params, dict):
        params = {f"param{i}": p for i, p in enumerate(params)}
    for p in params.values():
        p.grad = None
        p.data = np.array(p.data, dtype=np.float64)  # private, writable copy
    loss = f()
    loss.backward()
    report = GradCheckReport(tol=tol)
    for name, p in params.items():
        analytic = (np.zeros_like(p.data) if p.grad is None else p.grad) * corrupt
        report.errors[name] = relative_error(analytic, numeric_grad(f, p, step), floor)
    return report
