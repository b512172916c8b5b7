"""Central finite-difference checks for the autodiff engine."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .tensor import Value, backward

LossFn = Callable[[Mapping[str, Value]], Value]


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def numerical_gradients(loss_fn: LossFn, arrays: Mapping[str, np.ndarray], step: float = 1e-5) -> dict[str, np.ndarray]:
    work = {k: np.array(v, dtype=np.float64) for k, v in arrays.items()}

    def evaluate() -> float:
        return loss_fn({k: Value(v) for k, v in work.items()}).item()

    grads = {}
    for name, arr in work.items():
        g = np.zeros_like(arr)
        flat, gflat = arr.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = evaluate()
            flat[i] = orig - step
            down = evaluate()
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * step)
        grads[name] = g
    return grads


def analytic_gradients(loss_fn: LossFn, arrays: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    leaves = {k: Value(v, requires_grad=True) for k, v in arrays.items()}
    backward(loss_fn(leaves))
    return {k: v.grad.copy() for k, v in leaves.items()}


@dataclass
class GradCheckResult:
    max_rel_error: float
    per_param: dict[str, float] = field(default_factory=dict)

    def passed(self, tol: float = 1e-4) -> bool:
        return self.max_rel_error <= tol


def check_gradients(loss_fn: LossFn, arrays: Mapping[str, np.ndarray], step: float = 1e-5) -> GradCheckResult:
    """Compare backprop gradients of ``loss_fn`` with central differences.

    The error for each element is ``|a - fd| / max(|a|, |fd|, 1e-8)``.
    """
    a = analytic_gradients(loss_fn, arrays)
    n = numerical_gradients(loss_fn, arrays, step)
    per = {k: float(relative_error(a[k], n[k]).max(initial=0.0)) for k in arrays}
    return GradCheckResult(max(per.values(), default=0.0), per)


def check_model_gradients(
    kind: str, vertices: int = 5, frames: int = 4, classes: int = 3, seed: int = 0, batch: int = 2, hidden: int = 4
) -> GradCheckResult:
    """Finite-difference check of a full model loss on a tiny random configuration.

    Parameters are drawn uniformly from [-0.5, 0.5] (adjacencies included) so
    no entry sits at a symmetric initial value.
    """
    from .models import GruConfig, GruModel, TgcnConfig, TgcnModel

    rng = np.random.default_rng(seed)
    if kind == "tgcn":
        model = TgcnModel.create(TgcnConfig(classes=classes, vertices=vertices, window_frames=frames), seed)
    elif kind == "gru":
        model = GruModel.create(GruConfig(classes=classes, input_width=2 * vertices, hidden_width=hidden), seed)
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    params = {k: rng.uniform(-0.5, 0.5, size=v.shape) for k, v in model.params.items()}
    x = rng.uniform(-1.0, 1.0, size=(batch, frames, vertices, 2))
    labels = rng.integers(0, classes, size=batch)
    return check_gradients(lambda leaves: model.loss(leaves, x, labels), params)
