"""Adam optimizer with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from pdspeech.nn.tensor import Tensor


@dataclass
class AdamState:
    """Optimizer hyperparameters plus per-parameter moment buffers."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def init_adam(params: list[Tensor], lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    """Fresh zeroed moment buffers matching the parameter shapes."""
    if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
        raise ValueError(f"betas must be in [0, 1), got {beta1}, {beta2}")
    if lr <= 0 or epsilon <= 0:
        raise ValueError("lr and epsilon must be positive")
    return AdamState(
        lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon, step_count=0,
        m=[np.zeros_like(p.data, dtype=np.float64) for p in params],
        v=[np.zeros_like(p.data, dtype=np.float64) for p in params],
    )


def adam_step(params: list[Tensor], grads: list[np.ndarray], state: AdamState) -> None:
    """One in-place Adam update.

    m and v are exponential moving averages of the gradient and squared
    gradient; both are bias-corrected by 1 - beta^t. Moments are kept in
    float64 regardless of the parameter dtype.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError(
            f"mismatched lengths: {len(params)} params, {len(grads)} grads, "
            f"{len(state.m)} moment buffers"
        )
    state.step_count += 1
    t = state.step_count
    correct1 = 1.0 - state.beta1**t
    correct2 = 1.0 - state.beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g is None:
            raise ValueError("missing gradient (did you run backward?)")
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.data.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g**2
        m_hat = m / correct1
        v_hat = v / correct2
        p.data -= (state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)).astype(
            p.data.dtype
        )
