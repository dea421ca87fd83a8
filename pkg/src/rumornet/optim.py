"""Adadelta parameter updates.

Per parameter the optimizer keeps two running second moments: one of the
gradients (eg2) and one of the applied updates (edx2).  The step is

    eg2   <- rho * eg2 + (1 - rho) * g^2
    delta <- -sqrt(edx2 + eps) / sqrt(eg2 + eps) * g   (new eg2, old edx2)
    edx2  <- rho * edx2 + (1 - rho) * delta^2
    param <- param + delta

and the gradient buffer is cleared afterwards.  There is no learning rate.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdadeltaState:
    eg2: np.ndarray
    edx2: np.ndarray

    @classmethod
    def zeros_like(cls, param):
        return cls(np.zeros(param.shape), np.zeros(param.shape))


def adadelta_step(param, state, rho=0.95, eps=1e-6):
    """Apply one update in place from param.grad; clears the gradient."""
    g = param.grad
    state.eg2 *= rho
    state.eg2 += (1.0 - rho) * g * g
    delta = -np.sqrt(state.edx2 + eps) / np.sqrt(state.eg2 + eps) * g
    state.edx2 *= rho
    state.edx2 += (1.0 - rho) * delta * delta
    param.data += delta
    param.zero_grad()


@dataclass
class Adadelta:
    """Tracks state for a named set of parameters."""

    rho: float = 0.95
    eps: float = 1e-6
    states: dict = field(default_factory=dict)

    def step(self, params):
        """params: iterable of (name, Tensor) pairs with grads populated."""
        for name, p in params:
            st = self.states.get(name)
            if st is None:
                st = AdadeltaState.zeros_like(p)
                self.states[name] = st
            adadelta_step(p, st, self.rho, self.eps)
