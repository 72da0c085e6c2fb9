"""Linear discrete state equations split into inter- and intra-period layers.

For ``x[t+1] = A[t] x[t] + w[t]`` cut into periods of ``N_g`` steps, the state
at step ``g`` of period ``i`` is

    x[i, g] = (A[g-1] ... A[1]) x_inter[i] + x_intra[f(i), g]

where ``x_intra`` starts at zero in every period and ``x_inter`` follows
``x_inter[i+1] = (A[N_g] ... A[1]) x_inter[i] + x_intra[f(i), N_g + 1]``.
Scalars are accepted wherever a matrix is expected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_stack(A, n_steps: int | None):
    A = np.asarray(A, dtype=float)
    if A.ndim == 0:
        if n_steps is None:
            raise ValueError("a scalar transition needs n_steps")
        return np.full((n_steps, 1, 1), float(A))
    if A.ndim == 1:
        stack = A[:, None, None]
    elif A.ndim == 2:
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"transition matrix must be square, got {A.shape}")
        if n_steps is None:
            raise ValueError("a single transition matrix needs n_steps")
        return np.broadcast_to(A, (n_steps,) + A.shape)
    elif A.ndim == 3:
        if A.shape[1] != A.shape[2]:
            raise ValueError(f"transition matrices must be square, got {A.shape[1:]}")
        stack = A
    else:
        raise ValueError("transition must be a scalar, a matrix or a stack of matrices")
    if n_steps is not None and stack.shape[0] != n_steps:
        raise ValueError(f"expected {n_steps} step matrices, got {stack.shape[0]}")
    return stack


def inter_transition(A, n_steps: int | None = None):
    """Chronological product ``A[N_g] ... A[1]`` over one period.

    A scalar (or a 1-d array of per-step scalars) returns a float.
    """
    scalar = np.ndim(A) <= 1
    stack = _as_stack(A, n_steps)
    out = np.eye(stack.shape[1])
    for Ag in stack:
        out = Ag @ out
    return float(out[0, 0]) if scalar else out


def decay_powers(A, n_steps: int) -> np.ndarray:
    """Partial products ``P[g] = A[g-1] ... A[0]`` for ``g = 0..n_steps`` (P[0] = I)."""
    stack = _as_stack(A, n_steps)
    n = stack.shape[1]
    out = np.empty((n_steps + 1, n, n))
    out[0] = np.eye(n)
    for g in range(n_steps):
        out[g + 1] = stack[g] @ out[g]
    return out


@dataclass(frozen=True)
class LinearStateSystem:
    """Time-variant linear state model over one period.

    ``A`` holds the per-step transition matrices (``N_g x n x n``), and
    ``forcing`` the per-step input terms ``B u`` (``N_g x n``).
    """

    A: np.ndarray
    forcing: np.ndarray
    x_lb: np.ndarray | float = -np.inf
    x_ub: np.ndarray | float = np.inf

    def __post_init__(self):
        forcing = np.asarray(self.forcing, dtype=float)
        if forcing.ndim == 1:
            forcing = forcing[:, None]
        A = _as_stack(self.A, forcing.shape[0])
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(forcing))):
            raise ValueError("state system entries must be finite")
        if A.shape[1] != forcing.shape[1]:
            raise ValueError("forcing dimension does not match the state dimension")
        if np.any(np.asarray(self.x_lb) > np.asarray(self.x_ub)):
            raise ValueError("state bounds must satisfy x_lb <= x_ub")
        object.__setattr__(self, "A", np.array(A))
        object.__setattr__(self, "forcing", forcing)

    @property
    def n_steps(self) -> int:
        return self.forcing.shape[0]

    @property
    def dimension(self) -> int:
        return self.forcing.shape[1]

    def propagate(self, x0) -> np.ndarray:
        """States at steps ``1..N_g+1`` starting from ``x0``."""
        x = np.empty((self.n_steps + 1, self.dimension))
        x[0] = x0
        for g in range(self.n_steps):
            x[g + 1] = self.A[g] @ x[g] + self.forcing[g]
        return x

    def intra_states(self) -> np.ndarray:
        return self.propagate(np.zeros(self.dimension))

    def intra_end_state(self) -> np.ndarray:
        """Series expansion of the zero-start state after the last step."""
        out = np.zeros(self.dimension)
        for g in range(self.n_steps):
            tail = np.eye(self.dimension)
            for h in range(g + 1, self.n_steps):
                tail = self.A[h] @ tail
            out += tail @ self.forcing[g]
        return out

    def transition(self) -> np.ndarray:
        return inter_transition(self.A)


def inter_sequence(typical: list[LinearStateSystem], assignment, x_start) -> np.ndarray:
    """Inter-period states ``x_inter[1..N_i+1]`` for a sequence of typical periods."""
    ends = [t.intra_end_state() for t in typical]
    trans = [t.transition() for t in typical]
    out = np.empty((len(assignment) + 1, typical[0].dimension))
    out[0] = x_start
    for i, k in enumerate(assignment):
        out[i + 1] = trans[k] @ out[i] + ends[k]
    return out


def superpose(typical: list[LinearStateSystem], assignment, inter: np.ndarray) -> np.ndarray:
    """Full states ``x[i, g]`` (``N_i x (N_g+1) x n``) from the two layers."""
    intra = [t.intra_states() for t in typical]
    powers = [decay_powers(t.A, t.n_steps) for t in typical]
    n_steps = typical[0].n_steps
    out = np.empty((len(assignment), n_steps + 1, typical[0].dimension))
    for i, k in enumerate(assignment):
        out[i] = powers[k] @ inter[i] + intra[k]
    return out
