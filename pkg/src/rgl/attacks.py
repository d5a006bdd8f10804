"""DeepFool (full-space and subspace-constrained) and SparseFool.

All attacks work on single flat input vectors. Decisions are compared
through class indices (``Classifier.class_index``), so binary and
multiclass models share one code path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateDirectionError, ParameterError
from .spectral import SubspaceSpec

L0_THRESHOLD = 1e-9
_ZERO_WEIGHT = 1e-12


@dataclass
class AttackResult:
    """Outcome of one attack on one input.

    ``boundary_distance`` is the norm of the accumulated DeepFool step
    before the overshoot factor is applied; it is the margin estimate.
    For SparseFool it equals ``l2``.
    """

    delta: np.ndarray
    success: bool
    iterations: int
    l2: float
    l0: int
    adversarial_class: int
    boundary_distance: float = 0.0
    note: str = ""


def _result(model, x, delta, source, iterations, boundary=None, note=""):
    delta = np.asarray(delta, dtype=np.float64)
    cls = int(model.class_index(x + delta))
    l2 = float(np.linalg.norm(delta))
    return AttackResult(delta, cls != source, iterations, l2,
                        int(np.count_nonzero(np.abs(delta) > L0_THRESHOLD)), cls,
                        l2 if boundary is None else boundary, note)


def _deepfool(model, x, subspace, max_iter, overshoot, source):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if subspace is not None and subspace.ambient_dim != x.size:
        raise ParameterError(f"subspace lives in R^{subspace.ambient_dim}, input in R^{x.size}")
    orig = int(model.class_index(x))
    source = orig if source is None else source
    r_tot = np.zeros_like(x)
    if orig != source:
        return _result(model, x, r_tot, source, 0)
    project = (lambda v: v) if subspace is None else subspace.project
    i = 0
    while i < max_iter and int(model.class_index(x + (1 + overshoot) * r_tot)) == source:
        xi = x + r_tot
        scores = model.scores(xi)
        jac = model.score_jacobian(xi)
        best, best_dist = None, np.inf
        for k in range(model.n_classes):
            if k == source:
                continue
            w = project(jac[k] - jac[source])
            nw = float(np.linalg.norm(w))
            if nw < _ZERO_WEIGHT:
                continue
            dist = abs(scores[k] - scores[source]) / nw
            if dist < best_dist:
                best, best_dist = (w, nw), dist
        if best is None:
            raise DegenerateDirectionError(
                "projected gradient vanishes: the boundary is unreachable inside this subspace")
        w, nw = best
        r_tot = r_tot + best_dist * w / nw
        i += 1
    boundary = float(np.linalg.norm(r_tot))
    return _result(model, x, (1 + overshoot) * r_tot, source, i, boundary)


def deepfool(model, x, max_iter: int = 50, overshoot: float = 0.02, *,
             source: int | None = None) -> AttackResult:
    """Minimal-ℓ2 boundary crossing by iterated linearization.

    Each step moves to the nearest linearized class boundary; the loop
    stops once ``x + (1 + overshoot) * r`` changes class. ``source`` is
    the class index the input is expected to have; an input already
    outside it gets a zero perturbation.
    """
    return _deepfool(model, x, None, max_iter, overshoot, source)


def deepfool_subspace(model, x, subspace: SubspaceSpec, max_iter: int = 50,
                      overshoot: float = 0.02, *, source: int | None = None) -> AttackResult:
    """DeepFool with every gradient replaced by its projection onto ``subspace``.

    No box constraint is applied, so the perturbation stays exactly in
    the subspace. Raises :class:`DegenerateDirectionError` when the
    projected gradient vanishes.
    """
    return _deepfool(model, x, subspace, max_iter, overshoot, source)


def refine_to_boundary(model, x, delta, source: int, steps: int = 60) -> float:
    """Shrink a successful perturbation to the first class change along its ray.

    Bisects ``t`` in ``[0, 1]`` on ``x + t * delta`` and returns the norm
    of the shortest flipping multiple found. DeepFool's linearization can
    step well past a curved boundary; this recovers the crossing point.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    lo, hi = 0.0, 1.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if int(model.class_index(x + mid * delta)) != source:
            hi = mid
        else:
            lo = mid
    return hi * float(np.linalg.norm(delta))


@dataclass(frozen=True)
class BoxBounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if self.lower.shape != self.upper.shape or np.any(self.lower > self.upper):
            raise ParameterError("box bounds need matching shapes and lower <= upper")

    @classmethod
    def unbounded(cls, dim: int) -> "BoxBounds":
        return cls(np.full(dim, -np.inf), np.full(dim, np.inf))

    def clip(self, v):
        return np.minimum(np.maximum(v, self.lower), self.upper)

    def contains(self, v) -> bool:
        return bool(np.all(v >= self.lower) and np.all(v <= self.upper))


def perceptibility_bounds(x, alpha: float, range_min: float = 0.0,
                          range_max: float = 1.0) -> BoxBounds:
    """Box allowing each coordinate to move at most ``alpha`` inside the value range."""
    if alpha < 0:
        raise ParameterError(f"alpha must be >= 0, got {alpha}")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    return BoxBounds(np.maximum(range_min, x - alpha), np.minimum(range_max, x + alpha))


@dataclass
class LinearSolverResult:
    point: np.ndarray
    feasible: bool
    iterations: int
    residual: float


def linear_solver(x, w, x_boundary, bounds: BoxBounds, tol: float | None = None) -> LinearSolverResult:
    """Sparse move of ``x`` onto the hyperplane ``{z : w.(z - x_boundary) = 0}`` inside a box.

    Coordinates are used greedily by decreasing ``|w_j|`` (ties to the
    lowest index); each one absorbs as much of the residual as its box
    allows and is then frozen. Coordinates with ``|w_j| < 1e-12`` are
    never used. The returned point is always inside ``bounds``.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    xb = np.asarray(x_boundary, dtype=np.float64).reshape(-1)
    nw = float(np.linalg.norm(w))
    if nw == 0.0:
        raise ParameterError("normal vector must be nonzero")
    if not bounds.contains(x):
        raise ParameterError("starting point lies outside the box")
    if tol is None:
        tol = 1e-9 * nw * max(1.0, float(np.linalg.norm(x - xb)))
    order = np.argsort(-np.abs(w), kind="stable")
    order = order[np.abs(w[order]) >= _ZERO_WEIGHT].astype(np.int64)
    residual = float(w @ (x - xb))
    out, residual, iters = kernels.linear_solver_core(
        x, w, order, bounds.lower, bounds.upper, residual, float(tol))
    return LinearSolverResult(np.asarray(out), abs(residual) <= tol, int(iters), residual)


def sparsefool(model, x, lam: float = 3.0, bounds: BoxBounds | None = None, max_outer: int = 50,
               *, max_iter: int = 50, overshoot: float = 0.02) -> AttackResult:
    """Sparse decision flip by repeated ℓ1 projection onto linearized boundaries.

    Each outer step runs DeepFool from the current iterate, overshoots the
    boundary point by ``lam``, takes the boundary normal at that point and
    moves there with :func:`linear_solver`. Every iterate stays in ``bounds``.
    """
    if lam < 1:
        raise ParameterError(f"lam must be >= 1, got {lam}")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    bounds = bounds or BoxBounds.unbounded(x.size)
    if not bounds.contains(x):
        raise ParameterError("input lies outside the box")
    source = int(model.class_index(x))
    xi = x.copy()
    outer = 0
    note = ""
    while outer < max_outer and int(model.class_index(xi)) == source:
        df = deepfool(model, xi, max_iter, overshoot, source=source)
        if not df.success:
            note = "deepfool failed"
            break
        x_b = xi + lam * df.delta
        target = int(model.class_index(x_b))
        jac = model.score_jacobian(x_b)
        w = jac[target] - jac[source]
        outer += 1
        if target == source or np.linalg.norm(w) == 0.0:
            note = "degenerate boundary normal"
            break
        step = linear_solver(xi, w, x_b, bounds)
        if np.array_equal(step.point, xi):
            note = "linear solver made no progress"
            break
        xi = step.point
    else:
        if int(model.class_index(xi)) == source:
            note = "max_outer reached"
    return _result(model, x, xi - x, source, outer, note=note)
