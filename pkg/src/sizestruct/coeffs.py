"""Coefficient functions and birth kernels, bundled into model parameters.

Every object here is immutable. Coefficients are evaluated in vectorised form:
``f(s)`` accepts scalars or arrays and returns the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError

# relative slack when checking that a size lies in [0, m]
_DOMAIN_SLACK = 1e-12
# sample count used for positivity/non-negativity validation
_VALIDATION_SAMPLES = 1000

FORMS = ("constant", "linear", "gaussian_bump", "table")


def _as_sizes(s, m: float) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    slack = _DOMAIN_SLACK * max(m, 1.0)
    if np.any(~np.isfinite(s)) or np.any(s < -slack) or np.any(s > m + slack):
        raise DomainError(f"size outside [0, {m}]")
    return np.clip(s, 0.0, m)


@dataclass(frozen=True)
class CoefficientFn:
    """A scalar function on ``[0, m]``.

    Build instances with :meth:`constant`, :meth:`linear`,
    :meth:`gaussian_bump` or :meth:`table` rather than the raw constructor.
    ``params`` holds the form parameters as a tuple so instances stay
    hashable; table knots and values are stored as tuples too.
    """

    form: str
    params: tuple
    domain_max: float

    def __post_init__(self):
        if self.form not in FORMS:
            raise ConfigError(f"unknown coefficient form {self.form!r}")
        if not (np.isfinite(self.domain_max) and self.domain_max > 0):
            raise ConfigError("domain_max must be positive and finite")
        flat = []
        for p in self.params:
            flat.extend(p if isinstance(p, tuple) else [p])
        if not all(isinstance(p, str) or np.isfinite(p) for p in flat):
            raise ConfigError(f"non-finite parameter in {self.form} coefficient")

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value: float, m: float = 1.0) -> CoefficientFn:
        return cls("constant", (float(value),), float(m))

    @classmethod
    def linear(cls, a: float, b: float, m: float = 1.0) -> CoefficientFn:
        """``a + b*s``."""
        return cls("linear", (float(a), float(b)), float(m))

    @classmethod
    def gaussian_bump(cls, center: float, width: float, height: float,
                      m: float = 1.0) -> CoefficientFn:
        """``height * exp(-((s - center)/width)**2)``."""
        if width <= 0:
            raise ConfigError("gaussian_bump width must be positive")
        return cls("gaussian_bump", (float(center), float(width), float(height)), float(m))

    @classmethod
    def table(cls, knots: Sequence[float], values: Sequence[float],
              m: float | None = None, interpolation: str = "linear") -> CoefficientFn:
        """Tabulated function.

        ``interpolation="linear"`` is piecewise-linear through ``(knots, values)``.
        ``interpolation="step"`` is piecewise-constant and right-continuous:
        ``values[i]`` holds on ``[knots[i], knots[i+1])``, the last cell is
        closed, so ``len(values) == len(knots) - 1``.
        """
        knots = tuple(float(k) for k in knots)
        values = tuple(float(v) for v in values)
        if m is None:
            m = knots[-1] if knots else 1.0
        if len(knots) < 2:
            raise ConfigError("table needs at least two knots")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise ConfigError("table knots must be strictly ascending")
        if abs(knots[0]) > _DOMAIN_SLACK or abs(knots[-1] - m) > _DOMAIN_SLACK * max(m, 1.0):
            raise ConfigError(f"table knots must span [0, {m}] exactly")
        if interpolation == "linear":
            if len(values) != len(knots):
                raise ConfigError("linear table needs one value per knot")
        elif interpolation == "step":
            if len(values) != len(knots) - 1:
                raise ConfigError("step table needs one value per cell")
        else:
            raise ConfigError(f"unknown interpolation {interpolation!r}")
        return cls("table", (knots, values, interpolation), float(m))

    # -- queries ----------------------------------------------------------
    @property
    def m(self) -> float:
        return self.domain_max

    def __call__(self, s):
        s = _as_sizes(s, self.domain_max)
        p = self.params
        if self.form == "constant":
            return np.full_like(s, p[0])
        if self.form == "linear":
            return p[0] + p[1] * s
        if self.form == "gaussian_bump":
            c, w, h = p
            return h * np.exp(-(((s - c) / w) ** 2))
        knots, values, interp = np.asarray(p[0]), np.asarray(p[1]), p[2]
        if interp == "linear":
            return np.interp(s, knots, values)
        idx = np.clip(np.searchsorted(knots, s, side="right") - 1, 0, len(values) - 1)
        return values[idx]

    def eval(self, s):
        out = self(s)
        return float(out) if out.ndim == 0 else out

    def derivative(self, s):
        """Analytic derivative; for tables the slope of the containing segment.

        At interior knots of a linear table the left segment's slope is used.
        """
        s = _as_sizes(s, self.domain_max)
        p = self.params
        if self.form == "constant":
            out = np.zeros_like(s)
        elif self.form == "linear":
            out = np.full_like(s, p[1])
        elif self.form == "gaussian_bump":
            c, w, h = p
            out = -2.0 * (s - c) / w**2 * h * np.exp(-(((s - c) / w) ** 2))
        elif p[2] == "step":
            out = np.zeros_like(s)
        else:
            knots, values = np.asarray(p[0]), np.asarray(p[1])
            slopes = np.diff(values) / np.diff(knots)
            idx = np.clip(np.searchsorted(knots, s, side="left") - 1, 0, len(slopes) - 1)
            out = slopes[idx]
        return float(out) if out.ndim == 0 else out

    def sup_norm(self) -> float:
        """Supremum of the function over ``[0, m]`` (exact for every form)."""
        return float(np.max(self._extreme_candidates()))

    def inf_value(self) -> float:
        return float(np.min(self._extreme_candidates()))

    def _extreme_candidates(self) -> np.ndarray:
        m = self.domain_max
        if self.form == "table":
            return np.asarray(self.params[1])
        if self.form == "gaussian_bump":
            # monotone on either side of the centre
            pts = [0.0, m, min(max(self.params[0], 0.0), m)]
            return self(np.array(pts))
        return self(np.array([0.0, m]))

    def breakpoints(self) -> tuple:
        """Sizes where the function or its derivative may jump."""
        if self.form == "table":
            return self.params[0]
        return (0.0, self.domain_max)

    def is_zero(self) -> bool:
        return self.sup_norm() == 0.0 and self.inf_value() == 0.0

    def scaled(self, factor: float) -> CoefficientFn:
        p = self.params
        if self.form == "constant":
            return CoefficientFn.constant(factor * p[0], self.domain_max)
        if self.form == "linear":
            return CoefficientFn.linear(factor * p[0], factor * p[1], self.domain_max)
        if self.form == "gaussian_bump":
            return CoefficientFn.gaussian_bump(p[0], p[1], factor * p[2], self.domain_max)
        return CoefficientFn.table(p[0], [factor * v for v in p[1]], self.domain_max, p[2])

    def validation_samples(self) -> np.ndarray:
        pts = np.linspace(0.0, self.domain_max, _VALIDATION_SAMPLES)
        return self(np.union1d(pts, self.breakpoints()))

    def check_positive(self, name: str) -> None:
        if np.min(self.validation_samples()) <= 0:
            raise ConfigError(f"{name} must be strictly positive on [0, m]")

    def check_nonnegative(self, name: str) -> None:
        if np.min(self.validation_samples()) < 0:
            raise ConfigError(f"{name} must be non-negative on [0, m]")


def constant(value, m=1.0):
    return CoefficientFn.constant(value, m)


def linear(a, b, m=1.0):
    return CoefficientFn.linear(a, b, m)


def gaussian_bump(center, width, height, m=1.0):
    return CoefficientFn.gaussian_bump(center, width, height, m)


def table(knots, values, m=None, interpolation="linear"):
    return CoefficientFn.table(knots, values, m, interpolation)


def eval_coeff(f: CoefficientFn, s):
    return f.eval(s)


def derivative(f: CoefficientFn, s):
    return f.derivative(s)


def sup_norm(f) -> float:
    return f.sup_norm()


def inf_value(f: CoefficientFn) -> float:
    return f.inf_value()


# ---------------------------------------------------------------------------
# birth kernels


@dataclass(frozen=True, eq=False)
class GeneralKernel:
    """Tabulated kernel ``beta(s, y)`` on a uniform tensor grid over ``[0, m]^2``.

    ``values[i, j]`` is the kernel at ``(s_i, y_j)`` with
    ``s_i = y_i = i*m/(n-1)``; in between the kernel is bilinear.
    """

    values: np.ndarray
    domain_max: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 2 or v.shape[1] < 2:
            raise ConfigError("general kernel needs a 2-D table of at least 2x2 nodes")
        if not np.all(np.isfinite(v)):
            raise ConfigError("general kernel has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "domain_max", float(self.domain_max))

    def __eq__(self, other):
        if not isinstance(other, GeneralKernel):
            return NotImplemented
        return (self.domain_max == other.domain_max
                and self.values.shape == other.values.shape
                and bool(np.array_equal(self.values, other.values)))

    def __hash__(self):
        return hash((self.domain_max, self.values.shape, self.values.tobytes()))

    @classmethod
    def from_function(cls, func, m: float, n_nodes: int = 101) -> GeneralKernel:
        nodes = np.linspace(0.0, m, n_nodes)
        S, Y = np.meshgrid(nodes, nodes, indexing="ij")
        return cls(np.asarray(func(S, Y), dtype=float), m)

    @property
    def s_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.domain_max, self.values.shape[0])

    @property
    def y_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.domain_max, self.values.shape[1])

    def __call__(self, s, y):
        s = _as_sizes(s, self.domain_max)
        y = _as_sizes(y, self.domain_max)
        s, y = np.broadcast_arrays(s, y)
        ns, ny = self.values.shape
        hs = self.domain_max / (ns - 1)
        hy = self.domain_max / (ny - 1)
        i = np.clip(np.floor(s / hs).astype(int), 0, ns - 2)
        j = np.clip(np.floor(y / hy).astype(int), 0, ny - 2)
        ts = s / hs - i
        ty = y / hy - j
        v = self.values
        return ((1 - ts) * (1 - ty) * v[i, j] + ts * (1 - ty) * v[i + 1, j]
                + (1 - ts) * ty * v[i, j + 1] + ts * ty * v[i + 1, j + 1])

    def sup_norm(self) -> float:
        return float(np.max(self.values))

    def inf_value(self) -> float:
        return float(np.min(self.values))

    def axis_breakpoints(self):
        return tuple(self.s_nodes), tuple(self.y_nodes)

    def validate(self) -> None:
        if np.min(self.values) < 0:
            raise ConfigError("birth kernel beta must be non-negative")

    def is_trivial(self) -> bool:
        return bool(np.max(self.values) <= 0)


@dataclass(frozen=True)
class SeparableKernel:
    """``beta(s, y) = sum_k b1_k(s) * b2_k(y)``.

    ``b1`` carries the offspring size, ``b2`` the parent size.
    """

    terms: tuple

    def __post_init__(self):
        terms = tuple((b1, b2) for b1, b2 in self.terms)
        if not terms:
            raise ConfigError("separable kernel needs at least one term")
        ms = {f.domain_max for pair in terms for f in pair}
        if len(ms) != 1:
            raise ConfigError("all separable factors must share domain_max")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def rank_one(cls, b1: CoefficientFn, b2: CoefficientFn) -> SeparableKernel:
        return cls(((b1, b2),))

    @property
    def domain_max(self) -> float:
        return self.terms[0][0].domain_max

    @property
    def rank(self) -> int:
        return len(self.terms)

    def __call__(self, s, y):
        s, y = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(y, dtype=float))
        out = np.zeros(s.shape)
        for b1, b2 in self.terms:
            out = out + b1(s) * b2(y)
        return out

    def axis_breakpoints(self):
        bs = set()
        by = set()
        for b1, b2 in self.terms:
            bs.update(b1.breakpoints())
            by.update(b2.breakpoints())
        return tuple(sorted(bs)), tuple(sorted(by))

    def _sample_axes(self):
        m = self.domain_max
        axes = []
        for bp in self.axis_breakpoints():
            pts = np.union1d(np.linspace(0.0, m, 401), bp)
            axes.append(np.union1d(pts, 0.5 * (pts[1:] + pts[:-1])))
        return axes

    def sup_norm(self) -> float:
        """Supremum over the square.

        Exact product of factor suprema for a rank-one kernel with
        non-negative factors; otherwise a dense sample that contains every
        factor breakpoint (exact for tables, approximate for gaussian bumps).
        """
        if self.rank == 1:
            b1, b2 = self.terms[0]
            if b1.inf_value() >= 0 and b2.inf_value() >= 0:
                return b1.sup_norm() * b2.sup_norm()
        s, y = self._sample_axes()
        return float(np.max(self(s[:, None], y[None, :])))

    def inf_value(self) -> float:
        s, y = self._sample_axes()
        return float(np.min(self(s[:, None], y[None, :])))

    def validate(self) -> None:
        for k, (b1, b2) in enumerate(self.terms):
            b1.check_nonnegative(f"separable factor b1[{k}]")
            b2.check_nonnegative(f"separable factor b2[{k}]")

    def is_trivial(self) -> bool:
        return all(b1.is_zero() or b2.is_zero() for b1, b2 in self.terms)


BirthKernel = GeneralKernel | SeparableKernel


def kernel_eval(beta, s, y):
    out = beta(s, y)
    return float(out) if np.ndim(out) == 0 else out


def _cell_axis_points(lo, hi, breakpoints, dense=33):
    pts = np.linspace(lo, hi, dense)
    bp = np.asarray(breakpoints, dtype=float)
    return np.union1d(pts, bp[(bp > lo) & (bp < hi)])


def separable_envelope(beta, n: int, side: str = "lower") -> SeparableKernel:
    """Piecewise-constant separable bound of ``beta`` on an ``n x n`` cell grid.

    Returns a rank-``n`` :class:`SeparableKernel` whose ``k``-th term is the
    indicator of the ``k``-th size cell times a step function in the parent
    size holding the cell-wise infimum (``side="lower"``) or supremum
    (``side="upper"``) of ``beta``. Cell extrema come from sampling each
    closed cell on a grid that contains every kernel breakpoint, which is
    exact for bilinear tables and for separable tables.
    """
    if n < 1:
        raise ConfigError("envelope partition count must be >= 1")
    if side not in ("lower", "upper"):
        raise ConfigError("side must be 'lower' or 'upper'")
    m = beta.domain_max
    edges = np.linspace(0.0, m, n + 1)
    bs, by = beta.axis_breakpoints()
    reduce = np.min if side == "lower" else np.max
    levels = np.empty((n, n))
    for i in range(n):
        s_pts = _cell_axis_points(edges[i], edges[i + 1], bs)
        for j in range(n):
            y_pts = _cell_axis_points(edges[j], edges[j + 1], by)
            levels[i, j] = reduce(beta(s_pts[:, None], y_pts[None, :]))
    if side == "lower":
        levels = np.maximum(levels, 0.0)
    terms = []
    for i in range(n):
        indicator = np.zeros(n)
        indicator[i] = 1.0
        terms.append((CoefficientFn.table(edges, indicator, m, "step"),
                      CoefficientFn.table(edges, levels[i], m, "step")))
    return SeparableKernel(tuple(terms))


# ---------------------------------------------------------------------------
# parameter bundle


@dataclass(frozen=True)
class ModelParams:
    """All model ingredients; validated on construction.

    ``gamma1``/``gamma2`` are growth speeds (size per time), ``mu``, ``c1``,
    ``c2`` are rates (per time) and ``beta`` is the birth kernel.
    """

    gamma1: CoefficientFn
    gamma2: CoefficientFn
    mu: CoefficientFn
    c1: CoefficientFn
    c2: CoefficientFn
    beta: object
    m: float = field(default=1.0)

    def __post_init__(self):
        m = float(self.m)
        if not (np.isfinite(m) and m > 0):
            raise ConfigError("maximal size m must be positive")
        object.__setattr__(self, "m", m)
        for name in ("gamma1", "gamma2", "mu", "c1", "c2"):
            f = getattr(self, name)
            if abs(f.domain_max - m) > _DOMAIN_SLACK * max(m, 1.0):
                raise ConfigError(f"{name} domain_max {f.domain_max} differs from m={m}")
        if abs(self.beta.domain_max - m) > _DOMAIN_SLACK * max(m, 1.0):
            raise ConfigError("beta domain_max differs from m")
        self.gamma1.check_positive("gamma1")
        self.gamma2.check_positive("gamma2")
        self.mu.check_nonnegative("mu")
        self.c1.check_nonnegative("c1")
        self.c2.check_nonnegative("c2")
        self.beta.validate()

    @classmethod
    def constant(cls, *, gamma1=1.0, gamma2=1.0, mu=0.0, c1=0.0, c2=0.0,
                 beta=None, m=1.0) -> ModelParams:
        """Shorthand with constant coefficients.

        ``beta`` may be a number (constant kernel), a ``(b1, b2)`` pair of
        numbers (rank-one constant kernel), or a kernel object.
        """
        c = lambda v: CoefficientFn.constant(v, m)  # noqa: E731
        if beta is None:
            raise ConfigError("beta is required")
        if isinstance(beta, (int, float)):
            beta = SeparableKernel.rank_one(c(beta), c(1.0))
        elif isinstance(beta, tuple) and all(isinstance(b, (int, float)) for b in beta):
            beta = SeparableKernel.rank_one(c(beta[0]), c(beta[1]))
        return cls(c(gamma1), c(gamma2), c(mu), c(c1), c(c2), beta, m)

    def gamma_min(self, s):
        return np.minimum(self.gamma1(s), self.gamma2(s))

    def birth_bound(self) -> float:
        """``B``: supremum of the birth kernel."""
        return self.beta.sup_norm()

    def transfer_bound(self) -> float:
        """``C``: larger of the two transfer-rate suprema."""
        return max(self.c1.sup_norm(), self.c2.sup_norm())

    def quasicontraction_rate(self) -> float:
        return self.m * self.birth_bound() + self.transfer_bound()
