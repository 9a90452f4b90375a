"""Geometry catalog: Euclidean space, the first Heisenberg group, Baouendi-Grushin
spaces, the Engel group and the Cartan group.

Each geometry carries its horizontal vector fields (as a coefficient matrix
C(x) whose rows are the fields), the matrix A(x) written out independently
of the fields, and where a closed form exists the gauge ``d`` and
``psi = |grad d|_A^2``. Point arguments are arrays whose last axis is the
ambient dimension, so gauge and psi evaluate whole sample batches.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import GaugeUnavailableError

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Geometry:
    name: str
    n: int
    Q: float
    params: tuple = ()
    degrees: tuple = ()  # dilation weights per coordinate
    fields: Callable = field(repr=False, compare=False, default=None)
    a_matrix: Callable = field(repr=False, compare=False, default=None)
    gauge: Callable | None = field(repr=False, compare=False, default=None)
    psi: Callable | None = field(repr=False, compare=False, default=None)

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        return self.name + ":" + ",".join(f"{k}={_fmt(v)}" for k, v in self.params)

    @property
    def has_gauge(self) -> bool:
        return self.gauge is not None

    def dilate(self, x, lam: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x * np.power(lam, np.asarray(self.degrees, dtype=float))


def _fmt(v) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _pt(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("point has non-finite coordinates")
    return x


# ---------------------------------------------------------------- Euclidean


def euclidean(n: int) -> Geometry:
    if n < 1:
        raise ValueError("dimension must be >= 1")

    def fields(x):
        return np.eye(n)

    def amat(x):
        return np.eye(n)

    def gauge(x):
        return np.linalg.norm(_pt(x), axis=-1)

    def psi(x):
        return np.ones(np.shape(x)[:-1])

    return Geometry("euclidean", n, float(n), (("n", n),), (1,) * n, fields, amat, gauge, psi)


# ---------------------------------------------------------------- Heisenberg


def _heis_fields(x):
    x1, x2, _ = _pt(x)
    return np.array([[1.0, 0.0, -x2 / 2], [0.0, 1.0, x1 / 2]])


def _heis_amat(x):
    x1, x2, _ = _pt(x)
    return np.array([
        [1.0, 0.0, -x2 / 2],
        [0.0, 1.0, x1 / 2],
        [-x2 / 2, x1 / 2, (x1 ** 2 + x2 ** 2) / 4],
    ])


def _heis_gauge(x):
    x = _pt(x)
    rho2 = x[..., 0] ** 2 + x[..., 1] ** 2
    return (rho2 ** 2 + 16.0 * x[..., 2] ** 2) ** 0.25


def _heis_psi(x):
    x = _pt(x)
    rho2 = x[..., 0] ** 2 + x[..., 1] ** 2
    return rho2 / np.sqrt(rho2 ** 2 + 16.0 * x[..., 2] ** 2)


def heisenberg1() -> Geometry:
    return Geometry("heisenberg1", 3, 4.0, (), (1, 1, 2),
                    _heis_fields, _heis_amat, _heis_gauge, _heis_psi)


# ---------------------------------------------------------------- Grushin


def grushin(k: int = 1, l: int = 1, gamma: float = 1.0) -> Geometry:
    """Baouendi-Grushin space R^k x R^l with fields (grad_xi, gamma|xi|^gamma grad_zeta).

    The gauge is the one built from the fundamental solution of the
    operator, d = (|xi|^(2(1+g)) + ((1+g)/g)^2 |zeta|^2)^(1/(2(1+g))), which is
    homogeneous of degree one under (xi, zeta) -> (lam xi, lam^(1+g) zeta)
    and gives psi = |xi|^(2g) / d^(2g).
    """
    if k < 1 or l < 1:
        raise ValueError("grushin needs k, l >= 1")
    if not gamma > 0:
        raise ValueError("grushin needs gamma > 0")
    n = k + l
    g = float(gamma)
    c2 = ((1.0 + g) / g) ** 2

    def fields(x):
        x = _pt(x)
        xi = np.linalg.norm(x[:k])
        out = np.zeros((n, n))
        out[:k, :k] = np.eye(k)
        out[k:, k:] = g * xi ** g * np.eye(l)
        return out

    def amat(x):
        x = _pt(x)
        xi2 = float(np.dot(x[:k], x[:k]))
        diag = np.concatenate([np.ones(k), np.full(l, g * g * xi2 ** g)])
        return np.diag(diag)

    def gauge(x):
        x = _pt(x)
        xi2 = np.sum(x[..., :k] ** 2, axis=-1)
        ze2 = np.sum(x[..., k:] ** 2, axis=-1)
        return (xi2 ** (1.0 + g) + c2 * ze2) ** (1.0 / (2.0 * (1.0 + g)))

    def psi(x):
        x = _pt(x)
        xi2 = np.sum(x[..., :k] ** 2, axis=-1)
        ze2 = np.sum(x[..., k:] ** 2, axis=-1)
        # |xi|^(2g) / d^(2g) with d^(2(1+g)) = |xi|^(2(1+g)) + c2 |zeta|^2
        return xi2 ** g / (xi2 ** (1.0 + g) + c2 * ze2) ** (g / (1.0 + g))

    return Geometry("grushin", n, k + (1.0 + g) * l,
                    (("k", k), ("l", l), ("gamma", g)),
                    (1.0,) * k + (1.0 + g,) * l, fields, amat, gauge, psi)


# ---------------------------------------------------------------- Engel


def _engel_fields(x):
    x1, x2, x3, _ = _pt(x)
    return np.array([
        [1.0, 0.0, -x2 / 2, -(x3 / 2 - x1 * x2 / 12)],
        [0.0, 1.0, x1 / 2, x1 ** 2 / 12],
    ])


def _engel_amat(x):
    x1, x2, x3, _ = _pt(x)
    b = x3 / 2 - x1 * x2 / 12
    c = x2 / 2 * b + x1 ** 3 / 24
    return np.array([
        [1.0, 0.0, -x2 / 2, -x3 / 2 + x1 * x2 / 12],
        [0.0, 1.0, x1 / 2, x1 ** 2 / 12],
        [-x2 / 2, x1 / 2, (x1 ** 2 + x2 ** 2) / 4, c],
        [-x3 / 2 + x1 * x2 / 12, x1 ** 2 / 12, c, b ** 2 + x1 ** 4 / 144],
    ])


def engel() -> Geometry:
    return Geometry("engel", 4, 7.0, (), (1, 1, 2, 3), _engel_fields, _engel_amat)


# ---------------------------------------------------------------- Cartan


def _cartan_fields(x):
    x1, x2, _, _, _ = _pt(x)
    return np.array([
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, -x1, x1 ** 2 / 2, x1 * x2],
    ])


def _cartan_amat(x):
    x1, x2, _, _, _ = _pt(x)
    return np.array([
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, -x1, x1 ** 2 / 2, x1 * x2],
        [0.0, -x1, x1 ** 2, -x1 ** 3 / 2, -x1 ** 2 * x2],
        [0.0, x1 ** 2 / 2, -x1 ** 3 / 2, x1 ** 4 / 4, x1 ** 3 * x2 / 2],
        [0.0, x1 * x2, -x1 ** 2 * x2, x1 ** 3 * x2 / 2, x1 ** 2 * x2 ** 2],
    ])


def cartan() -> Geometry:
    return Geometry("cartan", 5, 10.0, (), (1, 1, 2, 3, 3), _cartan_fields, _cartan_amat)


# ---------------------------------------------------------------- selectors

_SELECTOR = re.compile(r"^\s*([a-z0-9_]+)\s*(?::(.*))?$")


def parse_geometry(text: str) -> Geometry:
    """Build a geometry from a selector such as ``"grushin:k=1,l=1,gamma=1"``."""
    m = _SELECTOR.match(text)
    if not m:
        raise ValueError(f"bad geometry selector {text!r}")
    name, rest = m.group(1), m.group(2)
    kw: dict[str, float] = {}
    if rest:
        for part in rest.split(","):
            key, sep, val = part.partition("=")
            if not sep:
                raise ValueError(f"bad geometry parameter {part!r} in {text!r}")
            try:
                kw[key.strip()] = float(val)
            except ValueError:
                raise ValueError(f"geometry parameter {key.strip()!r} is not a number") from None
    try:
        if name == "euclidean":
            n = kw.pop("n")
            if not float(n).is_integer():
                raise ValueError("euclidean dimension must be an integer")
            g = euclidean(int(n))
        elif name == "heisenberg1":
            g = heisenberg1()
        elif name == "grushin":
            k = kw.pop("k", 1.0)
            l = kw.pop("l", 1.0)
            if not (float(k).is_integer() and float(l).is_integer()):
                raise ValueError("grushin k and l must be integers")
            g = grushin(int(k), int(l), kw.pop("gamma", 1.0))
        elif name == "engel":
            g = engel()
        elif name == "cartan":
            g = cartan()
        else:
            raise ValueError(f"unknown geometry {name!r}")
    except KeyError as exc:
        raise ValueError(f"geometry {name!r} needs parameter {exc.args[0]!r}") from None
    if kw:
        raise ValueError(f"unexpected parameters for {name!r}: {sorted(kw)}")
    return g


# ---------------------------------------------------------------- operations


def homogeneous_dim(g: Geometry) -> float:
    return g.Q


def quasi_norm(g: Geometry, x):
    """Closed-form gauge d(x); array input gives array output."""
    if g.gauge is None:
        raise GaugeUnavailableError(f"no closed-form gauge for {g.name}")
    return g.gauge(x)


def psi_closed(g: Geometry, x):
    """Closed-form psi(x) = |grad d|_A^2 (x != 0)."""
    if g.psi is None:
        raise GaugeUnavailableError(f"no closed-form gauge (hence psi) for {g.name}")
    return g.psi(x)


def default_step(x, power: float = 1.0 / 3.0) -> float:
    return float(EPS ** power * max(1.0, float(np.max(np.abs(x))) if np.size(x) else 1.0))


def gradient_fd(f: Callable, x, h: float | None = None) -> np.ndarray:
    """Central-difference gradient of a scalar function along coordinate axes."""
    x = _pt(x)
    if h is None:
        h = default_step(x)
    grad = np.empty(x.size)
    for j in range(x.size):
        e = np.zeros(x.size)
        e[j] = h
        fp, fm = f(x + e), f(x - e)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"non-finite function value near {x.tolist()}")
        grad[j] = (fp - fm) / (2.0 * h)
    return grad


def horizontal_gradient_fd(g: Geometry, f: Callable, x, h: float | None = None) -> np.ndarray:
    """(X_1 f, ..., X_m f)(x) from central differences contracted with the fields."""
    x = _pt(x)
    if x.shape != (g.n,):
        raise ValueError(f"point must have {g.n} coordinates")
    return g.fields(x) @ gradient_fd(f, x, h)


def a_norm_sq(g: Geometry, x, xi) -> float:
    x = _pt(x)
    xi = np.asarray(xi, dtype=float)
    if x.shape != (g.n,) or xi.shape != (g.n,):
        raise ValueError(f"point and vector must both have {g.n} coordinates")
    return float(xi @ g.a_matrix(x) @ xi)


def gram_check(g: Geometry, x) -> float:
    """Max entrywise |A(x) - sum_i X_i X_i^T|."""
    x = _pt(x)
    c = g.fields(x)
    return float(np.max(np.abs(g.a_matrix(x) - c.T @ c)))


def random_points(g: Geometry, count: int, rng: np.random.Generator, scale: float = 2.0) -> np.ndarray:
    return rng.uniform(-scale, scale, size=(count, g.n))
