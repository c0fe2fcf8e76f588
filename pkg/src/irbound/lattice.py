"""Tori, momentum grids, coupling families and reflection-positivity kernels.

Couplings are stored periodized on the torus ``{0, ..., ell-1}^d``: the value
at a site ``x`` is the sum of the infinite-lattice coupling over all images
``x + ell*z``. The self-image at ``x = 0`` (images ``ell*z`` with ``z != 0``)
is kept for Fourier bookkeeping only.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .exceptions import ConvergenceError, ParameterError

__all__ = [
    "Torus",
    "momenta",
    "CouplingFamily",
    "NearestNeighbour",
    "Yukawa",
    "PowerLawL1",
    "RandomWalk",
    "EuclideanPower",
    "ConvexCombination",
    "family_from_dict",
    "CouplingTable",
    "epsilon_k",
    "fourier_transform",
    "Plane",
    "reflection_planes",
    "rp_cross_kernel",
    "RPKernelVerdict",
    "RPCheckResult",
    "rp_check",
    "DEFAULT_TAIL_TOL",
]

DEFAULT_TAIL_TOL = 1e-12
_MAX_IMAGES = 4_000_000


@dataclass(frozen=True)
class Torus:
    """Periodic box ``{0, ..., ell-1}^d`` with lexicographically ordered sites."""

    d: int
    ell: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"dimension must be a positive integer, got {self.d!r}")
        if int(self.ell) != self.ell or self.ell < 1:
            raise ParameterError(f"side length must be a positive integer, got {self.ell!r}")

    @property
    def n_sites(self) -> int:
        return self.ell**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.ell,) * self.d

    @property
    def is_even(self) -> bool:
        return self.ell % 2 == 0

    @cached_property
    def sites(self) -> np.ndarray:
        """Integer array of shape ``(n_sites, d)``; row ``i`` is site ``i``."""
        return np.array(list(itertools.product(range(self.ell), repeat=self.d)), dtype=np.int64).reshape(
            self.n_sites, self.d
        )

    def index(self, x) -> int:
        x = np.mod(np.asarray(x, dtype=np.int64), self.ell)
        return int(np.ravel_multi_index(tuple(x), self.shape))

    def wrap(self, x) -> np.ndarray:
        return np.mod(np.asarray(x, dtype=np.int64), self.ell)

    def displacement_index(self) -> np.ndarray:
        """Matrix ``D[i, j]`` = flat index of ``x_i - x_j`` reduced onto the torus."""
        diff = np.mod(self.sites[:, None, :] - self.sites[None, :, :], self.ell)
        return np.ravel_multi_index(tuple(np.moveaxis(diff, -1, 0)), self.shape)


def momenta(torus: Torus) -> np.ndarray:
    """Dual lattice as an array of shape ``(n_sites, d)``.

    For even ``ell`` the integer labels run over ``-ell/2+1, ..., ell/2``; for
    odd ``ell`` over the symmetric range. Order is lexicographic in the labels.
    """
    ell = torus.ell
    lo = -(ell // 2) + 1 if ell % 2 == 0 else -(ell // 2)
    labels = np.arange(lo, lo + ell)
    grid = np.array(list(itertools.product(labels, repeat=torus.d)), dtype=float).reshape(-1, torus.d)
    return 2.0 * np.pi * grid / ell


# ---------------------------------------------------------------------------
# coupling families
# ---------------------------------------------------------------------------


class CouplingFamily:
    """Translation-invariant symmetric coupling ``J_x`` on ``Z^d``.

    Subclasses implement :meth:`__call__` for ``x != 0`` (by convention the
    value at the origin is zero) and either a tail bound for shell summation
    or a dedicated :meth:`periodize`.
    """

    kind: str = ""

    def check_admissible(self, d: int) -> None:
        """Raise :class:`ParameterError` if the family is not summable in ``d`` dimensions."""

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def shell_tail(self, d: int, ell: int, Z: int) -> float:
        """Upper bound on ``sum_{|z|_inf > Z} |J(x + ell z)|`` uniformly in ``x`` on the torus."""
        raise NotImplementedError

    def periodize(self, torus: Torus, tail_tol: float = DEFAULT_TAIL_TOL) -> tuple[np.ndarray, float]:
        """Return ``(J_per, tail)`` with ``J_per`` shaped like the torus."""
        if tail_tol <= 0:
            raise ParameterError("tail_tol must be positive")
        self.check_admissible(torus.d)
        Z = 1
        while self.shell_tail(torus.d, torus.ell, Z) > tail_tol:
            Z *= 2
            if (2 * Z + 1) ** torus.d > _MAX_IMAGES:
                raise ConvergenceError(
                    f"{self.kind}: periodization tail above {tail_tol:g} with {(2 * Z + 1) ** torus.d} images"
                )
        tail = self.shell_tail(torus.d, torus.ell, Z)
        return _shell_sum(self, torus, Z), tail

    def to_dict(self) -> dict:
        raise NotImplementedError


def _shell_sum(fam: CouplingFamily, torus: Torus, Z: int) -> np.ndarray:
    images = np.array(list(itertools.product(range(-Z, Z + 1), repeat=torus.d)), dtype=np.int64) * torus.ell
    out = np.empty(torus.n_sites)
    for i, x in enumerate(torus.sites):
        out[i] = math.fsum(fam(x[None, :] + images))
    return out.reshape(torus.shape)


def _geometric_shell_tail(d: int, ell: int, Z: int, amp: float, q: float) -> float:
    """Bound ``sum_{m>Z} #shell(m) * amp * q**(ell*(m-1)+1)``, ``0 <= q < 1``."""
    if amp == 0.0 or q == 0.0:
        return 0.0
    total = 0.0
    m = Z + 1
    while True:
        count = (2 * m + 1) ** d - (2 * m - 1) ** d
        term = count * amp * q ** (ell * (m - 1) + 1)
        nxt = ((2 * m + 3) ** d - (2 * m + 1) ** d) / count * q**ell
        total += term
        if nxt < 1.0:
            # ratios of consecutive terms decrease in m, so the rest is geometric
            total += term * nxt / (1.0 - nxt)
            return total
        m += 1


@dataclass(frozen=True)
class NearestNeighbour(CouplingFamily):
    J: float = 1.0
    kind = "nearest_neighbour"

    def __call__(self, x):
        x = np.asarray(x)
        return np.where(np.abs(x).sum(axis=-1) == 1, float(self.J), 0.0)

    def shell_tail(self, d, ell, Z):
        return 0.0

    def to_dict(self):
        return {"family": self.kind, "J": self.J}


@dataclass(frozen=True)
class Yukawa(CouplingFamily):
    """``J_x = a exp(-b |x|_1)``."""

    a: float = 1.0
    b: float = 1.0
    kind = "yukawa"

    def check_admissible(self, d):
        if not self.b > 0:
            raise ParameterError(f"yukawa decay rate must be positive, got b={self.b}")

    def __call__(self, x):
        r = np.abs(np.asarray(x)).sum(axis=-1)
        return np.where(r > 0, self.a * np.exp(-self.b * r), 0.0)

    def shell_tail(self, d, ell, Z):
        return _geometric_shell_tail(d, ell, Z, abs(self.a), math.exp(-self.b))

    def to_dict(self):
        return {"family": self.kind, "a": self.a, "b": self.b}


def _laplace_periodize(torus, amp, power, kernel, tail_tol, kind):
    """Periodize ``amp * r(x)**(-power)`` via ``r**-p = Gamma(p)^-1 int t^(p-1) K_t(r) dt``.

    ``kernel`` supplies the periodized one-dimensional heat-type kernel. Near
    ``t = 0`` the product over coordinates blows up like ``t**-order``; that
    power is handed to QUADPACK's algebraic weight and ``kernel.scaled``
    returns the smooth remainder. Beyond ``t_split`` ``kernel.excess`` gives
    ``prod_j P_t(x_j) - [x == 0]`` without cancellation.
    """
    if amp == 0.0:
        return np.zeros(torus.shape), 0.0
    d = torus.d
    order = kernel.order * d
    alg = power - 1.0 - order
    scale = abs(amp) / special.gamma(power)
    eps = 0.25 * tail_tol / scale
    t_split = kernel.split
    values = np.empty(torus.n_sites)
    err = 0.0
    cache: dict[tuple, tuple[float, float]] = {}
    for i, x in enumerate(torus.sites):
        # invariant under x_j -> ell - x_j and under permutations of coordinates
        key = tuple(sorted(min(int(v), torus.ell - int(v)) for v in x))
        if key not in cache:
            origin = not any(key)
            xs = np.array(key, dtype=float)

            def near(t, xs=xs, origin=origin):
                g = kernel.scaled(t, xs)
                return g - t**order if origin else g

            def far(t, xs=xs, origin=origin):
                return t ** (power - 1.0) * kernel.excess(t, xs, origin)

            v1, e1 = integrate.quad(near, 0.0, t_split, weight="alg", wvar=(alg, 0.0),
                                    epsabs=eps, epsrel=1e-13, limit=200)
            v2, e2 = integrate.quad(far, t_split, np.inf, epsabs=eps, epsrel=1e-13, limit=400)
            cache[key] = (v1 + v2, e1 + e2)
        v, e = cache[key]
        values[i] = math.copysign(scale, amp) * v
        err = max(err, scale * e)
    if err > tail_tol:
        raise ConvergenceError(f"{kind}: quadrature error {err:.3g} exceeds tail_tol {tail_tol:g}")
    return values.reshape(torus.shape), err


class _ExpKernel:
    """``P_t(x) = sum_z exp(-t|x + ell z|)`` for ``0 <= x <= ell/2``."""

    order = 1.0

    def __init__(self, ell):
        self.ell = ell
        self.split = 4.0 / ell

    def scaled(self, t, xs):
        ell = self.ell
        tq = t / -math.expm1(-t * ell) if t > 0 else 1.0 / ell
        return float(np.prod(tq * (np.exp(-t * xs) + np.exp(-t * (ell - xs)))))

    def excess(self, t, xs, origin):
        ell = self.ell
        logp = np.logaddexp(-t * xs, -t * (ell - xs)) - math.log1p(-math.exp(-t * ell))
        if origin:
            q = math.exp(-t * ell)
            return math.expm1(xs.size * (math.log1p(q) - math.log1p(-q)))
        return math.exp(float(logp.sum()))


class _GaussKernel:
    """``theta_t(x) = sum_z exp(-t (x + ell z)^2)`` for ``0 <= x <= ell/2``."""

    order = 0.5

    def __init__(self, ell):
        self.ell = ell
        self.split = math.pi / ell**2

    def _theta_minus_one_at_origin(self, t):
        ell = self.ell
        zmax = int(math.ceil(math.sqrt(40.0 / t) / ell)) + 1
        z = np.arange(1, zmax + 1)
        return 2.0 * float(np.sum(np.exp(-t * (ell * z) ** 2)))

    def _theta(self, t, x):
        ell = self.ell
        zmax = int(math.ceil(math.sqrt(40.0 / t) / ell)) + 1
        z = np.arange(-zmax, zmax + 1)
        return float(np.sum(np.exp(-t * (x + ell * z) ** 2)))

    def _scaled_theta(self, t, x):
        # sqrt(t) * theta_t(x) by Poisson summation, accurate for small t
        ell = self.ell
        if t == 0.0:
            return math.sqrt(math.pi) / ell
        if t * ell * ell >= math.pi:
            return math.sqrt(t) * self._theta(t, x)
        nmax = int(math.ceil(math.sqrt(40.0 * t) * ell / math.pi)) + 1
        n = np.arange(1, nmax + 1)
        s = 1.0 + 2.0 * float(np.sum(np.exp(-(math.pi * n) ** 2 / (t * ell * ell)) * np.cos(2 * math.pi * n * x / ell)))
        return math.sqrt(math.pi) / ell * s

    def scaled(self, t, xs):
        return float(np.prod([self._scaled_theta(t, float(x)) for x in xs]))

    def excess(self, t, xs, origin):
        if origin:
            r = self._theta_minus_one_at_origin(t)
            return math.expm1(xs.size * math.log1p(r))
        return float(np.prod([self._theta(t, float(x)) for x in xs]))


@dataclass(frozen=True)
class PowerLawL1(CouplingFamily):
    """``J_x = a |x|_1^(-s)`` with ``s > d``."""

    a: float = 1.0
    s: float = 3.0
    kind = "power_law_l1"

    def check_admissible(self, d):
        if not self.s > d:
            raise ParameterError(f"power law needs s > d for summability, got s={self.s}, d={d}")

    def __call__(self, x):
        r = np.abs(np.asarray(x)).sum(axis=-1).astype(float)
        with np.errstate(divide="ignore"):
            return np.where(r > 0, self.a * r ** (-self.s), 0.0)

    def periodize(self, torus, tail_tol=DEFAULT_TAIL_TOL):
        if tail_tol <= 0:
            raise ParameterError("tail_tol must be positive")
        self.check_admissible(torus.d)
        return _laplace_periodize(torus, self.a, self.s, _ExpKernel(torus.ell), tail_tol, self.kind)

    def to_dict(self):
        return {"family": self.kind, "a": self.a, "s": self.s}


@dataclass(frozen=True)
class EuclideanPower(CouplingFamily):
    """``J_x = a |x|_2^(-2u)`` with ``2u > d``."""

    a: float = 1.0
    u: float = 1.5
    kind = "euclidean_power"

    def check_admissible(self, d):
        if not 2 * self.u > d:
            raise ParameterError(f"euclidean power law needs 2u > d, got u={self.u}, d={d}")

    def __call__(self, x):
        r2 = (np.asarray(x, dtype=float) ** 2).sum(axis=-1)
        with np.errstate(divide="ignore"):
            return np.where(r2 > 0, self.a * r2 ** (-self.u), 0.0)

    def periodize(self, torus, tail_tol=DEFAULT_TAIL_TOL):
        if tail_tol <= 0:
            raise ParameterError("tail_tol must be positive")
        self.check_admissible(torus.d)
        return _laplace_periodize(torus, self.a, self.u, _GaussKernel(torus.ell), tail_tol, self.kind)

    def to_dict(self):
        return {"family": self.kind, "a": self.a, "u": self.u}


@dataclass(frozen=True)
class RandomWalk(CouplingFamily):
    """``J_x = c * sum over nearest-neighbour walks 0 -> x of (lam/2d)^|w|``.

    Values on ``Z^d`` come from the Bessel representation of the lattice Green
    function; the periodized table is the Green function of the torus, which
    sums all images exactly.
    """

    c: float = 1.0
    lam: float = 0.5
    kind = "random_walk"

    def check_admissible(self, d):
        if not 0.0 <= self.lam < 1.0:
            raise ParameterError(f"random-walk weight needs 0 <= lam < 1, got {self.lam}")

    def _green(self, x, d):
        x = np.abs(np.asarray(x, dtype=np.int64))
        lam = self.lam
        if lam == 0.0:
            return 1.0 if not x.any() else 0.0

        def f(t):
            return float(np.prod(special.ive(x, lam * t / d))) * math.exp(-(1.0 - lam) * t)

        val, _ = integrate.quad(f, 0.0, np.inf, epsabs=1e-15, epsrel=1e-13, limit=400)
        return val

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.int64))
        out = np.array([0.0 if not row.any() else self.c * self._green(row, x.shape[1]) for row in x])
        return out

    def green_origin(self, d: int) -> float:
        """Infinite-lattice Green function at the origin (empty walk included)."""
        self.check_admissible(d)
        return self._green(np.zeros(d, dtype=np.int64), d)

    def shell_tail(self, d, ell, Z):
        # walks to y have length >= |y|_1, and there are at most (2d)^n of length n
        return _geometric_shell_tail(d, ell, Z, abs(self.c) / (1.0 - self.lam), self.lam)

    def periodize(self, torus, tail_tol=DEFAULT_TAIL_TOL):
        if tail_tol <= 0:
            raise ParameterError("tail_tol must be positive")
        self.check_admissible(torus.d)
        d = torus.d
        ks = momenta(torus)
        denom = 1.0 - self.lam * np.cos(ks).sum(axis=1) / d
        ghat = np.zeros(torus.shape)
        idx = np.mod(np.rint(ks * torus.ell / (2 * np.pi)).astype(np.int64), torus.ell)
        ghat[tuple(idx.T)] = 1.0 / denom
        g_torus = np.real(np.fft.ifftn(ghat))
        g_torus.flat[0] -= self.green_origin(d)
        return self.c * g_torus, 0.0

    def to_dict(self):
        return {"family": self.kind, "c": self.c, "lam": self.lam}


@dataclass(frozen=True)
class ConvexCombination(CouplingFamily):
    weights: tuple[float, ...] = ()
    families: tuple[CouplingFamily, ...] = ()
    kind = "convex_combination"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "families", tuple(self.families))
        if len(self.weights) != len(self.families):
            raise ParameterError("convex combination needs one weight per family")
        if any(w < 0 for w in self.weights):
            raise ParameterError("convex combination weights must be nonnegative")

    def check_admissible(self, d):
        for f in self.families:
            f.check_admissible(d)

    def __call__(self, x):
        x = np.asarray(x)
        out = np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0
        for w, f in zip(self.weights, self.families):
            out = out + w * f(x)
        return out

    def periodize(self, torus, tail_tol=DEFAULT_TAIL_TOL):
        if tail_tol <= 0:
            raise ParameterError("tail_tol must be positive")
        total = np.zeros(torus.shape)
        tail = 0.0
        wsum = sum(self.weights) or 1.0
        for w, f in zip(self.weights, self.families):
            if w == 0.0:
                continue
            vals, t = f.periodize(torus, tail_tol / wsum)
            total += w * vals
            tail += w * t
        return total, tail

    def to_dict(self):
        return {
            "family": self.kind,
            "weights": list(self.weights),
            "families": [f.to_dict() for f in self.families],
        }


_FAMILIES = {
    "nearest_neighbour": (NearestNeighbour, ("J",)),
    "yukawa": (Yukawa, ("a", "b")),
    "power_law_l1": (PowerLawL1, ("a", "s")),
    "random_walk": (RandomWalk, ("c", "lam")),
    "euclidean_power": (EuclideanPower, ("a", "u")),
}


def family_from_dict(data: dict) -> CouplingFamily:
    """Build a family from ``{"family": name, **params}``."""
    data = dict(data)
    name = data.pop("family", None)
    if name == "convex_combination":
        fams = tuple(family_from_dict(f) for f in data.pop("families"))
        weights = tuple(data.pop("weights"))
        if data:
            raise ParameterError(f"unknown keys for convex_combination: {sorted(data)}")
        return ConvexCombination(weights, fams)
    if name not in _FAMILIES:
        raise ParameterError(f"unknown coupling family {name!r}")
    cls, names = _FAMILIES[name]
    extra = set(data) - set(names)
    if extra:
        raise ParameterError(f"unknown keys for {name}: {sorted(extra)}")
    return cls(**{k: float(v) for k, v in data.items()})


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CouplingTable:
    """Periodized couplings for the three spin axes on a torus.

    ``values[i]`` holds the table of spin axis ``i + 1`` shaped like the torus.
    """

    torus: Torus
    values: np.ndarray
    truncation_tail: tuple[float, float, float] = (0.0, 0.0, 0.0)
    families: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (3,) + self.torus.shape:
            raise ParameterError(f"table shape {vals.shape} does not match torus {self.torus.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_families(cls, torus: Torus, families: Sequence[CouplingFamily], tail_tol: float = DEFAULT_TAIL_TOL):
        if len(families) != 3:
            raise ParameterError("need one coupling family per spin axis")
        vals, tails = [], []
        for fam in families:
            v, t = fam.periodize(torus, tail_tol)
            vals.append(v)
            tails.append(t)
        return cls(torus, np.stack(vals), tuple(tails), tuple(families))

    @classmethod
    def nearest_neighbour(cls, torus: Torus, J1: float, J2: float, J3: float):
        return cls.from_families(torus, [NearestNeighbour(J1), NearestNeighbour(J2), NearestNeighbour(J3)])

    @classmethod
    def zeros(cls, torus: Torus):
        return cls(torus, np.zeros((3,) + torus.shape))

    def axis(self, i: int) -> np.ndarray:
        """Periodized table of spin axis ``i`` in ``{1, 2, 3}``."""
        if i not in (1, 2, 3):
            raise ParameterError(f"spin axis must be 1, 2 or 3, got {i!r}")
        return self.values[i - 1]

    def flat(self, i: int) -> np.ndarray:
        return self.axis(i).reshape(-1)

    def pair_matrix(self, i: int) -> np.ndarray:
        """``M[x, y] = J_per^(i)(x - y)`` over site indices."""
        return self.flat(i)[self.torus.displacement_index()]

    def satisfies_sign_chain(self, atol: float | None = None) -> bool:
        """Check ``J3 >= J1 >= -J2 >= 0`` away from the origin."""
        j1, j2, j3 = (self.flat(i)[1:] for i in (1, 2, 3))
        scale = max(1.0, float(np.abs(self.values).max()))
        tol = 1e-12 * scale if atol is None else atol
        return bool(np.all(j3 >= j1 - tol) and np.all(j1 >= -j2 - tol) and np.all(-j2 >= -tol))

    def satisfies_corr_condition(self, atol: float | None = None) -> bool:
        """Check ``|J2| <= J1`` away from the origin."""
        j1, j2 = self.flat(1)[1:], self.flat(2)[1:]
        scale = max(1.0, float(np.abs(self.values).max()))
        tol = 1e-12 * scale if atol is None else atol
        return bool(np.all(np.abs(j2) <= j1 + tol))

    def to_csv(self) -> str:
        """CSV with columns ``x_1..x_d, axis, J_per`` in lexicographic site order, axis-major."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x_{j + 1}" for j in range(self.torus.d)] + ["axis", "J_per"])
        for i in (1, 2, 3):
            flat = self.flat(i)
            for s, x in enumerate(self.torus.sites):
                w.writerow([int(v) for v in x] + [i, f"{flat[s]:.17g}"])
        return buf.getvalue()


def epsilon_k(table: CouplingTable, k) -> np.ndarray | float:
    """Dispersion ``sum_x J3_per(x) (1 - cos k.x)`` for one momentum or a stack of them."""
    k = np.asarray(k, dtype=float)
    single = k.ndim == 1
    ks = np.atleast_2d(k)
    phases = ks @ table.torus.sites.T.astype(float)
    j3 = table.flat(3)
    out = (1.0 - np.cos(phases)) @ j3
    return float(out[0]) if single else out


def fourier_transform(values: np.ndarray, torus: Torus) -> np.ndarray:
    """``f_hat(k) = sum_x exp(-i k.x) f(x)`` evaluated by FFT, in :func:`momenta` order."""
    hat = np.fft.fftn(np.asarray(values).reshape(torus.shape))
    idx = np.mod(np.rint(momenta(torus) * torus.ell / (2 * np.pi)).astype(np.int64), torus.ell)
    return hat[tuple(idx.T)]


# ---------------------------------------------------------------------------
# reflections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Plane:
    """Reflection plane ``x_direction = offset`` cutting through edges.

    ``direction`` is 1-based; ``offset`` is a half integer in ``(0, ell)``.
    """

    direction: int
    offset: float

    def validate(self, torus: Torus) -> None:
        if not torus.is_even:
            raise ParameterError("reflections through edges need an even side length")
        if not 1 <= self.direction <= torus.d:
            raise ParameterError(f"direction {self.direction} outside 1..{torus.d}")
        twice = 2 * self.offset
        if twice != int(twice) or int(twice) % 2 != 1 or not 0 < self.offset < torus.ell:
            raise ParameterError(f"plane offset must be a half integer in (0, ell), got {self.offset}")

    def reflect(self, torus: Torus, x: np.ndarray) -> np.ndarray:
        x = np.array(x, dtype=np.int64, copy=True)
        j = self.direction - 1
        x[..., j] = np.mod(int(2 * self.offset) - x[..., j], torus.ell)
        return x

    def halves(self, torus: Torus) -> tuple[np.ndarray, np.ndarray]:
        """Site indices of the left and right halves, each in lexicographic order."""
        self.validate(torus)
        xi = torus.sites[:, self.direction - 1].astype(float)
        half = torus.ell / 2
        left = np.mod(self.offset - xi, torus.ell) < half
        return np.flatnonzero(left), np.flatnonzero(~left)

    def site_map(self, torus: Torus) -> np.ndarray:
        """Permutation ``p`` with ``p[i]`` = index of the mirror image of site ``i``."""
        img = self.reflect(torus, torus.sites)
        return np.ravel_multi_index(tuple(img.T), torus.shape)


def reflection_planes(torus: Torus) -> list[Plane]:
    """All edge-cutting planes ``offset in {1/2, 3/2, ..., (ell-1)/2}`` in every direction."""
    return [Plane(j, p + 0.5) for j in range(1, torus.d + 1) for p in range(torus.ell // 2)]


def rp_cross_kernel(table: CouplingTable, axis: int, plane: Plane) -> np.ndarray:
    """Cross-plane kernel ``K[u, v] = J_per(u - R v)`` for ``u, v`` in the left half.

    Axis 2 enters with its sign flipped, matching the ``i S^(2)`` factorization.
    """
    torus = table.torus
    left, _ = plane.halves(torus)
    xs = torus.sites[left]
    rv = plane.reflect(torus, xs)
    diff = np.mod(xs[:, None, :] - rv[None, :, :], torus.ell)
    vals = table.axis(axis)[tuple(np.moveaxis(diff, -1, 0))]
    return -vals if axis == 2 else vals


@dataclass(frozen=True)
class RPKernelVerdict:
    axis: int
    direction: int
    offset: float
    min_eigenvalue: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class RPCheckResult:
    verdicts: tuple[RPKernelVerdict, ...]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def failed_axes(self) -> list[int]:
        return sorted({v.axis for v in self.verdicts if not v.passed})

    @property
    def min_margin(self) -> float:
        return min(v.min_eigenvalue + v.tolerance for v in self.verdicts)


def rp_check(table: CouplingTable, rel_tol: float = 1e-9) -> RPCheckResult:
    """PSD test of every cross-plane kernel; tolerance scales with the largest entry."""
    if rel_tol < 0:
        raise ParameterError("rel_tol must be nonnegative")
    out = []
    for axis in (1, 2, 3):
        for plane in reflection_planes(table.torus):
            K = rp_cross_kernel(table, axis, plane)
            lam = float(np.linalg.eigvalsh(0.5 * (K + K.T)).min())
            tol = rel_tol * float(np.abs(K).max())
            out.append(RPKernelVerdict(axis, plane.direction, plane.offset, lam, tol, lam >= -tol))
    return RPCheckResult(tuple(out))
