"""Momentum sums and closed-form lower bounds on long-range order.

Nothing here diagonalizes a Hamiltonian. Nearest-neighbour certificates use
the normalized dispersion ``eps(k) = 2 sum_i (1 - cos k_i)``; general
families go through :func:`general_lro_bound` with any periodized table.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .exceptions import ConfigError, ConvergenceError, DomainError, IRBoundError, ParameterError
from .lattice import CouplingTable, epsilon_k, momenta, rp_check

__all__ = [
    "MomentumSums",
    "momentum_sums",
    "LimitIntegrals",
    "limit_integrals",
    "richardson",
    "CertificateInput",
    "CertificateReport",
    "nn_lro_bounds",
    "general_lro_bound",
    "worst_case_e_bound",
    "nn_e_envelope",
    "AlphaFreeCondition",
    "alpha_free_condition",
    "kk_alpha_bound",
    "bound2_value",
    "critical_ratio",
    "ScanPoint",
    "ScanResult",
    "scan",
    "REFERENCE_INTEGRALS",
]

# reference values of the limit integrals, quoted to their printed digits
REFERENCE_INTEGRALS = {2: (1.393, 0.6468), 3: (1.157, 0.3499), 4: (1.094, 0.2540)}

# midpoint grids and the powers of 1/ell eliminated by extrapolation
_SCHEDULE = {
    2: ((64, 128, 256, 512), (1, 2, 3)),
    3: ((32, 64, 128), (2, 4)),
    4: ((16, 24, 48), (2, 4)),
}
# 1/eps is more singular than sqrt(eps(k+pi)/eps(k)), hence a separate schedule
_SCHEDULE_INV = {
    3: ((32, 64, 128, 256), (1, 2, 3)),
    4: ((16, 24, 32, 48), (2, 3, 4)),
}


def _cos_sums(d: int, ks1: np.ndarray) -> np.ndarray:
    """Flattened ``sum_i cos k_i`` over the product grid ``ks1^d`` (lexicographic)."""
    c = np.cos(ks1)
    s = c
    for _ in range(d - 1):
        s = s[..., None] + c
    return np.asarray(s).reshape(-1)


@dataclass(frozen=True)
class MomentumSums:
    """Lattice sums over the nonzero momenta of ``Lambda*_ell``, each divided by ``ell^d``."""

    d: int
    ell: int
    sum_inv_eps: float
    sum_inv_eps_cosplus: float
    I_ell: float
    I_tilde_ell: float
    pi_term_bound: float
    _cos: np.ndarray = field(repr=False, compare=False)

    def I_ell_r(self, r: float) -> float:
        """``I_ell(r)``: nonzero momenta other than ``(pi, ..., pi)``."""
        return self._I_r(r, tilde=False)

    def I_tilde_ell_r(self, r: float) -> float:
        return self._I_r(r, tilde=True)

    def _I_r(self, r, tilde):
        if not -1.0 <= r <= 1.0:
            raise ParameterError(f"r must lie in [-1, 1], got {r}")
        s = self._cos
        d = self.d
        keep = (s < d) & (s > -d)  # drops k = 0 and k = pi
        num = np.maximum(d + r * s[keep], 0.0)
        vals = np.sqrt(num / (d - s[keep]))
        if tilde:
            vals = vals * np.maximum(s[keep] / d, 0.0)
        return float(vals.sum()) / self.ell**d


def momentum_sums(d: int, ell: int) -> MomentumSums:
    """Exact sums with ``eps(k) = 2 sum_i (1 - cos k_i)`` on the periodic dual lattice."""
    if int(d) != d or d < 1:
        raise ParameterError(f"dimension must be a positive integer, got {d!r}")
    if int(ell) != ell or ell < 2 or ell % 2:
        raise ParameterError(f"side length must be an even integer >= 2, got {ell!r}")
    ks1 = 2 * np.pi * np.arange(-ell // 2 + 1, ell // 2 + 1) / ell
    s = _cos_sums(d, ks1)
    nz = s < d - 1e-12 * d  # every k != 0 has sum cos <= d - (1 - cos(2 pi / ell))
    eps = 2.0 * (d - s[nz])
    eps_pi = 2.0 * (d + s[nz])
    root = np.sqrt(eps_pi / eps)
    plus = np.maximum(s[nz] / d, 0.0)
    N = float(ell) ** d
    return MomentumSums(
        d=d,
        ell=ell,
        sum_inv_eps=float(np.sum(1.0 / eps)) / N,
        sum_inv_eps_cosplus=float(np.sum(plus / eps)) / N,
        I_ell=float(root.sum()) / N,
        I_tilde_ell=float(np.sum(root * plus)) / N,
        pi_term_bound=math.sqrt(2.0) / N,
        _cos=s,
    )


def _midpoint(d: int, L: int) -> tuple[float, float, float, float]:
    """Half-cell-offset midpoint means of the four limit integrands on an ``L^d`` grid."""
    ks1 = -np.pi + (np.arange(L) + 0.5) * 2 * np.pi / L
    s = _cos_sums(d, ks1)
    em = 2.0 * (d - s)
    root = np.sqrt((d + s) / (d - s))
    plus = np.maximum(s / d, 0.0)
    return float(root.mean()), float((root * plus).mean()), float((1 / em).mean()), float((plus / em).mean())


def richardson(hs: Sequence[float], values: Sequence[float], powers: Sequence[int]) -> tuple[float, float]:
    """Fit ``A(h) = A0 + sum_p c_p h^p`` exactly through all points.

    Returns ``(A0, err)`` where ``err`` compares with the fit that drops the
    coarsest point and the highest power.
    """
    hs = np.asarray(hs, dtype=float)
    vals = np.asarray(values, dtype=float)
    if len(hs) != len(powers) + 1:
        raise ParameterError("need one more grid level than eliminated powers")

    def fit(h, v, ps):
        M = np.column_stack([np.ones_like(h)] + [h**p for p in ps])
        return float(np.linalg.solve(M, v)[0])

    full = fit(hs, vals, powers)
    if len(powers) == 0:
        return full, math.inf
    reduced = fit(hs[1:], vals[1:], powers[:-1])
    return full, abs(full - reduced)


@dataclass(frozen=True)
class LimitIntegrals:
    d: int
    I: float
    I_tilde: float
    I_err: float
    I_tilde_err: float
    inv_eps: float | None
    inv_eps_cosplus: float | None
    inv_eps_err: float | None
    levels: tuple[int, ...]

    def to_dict(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=None)
def limit_integrals(d: int, target_tol: float = 5e-4) -> LimitIntegrals:
    """Infinite-volume limits of ``I_ell``, ``I~_ell`` and, for ``d >= 3``, of the ``1/eps`` sums.

    Raises :class:`DomainError` for ``d = 1`` (the ``1/eps`` weight is not
    integrable) or when no quadrature schedule exists for ``d``, and
    :class:`ConvergenceError` if the extrapolation error exceeds ``target_tol``.
    """
    if d < 2:
        raise DomainError("the limit integrals diverge at k = 0 for d = 1")
    if d not in _SCHEDULE:
        raise DomainError(f"no validated quadrature schedule for d = {d}; supported: 2, 3, 4")
    Ls, powers = _SCHEDULE[d]
    pts = [_midpoint(d, L) for L in Ls]
    hs = [1.0 / L for L in Ls]
    I, eI = richardson(hs, [p[0] for p in pts], powers)
    It, eIt = richardson(hs, [p[1] for p in pts], powers)
    inv = invp = einv = None
    if d in _SCHEDULE_INV:
        Ls2, powers2 = _SCHEDULE_INV[d]
        pts2 = [pts[Ls.index(L)] if L in Ls else _midpoint(d, L) for L in Ls2]
        hs2 = [1.0 / L for L in Ls2]
        inv, e1 = richardson(hs2, [p[2] for p in pts2], powers2)
        invp, e2 = richardson(hs2, [p[3] for p in pts2], powers2)
        einv = max(e1, e2)
    if max(eI, eIt) > target_tol:
        raise ConvergenceError(f"d={d}: extrapolation error {max(eI, eIt):.2e} exceeds {target_tol:.1e}")
    return LimitIntegrals(d, I, It, eI, eIt, inv, invp, einv, tuple(Ls))


# ---------------------------------------------------------------------------
# nearest-neighbour certificates
# ---------------------------------------------------------------------------


def kk_alpha_bound(ratio: float) -> float:
    """Ground-state lower bound ``(1/4) / (2 + ratio)`` on ``alpha`` with ``ratio = -J2/J1``."""
    if not 0.0 <= ratio <= 1.0:
        raise ParameterError(f"ratio must lie in [0, 1], got {ratio}")
    return 0.25 / (2.0 + ratio)


ALPHA_MODES = ("measured", "worst_case", "kk")


@dataclass(frozen=True)
class CertificateInput:
    """Parameters of a nearest-neighbour certificate.

    ``ell=None`` means the infinite-volume limit; ``beta=math.inf`` the ground
    state. ``alpha`` is required for ``alpha_mode="measured"``.
    """

    d: int
    two_S: int
    J1: float
    J2: float
    beta: float = math.inf
    ell: int | None = None
    alpha_mode: str = "worst_case"
    alpha: float | None = None
    J3: float = 1.0

    def __post_init__(self):
        if self.alpha_mode not in ALPHA_MODES:
            raise ParameterError(f"alpha_mode must be one of {ALPHA_MODES}, got {self.alpha_mode!r}")
        if self.two_S < 1 or int(self.two_S) != self.two_S:
            raise ParameterError(f"two_S must be a positive integer, got {self.two_S!r}")
        if not self.beta > 0:
            raise ParameterError(f"beta must be positive, got {self.beta}")
        if self.J3 != 1.0:
            raise ConfigError("nearest-neighbour certificates assume the normalization J3 = 1")
        if not (1.0 >= self.J1 >= -self.J2 >= 0.0):
            raise ConfigError(f"need 1 = J3 >= J1 >= -J2 >= 0, got J1={self.J1}, J2={self.J2}")
        if self.alpha_mode == "measured" and (self.alpha is None or self.alpha < 0):
            raise ParameterError("measured alpha mode needs a nonnegative alpha")
        if self.alpha_mode == "kk" and not (math.isinf(self.beta) and self.two_S == 1):
            raise ConfigError("the Kubo-Kishi alpha bound is a spin-1/2 ground-state bound")
        if self.ell is not None and (self.ell < 2 or self.ell % 2):
            raise ParameterError(f"ell must be even and >= 2, got {self.ell}")

    @property
    def S(self) -> float:
        return self.two_S / 2.0

    @property
    def ratio(self) -> float | None:
        return -self.J2 / self.J1 if self.J1 > 0 else None

    def alpha_interval(self) -> tuple[float, float]:
        hi = (self.J1 + abs(self.J2)) * self.S**2
        if self.alpha_mode == "measured":
            return (float(self.alpha), float(self.alpha))
        if self.alpha_mode == "kk":
            lo = kk_alpha_bound(self.ratio) if self.ratio is not None else 0.0
            return (min(lo, hi), hi)
        return (0.0, hi)


@dataclass(frozen=True)
class CertificateReport:
    bound1: float
    bound2: float | None
    lro_proven: bool
    alpha_free_condition: bool | None
    kk_bound_used: bool
    alpha: float
    alpha_interval: tuple[float, float]
    bounds_at_alpha_min: tuple[float, float | None]
    inputs: dict
    tolerances: dict
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alpha_interval"] = list(self.alpha_interval)
        d["bounds_at_alpha_min"] = list(self.bounds_at_alpha_min)
        d["notes"] = list(self.notes)
        return d


def _nn_pieces(inp: CertificateInput):
    """``(I, I~, pi allowance, thermal1, thermal2)`` at the requested volume."""
    if inp.ell is None:
        li = limit_integrals(inp.d)
        if math.isinf(inp.beta):
            t1 = t2 = 0.0
        else:
            if li.inv_eps is None:
                raise DomainError(f"the 1/(beta eps) sum diverges as ell grows in d = {inp.d}")
            t1 = li.inv_eps / (2 * inp.beta)
            t2 = li.inv_eps_cosplus / (2 * inp.beta)
        return li.I, li.I_tilde, 0.0, t1, t2
    ms = momentum_sums(inp.d, inp.ell)
    if math.isinf(inp.beta):
        t1 = t2 = 0.0
    else:
        t1 = ms.sum_inv_eps / (2 * inp.beta)
        t2 = ms.sum_inv_eps_cosplus / (2 * inp.beta)
    return ms.I_ell, ms.I_tilde_ell, ms.pi_term_bound, t1, t2


def _adversarial_alpha(A, B, C, D, q, lo, hi):
    """Minimize ``max(A - B t, t^2 q - C t - D)`` over ``t = sqrt(alpha)`` in ``[sqrt lo, sqrt hi]``.

    ``q = 1/(1 + ratio)``, or ``None`` when the second bound is unavailable.
    """
    t_lo, t_hi = math.sqrt(lo), math.sqrt(hi)
    if q is None:
        return hi  # bound1 alone is decreasing in alpha
    cands = {t_lo, t_hi}
    tv = C / (2 * q)
    if t_lo < tv < t_hi:
        cands.add(tv)
    # crossing of the two bounds: q t^2 + (B - C) t - (A + D) = 0
    disc = (B - C) ** 2 + 4 * q * (A + D)
    if disc >= 0:
        tc = (-(B - C) + math.sqrt(disc)) / (2 * q)
        if t_lo < tc < t_hi:
            cands.add(tc)
    best = min(cands, key=lambda t: max(A - B * t, q * t * t - C * t - D))
    return best * best


def bound2_value(inp: CertificateInput, alpha: float) -> float:
    """Second nearest-neighbour bound at a given ``alpha``."""
    if inp.J1 == 0:
        raise DomainError("the second bound needs J1 > 0")
    _, It, _, _, t2 = _nn_pieces(inp)
    sa = math.sqrt(alpha)
    return sa * (sa / (1.0 - inp.J2 / inp.J1) - 0.5 * It) - t2


def nn_lro_bounds(inp: CertificateInput) -> CertificateReport:
    """Both nearest-neighbour lower bounds on ``|Lambda|^-1 sum_x <S_0^(3) S_x^(3)>``.

    When ``alpha`` is only known to lie in an interval, the bounds are
    reported at the value of ``alpha`` that minimizes the larger of the two,
    so ``lro_proven`` holds for every ``alpha`` in the interval.
    """
    I, It, pi_allow, t1, t2 = _nn_pieces(inp)
    c = inp.S * (inp.S + 1) / 3.0
    A, B = c - t1, 0.5 * (I + pi_allow)
    notes = []
    if inp.J1 > 0:
        q = 1.0 / (1.0 - inp.J2 / inp.J1)
        C, D = 0.5 * It, t2
    else:
        q = None
        C = D = 0.0
        notes.append("second bound skipped: J1 = 0 makes 1 - J2/J1 undefined")
    lo, hi = inp.alpha_interval()
    alpha = _adversarial_alpha(A, B, C, D, q, lo, hi)

    def bounds(a):
        t = math.sqrt(a)
        b1 = A - B * t
        b2 = None if q is None else q * t * t - C * t - D
        return b1, b2

    b1, b2 = bounds(alpha)
    best = max(b1, b2) if b2 is not None else b1
    cond = alpha_free_condition(inp.d, inp.two_S, inp.ratio).holds if (inp.ratio is not None and inp.d in _SCHEDULE) else None
    return CertificateReport(
        bound1=b1,
        bound2=b2,
        lro_proven=bool(best > 0),
        alpha_free_condition=cond,
        kk_bound_used=inp.alpha_mode == "kk",
        alpha=alpha,
        alpha_interval=(lo, hi),
        bounds_at_alpha_min=bounds(lo),
        inputs=_input_echo(inp),
        tolerances={"limit_integral_target": 5e-4},
        notes=tuple(notes),
    )


def _input_echo(inp: CertificateInput) -> dict:
    d = asdict(inp)
    d["beta"] = "inf" if math.isinf(inp.beta) else inp.beta
    d["ell"] = "inf" if inp.ell is None else inp.ell
    return d


# ---------------------------------------------------------------------------
# general families
# ---------------------------------------------------------------------------


def worst_case_e_bound(table: CouplingTable, two_S: int) -> Callable[[np.ndarray], float]:
    """``e(k) <= (S^2/2) sum_x (|J1_per(x)| + |J2_per(x)|)(1 + |cos k.x|)``."""
    S2 = (two_S / 2.0) ** 2
    w = np.abs(table.flat(1)) + np.abs(table.flat(2))
    sites = table.torus.sites.astype(float)

    def bound(k):
        return 0.5 * S2 * float(np.sum(w * (1.0 + np.abs(np.cos(sites @ np.asarray(k, float))))))

    return bound


def nn_e_envelope(alpha: float, d: int) -> Callable[[np.ndarray], float]:
    """Nearest-neighbour envelope of ``e(k)`` used by the first nearest-neighbour bound.

    ``alpha sum_i (1 + cos k_i)`` away from ``k = (pi, ..., pi)`` and
    ``4 d alpha`` there, which reproduces the ``sqrt(2)/ell^d`` allowance.
    """

    def env(k):
        k = np.asarray(k, dtype=float)
        if np.allclose(np.abs(k), np.pi):
            return 4.0 * d * alpha
        return alpha * float(np.sum(1.0 + np.cos(k)))

    return env


def general_lro_bound(
    table: CouplingTable,
    two_S: int,
    beta: float = math.inf,
    e_bound: Callable[[np.ndarray], float] | None = None,
) -> CertificateReport:
    """``S(S+1)/3 - ell^-d sum sqrt(e/(2 eps)) - (2 beta ell^d)^-1 sum 1/eps`` over ``k != 0``."""
    torus = table.torus
    if not torus.is_even:
        raise ConfigError("certificates need an even side length")
    rp = rp_check(table)
    if not rp.passed:
        raise ConfigError(f"reflection positivity fails on axes {rp.failed_axes()}")
    if not table.satisfies_sign_chain():
        raise ConfigError("couplings violate J3 >= J1 >= -J2 >= 0")
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    ks = momenta(torus)
    ks = ks[np.any(ks != 0.0, axis=1)]
    eps = np.atleast_1d(epsilon_k(table, ks))
    if eps.size and eps.min() <= 1e-12:
        raise DomainError("dispersion vanishes at a nonzero momentum")
    fb = worst_case_e_bound(table, two_S) if e_bound is None else e_bound
    e = np.array([fb(k) for k in ks])
    if np.any(e < 0):
        raise ParameterError("e_bound must be nonnegative")
    N = float(torus.n_sites)
    S = two_S / 2.0
    quantum = math.fsum(np.sqrt(e / (2 * eps))) / N
    thermal = 0.0 if math.isinf(beta) else math.fsum(1.0 / eps) / (2 * beta * N)
    b = S * (S + 1) / 3.0 - quantum - thermal
    return CertificateReport(
        bound1=b,
        bound2=None,
        lro_proven=bool(b > 0),
        alpha_free_condition=None,
        kk_bound_used=False,
        alpha=math.nan,
        alpha_interval=(math.nan, math.nan),
        bounds_at_alpha_min=(b, None),
        inputs={"d": torus.d, "ell": torus.ell, "two_S": two_S, "beta": "inf" if math.isinf(beta) else beta,
                "e_bound": "worst_case" if e_bound is None else "supplied"},
        tolerances={"rp_rel_tol": 1e-9},
    )


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlphaFreeCondition:
    holds: bool
    threshold: float  # critical value of -J2/J1; may exceed 1
    lhs: float
    rhs: float


def alpha_free_condition(d: int, two_S: int, ratio: float) -> AlphaFreeCondition:
    """``1 + ratio < (4/3) S(S+1) / (I Itilde)``: some bound is positive whatever ``alpha`` is."""
    if not 0.0 <= ratio <= 1.0:
        raise ParameterError(f"ratio must lie in [0, 1], got {ratio}")
    li = limit_integrals(d)
    S = two_S / 2.0
    rhs = (4.0 / 3.0) * S * (S + 1) / (li.I * li.I_tilde)
    return AlphaFreeCondition(bool(1.0 + ratio < rhs), rhs - 1.0, 1.0 + ratio, rhs)


def critical_ratio(predicate: Callable[[float], bool], lo: float = 0.0, hi: float = 1.0, tol: float = 1e-6):
    """Largest ratio in ``[lo, hi]`` with ``predicate`` true, assuming it holds on an initial segment.

    Returns ``None`` if it fails at ``lo`` and ``hi`` if it holds there.
    """
    if not predicate(lo):
        return None
    if predicate(hi):
        return hi
    a, b = lo, hi
    while b - a > tol:
        m = 0.5 * (a + b)
        if predicate(m):
            a = m
        else:
            b = m
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScanPoint:
    d: int
    two_S: int
    ratio: float
    beta: float
    ell: int | None = None
    J1: float = 1.0


@dataclass(frozen=True)
class ScanResult:
    points: tuple[ScanPoint, ...]
    reports: tuple[CertificateReport | None, ...]
    errors: tuple[str | None, ...]
    alpha_mode: str
    critical_ratios: dict

    COLUMNS = (
        "d", "two_S", "ratio", "beta", "ell", "J1", "J2", "alpha_mode", "alpha", "alpha_min", "alpha_max",
        "bound1", "bound2", "lro_proven", "alpha_free_condition", "kk_bound_used", "error",
    )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for p, rep, err in zip(self.points, self.reports, self.errors):
            row = [p.d, p.two_S, _g(p.ratio), _g(p.beta), "inf" if p.ell is None else p.ell, _g(p.J1),
                   _g(0.0 - p.ratio * p.J1), self.alpha_mode]
            if rep is None:
                row += [""] * 8 + [err]
            else:
                row += [_g(rep.alpha), _g(rep.alpha_interval[0]), _g(rep.alpha_interval[1]), _g(rep.bound1),
                        "" if rep.bound2 is None else _g(rep.bound2), str(rep.lro_proven).lower(),
                        "" if rep.alpha_free_condition is None else str(rep.alpha_free_condition).lower(),
                        str(rep.kk_bound_used).lower(), ""]
            w.writerow(row)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "alpha_mode": self.alpha_mode,
            "points": [
                {"point": _point_dict(p), "report": None if r is None else r.to_dict(), "error": e}
                for p, r, e in zip(self.points, self.reports, self.errors)
            ],
            "critical_ratios": self.critical_ratios,
        }


def _g(x) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    # shortest string that round-trips, so CSV values are exact
    return repr(float(x))


def _point_dict(p: ScanPoint) -> dict:
    d = asdict(p)
    d["beta"] = "inf" if math.isinf(p.beta) else p.beta
    d["ell"] = "inf" if p.ell is None else p.ell
    return d


def _certify_point(p: ScanPoint, alpha_mode: str, alpha: float | None = None) -> CertificateReport:
    inp = CertificateInput(d=p.d, two_S=p.two_S, J1=p.J1, J2=-p.ratio * p.J1, beta=p.beta, ell=p.ell,
                           alpha_mode=alpha_mode, alpha=alpha)
    return nn_lro_bounds(inp)


def scan(points: Iterable[ScanPoint], alpha_mode: str = "worst_case", alpha: float | None = None,
         ratio_tol: float = 1e-6) -> ScanResult:
    """Evaluate certificates on ``points`` in the given order; errors are recorded per point.

    ``critical_ratios`` maps ``"d=<d>,two_S=<2S>,beta=<beta>,ell=<ell>"`` to the
    largest ratio for which LRO is certified (``None`` if not certified at 0),
    found by bisection to ``ratio_tol``.
    """
    pts = tuple(points)
    reports, errors = [], []
    for p in pts:
        try:
            reports.append(_certify_point(p, alpha_mode, alpha))
            errors.append(None)
        except IRBoundError as exc:
            reports.append(None)
            errors.append(f"{type(exc).__name__}: {exc}")
    crit = {}
    for key in sorted({(p.d, p.two_S, p.beta, p.ell, p.J1) for p in pts}, key=lambda k: (k[0], k[1], k[2], -1 if k[3] is None else k[3], k[4])):
        d, two_S, beta, ell, J1 = key
        label = f"d={d},two_S={two_S},beta={_g(beta)},ell={'inf' if ell is None else ell}"

        def proven(r, d=d, two_S=two_S, beta=beta, ell=ell, J1=J1):
            return _certify_point(ScanPoint(d, two_S, r, beta, ell, J1), alpha_mode, alpha).lro_proven

        try:
            crit[label] = critical_ratio(proven, tol=ratio_tol)
        except IRBoundError as exc:
            crit[label] = f"{type(exc).__name__}: {exc}"
    return ScanResult(pts, tuple(reports), tuple(errors), alpha_mode, crit)
