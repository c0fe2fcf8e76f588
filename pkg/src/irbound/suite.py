"""Desk-scale verification matrix shared by the ``verify`` command and the acceptance tests.

Each suite returns a flat list of :class:`~irbound.checks.CheckResult`. Random
draws come from ``numpy.random.default_rng([seed, stream])`` with a fixed
stream number per suite, so changing the seed changes the draws but never the
set of checks that run.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import checks
from .certificates import CertificateInput, nn_e_envelope, general_lro_bound, nn_lro_bounds
from .checks import CheckResult, DEFAULT_SEED
from .ed import DEFAULT_DIM_CAP, SpinModel, SpinSystem, gibbs
from .lattice import CouplingTable, Torus, Yukawa, momenta, reflection_planes

__all__ = [
    "COUPLING_PRESETS",
    "SuiteConfig",
    "suite_configurations",
    "irb_suite",
    "rp_suite",
    "identity_suite",
    "cross_validation_suite",
    "run_all",
]

# J1, J2, J3 for the nearest-neighbour presets of the matrix
COUPLING_PRESETS = {
    "ising": (0.0, 0.0, 1.0),
    "xxz": (0.5, 0.0, 1.0),
    "xy_sign": (0.5, -0.25, 1.0),
}

_LATTICES = ((1, 4), (1, 6), (1, 8), (2, 2))
_STREAM_RP, _STREAM_ID, _STREAM_CV = 1, 2, 3


@dataclass(frozen=True)
class SuiteConfig:
    d: int
    ell: int
    two_S: int
    preset: str

    @property
    def couplings(self) -> tuple[float, float, float]:
        return COUPLING_PRESETS[self.preset]

    def label(self) -> str:
        return f"d={self.d},ell={self.ell},two_S={self.two_S},{self.preset}"

    def model(self) -> SpinModel:
        torus = Torus(self.d, self.ell)
        return SpinModel(SpinSystem(torus, self.two_S), CouplingTable.nearest_neighbour(torus, *self.couplings))


def suite_configurations(dim_cap: int = DEFAULT_DIM_CAP, spins=(1, 2), presets=tuple(COUPLING_PRESETS)):
    """Lattices ``d=1, ell in {4,6,8}`` and ``d=2, ell=2`` times spins and presets, within the cap."""
    out = []
    for (d, ell), two_S, preset in itertools.product(_LATTICES, spins, presets):
        if (two_S + 1) ** (ell**d) <= dim_cap:
            out.append(SuiteConfig(d, ell, two_S, preset))
    return out


def _tag(res: CheckResult, **extra) -> CheckResult:
    params = dict(res.parameters)
    params.update(extra)
    return CheckResult(res.name, res.reference, res.passed, res.margin, res.tolerance, params, res.details,
                       res.skipped)


def irb_suite(configs=None, betas=(0.5, 2.0)) -> list[CheckResult]:
    """Both infrared bounds on every configuration and inverse temperature."""
    out = []
    for cfg in configs or suite_configurations():
        model = cfg.model()
        for beta in betas:
            st = model.gibbs(beta)
            out.append(_tag(checks.verify_irb_duhamel(st), config=cfg.label()))
            out.append(_tag(checks.verify_irb_corr(st), config=cfg.label()))
    return out


def rp_suite(configs=None, samples: int = 100, seed: int = DEFAULT_SEED, beta: float = 1.0,
             scale: float = 1.0) -> list[CheckResult]:
    """Field reflection positivity, Gaussian domination and their equality cases.

    For each configuration, ``samples`` random half-field pairs (a random plane
    each) and ``samples`` random full fields are drawn with standard normal
    entries times ``scale``.
    """
    rng = np.random.default_rng([seed, _STREAM_RP])
    out = []
    for cfg in configs or suite_configurations():
        model = cfg.model()
        system, table = model.system, model.table
        planes = reflection_planes(system.torus)
        label = cfg.label()
        n = system.n_sites
        for i in range(samples):
            plane = planes[int(rng.integers(len(planes)))]
            left, right = plane.halves(system.torus)
            v1 = scale * rng.standard_normal(len(left))
            v2 = scale * rng.standard_normal(len(right))
            out.append(_tag(checks.verify_rp_fields(system, table, v1, v2, plane, beta), config=label, draw=i))
            v = scale * rng.standard_normal(n)
            out.append(_tag(checks.verify_gaussian_domination(system, table, v, beta), config=label, draw=i))
        # equality cases: v2 = R v1 and constant fields
        plane = planes[0]
        left, _ = plane.halves(system.torus)
        v1 = scale * rng.standard_normal(len(left))
        Rv1 = checks.reflect_field(system.torus, plane, v1, "left")
        eq = checks.verify_rp_fields(system, table, v1, Rv1, plane, beta, tol=1e-10)
        out.append(_equality(eq, "rp_fields_equality", label))
        gd = checks.verify_gaussian_domination(system, table, np.full(n, float(rng.standard_normal())), beta, tol=1e-10)
        out.append(_equality(gd, "gaussian_domination_equality", label))
        st = model.gibbs(beta)
        ks = momenta(system.torus)
        for k in ks[np.any(ks != 0, axis=1)]:
            out.append(_tag(checks.verify_gaussian_second_order(st, k), config=label))
    return out


def _equality(res: CheckResult, name: str, label: str) -> CheckResult:
    return CheckResult(name, res.reference + " (equality case)", abs(res.margin) <= 1e-10, -abs(res.margin),
                       1e-10, dict(res.parameters, config=label), res.details)


def _random_nn_couplings(rng, corr_only=False):
    """Random couplings with ``J3 >= J1 >= -J2 >= 0`` (or just ``|J2| <= J1``)."""
    J1 = float(rng.uniform(0.05, 1.0))
    if corr_only:
        J2 = float(rng.uniform(-J1, J1))
        J3 = float(rng.uniform(-1.0, 1.0))
    else:
        J2 = -float(rng.uniform(0.0, J1))
        J3 = float(rng.uniform(J1, 1.5))
    return J1, J2, J3


def identity_suite(samples: int = 100, seed: int = DEFAULT_SEED) -> list[CheckResult]:
    """Falk-Bruch/Bogolubov, correlation inequality, rotations, trace invariance, magnetisation."""
    rng = np.random.default_rng([seed, _STREAM_ID])
    out = []
    # Falk-Bruch with random operators on random two-spin Hamiltonians
    for i in range(samples):
        dim = 4
        X = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        H = 0.5 * (X + X.conj().T)
        beta = float(rng.uniform(0.2, 3.0))
        st = gibbs(H, beta)
        A = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        B = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        out.append(_tag(checks.verify_falk_bruch(st, A, B), draw=i))
    # commuting operators: Duhamel product equals the symmetrized correlation
    for i in range(max(1, samples // 10)):
        X = rng.standard_normal((6, 6))
        H = 0.5 * (X + X.T)
        st = gibbs(H, float(rng.uniform(0.2, 3.0)))
        coeffs = rng.standard_normal(3)
        A = coeffs[0] * np.eye(6) + coeffs[1] * H + coeffs[2] * H @ H
        res = checks.verify_falk_bruch(st, A)
        out.append(_tag(res, draw=i, commuting=True))
    # correlation inequality |<S2 S2>| <= <S1 S1>, any field along axis 3
    for i in range(samples):
        d, ell = ((1, 3), (1, 4), (2, 2))[i % 3]
        two_S = 1 if (i // 3) % 2 == 0 else 2
        torus = Torus(d, ell)
        J1, J2, J3 = _random_nn_couplings(rng, corr_only=True)
        if i % 4 == 3:
            fams = [Yukawa(J1, 1.0), Yukawa(J2, 1.0), Yukawa(J3, 0.7)]
            table = CouplingTable.from_families(torus, fams)
        else:
            table = CouplingTable.nearest_neighbour(torus, J1, J2, J3)
        h = rng.normal(scale=0.5, size=torus.n_sites)
        model = SpinModel(SpinSystem(torus, two_S), table, h)
        st = model.gibbs(float(rng.uniform(0.2, 3.0)))
        out.append(_tag(checks.verify_corr_ineq(st), draw=i))
    # spin rotations
    for i in range(samples):
        two_S = int(rng.integers(1, 5))
        a = rng.normal(scale=1.5, size=3)
        b = rng.normal(size=3)
        out.append(_tag(checks.verify_rotation(two_S, a, b), draw=i))
    # trace invariance under axis permutations and sublattice sign flips
    perms = list(itertools.permutations((1, 2, 3)))
    signs = [(1, 1, 1), (-1, -1, 1), (-1, 1, -1), (1, -1, -1)]
    for i in range(samples):
        d, ell = ((1, 4), (2, 2), (1, 6))[i % 3]
        two_S = 1 if d == 2 or ell == 6 or i % 2 == 0 else 2
        torus = Torus(d, ell)
        J = rng.uniform(-1.0, 1.0, size=3)
        if i % 5 == 4:
            table = CouplingTable.from_families(torus, [Yukawa(float(j), float(rng.uniform(0.5, 2.0))) for j in J])
        else:
            table = CouplingTable.nearest_neighbour(torus, *map(float, J))
        model = SpinModel(SpinSystem(torus, two_S), table, float(rng.normal()))
        rho = perms[int(rng.integers(len(perms)))]
        sigma = signs[int(rng.integers(len(signs)))]
        out.append(_tag(checks.verify_trace_invariance(model, float(rng.uniform(0.2, 2.0)), rho, sigma), draw=i))
    # magnetisation inequality
    for i in range(samples):
        d, ell = ((1, 4), (1, 6), (2, 2))[i % 3]
        two_S = 1 if ell == 6 else int(rng.integers(1, 3))
        torus = Torus(d, ell)
        table = CouplingTable.nearest_neighbour(torus, *map(float, rng.uniform(-1, 1, size=3)))
        model = SpinModel(SpinSystem(torus, two_S), table, float(rng.normal(scale=0.3)))
        beta = math.inf if i % 7 == 0 else float(rng.uniform(0.0, 4.0))
        out.append(_tag(checks.magnetisation_check(model.gibbs(beta)), draw=i))
    return out


def _measured_alpha(state, J1, J2, d):
    """``J1 <S_0^1 S_e1^1> + J2 <S_0^2 S_e1^2>`` with ``e1`` the first lattice direction."""
    torus = state.model.system.torus
    e1 = torus.index([1] + [0] * (d - 1))
    c1, c2 = state.two_point(1)[e1], state.two_point(2)[e1]
    return J1 * c1 + J2 * c2


def cross_validation_suite(configs=None, betas=(0.5, 2.0), grid_points: int = 50,
                           seed: int = DEFAULT_SEED) -> list[CheckResult]:
    """Agreement of the two certificate paths, and certificates never exceeding ED."""
    rng = np.random.default_rng([seed, _STREAM_CV])
    out = []
    lattices = ((1, 4), (1, 8), (2, 4), (2, 6), (3, 4))
    for i in range(grid_points):
        d, ell = lattices[i % len(lattices)]
        two_S = int(rng.integers(1, 4))
        J1 = float(rng.uniform(0.0, 1.0))
        J2 = -float(rng.uniform(0.0, J1))
        alpha = float(rng.uniform(0.0, (J1 + abs(J2)) * (two_S / 2) ** 2))
        beta = math.inf if i % 3 == 0 else float(rng.uniform(0.5, 20.0))
        torus = Torus(d, ell)
        table = CouplingTable.nearest_neighbour(torus, J1, J2, 1.0)
        r_gen = general_lro_bound(table, two_S, beta, nn_e_envelope(alpha, d))
        r_nn = nn_lro_bounds(CertificateInput(d, two_S, J1, J2, beta, ell, "measured", alpha))
        diff = abs(r_gen.bound1 - r_nn.bound1)
        out.append(CheckResult("certificate_paths_agree", "general-family bound versus nearest-neighbour bound",
                               diff <= 1e-10, -diff, 1e-10,
                               {"d": d, "ell": ell, "two_S": two_S, "J1": J1, "J2": J2, "alpha": alpha,
                                "beta": "inf" if math.isinf(beta) else beta},
                               {"general": r_gen.bound1, "nearest_neighbour_bound1": r_nn.bound1}))
    for cfg in configs or suite_configurations():
        model = cfg.model()
        J1, J2, _ = cfg.couplings
        for beta in betas:
            st = model.gibbs(beta)
            alpha = _measured_alpha(st, J1, J2, cfg.d)
            lro = st.lro_parameter()
            rep = nn_lro_bounds(CertificateInput(cfg.d, cfg.two_S, J1, J2, beta, cfg.ell, "measured", max(alpha, 0.0)))
            best = max(b for b in (rep.bound1, rep.bound2) if b is not None)
            out.append(CheckResult("certificate_below_ed", "certified lower bound versus exact long-range order",
                                   lro - best >= -1e-8, lro - best, 1e-8,
                                   {"config": cfg.label(), "beta": beta},
                                   {"lro": lro, "alpha": alpha, "bound1": rep.bound1, "bound2": rep.bound2}))
    return out


def run_all(samples: int = 100, seed: int = DEFAULT_SEED, configs=None) -> dict[str, list[CheckResult]]:
    """Every suite, keyed by suite name."""
    return {
        "infrared_bounds": irb_suite(configs),
        "reflection_positivity": rp_suite(configs, samples=samples, seed=seed),
        "identities": identity_suite(samples=samples, seed=seed),
        "cross_validation": cross_validation_suite(configs, seed=seed),
    }
