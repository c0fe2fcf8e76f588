"""Numerical verification of the inequalities and identities behind the infrared bound.

Every ``verify_*`` function returns a :class:`CheckResult`. The ``margin`` is
the smallest slack ``rhs - lhs`` seen (relative where the inequality is
multiplicative); the check passes when ``margin >= -tolerance``. Hypotheses
of the underlying statement are checked first and a violation raises
:class:`ConfigError` rather than reporting a meaningless verdict.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg
import scipy.sparse as sp

from .ed import GibbsState, SpinModel, SpinSystem, build_hamiltonian, laplacian, spin_matrices
from .exceptions import ConfigError, ParameterError
from .lattice import CouplingTable, Plane, epsilon_k, momenta, rp_check

__all__ = [
    "DEFAULT_SEED",
    "CheckResult",
    "falk_bruch_phi",
    "require_irb_hypotheses",
    "verify_irb_duhamel",
    "verify_irb_corr",
    "verify_falk_bruch",
    "verify_gaussian_second_order",
    "log_z_field",
    "log_z_tilde",
    "verify_rp_fields",
    "verify_gaussian_domination",
    "verify_corr_ineq",
    "rotate_vector",
    "rotation_unitary",
    "verify_rotation",
    "rotated_model",
    "verify_trace_invariance",
    "magnetisation_check",
]

DEFAULT_SEED = 0x5EED
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    reference: str
    passed: bool
    margin: float
    tolerance: float
    parameters: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    skipped: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _result(name, reference, margin, tol, parameters=None, details=None, skipped=None):
    margin = float(margin)
    passed = skipped is not None or margin >= -tol
    return CheckResult(name, reference, bool(passed), margin, tol, parameters or {}, details or {}, skipped)


def falk_bruch_phi(s):
    """``Phi(s) = sqrt(s) coth(1/sqrt(s))`` with ``Phi(0) = 0``."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        r = np.sqrt(s)
        out = np.where(s > 0, r / np.tanh(1.0 / np.where(s > 0, r, 1.0)), 0.0)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# hypotheses
# ---------------------------------------------------------------------------


def require_irb_hypotheses(model: SpinModel) -> None:
    """Zero field, even side, sign chain, reflection positivity and a nondegenerate dispersion."""
    torus = model.system.torus
    if model.has_field:
        raise ConfigError("infrared bounds are stated at zero field")
    if not torus.is_even:
        raise ConfigError("infrared bounds need an even side length")
    if not model.table.satisfies_sign_chain():
        raise ConfigError("couplings violate J3 >= J1 >= -J2 >= 0")
    rp = rp_check(model.table)
    if not rp.passed:
        raise ConfigError(f"reflection positivity fails on axes {rp.failed_axes()}")
    ks = _nonzero_momenta(torus)
    eps = np.atleast_1d(epsilon_k(model.table, ks))
    if eps.size and np.min(eps) <= 1e-12:
        raise ConfigError("dispersion vanishes at a nonzero momentum (J3 degenerate)")


def _nonzero_momenta(torus):
    ks = momenta(torus)
    return ks[np.any(ks != 0.0, axis=1)]


# ---------------------------------------------------------------------------
# infrared bounds
# ---------------------------------------------------------------------------


def verify_irb_duhamel(state: GibbsState, tol: float = DEFAULT_TOL) -> CheckResult:
    """``eta_hat(k) <= 1 / (2 beta eps(k))`` for every ``k != 0``."""
    model = state._need_model()
    require_irb_hypotheses(model)
    if state.ground_flag:
        raise ConfigError("the Duhamel bound needs finite beta")
    ks = _nonzero_momenta(model.system.torus)
    rows = []
    for k in ks:
        eps = epsilon_k(model.table, k)
        bound = 1.0 / (2.0 * state.beta * eps) if state.beta > 0 else math.inf
        eta = state.eta_hat(k)
        rows.append((k.tolist(), eta, bound, bound - eta))
    margin = min(r[3] for r in rows) if rows else math.inf
    return _result(
        "irb_duhamel",
        "infrared bound for the Duhamel two-point function",
        margin,
        tol,
        {"beta": state.beta},
        {"per_k": [{"k": r[0], "eta_hat": r[1], "bound": r[2], "margin": r[3]} for r in rows]},
    )


def verify_irb_corr(state: GibbsState, tol: float = DEFAULT_TOL) -> CheckResult:
    """``corr_hat(k) <= sqrt(e(k)/(2 eps(k))) + 1/(2 beta eps(k))`` for every ``k != 0``."""
    model = state._need_model()
    require_irb_hypotheses(model)
    ks = _nonzero_momenta(model.system.torus)
    rows = []
    for k in ks:
        eps = epsilon_k(model.table, k)
        e = state.e_of_k(k)
        thermal = 0.0 if state.ground_flag else (1.0 / (2.0 * state.beta * eps) if state.beta > 0 else math.inf)
        bound = math.sqrt(max(e, 0.0) / (2.0 * eps)) + thermal
        c = state.corr_hat(k)
        rows.append({"k": k.tolist(), "corr_hat": c, "e": e, "bound": bound, "margin": bound - c})
    margin = min(r["margin"] for r in rows) if rows else math.inf
    return _result(
        "irb_corr",
        "infrared bound for the ordinary two-point function",
        margin,
        tol,
        {"beta": state.beta},
        {"per_k": rows},
    )


def verify_falk_bruch(state: GibbsState, A, B=None, tol: float = DEFAULT_TOL) -> CheckResult:
    """Falk-Bruch, its square-root corollary, Bogolubov and ``(A,A) <= sym. correlation``.

    The Gibbs state is ``exp(-beta H)``, so every double commutator is taken
    with ``beta H``.
    """
    if state.ground_flag:
        raise ConfigError("Duhamel quantities need finite beta")
    A = np.asarray(A.toarray() if hasattr(A, "toarray") else A, dtype=complex)
    Ad = A.conj().T
    sym = 0.5 * state.expect(Ad @ A + A @ Ad).real
    aa = state.duhamel(A, A).real
    dc = state.double_commutator(A, scale=state.beta)
    details = {"symmetrized": sym, "duhamel": aa, "double_commutator": dc}
    margins = {}
    margins["duhamel_le_symmetrized"] = sym - aa
    margins["double_commutator_nonneg"] = dc + (tol - 1e-10)  # positivity asserted at 1e-10
    # equality (A,A) = sym iff [A, H] = 0
    H = state.vectors @ np.diag(state.energies) @ state.vectors.conj().T
    comm = A @ H - H @ A
    commutes = float(np.abs(comm).max()) <= 1e-12 * max(1.0, float(np.abs(H).max()) * float(np.abs(A).max()))
    details["commutes"] = commutes
    if commutes:
        margins["equality_when_commuting"] = -abs(sym - aa)
    skipped = None
    if dc > 1e-10:
        lhs = 2.0 * 2.0 * sym / dc
        rhs = float(falk_bruch_phi(4.0 * aa / dc))
        details.update(fb_lhs=lhs, fb_rhs=rhs)
        margins["falk_bruch"] = rhs - lhs
        c_rhs = 0.5 * math.sqrt(max(aa, 0.0) * dc) + aa
        details.update(corollary_lhs=sym, corollary_rhs=c_rhs)
        margins["corollary"] = c_rhs - sym
    else:
        skipped_reason = "double commutator below 1e-10; Falk-Bruch not evaluated"
        details["falk_bruch_skipped"] = skipped_reason
    if B is not None:
        B = np.asarray(B.toarray() if hasattr(B, "toarray") else B, dtype=complex)
        bh = state.beta * (B @ H - H @ B)
        lhs_b = abs(state.expect(B @ Ad - Ad @ B)) ** 2
        rhs_b = sym * float(np.real(state.expect(bh @ B.conj().T - B.conj().T @ bh)))
        details.update(bogolubov_lhs=lhs_b, bogolubov_rhs=rhs_b)
        margins["bogolubov"] = rhs_b - lhs_b
    details["margins"] = margins
    margin = min(margins.values())
    return _result("falk_bruch", "Falk-Bruch and Bogolubov inequalities", margin, tol,
                   {"beta": state.beta}, details, skipped)


def verify_gaussian_second_order(state: GibbsState, k, tol: float = DEFAULT_TOL) -> CheckResult:
    """Order-``s^2`` consequence of Gaussian domination for ``v = cos(k.x)``.

    ``(1/2) beta^2 eps^2 (C, C) <= (1/4) beta eps sum_x cos^2`` with
    ``C = sum_x cos(k.x) S_x^(3)``.
    """
    model = state._need_model()
    require_irb_hypotheses(model)
    sites = model.system.torus.sites
    c = np.cos(sites @ np.asarray(k, dtype=float))
    eps = epsilon_k(model.table, k)
    C = sp.diags((model.system.m_values @ c).astype(complex))
    lhs = 0.5 * state.beta**2 * eps**2 * state.duhamel(C, C).real
    rhs = 0.25 * state.beta * eps * float(np.sum(c**2))
    return _result("gaussian_second_order", "second-order expansion of Gaussian domination",
                   rhs - lhs, tol, {"beta": state.beta, "k": list(map(float, k))}, {"lhs": lhs, "rhs": rhs})


# ---------------------------------------------------------------------------
# reflection positivity with fields
# ---------------------------------------------------------------------------


def log_z_field(system: SpinSystem, table: CouplingTable, v, beta: float) -> float:
    """``log Tr exp(-beta H(v))`` with site field ``h = Delta v`` along axis 3."""
    H = build_hamiltonian(system, table, laplacian(table, v))
    E = linalg.eigvalsh(H)
    return float(-beta * E[0] + np.log(np.sum(np.exp(-beta * (E - E[0])))))


def log_z_tilde(system: SpinSystem, table: CouplingTable, v, beta: float) -> float:
    """``log Z(v) + beta (v, Delta v) / 4``."""
    v = np.asarray(v, dtype=float).reshape(-1)
    return log_z_field(system, table, v, beta) + 0.25 * beta * float(v @ laplacian(table, v))


def _rp_gate(table):
    rp = rp_check(table)
    if not rp.passed:
        raise ConfigError(f"reflection positivity fails on axes {rp.failed_axes()}")
    if not table.satisfies_sign_chain():
        raise ConfigError("couplings violate J3 >= J1 >= -J2 >= 0")


def _glue(torus, plane, left_vals, right_vals):
    left, right = plane.halves(torus)
    v = np.zeros(torus.n_sites)
    v[left] = left_vals
    v[right] = right_vals
    return v


def reflect_field(torus, plane: Plane, vals, source: str) -> np.ndarray:
    """Mirror a half-field: ``(R v)_x = v_{R x}``, landing on the opposite half."""
    left, right = plane.halves(torus)
    src, dst = (left, right) if source == "left" else (right, left)
    full = np.zeros(torus.n_sites)
    full[src] = vals
    return full[plane.site_map(torus)][dst]


def verify_rp_fields(system: SpinSystem, table: CouplingTable, v1, v2, plane: Plane, beta: float,
                     tol: float = DEFAULT_TOL) -> CheckResult:
    """Reflection-positivity inequality ``Z~(v1,v2)^2 <= Z~(v1,Rv1) Z~(Rv2,v2)``.

    ``v1`` lives on the left half and ``v2`` on the right half, both in
    lexicographic site order. The margin is ``1 - lhs/rhs`` on the
    field-shifted partition function ``Z~``. The same ratio for the bare
    ``Z`` is reported in ``details["bare_z_margin"]``; it is not implied by
    reflection positivity because ``h = Delta v`` couples the two halves.
    """
    _rp_gate(table)
    torus = system.torus
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    Rv1 = reflect_field(torus, plane, v1, "left")
    Rv2 = reflect_field(torus, plane, v2, "right")
    fields = (_glue(torus, plane, v1, v2), _glue(torus, plane, v1, Rv1), _glue(torus, plane, Rv2, v2))
    lz = [log_z_field(system, table, v, beta) for v in fields]
    q = [0.25 * beta * float(v @ laplacian(table, v)) for v in fields]
    lzt = [a + b for a, b in zip(lz, q)]
    rel = -math.expm1(2 * lzt[0] - lzt[1] - lzt[2])
    bare = -math.expm1(2 * lz[0] - lz[1] - lz[2])
    return _result(
        "rp_fields",
        "reflection positivity of the field-dependent partition function",
        rel,
        tol,
        {"beta": beta, "direction": plane.direction, "offset": plane.offset},
        {"log_z_tilde": lzt, "log_z": lz, "bare_z_margin": bare},
    )


def verify_gaussian_domination(system: SpinSystem, table: CouplingTable, v, beta: float,
                               tol: float = DEFAULT_TOL) -> CheckResult:
    """``Z~(v) <= Z~(0)``, reported as the relative margin ``1 - Z~(v)/Z~(0)``."""
    _rp_gate(table)
    if not system.torus.is_even:
        raise ConfigError("Gaussian domination needs an even side length")
    v = np.asarray(v, dtype=float).reshape(-1)
    a = log_z_tilde(system, table, v, beta)
    b = log_z_tilde(system, table, np.zeros_like(v), beta)
    return _result("gaussian_domination", "Gaussian domination", -math.expm1(a - b), tol,
                   {"beta": beta}, {"log_z_tilde_v": a, "log_z_tilde_0": b})


# ---------------------------------------------------------------------------
# correlation inequality, rotations, magnetisation
# ---------------------------------------------------------------------------


def verify_corr_ineq(state: GibbsState, tol: float = DEFAULT_TOL) -> CheckResult:
    """``|<S_0^(2) S_x^(2)>| <= <S_0^(1) S_x^(1)>`` for every ``x``."""
    model = state._need_model()
    if not model.table.satisfies_corr_condition():
        raise ConfigError("couplings violate |J2| <= J1")
    if model.has_field and model.field_axis != 3:
        raise ConfigError("the correlation inequality allows fields along axis 3 only")
    c1, c2 = state.two_point(1), state.two_point(2)
    m = c1 - np.abs(c2)
    return _result("corr_ineq", "axis-2 versus axis-1 correlation inequality", float(m.min()), tol,
                   {"beta": state.beta}, {"c1": c1.tolist(), "c2": c2.tolist()})


def rotate_vector(a, b) -> np.ndarray:
    """Rotate ``b`` about ``a`` by the angle ``|a|`` (right-hand rule)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    theta = float(np.linalg.norm(a))
    if theta == 0.0:
        return b.copy()
    n = a / theta
    return b * math.cos(theta) + np.cross(n, b) * math.sin(theta) + n * float(n @ b) * (1 - math.cos(theta))


def _s_dot(two_S, a):
    loc = spin_matrices(two_S)
    return a[0] * loc.S1 + a[1] * loc.S2 + a[2] * loc.S3


def rotation_unitary(two_S: int, a) -> np.ndarray:
    """``exp(-i a.S)``; conjugation ``U S^(b) U^*`` equals ``S^(R_a b)``."""
    return linalg.expm(-1j * _s_dot(two_S, np.asarray(a, dtype=float)))


def verify_rotation(two_S: int, a, b, tol: float = 1e-10) -> CheckResult:
    """Check ``exp(-i S^a) S^b exp(i S^a) = S^(R_a b)`` entrywise."""
    U = rotation_unitary(two_S, a)
    lhs = U @ _s_dot(two_S, np.asarray(b, float)) @ U.conj().T
    rhs = _s_dot(two_S, rotate_vector(a, b))
    err = float(np.abs(lhs - rhs).max())
    return _result("rotation", "spin rotation identity", -err, tol,
                   {"two_S": two_S, "a": list(map(float, a)), "b": list(map(float, b))})


def rotated_model(model: SpinModel, rho, sigma) -> SpinModel:
    """Axis permutation ``rho`` and sublattice signs ``sigma`` applied to ``model``.

    ``J~^(i)(x) = sigma_{rho(i)}^{|x|} J^(rho(i))(x)``; the uniform axis-3 field
    ``h`` becomes ``sigma_3^{|x|} h`` along axis ``rho^{-1}(3)``.
    """
    rho = tuple(int(r) for r in rho)
    sigma = tuple(int(s) for s in sigma)
    if sorted(rho) != [1, 2, 3]:
        raise ConfigError(f"{rho} is not a permutation of (1, 2, 3)")
    if any(s not in (-1, 1) for s in sigma) or sigma[0] * sigma[1] * sigma[2] != 1:
        raise ConfigError(f"sign pattern {sigma} must have entries +-1 with product +1")
    torus = model.system.torus
    if not torus.is_even and any(s == -1 for s in sigma):
        raise ConfigError("sublattice sign flips need an even side length")
    if model.field_axis != 3:
        raise ConfigError("the rotated model is defined for a field along axis 3")
    h = np.asarray(model.field, dtype=float)
    if h.ndim and np.ptp(h) != 0.0:
        raise ConfigError("the rotated model is defined for a uniform field")
    h0 = float(h.reshape(-1)[0]) if h.ndim else float(h)
    parity = (torus.sites.sum(axis=1) % 2).reshape(torus.shape)
    vals = np.stack([np.where(parity == 1, sigma[rho[i] - 1], 1) * model.table.axis(rho[i]) for i in range(3)])
    table = CouplingTable(torus, vals)
    new_axis = rho.index(3) + 1
    field = h0 * np.where(parity.reshape(-1) == 1, sigma[2], 1).astype(float)
    return SpinModel(model.system, table, field, new_axis, model.include_self)


def verify_trace_invariance(model: SpinModel, beta: float, rho, sigma, tol: float = DEFAULT_TOL) -> CheckResult:
    """``Tr exp(-beta H) = Tr exp(-beta H~)`` to relative accuracy ``tol``."""
    other = rotated_model(model, rho, sigma)

    def logz(H):
        E = linalg.eigvalsh(H)
        return float(-beta * E[0] + np.log(np.sum(np.exp(-beta * (E - E[0])))))

    a, b = logz(model.hamiltonian), logz(other.hamiltonian)
    rel = abs(math.expm1(b - a))
    return _result("trace_invariance", "trace invariance under axis permutations and sign flips", -rel, tol,
                   {"beta": beta, "rho": list(rho), "sigma": list(sigma)}, {"log_z": a, "log_z_rotated": b})


def magnetisation_check(state: GibbsState, tol: float = DEFAULT_TOL) -> CheckResult:
    """``<M^2>/|Lambda|^2 <= S <|M|>/|Lambda|`` with ``M`` the total third spin component."""
    system = state._need_model().system
    M = system.m_values.sum(axis=1)
    N = system.n_sites
    lhs = state.expect_diagonal(M**2) / N**2
    rhs = system.S * state.expect_diagonal(np.abs(M)) / N
    return _result("magnetisation", "magnetisation inequality", rhs - lhs, tol,
                   {"beta": state.beta}, {"lhs": lhs, "rhs": rhs})
