"""Exact diagonalization of quantum spin systems on small tori.

Local states are ordered ``m = S, S-1, ..., -S`` so that ``S^(3)`` is diagonal
and ``S^(1)``, ``i S^(2)`` have real entries. Site ``x`` of the torus is the
``x``-th tensor factor, most significant first, matching the lexicographic
order of :attr:`Torus.sites`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy import linalg

from .exceptions import DomainError, ParameterError, ResourceError
from .lattice import CouplingTable, Torus

__all__ = [
    "DEFAULT_DIM_CAP",
    "SpinMatrices",
    "spin_matrices",
    "SpinSystem",
    "SpinModel",
    "laplacian",
    "build_hamiltonian",
    "GibbsState",
    "gibbs",
    "duhamel_phi",
]

DEFAULT_DIM_CAP = 4096


class SpinMatrices(NamedTuple):
    S1: np.ndarray
    S2: np.ndarray
    S3: np.ndarray
    Sp: np.ndarray
    Sm: np.ndarray


def spin_matrices(two_S: int) -> SpinMatrices:
    """Spin operators of spin ``two_S / 2`` in the ``S^(3)``-diagonal basis."""
    if int(two_S) != two_S or two_S < 1:
        raise ParameterError(f"two_S must be a positive integer, got {two_S!r}")
    S = two_S / 2.0
    m = S - np.arange(two_S + 1)
    Sp = np.zeros((two_S + 1, two_S + 1))
    # S+ |m> = sqrt(S(S+1) - m(m+1)) |m+1>, and |m+1> sits one slot earlier
    for a in range(1, two_S + 1):
        Sp[a - 1, a] = math.sqrt(S * (S + 1) - m[a] * (m[a] + 1))
    Sm = Sp.T.copy()
    S1 = 0.5 * (Sp + Sm)
    S2 = -0.5j * (Sp - Sm)
    S3 = np.diag(m)
    return SpinMatrices(S1, S2, S3.astype(float), Sp, Sm)


@dataclass(frozen=True)
class SpinSystem:
    """Spins ``two_S / 2`` on every site of a torus."""

    torus: Torus
    two_S: int
    dim_cap: int = DEFAULT_DIM_CAP

    def __post_init__(self):
        if int(self.two_S) != self.two_S or self.two_S < 1:
            raise ParameterError(f"two_S must be a positive integer, got {self.two_S!r}")
        if self.hilbert_dim > self.dim_cap:
            raise ResourceError(
                f"Hilbert dimension {self.n}^{self.torus.n_sites} = {self.hilbert_dim} exceeds cap {self.dim_cap}"
            )

    @property
    def n(self) -> int:
        return self.two_S + 1

    @property
    def S(self) -> float:
        return self.two_S / 2.0

    @property
    def n_sites(self) -> int:
        return self.torus.n_sites

    @property
    def hilbert_dim(self) -> int:
        return self.n**self.torus.n_sites

    @cached_property
    def local(self) -> SpinMatrices:
        return spin_matrices(self.two_S)

    @cached_property
    def m_values(self) -> np.ndarray:
        """``m[s, x]``: eigenvalue of ``S_x^(3)`` on basis state ``s``."""
        digits = np.indices((self.n,) * self.n_sites).reshape(self.n_sites, -1).T
        return self.S - digits.astype(float)

    def site_operator(self, op: np.ndarray, x: int) -> sp.csr_matrix:
        """Embed a single-site matrix at site ``x``."""
        left = sp.identity(self.n**x, format="csr")
        right = sp.identity(self.n ** (self.n_sites - 1 - x), format="csr")
        return sp.kron(sp.kron(left, sp.csr_matrix(op)), right, format="csr")

    def spin(self, axis: int, x: int) -> sp.csr_matrix:
        return self.site_operator(self.local[axis - 1], x)

    def total_spin(self, axis: int = 3) -> sp.csr_matrix:
        if axis == 3:
            return sp.diags(self.m_values.sum(axis=1), format="csr")
        out = self.spin(axis, 0)
        for x in range(1, self.n_sites):
            out = out + self.spin(axis, x)
        return out

    def fourier_s3(self, k) -> np.ndarray:
        """Diagonal of ``sum_x exp(-i k.x) S_x^(3)``."""
        phase = np.exp(-1j * (self.torus.sites @ np.asarray(k, dtype=float)))
        return self.m_values @ phase

    def apply_site(self, op: np.ndarray, x: int, psi: np.ndarray) -> np.ndarray:
        """Apply a single-site matrix at ``x`` to the columns of ``psi``."""
        N = self.n_sites
        cols = psi.shape[1]
        t = psi.reshape((self.n**x, self.n, self.n ** (N - 1 - x), cols))
        out = np.einsum("ab,ibjc->iajc", op, t)
        return out.reshape(psi.shape)


def laplacian(table: CouplingTable, v) -> np.ndarray:
    """``(Delta v)_x = sum_y J3_per(x - y) (v_y - v_x)``."""
    v = np.asarray(v, dtype=float).reshape(-1)
    M = table.pair_matrix(3)
    return M @ v - M.sum(axis=1) * v


def _field_vector(system: SpinSystem, h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.ndim == 0:
        return np.full(system.n_sites, float(h))
    h = h.reshape(-1)
    if h.size != system.n_sites:
        raise ParameterError(f"field has {h.size} entries for {system.n_sites} sites")
    return h


def build_hamiltonian(
    system: SpinSystem,
    table: CouplingTable,
    field=0.0,
    field_axis: int = 3,
    include_self: bool = True,
) -> np.ndarray:
    """Dense ``-sum_i sum_{x,y} J_per^(i)(x-y) S_x^(i) S_y^(i) - sum_x h_x S_x^(field_axis)``.

    The double sum runs over ordered pairs including ``x = y``, where the
    self-image coupling ``J_per(0)`` multiplies ``(S_x^(i))^2``. Set
    ``include_self=False`` to drop those on-site terms.

    The matrix is real unless the field points along axis 2.
    """
    if table.torus != system.torus:
        raise ParameterError("coupling table and spin system live on different tori")
    if field_axis not in (1, 2, 3):
        raise ParameterError(f"field axis must be 1, 2 or 3, got {field_axis!r}")
    h = _field_vector(system, field)
    N, dim = system.n_sites, system.hilbert_dim
    loc = system.local
    # S2 S2 = -T T with T = (S+ - S-)/2 real, which keeps the pair terms real
    T = 0.5 * (loc.Sp - loc.Sm)
    diag = np.zeros(dim)
    m = system.m_values
    M3 = table.pair_matrix(3)
    if not include_self:
        M3 = M3 - np.diag(np.diag(M3))
    diag -= np.einsum("sx,xy,sy->s", m, M3, m)
    H = sp.csr_matrix((dim, dim))
    for axis, op, sign in ((1, loc.S1, -1.0), (2, T, +1.0)):
        M = table.pair_matrix(axis)
        if not include_self:
            M = M - np.diag(np.diag(M))
        if not np.any(M):
            continue
        ops = [system.site_operator(op, x) for x in range(N)]
        for x in range(N):
            row = M[x]
            if not np.any(row):
                continue
            acc = sp.csr_matrix((dim, dim))
            for y in np.flatnonzero(row):
                acc = acc + row[y] * ops[y]
            H = H + sign * (ops[x] @ acc)
    Hd = H.toarray()
    Hd[np.diag_indices(dim)] += diag
    if np.any(h):
        if field_axis == 3:
            Hd[np.diag_indices(dim)] -= m @ h
        else:
            op = loc[field_axis - 1]
            F = sum(h[x] * system.site_operator(op, x) for x in range(N) if h[x] != 0.0)
            Hd = Hd - F.toarray()
    return Hd


@dataclass(frozen=True)
class SpinModel:
    """Spin system with periodized couplings and an optional site field."""

    system: SpinSystem
    table: CouplingTable
    field: np.ndarray | float = 0.0
    field_axis: int = 3
    include_self: bool = True

    @cached_property
    def hamiltonian(self) -> np.ndarray:
        return build_hamiltonian(self.system, self.table, self.field, self.field_axis, self.include_self)

    def gibbs(self, beta: float) -> "GibbsState":
        return gibbs(self.hamiltonian, beta, model=self)

    @property
    def has_field(self) -> bool:
        return bool(np.any(np.asarray(self.field) != 0.0))


def duhamel_phi(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``(exp(-a) - exp(-b)) / (b - a)`` with its diagonal limit ``exp(-a)``."""
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    lo = np.minimum(a, b)
    delta = np.abs(b - a)
    small = delta < 1e-8
    safe = np.where(small, 1.0, delta)
    out = np.where(
        small,
        np.exp(-lo) * (1.0 - delta / 2.0 + delta**2 / 6.0),
        np.exp(-lo) * (-np.expm1(-safe)) / safe,
    )
    return out


@dataclass(frozen=True, eq=False)
class GibbsState:
    """Spectral decomposition of a Hamiltonian at inverse temperature ``beta``.

    ``beta = inf`` selects the normalized projector on the lowest eigenspace,
    resolved with tolerance ``deg_rel_tol * (spectral width)``.
    """

    beta: float
    energies: np.ndarray
    vectors: np.ndarray
    model: SpinModel | None = None
    deg_rel_tol: float = 1e-10
    weights: np.ndarray = field(init=False, repr=False)
    _log_z_shift: float = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.beta >= 0):
            raise ParameterError(f"beta must be nonnegative, got {self.beta}")
        E = self.energies
        if math.isinf(self.beta):
            width = float(E[-1] - E[0])
            ground = E <= E[0] + self.deg_rel_tol * width
            w = ground.astype(float)
            s = float(w.sum())
            object.__setattr__(self, "_log_z_shift", math.log(s))
        else:
            w = np.exp(-self.beta * (E - E[0]))
            s = float(w.sum())
            object.__setattr__(self, "_log_z_shift", math.log(s))
        object.__setattr__(self, "weights", w / s)

    @property
    def dim(self) -> int:
        return self.energies.size

    @property
    def ground_flag(self) -> bool:
        return math.isinf(self.beta)

    @property
    def ground_degeneracy(self) -> int:
        return int(np.count_nonzero(self.weights)) if self.ground_flag else 0

    @property
    def log_Z(self) -> float:
        if self.ground_flag:
            raise DomainError("log Z diverges at beta = inf")
        return self._log_z_shift - self.beta * float(self.energies[0])

    def free_energy(self, n_sites: int | None = None) -> float:
        """``-log Z / (beta |Lambda|)``; the ground energy density at ``beta = inf``."""
        if n_sites is None:
            n_sites = self.model.system.n_sites if self.model is not None else 1
        if self.ground_flag:
            return float(self.energies[0]) / n_sites
        if self.beta == 0.0:
            return -math.inf
        return -self.log_Z / (self.beta * n_sites)

    @cached_property
    def purification(self) -> np.ndarray:
        """Columns ``sqrt(w_j) v_j`` for the states that carry weight."""
        keep = self.weights > 1e-17 * self.weights.max()
        return self.vectors[:, keep] * np.sqrt(self.weights[keep])

    @cached_property
    def diagonal_probabilities(self) -> np.ndarray:
        """Diagonal of the density matrix in the product basis."""
        return np.sum(np.abs(self.purification) ** 2, axis=1)

    def density_matrix(self) -> np.ndarray:
        P = self.purification
        return P @ P.conj().T

    def expect(self, A) -> complex | float:
        """``Tr[A rho]``."""
        P = self.purification
        val = np.vdot(P, A @ P)
        return float(val.real) if abs(val.imag) <= 1e-13 * max(1.0, abs(val)) else complex(val)

    def expect_diagonal(self, diag: np.ndarray) -> float:
        return float(np.real(np.dot(self.diagonal_probabilities, diag)))

    def to_eigenbasis(self, A) -> np.ndarray:
        V = self.vectors
        AV = A @ V
        return V.conj().T @ np.asarray(AV)

    def duhamel(self, A, B) -> complex:
        """``(A, B) = int_0^1 Tr[A^* e^{-s beta H} B e^{-(1-s) beta H}] ds / Z``."""
        if self.ground_flag:
            raise DomainError("the Duhamel inner product is defined for finite beta")
        a = self.to_eigenbasis(A)
        b = a if B is A else self.to_eigenbasis(B)
        x = self.beta * (self.energies - self.energies[0])
        phi = duhamel_phi(x[:, None], x[None, :])
        z = math.exp(self._log_z_shift)
        return complex(np.sum(a.conj() * b * phi) / z)

    def double_commutator(self, A, scale: float = 1.0) -> float:
        """``<[A^*, [scale*H, A]]>`` from the spectral decomposition."""
        a = self.to_eigenbasis(A)
        dE = self.energies[None, :] - self.energies[:, None]  # E_j - E_i
        w = self.weights[:, None]
        val = np.sum(w * dE * (np.abs(a.T) ** 2 + np.abs(a) ** 2))
        return float(scale * val)

    # ---- observables needing the lattice -------------------------------------------

    def _need_model(self) -> SpinModel:
        if self.model is None:
            raise ParameterError("this observable needs a GibbsState built from a SpinModel")
        return self.model

    def fourier_s3_operator(self, k) -> sp.dia_matrix:
        return sp.diags(self._need_model().system.fourier_s3(k))

    def corr_hat(self, k) -> float:
        """``<S_-k S_k> / |Lambda|`` for the third spin component."""
        system = self._need_model().system
        amp = np.abs(system.fourier_s3(k)) ** 2
        return self.expect_diagonal(amp) / system.n_sites

    def eta_hat(self, k) -> float:
        """Duhamel two-point function ``(S_k, S_k) / |Lambda|`` for the third component."""
        system = self._need_model().system
        A = self.fourier_s3_operator(k)
        return float(self.duhamel(A, A).real) / system.n_sites

    def two_point(self, axis: int) -> np.ndarray:
        """``<S_0^(i) S_x^(i)>`` for every site ``x`` in lexicographic order."""
        system = self._need_model().system
        if axis == 3:
            m = system.m_values
            return (self.diagonal_probabilities @ (m[:, :1] * m)).real
        op = system.local[axis - 1]
        P = self.purification
        a0 = system.apply_site(op, 0, P)
        out = np.empty(system.n_sites)
        for x in range(system.n_sites):
            out[x] = float(np.vdot(a0, system.apply_site(op, x, P)).real)
        return out

    def e_of_k(self, k, table: CouplingTable | None = None) -> float:
        """Axis-1/2 exchange weight appearing in the infrared bound for ``corr_hat``."""
        model = self._need_model()
        table = model.table if table is None else table
        c1, c2 = self.two_point(1), self.two_point(2)
        j1, j2 = table.flat(1), table.flat(2)
        cos = np.cos(table.torus.sites @ np.asarray(k, dtype=float))
        return 0.5 * float(np.sum((j1 - j2 * cos) * c1 + (j2 - j1 * cos) * c2))

    def lro_parameter(self) -> float:
        """``|Lambda|^-1 sum_x <S_0^(3) S_x^(3)>``."""
        return float(self.two_point(3).sum()) / self._need_model().system.n_sites


def gibbs(H: np.ndarray, beta: float, model: SpinModel | None = None, deg_rel_tol: float = 1e-10) -> GibbsState:
    """Diagonalize ``H`` and attach the Gibbs weights at inverse temperature ``beta``."""
    H = np.asarray(H)
    scale = max(1.0, float(np.abs(H).max()))
    if np.abs(H - H.conj().T).max() > 1e-12 * scale:
        raise ParameterError("Hamiltonian is not Hermitian")
    try:
        E, V = linalg.eigh(H)
    except linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ArithmeticError(f"eigensolver failed: {exc}") from exc
    return GibbsState(float(beta), E, V, model, deg_rel_tol)
