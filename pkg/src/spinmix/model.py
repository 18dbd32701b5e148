"""Hamiltonians of the two-species spin-1 mixture.

Full model: H = H_A + H_B + H_AB over six modes, built as operator
expressions. Reduced model: the four-mode pair-exchange ladder, built
directly as a tridiagonal matrix over k = n_A-1 = n_B+1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from .fock import (A_0, A_M1, A_P1, B_0, B_M1, B_P1, OperatorExpr, SectorBasis,
                   build_matrix, hop, number)

# ---------------------------------------------------------------------------
# couplings


class Couplings(NamedTuple):
    g0: float
    g1: float
    g2: float
    alpha: float
    beta: float
    gamma: float


def coupling_constants(a0: float, a1: float, a2: float, mu: float,
                       hbar: float = 1.0) -> Couplings:
    """Channel couplings g_F = 2 pi hbar^2 a_F / mu and their combinations.

    Units are whatever the caller's (a, mu, hbar) imply.
    """
    if mu <= 0:
        raise ValueError(f"reduced mass must be positive, got {mu}")
    g0, g1, g2 = (2 * math.pi * hbar ** 2 * a / mu for a in (a0, a1, a2))
    return Couplings(g0, g1, g2,
                     alpha=(g1 + g2) / 2,
                     beta=(g1 - g2) / 2,
                     gamma=(2 * g0 + g2 - 3 * g1) / 2)


def pair_exchange_rates(a0: float, a1: float, a2: float,
                        halve_gamma2: bool = True) -> tuple[float, float]:
    """(Gamma1, Gamma2) in units of 2 pi hbar^2 / mu (times c12).

    Gamma1 = a1 - a0; Gamma2 = (a2 - a1)/2, or a2 - a1 with
    ``halve_gamma2=False`` (the convention behind the quoted ratio 1.9).
    """
    gamma1 = a1 - a0
    gamma2 = a2 - a1
    return gamma1, gamma2 / 2 if halve_gamma2 else gamma2


NA_RB_SCATTERING_LENGTHS = (82.71, 81.4, 78.9)  # a0, a1, a2 in Bohr radii


# ---------------------------------------------------------------------------
# full model


@dataclass(frozen=True)
class FullModelParams:
    """Parameters of H_A + H_B + H_AB, energies in a common unit.

    ``N12`` defaults to sqrt(N1 * N2).
    """

    N1: int
    N2: int
    c1b1: float = 0.0
    c2b2: float = 0.0
    c12b: float = 0.0
    c12g: float = 0.0
    p1: float = 0.0
    q1: float = 0.0
    p2: float = 0.0
    q2: float = 0.0
    N12: Optional[float] = None

    def __post_init__(self):
        if self.N1 < 0 or self.N2 < 0:
            raise ValueError(f"particle numbers must be >= 0, got N1={self.N1}, N2={self.N2}")
        if self.N12 is not None and self.N12 <= 0:
            raise ValueError(f"N12 must be positive, got {self.N12}")

    @property
    def n12(self) -> float:
        if self.N12 is not None:
            return float(self.N12)
        n12 = math.sqrt(self.N1 * self.N2)
        return n12 if n12 > 0 else 1.0


def spin_z(species: str) -> OperatorExpr:
    p, _, m = _modes(species)
    return number(p) - number(m)


def spin_plus(species: str) -> OperatorExpr:
    """L+ = sqrt(2) (a1^+ a0 + a0^+ a-1)."""
    p, z, m = _modes(species)
    return hop(p, z, math.sqrt(2)) + hop(z, m, math.sqrt(2))


def spin_minus(species: str) -> OperatorExpr:
    return spin_plus(species).adjoint()


def spin_squared(species: str) -> OperatorExpr:
    lz, lp, lm = spin_z(species), spin_plus(species), spin_minus(species)
    return (lz * lz + (lp * lm + lm * lp) * 0.5).canonical(1e-15)


def spin_dot() -> OperatorExpr:
    """L_A . L_B = Lz_A Lz_B + (L+_A L-_B + L-_A L+_B) / 2."""
    return (spin_z("A") * spin_z("B")
            + (spin_plus("A") * spin_minus("B") + spin_minus("A") * spin_plus("B")) * 0.5
            ).canonical(1e-15)


def singlet_pair_creation() -> OperatorExpr:
    """(a1^+ b-1^+ - a0^+ b0^+ + a-1^+ b1^+) / sqrt(3)."""
    s = 1 / math.sqrt(3)
    return (OperatorExpr.monomial(s, (A_P1, B_M1))
            + OperatorExpr.monomial(-s, (A_0, B_0))
            + OperatorExpr.monomial(s, (A_M1, B_P1)))


def singlet_pair_number() -> OperatorExpr:
    theta_dag = singlet_pair_creation()
    return (theta_dag * theta_dag.adjoint()).canonical(1e-15)


def _modes(species: str):
    if species == "A":
        return A_P1, A_0, A_M1
    if species == "B":
        return B_P1, B_0, B_M1
    raise ValueError(f"species must be 'A' or 'B', got {species!r}")


def full_hamiltonian_parts(params: FullModelParams) -> list[tuple[float, str]]:
    """(coefficient, operator name) pairs whose weighted sum is H.

    Operator names index :data:`UNIT_OPERATORS`.
    """
    parts = []
    if params.N1 > 0:
        parts.append((params.c1b1 / params.N1, "L2_A"))
    if params.N2 > 0:
        parts.append((params.c2b2 / params.N2, "L2_B"))
    parts += [
        (params.p1 + params.q1, "n_A+1"), (params.q1 - params.p1, "n_A-1"),
        (params.p2 + params.q2, "n_B+1"), (params.q2 - params.p2, "n_B-1"),
        (params.c12b / params.n12, "LA.LB"),
        (params.c12g / params.n12, "Theta+Theta"),
    ]
    return parts


UNIT_OPERATORS = {
    "L2_A": lambda: spin_squared("A"),
    "L2_B": lambda: spin_squared("B"),
    "n_A+1": lambda: number(A_P1),
    "n_A-1": lambda: number(A_M1),
    "n_B+1": lambda: number(B_P1),
    "n_B-1": lambda: number(B_M1),
    "LA.LB": spin_dot,
    "Theta+Theta": singlet_pair_number,
}


def build_full_hamiltonian(params: FullModelParams) -> OperatorExpr:
    """H_A + H_B + H_AB with H_AB = c12b L_A.L_B/N12 + c12g Theta^+ Theta/N12."""
    expr = OperatorExpr.zero()
    for coeff, name in full_hamiltonian_parts(params):
        if coeff != 0.0:
            expr = expr + UNIT_OPERATORS[name]() * coeff
    return expr.canonical(1e-15)


class FullHamiltonianBuilder:
    """Caches unit-operator matrices on one basis so parameter sweeps only
    recombine them."""

    def __init__(self, basis: SectorBasis):
        self.basis = basis
        self._cache: dict[str, sp.csr_matrix] = {}

    def unit(self, name: str) -> sp.csr_matrix:
        if name not in self._cache:
            self._cache[name] = build_matrix(UNIT_OPERATORS[name](), self.basis)
        return self._cache[name]

    def matrix(self, params: FullModelParams) -> sp.csr_matrix:
        if (params.N1, params.N2) != (self.basis.n1, self.basis.n2):
            raise ValueError("params particle numbers do not match the basis")
        dim = len(self.basis)
        out = sp.csr_matrix((dim, dim))
        for coeff, name in full_hamiltonian_parts(params):
            if coeff != 0.0:
                out = out + self.unit(name) * coeff
        return out.tocsr()


def build_h12_expanded(params: FullModelParams) -> OperatorExpr:
    """Interspecies term written out density-by-density and process-by-process.

    Transcribed as printed, including the lone n_B+1 in the gamma line;
    ``beta`` and ``gamma`` enter as c12b/N12 and c12g/N12.
    """
    b = params.c12b / params.n12
    g = params.c12g / params.n12
    n = number
    expr = (n(A_P1) * n(B_P1) + n(A_M1) * n(B_M1) - n(A_P1) * n(B_M1) - n(A_M1) * n(B_P1)) * b
    expr = expr + (n(A_0) * n(B_0) + n(B_P1) + n(A_M1) * n(B_P1)) * g

    def exchange(a_to, a_from, b_to, b_from, c):
        fwd = hop(a_to, a_from) * hop(b_to, b_from)
        return (fwd + fwd.adjoint()) * c

    expr = expr + exchange(A_M1, A_0, B_0, B_M1, b)
    expr = expr + exchange(A_P1, A_0, B_0, B_P1, b)
    expr = expr + exchange(A_M1, A_0, B_P1, B_0, b - g)
    expr = expr + exchange(A_P1, A_0, B_M1, B_0, b - g)
    expr = expr + exchange(A_P1, A_M1, B_M1, B_P1, g)
    return expr.canonical(1e-15)


@dataclass
class H12Comparison:
    """Least-squares fit  expanded ~ x_beta*[L.L] + x_gamma*[Theta^+Theta] + x_const*1."""

    coefficients: dict
    residual: float
    relative_residual: float


def compare_h12(params: FullModelParams, basis: SectorBasis) -> H12Comparison:
    expanded = build_matrix(build_h12_expanded(params), basis, check_symmetric=False).toarray()
    cols = [build_matrix(spin_dot(), basis).toarray() / params.n12,
            build_matrix(singlet_pair_number(), basis).toarray() / params.n12,
            np.eye(len(basis))]
    design = np.stack([c.ravel() for c in cols], axis=1)
    target = expanded.ravel()
    x, *_ = np.linalg.lstsq(design, target, rcond=None)
    res = float(np.linalg.norm(design @ x - target))
    norm = float(np.linalg.norm(target))
    return H12Comparison(
        coefficients={"LA.LB": x[0], "Theta+Theta": x[1], "const": x[2]},
        residual=res, relative_residual=res / norm if norm else 0.0)


# ---------------------------------------------------------------------------
# reduced four-mode model

VARIANTS = ("eq10_symmetric", "eq7_literal")


@dataclass(frozen=True)
class ReducedModelParams:
    """Pair-exchange ladder: Gamma1 (A^+B + B^+A) - (Gamma1+Gamma2)(density).

    ``eq7_literal`` adds the extra -Gamma2 n_A-1 n_B+1 density term.
    """

    gamma1: float
    gamma2: float
    N: int
    variant: str = "eq10_symmetric"

    def __post_init__(self):
        if self.N < 0 or self.N % 2:
            raise ValueError(f"N must be a non-negative even integer, got {self.N}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")


def reduced_diagonals(params: ReducedModelParams) -> tuple[np.ndarray, np.ndarray]:
    N = params.N
    k = np.arange(N + 1, dtype=float)
    diag = -(params.gamma1 + params.gamma2) * (k ** 2 + (N - k) ** 2)
    if params.variant == "eq7_literal":
        diag = diag - params.gamma2 * k ** 2
    off = params.gamma1 * (k[:-1] + 1) * (N - k[:-1])
    return diag, off


def build_reduced(params: ReducedModelParams) -> sp.csr_matrix:
    diag, off = reduced_diagonals(params)
    return sp.diags([off, diag, off], [-1, 0, 1], format="csr")


def reduced_operator_expr(params: ReducedModelParams) -> OperatorExpr:
    """The same ladder Hamiltonian as an operator on the four live modes."""
    pair_a = OperatorExpr.monomial(1.0, (A_0, B_0), (A_M1, B_P1))  # A^+ B
    hopping = (pair_a + pair_a.adjoint()) * params.gamma1
    density = (number(A_M1) * number(B_P1) + number(A_0) * number(B_0)) \
        * -(params.gamma1 + params.gamma2)
    expr = hopping + density
    if params.variant == "eq7_literal":
        expr = expr + number(A_M1) * number(B_P1) * -params.gamma2
    return expr.canonical(1e-15)


def ladder_parity(N: int) -> np.ndarray:
    """Index involution k -> N - k."""
    return np.arange(N, -1, -1)


# ---------------------------------------------------------------------------
# two-site Bose-Hubbard reference


def build_hubbard2(t: float, U: float, N: int) -> sp.csr_matrix:
    """-t(a^+b + b^+a) + U[n_a(n_a-1) + n_b(n_b-1)] over |n_a, N-n_a>, n_a = 0..N."""
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    na = np.arange(N + 1, dtype=float)
    nb = N - na
    diag = U * (na * (na - 1) + nb * (nb - 1))
    off = -t * np.sqrt((na[:-1] + 1) * nb[:-1])
    return sp.diags([off, diag, off], [-1, 0, 1], format="csr")
