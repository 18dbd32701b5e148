"""Bosonic Fock sectors for two spin-1 species and operator matrix elements.

A basis state is a plain 6-tuple of occupations

    (n_A+1, n_A0, n_A-1, n_B+1, n_B0, n_B-1)

and operators are sums of normal-ordered monomials over the six mode ids
``A_P1 .. B_M1`` defined below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

A_P1, A_0, A_M1, B_P1, B_0, B_M1 = range(6)
MODE_NAMES = ("A+1", "A0", "A-1", "B+1", "B0", "B-1")
MODE_SPIN = (1, 0, -1, 1, 0, -1)
SPECIES_MODES = {"A": (A_P1, A_0, A_M1), "B": (B_P1, B_0, B_M1)}

FockState = tuple  # 6-tuple of non-negative ints


class EmptySectorError(ValueError):
    """Raised when a sector constraint admits no basis state."""


class SectorViolationError(ValueError):
    """Raised when an operator term maps a sector state out of the sector."""


def magnetization(state: Sequence[int]) -> tuple[int, int]:
    """Species magnetizations (m_A, m_B) of a six-tuple."""
    return state[0] - state[2], state[3] - state[5]


def _species_states(n: int) -> list[tuple[int, int, int]]:
    return [(n1, n - n1 - nm1, nm1)
            for n1 in range(n + 1) for nm1 in range(n - n1 + 1)]


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Ordered set of Fock states with fixed (N1, N2, m_tot).

    ``kind`` is ``"full"`` for a complete sector from :func:`enumerate_sector`
    and ``"reduced"`` for the four-mode ladder from :func:`reduced_basis`.
    """

    n1: int
    n2: int
    m_tot: int
    states: tuple
    kind: str = "full"
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        index = {s: i for i, s in enumerate(self.states)}
        if len(index) != len(self.states):
            raise ValueError("duplicate states in basis")
        object.__setattr__(self, "index", index)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]

    def __iter__(self):
        return iter(self.states)

    def lookup(self, state) -> Optional[int]:
        return self.index.get(tuple(state))

    @property
    def occupations(self) -> np.ndarray:
        """(dim, 6) integer array of occupations, cached."""
        occ = self.__dict__.get("_occ")
        if occ is None:
            occ = np.array(self.states, dtype=np.int64).reshape(len(self), 6)
            occ.setflags(write=False)
            object.__setattr__(self, "_occ", occ)
        return occ

    @property
    def key(self) -> tuple:
        return (self.kind, self.n1, self.n2, self.m_tot, len(self))


def enumerate_sector(N1: int, N2: int, m_tot: int) -> SectorBasis:
    """All six-tuples with species totals N1, N2 and total magnetization m_tot.

    States are sorted lexicographically on the six-tuple.

    >>> len(enumerate_sector(2, 2, 0))
    8
    """
    if N1 < 0 or N2 < 0:
        raise EmptySectorError(f"negative particle number: N1={N1}, N2={N2}")
    if abs(m_tot) > N1 + N2:
        raise EmptySectorError(
            f"|m_tot|={abs(m_tot)} exceeds N1+N2={N1 + N2}: sector is empty")
    by_mag: dict[int, list] = {}
    for s in _species_states(N2):
        by_mag.setdefault(s[0] - s[2], []).append(s)
    states = []
    for a in _species_states(N1):
        for b in by_mag.get(m_tot - (a[0] - a[2]), ()):
            states.append(a + b)
    if not states:
        raise EmptySectorError(f"no states for (N1={N1}, N2={N2}, m_tot={m_tot})")
    states.sort()
    return SectorBasis(N1, N2, m_tot, tuple(states))


def reduced_state(N: int, k: int) -> FockState:
    """Four-mode ladder state with n_A-1 = n_B+1 = k and n_A0 = n_B0 = N - k."""
    return (0, N - k, k, k, N - k, 0)


def reduced_basis(N: int) -> SectorBasis:
    """Ladder basis k = 0..N of the four live modes (A-1, A0, B0, B+1).

    Ordered by k ascending, so index == k.
    """
    if N < 0:
        raise EmptySectorError(f"negative particle number N={N}")
    return SectorBasis(N, N, 0, tuple(reduced_state(N, k) for k in range(N + 1)),
                       kind="reduced")


def reduced_index_to_pair_label(k: int, N: int) -> tuple[int, int]:
    """Both sign readings of the pair label m for ladder index k: (+2(2k-N), -2(2k-N))."""
    m = 2 * (2 * k - N)
    return m, -m


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class Term:
    coeff: float
    creations: tuple = ()
    annihilations: tuple = ()

    def label(self) -> str:
        cre = " ".join(f"{MODE_NAMES[m]}^+" for m in self.creations)
        ann = " ".join(MODE_NAMES[m] for m in self.annihilations)
        return f"{self.coeff:+.6g} [{(cre + ' ' + ann).strip() or '1'}]"

    def adjoint(self) -> "Term":
        return Term(self.coeff, tuple(reversed(self.annihilations)),
                    tuple(reversed(self.creations)))

    def sorted(self) -> "Term":
        return Term(self.coeff, tuple(sorted(self.creations)),
                    tuple(sorted(self.annihilations)))


@lru_cache(maxsize=4096)
def _normal_order(word: tuple) -> tuple:
    """Normal-order a word of (mode, is_creation) pairs.

    Returns a tuple of (multiplicity, creations, annihilations) using
    [a_i, a_j^+] = delta_ij.
    """
    for pos in range(len(word) - 1):
        (m1, c1), (m2, c2) = word[pos], word[pos + 1]
        if not c1 and c2:
            swapped = word[:pos] + (word[pos + 1], word[pos]) + word[pos + 2:]
            out = list(_normal_order(swapped))
            if m1 == m2:
                out.extend(_normal_order(word[:pos] + word[pos + 2:]))
            return tuple(out)
    cre = tuple(sorted(m for m, c in word if c))
    ann = tuple(sorted(m for m, c in word if not c))
    return ((1, cre, ann),)


@dataclass(frozen=True)
class OperatorExpr:
    """Sum of coefficient-weighted normal-ordered monomials."""

    terms: tuple = ()

    @classmethod
    def monomial(cls, coeff: float, creations: Iterable[int] = (),
                 annihilations: Iterable[int] = ()) -> "OperatorExpr":
        return cls((Term(float(coeff), tuple(creations), tuple(annihilations)),))

    @classmethod
    def zero(cls) -> "OperatorExpr":
        return cls(())

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = OperatorExpr.monomial(other)
        return OperatorExpr(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return OperatorExpr(tuple(Term(t.coeff * other, t.creations, t.annihilations)
                                      for t in self.terms))
        out = []
        for t1 in self.terms:
            for t2 in other.terms:
                word = tuple((m, True) for m in t1.creations) \
                    + tuple((m, False) for m in t1.annihilations) \
                    + tuple((m, True) for m in t2.creations) \
                    + tuple((m, False) for m in t2.annihilations)
                for mult, cre, ann in _normal_order(word):
                    out.append(Term(t1.coeff * t2.coeff * mult, cre, ann))
        return OperatorExpr(tuple(out))

    def __rmul__(self, other):
        return self * other

    def adjoint(self) -> "OperatorExpr":
        return OperatorExpr(tuple(t.adjoint() for t in self.terms))

    def canonical(self, atol: float = 0.0) -> "OperatorExpr":
        """Sort mode ids within each term, merge equal monomials, drop zeros."""
        acc: dict[tuple, float] = {}
        for t in self.terms:
            s = t.sorted()
            key = (s.creations, s.annihilations)
            acc[key] = acc.get(key, 0.0) + s.coeff
        return OperatorExpr(tuple(Term(c, k[0], k[1]) for k, c in sorted(acc.items())
                                  if abs(c) > atol))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        a = {(t.creations, t.annihilations): t.coeff for t in self.canonical(atol).terms}
        b = {(t.creations, t.annihilations): t.coeff
             for t in self.adjoint().canonical(atol).terms}
        if a.keys() != b.keys():
            return False
        return all(abs(a[k] - b[k]) <= atol for k in a)

    def __len__(self):
        return len(self.terms)


def number(mode: int) -> OperatorExpr:
    return OperatorExpr.monomial(1.0, (mode,), (mode,))


def hop(to_mode: int, from_mode: int, coeff: float = 1.0) -> OperatorExpr:
    """coeff * a_to^+ a_from."""
    return OperatorExpr.monomial(coeff, (to_mode,), (from_mode,))


def apply_monomial(creations: Sequence[int], annihilations: Sequence[int],
                   state: Sequence[int]) -> Optional[tuple[float, FockState]]:
    """Act with a normal-ordered monomial on a Fock state.

    Returns ``(amplitude, new_state)`` or ``None`` when an annihilator hits an
    empty mode.
    """
    occ = list(state)
    weight = 1  # exact integer product of occupation factors; one sqrt at the end
    for m in reversed(annihilations):
        n = occ[m]
        if n == 0:
            return None
        weight *= n
        occ[m] = n - 1
    for m in reversed(creations):
        occ[m] += 1
        weight *= occ[m]
    return math.sqrt(weight), tuple(occ)


def build_matrix(expr: OperatorExpr, basis: SectorBasis,
                 check_symmetric: bool = True) -> sp.csr_matrix:
    """Matrix of ``expr`` over ``basis``: element (i, j) = <i|expr|j>.

    Raises :class:`SectorViolationError` if any term maps a basis state to a
    state outside the basis. For Hermitian ``expr`` the result is made
    exactly symmetric after checking the asymmetry is below 1e-12.
    """
    expr = expr.canonical()
    rows, cols, vals = [], [], []
    lookup = basis.index
    for term in expr.terms:
        cre, ann, c = term.creations, term.annihilations, term.coeff
        for j, s in enumerate(basis.states):
            hit = apply_monomial(cre, ann, s)
            if hit is None:
                continue
            amp, s2 = hit
            i = lookup.get(s2)
            if i is None:
                raise SectorViolationError(
                    f"term {term.label()} maps {s} to {s2}, outside the "
                    f"(N1={basis.n1}, N2={basis.n2}, m_tot={basis.m_tot}) basis")
            rows.append(i)
            cols.append(j)
            vals.append(c * amp)
    dim = len(basis)
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    mat.sum_duplicates()
    if check_symmetric and expr.is_hermitian():
        diff = abs(mat - mat.T)
        scale = max(1.0, abs(mat).max() if mat.nnz else 0.0)
        if diff.nnz and diff.max() > 1e-12 * scale:
            raise ValueError(f"Hermitian expression produced asymmetric matrix "
                             f"(max deviation {diff.max():.3e})")
        mat = ((mat + mat.T) * 0.5).tocsr()
        mat.sum_duplicates()
    return mat


def schwinger_coeff(side: str, sign: str, m, N: int) -> float:
    """Two-mode ladder coefficient sqrt((N/2 +- m + 1)(N/2 -+ m)).

    ``m`` runs over -N/2..N/2 in unit steps (half-integers for odd N).
    ``side`` ('A' or 'B') only selects which species is meant; the formula is
    the same for both.
    """
    if side not in ("A", "B"):
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    m = Fraction(m).limit_denominator(2)
    half = Fraction(N, 2)
    if abs(m) > half or (half - m).denominator != 1:
        raise ValueError(f"m={m} is not on the ladder -N/2..N/2 for N={N}")
    s = 1 if sign == "+" else -1
    return math.sqrt(float((half + s * m + 1) * (half - s * m)))


def commutator_norm(a: sp.spmatrix, b: sp.spmatrix) -> float:
    c = a @ b - b @ a
    return float(abs(c).max()) if c.nnz else 0.0


def species_number_matrices(basis: SectorBasis) -> dict[str, sp.csr_matrix]:
    """Diagonal matrices of N_A, N_B and m_tot over ``basis``."""
    occ = basis.occupations
    return {
        "N_A": sp.diags(occ[:, :3].sum(axis=1).astype(float)).tocsr(),
        "N_B": sp.diags(occ[:, 3:].sum(axis=1).astype(float)).tocsr(),
        "m_tot": sp.diags((occ[:, 0] - occ[:, 2] + occ[:, 3] - occ[:, 5]).astype(float)).tocsr(),
    }


def number_sector(N1: int, N2: int) -> SectorBasis:
    """Every six-tuple with species totals N1, N2; magnetization left free."""
    if N1 < 0 or N2 < 0:
        raise EmptySectorError(f"negative particle number: N1={N1}, N2={N2}")
    states = sorted(a + b for a, b in product(_species_states(N1), _species_states(N2)))
    return SectorBasis(N1, N2, None, tuple(states), kind="number")
