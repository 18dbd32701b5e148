"""Observables of a ground-state amplitude vector on a Fock sector."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .fock import MODE_NAMES, SectorBasis

CLASSES = ("gaussian", "uniform", "bimodal", "corner_fock", "other")
REFERENCES = ("coherent_product", "uniform", "cat", "spin1_css")

NORM_TOL = 1e-9
SCHMIDT_CLIP = 1e-14


class BasisMismatchError(ValueError):
    pass


def _check_state(state, basis: SectorBasis) -> np.ndarray:
    psi = np.asarray(state)
    if psi.ndim != 1 or len(psi) != len(basis):
        raise BasisMismatchError(
            f"state of shape {psi.shape} does not match basis of dimension {len(basis)}")
    nrm = float(np.linalg.norm(psi))
    if abs(nrm - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (norm - 1 = {nrm - 1:.3e})")
    return psi


def number_stats(state, basis: SectorBasis) -> tuple[np.ndarray, np.ndarray]:
    """Mean occupation and fluctuation sqrt(<n^2> - <n>^2) of each of the six modes."""
    psi = _check_state(state, basis)
    w = np.abs(psi) ** 2
    occ = basis.occupations.astype(float)
    mean = w @ occ
    var = w @ (occ - mean) ** 2
    return mean, np.sqrt(np.clip(var, 0.0, None))


@dataclass
class AmplitudeProfile:
    weights: np.ndarray
    labels: list
    kind: str

    def __len__(self):
        return len(self.weights)


def amplitude_profile(state, basis: SectorBasis) -> AmplitudeProfile:
    """|Psi|^2 per basis state.

    Reduced bases are labelled by the ladder index k; full sectors by
    (species-A magnetization, occupation six-tuple).
    """
    psi = _check_state(state, basis)
    w = np.abs(psi) ** 2
    w = w / w.sum()
    if basis.kind == "reduced":
        labels = [s[2] for s in basis.states]
    else:
        labels = [(s[0] - s[2], s) for s in basis.states]
    return AmplitudeProfile(w, labels, basis.kind)


# ---------------------------------------------------------------------------
# entanglement


def _schmidt_blocks(basis: SectorBasis):
    a_states = sorted({s[:3] for s in basis.states})
    b_states = sorted({s[3:] for s in basis.states})
    ia = {s: i for i, s in enumerate(a_states)}
    ib = {s: i for i, s in enumerate(b_states)}
    rows = np.array([ia[s[:3]] for s in basis.states], dtype=np.int64)
    cols = np.array([ib[s[3:]] for s in basis.states], dtype=np.int64)
    return a_states, b_states, rows, cols


def schmidt_rank_bound(basis: SectorBasis) -> int:
    """Largest Schmidt rank any state on this sector can have across the A|B cut."""
    a_states, b_states, _, _ = _schmidt_blocks(basis)
    if basis.m_tot is None:
        return min(len(a_states), len(b_states))
    count_a, count_b = defaultdict(int), defaultdict(int)
    for s in a_states:
        count_a[s[0] - s[2]] += 1
    for s in b_states:
        count_b[s[0] - s[2]] += 1
    return sum(min(c, count_b.get(basis.m_tot - m, 0)) for m, c in count_a.items())


@dataclass
class EntropyResult:
    raw: float
    normalized: float
    spectrum: np.ndarray
    rank_bound: int


def entropy(state, basis: SectorBasis, cut: str = "A") -> EntropyResult:
    """Von Neumann entropy (base 2) of one species after tracing out the other."""
    if cut not in ("A", "B"):
        raise ValueError(f"cut must be 'A' or 'B', got {cut!r}")
    psi = _check_state(state, basis)
    a_states, b_states, rows, cols = _schmidt_blocks(basis)
    M = np.zeros((len(a_states), len(b_states)), dtype=psi.dtype)
    M[rows, cols] = psi
    rho = M @ M.conj().T if cut == "A" else M.T @ M.conj()
    ev = np.linalg.eigvalsh(rho)
    if ev.min(initial=0.0) < -1e-12:
        raise ValueError(f"reduced density matrix has eigenvalue {ev.min():.3e} < 0")
    ev = np.where(ev < SCHMIDT_CLIP, 0.0, ev)
    ev = np.sort(ev / ev.sum())[::-1]
    nz = ev[ev > 0]
    raw = float(-(nz * np.log2(nz)).sum()) + 0.0
    bound = schmidt_rank_bound(basis)
    norm = raw / math.log2(bound) if bound > 1 else 0.0
    return EntropyResult(max(raw, 0.0), min(max(norm, 0.0), 1.0), ev, bound)


def ghz_score(state, basis: Optional[SectorBasis] = None,
              corners: Optional[tuple[int, int]] = None) -> float:
    """2 * min(rho_LL, rho_RR, |rho_LR|) for the pure state on two corner indices.

    Defaults to the first and last basis states, which are the two corner
    Fock states of a reduced ladder.
    """
    psi = np.asarray(state)
    if basis is not None and len(psi) != len(basis):
        raise BasisMismatchError("state does not match basis dimension")
    L, R = corners if corners is not None else (0, len(psi) - 1)
    if L == R:
        return 0.0
    rll, rrr = abs(psi[L]) ** 2, abs(psi[R]) ** 2
    return float(min(1.0, 2 * min(rll, rrr, abs(psi[L] * np.conj(psi[R])))))


# ---------------------------------------------------------------------------
# profile classification


@dataclass(frozen=True)
class ClassifierThresholds:
    corner_max: float = 0.9
    bimodal_half_mass: float = 0.35
    bimodal_center_mass: float = 0.1
    center_fraction: float = 0.2
    uniform_ratio: float = 1.5
    kurtosis_band: float = 0.5
    peak_rtol: float = 1e-9


def _single_peaked(w: np.ndarray, rtol: float) -> bool:
    tol = rtol * float(w.max())
    d = np.diff(w)
    rising = d > tol
    falling = d < -tol
    if not falling.any():
        return True
    first_fall = int(np.argmax(falling))
    return not rising[first_fall:].any()


def classify_profile(profile, thresholds: ClassifierThresholds = ClassifierThresholds()) -> str:
    """Label a probability vector over an ordered index as one of :data:`CLASSES`."""
    w = np.asarray(getattr(profile, "weights", profile), dtype=float)
    if w.ndim != 1 or len(w) == 0:
        raise ValueError("profile must be a non-empty 1-D probability vector")
    t = thresholds
    if w.max() > t.corner_max:
        return "corner_fock"
    n = len(w)
    x = np.arange(n) / (n - 1)
    lower, upper = w[x < 0.5].sum(), w[x > 0.5].sum()
    center = w[np.abs(x - 0.5) <= t.center_fraction / 2].sum()
    if min(lower, upper) >= t.bimodal_half_mass and center <= t.bimodal_center_mass:
        return "bimodal"
    if w.min() > 0 and w.max() / w.min() <= t.uniform_ratio:
        return "uniform"
    k = np.arange(n, dtype=float)
    mu = w @ k
    m2 = w @ (k - mu) ** 2
    if m2 > 0:
        excess = (w @ (k - mu) ** 4) / m2 ** 2 - 3.0
        if abs(excess) <= t.kurtosis_band and _single_peaked(w, t.peak_rtol):
            return "gaussian"
    return "other"


# ---------------------------------------------------------------------------
# analytic reference states


def spin1_css_spinor(theta: float, phi: float) -> np.ndarray:
    """Spin-1 coherent spinor (eps_+1, eps_0, eps_-1) pointing along (theta, phi)."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([np.exp(-1j * phi) * c * c, math.sqrt(2) * c * s, np.exp(1j * phi) * s * s])


def _species_coherent(spinor: np.ndarray, occ: np.ndarray) -> np.ndarray:
    """<n_+1, n_0, n_-1 | (sum_m eps_m a_m^+)^N / sqrt(N!) |0> for each row of occ."""
    occ = np.asarray(occ, dtype=np.int64)
    N = occ.sum(axis=1)
    log_multinom = 0.5 * (gammaln(N + 1) - gammaln(occ + 1).sum(axis=1))
    amp = np.exp(log_multinom).astype(complex)
    for m in range(3):
        e = spinor[m]
        if e == 0:
            amp = amp * (occ[:, m] == 0)
        else:
            amp = amp * e ** occ[:, m]
    return amp


def product_reference(basis: SectorBasis, spinor_a, spinor_b) -> np.ndarray:
    """Product of two single-species coherent states projected onto the sector and renormalized."""
    occ = basis.occupations
    amp = _species_coherent(np.asarray(spinor_a, complex), occ[:, :3]) \
        * _species_coherent(np.asarray(spinor_b, complex), occ[:, 3:])
    nrm = np.linalg.norm(amp)
    if nrm < 1e-300:
        raise BasisMismatchError("reference has no weight on this sector")
    amp = amp / nrm
    return amp.real if np.allclose(amp.imag, 0.0, atol=1e-15) else amp


def coherent_product(basis: SectorBasis, gamma1_sign: float = 1.0) -> np.ndarray:
    """Species A spread over (0, -1), species B over (0, +1), with the relative
    sign of species A alternating when the ladder hopping is positive."""
    s = -1.0 if gamma1_sign > 0 else 1.0
    r = 1 / math.sqrt(2)
    return product_reference(basis, [0.0, r, s * r], [r, r, 0.0])


def reference_state(name: str, basis: SectorBasis, **kw) -> np.ndarray:
    dim = len(basis)
    if name == "uniform":
        return np.full(dim, 1 / math.sqrt(dim))
    if name == "cat":
        if basis.kind != "reduced":
            raise BasisMismatchError("cat reference is defined on a reduced ladder basis")
        v = np.zeros(dim)
        v[0] = v[-1] = 1.0
        return v / np.linalg.norm(v)
    if name == "coherent_product":
        return coherent_product(basis, kw.get("gamma1_sign", 1.0))
    if name == "spin1_css":
        ta, pa = kw.get("theta", 0.0), kw.get("phi", 0.0)
        tb, pb = kw.get("theta_b", ta), kw.get("phi_b", pa)
        return product_reference(basis, spin1_css_spinor(ta, pa), spin1_css_spinor(tb, pb))
    raise ValueError(f"unknown reference {name!r}; expected one of {REFERENCES}")


def analytic_overlap(state, basis: SectorBasis, reference: str, **kw) -> float:
    """Fidelity |<ref|state>|^2 with a named analytic reference."""
    psi = _check_state(state, basis)
    ref = reference_state(reference, basis, **kw)
    return float(abs(np.vdot(ref, psi)) ** 2)


# ---------------------------------------------------------------------------


@dataclass
class ObservableReport:
    mean_occ: np.ndarray
    fluct_occ: np.ndarray
    profile: AmplitudeProfile
    entropy_raw: float
    entropy_normalized: float
    ghz_score: float
    classification: str
    schmidt_spectrum: np.ndarray = field(repr=False, default=None)

    def as_row(self) -> dict:
        row = {}
        for name, m, f in zip(MODE_NAMES, self.mean_occ, self.fluct_occ):
            row[f"n_mean_{name}"] = float(m)
            row[f"n_fluct_{name}"] = float(f)
        row.update(entropy_raw=self.entropy_raw, entropy_norm=self.entropy_normalized,
                   ghz_score=self.ghz_score, classification=self.classification)
        return row


def observe(state, basis: SectorBasis,
            thresholds: ClassifierThresholds = ClassifierThresholds(),
            corners: Optional[Sequence[int]] = None) -> ObservableReport:
    """Every observable for one state. Corner score and classification use the
    ladder index on reduced bases and basis order otherwise."""
    mean, fluct = number_stats(state, basis)
    prof = amplitude_profile(state, basis)
    ent = entropy(state, basis, "A")
    ghz = ghz_score(state, basis, tuple(corners) if corners is not None else None)
    return ObservableReport(mean, fluct, prof, ent.raw, ent.normalized, ghz,
                            classify_profile(prof, thresholds), ent.spectrum)
