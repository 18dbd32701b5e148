"""Breit-Rabi Zeeman shifts of the F=1 manifold and heteronuclear exchange detunings.

Fields are in gauss, energies in Hz. Shifts are measured from the
zero-field F=1 level, so every sublevel starts at 0 at B = 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np
from scipy.constants import physical_constants
from scipy.optimize import brentq

MU_B_HZ_PER_GAUSS = physical_constants["Bohr magneton in Hz/T"][0] * 1e-4

ATOM_KEYS = {"name", "nuclear_spin", "ahf_hz", "gJ", "gI", "citation"}


class NoCrossingError(ValueError):
    pass


@dataclass(frozen=True)
class AtomSpec:
    name: str
    nuclear_spin: float
    ahf_hz: float
    gJ: float
    gI: float
    citation: str = ""

    def __post_init__(self):
        if self.ahf_hz <= 0:
            raise ValueError(f"{self.name}: hyperfine constant must be positive")
        if self.nuclear_spin < 1:
            raise ValueError(f"{self.name}: need I >= 1 for an F = I - 1/2 >= 1/2 manifold")

    @property
    def hyperfine_splitting(self) -> float:
        """Zero-field splitting between F = I + 1/2 and F = I - 1/2, in Hz."""
        return self.ahf_hz * (self.nuclear_spin + 0.5)

    @property
    def electron_g(self) -> float:
        return self.gJ

    @property
    def nuclear_g(self) -> float:
        return self.gI

    @classmethod
    def from_dict(cls, d: dict) -> "AtomSpec":
        missing, extra = ATOM_KEYS - d.keys(), d.keys() - ATOM_KEYS
        if missing or extra:
            raise ValueError(f"atom record keys: missing {sorted(missing)}, unknown {sorted(extra)}")
        return cls(str(d["name"]), float(d["nuclear_spin"]), float(d["ahf_hz"]),
                   float(d["gJ"]), float(d["gI"]), str(d["citation"]))

    def to_dict(self) -> dict:
        return {"name": self.name, "nuclear_spin": self.nuclear_spin, "ahf_hz": self.ahf_hz,
                "gJ": self.gJ, "gI": self.gI, "citation": self.citation}


def load_constants(path: Union[str, Path, None] = None) -> dict:
    """Raw constants document (header + atoms). Defaults to the shipped file."""
    if path is None:
        text = resources.files("spinmix").joinpath("data/atoms.json").read_text()
    else:
        text = Path(path).read_text()
    return json.loads(text)


def load_atoms(path: Union[str, Path, None] = None) -> dict[str, AtomSpec]:
    doc = load_constants(path)
    return {a.name: a for a in (AtomSpec.from_dict(d) for d in doc["atoms"])}


def breit_rabi_energy(atom: AtomSpec, mF: int, B):
    """Zeeman shift of |F = I - 1/2, mF> in Hz relative to its zero-field energy.

    E = gI muB mF B - (dE/2) [sqrt(1 + 4 mF x/(2I+1) + x^2) - 1],
    x = (gJ - gI) muB B / dE.
    """
    F = atom.nuclear_spin - 0.5
    if abs(mF) > F or mF != int(mF):
        raise ValueError(f"mF={mF} outside the F={F:g} manifold")
    B = np.asarray(B, dtype=float)
    if np.any(B < 0):
        raise ValueError("magnetic field must be >= 0")
    dE = atom.hyperfine_splitting
    x = (atom.gJ - atom.gI) * MU_B_HZ_PER_GAUSS * B / dE
    u = 4 * mF * x / (2 * atom.nuclear_spin + 1) + x ** 2
    sqrt_minus_one = u / (np.sqrt(1 + u) + 1)
    E = atom.gI * MU_B_HZ_PER_GAUSS * mF * B - 0.5 * dE * sqrt_minus_one
    return float(E) if E.ndim == 0 else E


def pq_coefficients(atom: AtomSpec, B, q_offset_hz: float = 0.0):
    """Linear and quadratic Zeeman coefficients (p, q) in Hz.

    p = (E+1 - E-1)/2, q = (E+1 + E-1 - 2 E0)/2 + q_offset_hz.
    """
    ep, e0, em = (breit_rabi_energy(atom, m, B) for m in (1, 0, -1))
    return (ep - em) / 2, (ep + em - 2 * e0) / 2 + q_offset_hz


# (mF_A, mF_B) before -> after, per process; dE = E(before) - E(after)
PROCESSES = {
    1: ((0, -1), (-1, 0)),
    2: ((0, 1), (1, 0)),
    3: ((0, 0), (-1, 1)),
    4: ((0, 0), (1, -1)),
    5: ((-1, 1), (1, -1)),
}


def detuning(process: int, atom_a: AtomSpec, atom_b: AtomSpec, B):
    """Zeeman energy difference dE_i(B) in Hz, species A = superscript (1)."""
    try:
        (a0, b0), (a1, b1) = PROCESSES[process]
    except KeyError:
        raise ValueError(f"process must be 1..5, got {process}") from None
    return (breit_rabi_energy(atom_a, a0, B) + breit_rabi_energy(atom_b, b0, B)
            - breit_rabi_energy(atom_a, a1, B) - breit_rabi_energy(atom_b, b1, B))


@dataclass
class ProcessDetuning:
    process: int
    atom_a: AtomSpec
    atom_b: AtomSpec
    fields: np.ndarray
    values: np.ndarray
    crossings: list = field(default_factory=list)

    def __call__(self, B):
        return detuning(self.process, self.atom_a, self.atom_b, B)


def find_resonance(detuning_fn: Callable[[float], float], bracket: Sequence[float],
                   rtol: float = 1e-6) -> float:
    """Field in ``bracket`` where the detuning changes sign.

    Converges until |dE| < rtol * max(|dE(lo)|, |dE(hi)|). The trivial zero at
    B = 0 does not count as a sign change.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise ValueError(f"bracket must satisfy lo < hi, got {bracket}")
    flo, fhi = float(detuning_fn(lo)), float(detuning_fn(hi))
    if not flo * fhi < 0:
        raise NoCrossingError(
            f"no sign change on [{lo:g}, {hi:g}] G (dE = {flo:.6g}, {fhi:.6g} Hz)")
    scale = max(abs(flo), abs(fhi))
    root = brentq(detuning_fn, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(detuning_fn(root)) > rtol * scale:
        raise NoCrossingError(f"root refinement failed near {root:g} G")
    return float(root)


def _grid_crossings(fn, fields, values) -> list[float]:
    out = []
    for i in range(len(fields) - 1):
        v0, v1 = values[i], values[i + 1]
        if v0 == 0.0 and fields[i] > 0:
            out.append(float(fields[i]))
        elif v0 * v1 < 0:
            out.append(find_resonance(fn, (fields[i], fields[i + 1])))
    if len(fields) and values[-1] == 0.0 and fields[-1] > 0:
        out.append(float(fields[-1]))
    return out


def process_detunings(atom_a: AtomSpec, atom_b: AtomSpec,
                      B_grid: Sequence[float]) -> list[ProcessDetuning]:
    """All five detuning curves on a sorted field grid, with refined zero crossings."""
    B = np.asarray(B_grid, dtype=float)
    if B.ndim != 1 or len(B) == 0:
        raise ValueError("field grid must be a non-empty 1-D sequence")
    if np.any(np.diff(B) <= 0):
        raise ValueError("field grid must be strictly ascending")
    curves = []
    for i in sorted(PROCESSES):
        c = ProcessDetuning(i, atom_a, atom_b, B, detuning(i, atom_a, atom_b, B))
        c.crossings = _grid_crossings(c, B, c.values)
        curves.append(c)
    return curves


def default_pair(path=None) -> tuple[AtomSpec, AtomSpec]:
    atoms = load_atoms(path)
    return atoms["Na23"], atoms["Rb87"]


def zeeman_terms(atom_a: AtomSpec, atom_b: AtomSpec, B: float, energy_unit_hz: float,
                 q_offset_a_hz: float = 0.0, q_offset_b_hz: float = 0.0) -> dict[str, float]:
    """(p1, q1, p2, q2) in Hamiltonian energy units for the two-species model.

    The mean linear coefficient (p1 + p2)/2 multiplies the conserved total
    magnetization, so it is dropped; only the relative part enters.
    """
    if energy_unit_hz <= 0:
        raise ValueError("energy unit must be positive")
    p1, q1 = pq_coefficients(atom_a, B, q_offset_a_hz)
    p2, q2 = pq_coefficients(atom_b, B, q_offset_b_hz)
    pm = 0.5 * (p1 + p2)
    return {"p1": (p1 - pm) / energy_unit_hz, "q1": q1 / energy_unit_hz,
            "p2": (p2 - pm) / energy_unit_hz, "q2": q2 / energy_unit_hz}
