"""Density matrices over an OAM mode set, Hermitian vectorization, and
state generation / error metrics.

The real parameterization uses the canonical Hermitian basis: the d
diagonal units first (ascending ell), then for each i < j the pair
(E_ij + E_ji)/sqrt(2) and i(E_ij - E_ji)/sqrt(2), row-major. The map is an
isometry between the Hilbert-Schmidt inner product and the Euclidean one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .optics import BeamGeometry

__all__ = [
    "ModeBasis",
    "DensityMatrix",
    "HermitianVector",
    "StateValidationError",
    "hermitian_to_coords",
    "coords_to_hermitian",
    "vectorize",
    "matricize",
    "random_state",
    "test_state",
    "hs_error",
    "project_psd",
    "simplex_projection",
    "write_state_json",
    "read_state_json",
]

HERMITICITY_TOL = 1e-8
PSD_EIG_TOL = 1e-10
TRACE_TOL = 1e-10

_SQRT2 = math.sqrt(2.0)


class StateValidationError(ValueError):
    """Raised when a matrix fails density-matrix invariants."""


@dataclass(frozen=True)
class ModeBasis:
    """Ordered set of distinct azimuthal indices (p = 0) with beam geometry."""

    ells: tuple[int, ...]
    geometry: BeamGeometry = field(default_factory=BeamGeometry)

    def __post_init__(self):
        ells = tuple(int(l) for l in self.ells)
        if len(ells) == 0:
            raise ValueError("mode basis must contain at least one index")
        if len(set(ells)) != len(ells):
            raise ValueError(f"duplicate azimuthal indices in {ells}")
        if list(ells) != sorted(ells):
            raise ValueError(f"azimuthal indices must be sorted ascending, got {ells}")
        object.__setattr__(self, "ells", ells)

    @classmethod
    def symmetric_span(cls, ell_max: int, geometry: BeamGeometry | None = None) -> "ModeBasis":
        """{-ell_max, ..., 0, ..., ell_max}; dimension 2*ell_max + 1."""
        if ell_max < 0:
            raise ValueError(f"ell_max must be nonnegative, got {ell_max}")
        return cls(tuple(range(-ell_max, ell_max + 1)), geometry or BeamGeometry())

    @classmethod
    def nonnegative_span(cls, d: int, geometry: BeamGeometry | None = None) -> "ModeBasis":
        """{0, ..., d-1}."""
        if d < 1:
            raise ValueError(f"dimension must be positive, got {d}")
        return cls(tuple(range(d)), geometry or BeamGeometry())

    @property
    def dim(self) -> int:
        return len(self.ells)

    def index_of(self, ell: int) -> int:
        try:
            return self.ells.index(ell)
        except ValueError:
            raise ValueError(f"azimuthal index {ell} not in basis {self.ells}") from None


def _check_density(entries: np.ndarray) -> list[str]:
    """Return the list of violated density-matrix invariants (empty if valid)."""
    problems = []
    if np.max(np.abs(entries - entries.conj().T)) > 1e-12:
        problems.append("hermiticity")
    else:
        eigs = np.linalg.eigvalsh(entries)
        if eigs[0] < -PSD_EIG_TOL:
            problems.append("positivity")
    if abs(np.trace(entries).real - 1.0) > TRACE_TOL or abs(np.trace(entries).imag) > TRACE_TOL:
        problems.append("unit trace")
    return problems


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, PSD, unit-trace matrix over a mode basis.

    ``validate=False`` skips the PSD/trace checks; used for estimates that
    are intentionally unconstrained (pseudoinverse reconstructions).
    """

    basis: ModeBasis
    entries: np.ndarray
    validate: bool = True

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        d = self.basis.dim
        if entries.shape != (d, d):
            raise StateValidationError(
                f"entries shape {entries.shape} does not match basis dimension {d}"
            )
        if self.validate:
            problems = _check_density(entries)
            if problems:
                raise StateValidationError(
                    "density-matrix invariants violated: " + ", ".join(problems)
                )
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)


@dataclass(frozen=True)
class HermitianVector:
    """Real coordinates of a Hermitian matrix in the canonical basis."""

    basis: ModeBasis
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.shape != (self.basis.dim**2,):
            raise ValueError(
                f"coords length {coords.shape} does not match d^2 = {self.basis.dim ** 2}"
            )
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)


def hermitian_to_coords(h: np.ndarray) -> np.ndarray:
    """Low-level isometric vectorization of a Hermitian d x d matrix."""
    h = np.asarray(h, dtype=complex)
    d = h.shape[0]
    if np.max(np.abs(h - h.conj().T)) > HERMITICITY_TOL:
        raise ValueError("input is not Hermitian within tolerance")
    iu, ju = np.triu_indices(d, 1)
    x = np.empty(d * d)
    x[:d] = np.diagonal(h).real
    off = h[iu, ju]
    x[d::2] = _SQRT2 * off.real
    x[d + 1 :: 2] = _SQRT2 * off.imag
    return x


def coords_to_hermitian(x: np.ndarray, d: int) -> np.ndarray:
    """Inverse of :func:`hermitian_to_coords`."""
    x = np.asarray(x, dtype=float)
    if x.shape != (d * d,):
        raise ValueError(f"coords length {x.shape} does not match d^2 = {d * d}")
    iu, ju = np.triu_indices(d, 1)
    h = np.zeros((d, d), dtype=complex)
    h[np.arange(d), np.arange(d)] = x[:d]
    off = (x[d::2] + 1j * x[d + 1 :: 2]) / _SQRT2
    h[iu, ju] = off
    h[ju, iu] = off.conjugate()
    return h


def vectorize(rho: DensityMatrix) -> HermitianVector:
    return HermitianVector(rho.basis, hermitian_to_coords(rho.entries))


def matricize(v: HermitianVector, validate: bool = True) -> DensityMatrix:
    return DensityMatrix(v.basis, coords_to_hermitian(v.coords, v.basis.dim), validate=validate)


def random_state(basis: ModeBasis, rank: int, seed: int) -> DensityMatrix:
    """Random rank-r density matrix from the Ginibre ensemble.

    rho = G G^dag / Tr(G G^dag) with G a d x r standard complex normal
    matrix; deterministic per seed.
    """
    d = basis.dim
    if not 1 <= rank <= d:
        raise ValueError(f"rank must be in [1, {d}], got {rank}")
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(basis, rho)


def test_state(p: float, theta: float, basis: ModeBasis) -> DensityMatrix:
    """Rank-<=2 family p |0><0| + (1-p) |Psi><Psi|,
    |Psi> = cos(theta)|-3> + sin(theta)|3>."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing weight must lie in [0, 1], got {p}")
    for ell in (-3, 0, 3):
        if ell not in basis.ells:
            raise ValueError(f"basis must contain modes -3, 0, 3; missing {ell}")
    d = basis.dim
    ket0 = np.zeros(d, dtype=complex)
    ket0[basis.index_of(0)] = 1.0
    psi = np.zeros(d, dtype=complex)
    psi[basis.index_of(-3)] = math.cos(theta)
    psi[basis.index_of(3)] = math.sin(theta)
    rho = p * np.outer(ket0, ket0.conj()) + (1.0 - p) * np.outer(psi, psi.conj())
    return DensityMatrix(basis, rho)


def hs_error(a: DensityMatrix, b: DensityMatrix) -> float:
    """Squared Hilbert-Schmidt distance Tr[(a - b)^2]."""
    if a.basis.ells != b.basis.ells:
        raise ValueError("states live in different mode bases")
    diff = a.entries - b.entries
    return float(np.trace(diff @ diff).real)


def simplex_projection(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    k = np.max(np.nonzero(u - css / idx > 0)[0]) + 1
    tau = css[k - 1] / k
    return np.maximum(v - tau, 0.0)


def project_psd(h: np.ndarray, trace_mode: str = "none") -> np.ndarray:
    """Nearest (Hilbert-Schmidt) PSD matrix; optionally with unit trace.

    ``trace_mode="unit"`` projects the eigenvalues onto the probability
    simplex instead of clipping, yielding the nearest density matrix.
    """
    h = np.asarray(h, dtype=complex)
    if np.max(np.abs(h - h.conj().T)) > HERMITICITY_TOL:
        raise ValueError("input is not Hermitian within tolerance")
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    if trace_mode == "none":
        w = np.clip(w, 0.0, None)
    elif trace_mode == "unit":
        w = simplex_projection(w)
    else:
        raise ValueError(f"unknown trace mode {trace_mode!r}")
    return (v * w) @ v.conj().T


def state_to_json_dict(rho: DensityMatrix) -> dict:
    return {
        "ells": list(rho.basis.ells),
        "re": rho.entries.real.tolist(),
        "im": rho.entries.imag.tolist(),
    }


def state_from_json_dict(obj: dict, geometry: BeamGeometry | None = None) -> DensityMatrix:
    try:
        ells = tuple(int(l) for l in obj["ells"])
        entries = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise StateValidationError(f"malformed density-matrix record: {exc}") from exc
    basis = ModeBasis(ells, geometry or BeamGeometry())
    return DensityMatrix(basis, entries)


def write_state_json(path, rho: DensityMatrix) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_json_dict(rho), fh)


def read_state_json(path, geometry: BeamGeometry | None = None) -> DensityMatrix:
    with open(path) as fh:
        obj = json.load(fh)
    return state_from_json_dict(obj, geometry)
