"""Density-matrix recovery from intensity scans.

Two estimators share the least-squares objective || A x - p ||:

* ``reconstruct_positive`` minimizes over the PSD cone by (optionally
  accelerated) projected gradient with eigenvalue clipping each step.
* ``reconstruct_pseudoinverse`` takes the minimum-norm least-squares
  solution A^+ p with no positivity constraint.

Both report trace-normalized estimates so errors compare shape, not scale.
``uniqueness_entropy`` probes solution uniqueness: run the estimator many
times (random restarts, or random null-space shifts for the baseline),
stack the vectorized estimates as columns, and take the Shannon entropy of
the normalized singular values. Zero entropy means every run agreed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .qstate import (
    DensityMatrix,
    coords_to_hermitian,
    hermitian_to_coords,
    project_psd,
    simplex_projection,
)
from .sensor import IntensityScan, MeasurementMap

__all__ = [
    "SolverConfig",
    "ReconstructionReport",
    "reconstruct_positive",
    "reconstruct_pseudoinverse",
    "uniqueness_entropy",
    "singular_value_entropy",
    "report_to_json_dict",
]

STALL_WINDOW = 10  # consecutive stagnant iterations before declaring convergence
DEGENERATE_TRACE = 1e-14


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 20000
    rel_tolerance: float = 1e-12
    step_rule: str = "fixed"  # "fixed" (1/L) or "backtracking"
    acceleration: bool = True
    trace_mode: str = "none"  # "none" or "unit"
    multistart: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.rel_tolerance <= 0:
            raise ValueError("rel_tolerance must be positive")
        if self.step_rule not in ("fixed", "backtracking"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if self.trace_mode not in ("none", "unit"):
            raise ValueError(f"unknown trace mode {self.trace_mode!r}")
        if self.multistart < 1:
            raise ValueError("multistart must be at least 1")


@dataclass(frozen=True)
class ReconstructionReport:
    estimate: DensityMatrix
    objective_history: list[float]
    iterations_used: int
    converged: bool
    uniqueness_entropy: float | None = None
    metadata: dict = field(default_factory=dict)


def _check_compatible(mmap: MeasurementMap, scan: IntensityScan) -> None:
    if scan.values.shape[0] != mmap.matrix.shape[0]:
        raise ValueError(
            f"scan length {scan.values.shape[0]} does not match "
            f"measurement map rows {mmap.matrix.shape[0]}"
        )


def _finalize(mmap: MeasurementMap, raw: np.ndarray) -> tuple[DensityMatrix, dict]:
    """Trace-normalize a Hermitian estimate for reporting."""
    tr = np.trace(raw).real
    meta: dict = {"raw_trace": float(tr)}
    if abs(tr) < DEGENERATE_TRACE:
        meta["degenerate_normalization"] = True
        d = mmap.basis.dim
        return DensityMatrix(mmap.basis, np.eye(d) / d), meta
    est = raw / tr
    est = 0.5 * (est + est.conj().T)
    # re-clip tiny negative eigenvalues introduced by normalization rounding
    est = project_psd(est)
    est /= np.trace(est).real
    return DensityMatrix(mmap.basis, est), meta


def reconstruct_positive(
    mmap: MeasurementMap,
    scan: IntensityScan,
    cfg: SolverConfig = SolverConfig(),
    initial: DensityMatrix | None = None,
) -> ReconstructionReport:
    """Projected-gradient minimizer of ||A x - p|| over the PSD cone.

    Convergence is declared when the per-iteration objective decrease stays
    below rel_tolerance * f0 for STALL_WINDOW consecutive iterations, or
    when the projected-gradient fixed-point residual drops below
    rel_tolerance relative to the iterate scale.
    """
    _check_compatible(mmap, scan)
    A = mmap.matrix
    p = scan.values
    d = mmap.basis.dim
    ata = A.T @ A
    atp = A.T @ p
    lips = float(np.linalg.eigvalsh(ata)[-1])
    if lips <= 0:
        raise ValueError("measurement map is identically zero")
    const = 0.5 * float(p @ p)

    def smooth(x: np.ndarray) -> float:
        return 0.5 * float(x @ (ata @ x)) - float(atp @ x) + const

    def proj(x: np.ndarray) -> np.ndarray:
        return hermitian_to_coords(project_psd(coords_to_hermitian(x, d), cfg.trace_mode))

    x = np.zeros(d * d) if initial is None else hermitian_to_coords(initial.entries)
    x = proj(x)
    y = x.copy()
    t = 1.0
    f = smooth(x)
    f0 = max(f, 1e-300)
    history = [math.sqrt(max(2.0 * f, 0.0))]
    step = 1.0 / lips
    stall = 0
    converged = f <= 1e-20
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        grad = ata @ y - atp
        if cfg.step_rule == "backtracking":
            s = step * 4.0
            fy = smooth(y)
            while True:
                cand = proj(y - s * grad)
                delta = cand - y
                if smooth(cand) <= fy + float(grad @ delta) + 0.5 / s * float(delta @ delta):
                    break
                s *= 0.5
            xn = cand
        else:
            xn = proj(y - step * grad)
        fn = smooth(xn)
        if cfg.acceleration and fn > f:
            # momentum overshoot: restart from the last good iterate; a
            # vanishing overshoot means the iterate sits at the floor, so it
            # counts toward stagnation instead of resetting it
            y = x.copy()
            t = 1.0
            if fn - f <= cfg.rel_tolerance * f0:
                stall += 1
                if stall >= STALL_WINDOW:
                    converged = True
                    break
            else:
                stall = 0
            continue
        decrease = f - fn
        # prox-gradient fixed-point residual at the point the step was taken from
        fp_residual = float(np.linalg.norm(xn - y))
        x_prev, x, f = x, xn, fn
        history.append(math.sqrt(max(2.0 * fn, 0.0)))
        if cfg.acceleration:
            tn = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            y = x + ((t - 1.0) / tn) * (x - x_prev)
            t = tn
        else:
            y = x
        if decrease <= cfg.rel_tolerance * f0:
            stall += 1
        else:
            stall = 0
        if stall >= STALL_WINDOW or fp_residual <= cfg.rel_tolerance * max(
            1.0, float(np.linalg.norm(x))
        ):
            converged = True
            break

    est, meta = _finalize(mmap, coords_to_hermitian(x, d))
    return ReconstructionReport(
        estimate=est,
        objective_history=history,
        iterations_used=it,
        converged=converged,
        metadata=meta,
    )


def reconstruct_pseudoinverse(
    mmap: MeasurementMap, scan: IntensityScan
) -> ReconstructionReport:
    """Minimum-norm least-squares estimate A^+ p, not PSD-projected.

    Hermitian by construction (the coordinates are real); trace-normalized
    for metric comparison. Both the raw and normalized residuals are kept
    in the metadata.
    """
    _check_compatible(mmap, scan)
    A = mmap.matrix
    p = scan.values
    d = mmap.basis.dim
    x, *_ = np.linalg.lstsq(A, p, rcond=1e-10)
    raw = coords_to_hermitian(x, d)
    residual = float(np.linalg.norm(A @ x - p))
    tr = np.trace(raw).real
    meta = {"raw_trace": float(tr), "raw_residual": residual}
    if abs(tr) < DEGENERATE_TRACE:
        meta["degenerate_normalization"] = True
        est = DensityMatrix(mmap.basis, np.eye(d) / d)
    else:
        est = DensityMatrix(mmap.basis, raw / tr, validate=False)
        meta["normalized_residual"] = float(
            np.linalg.norm(A @ hermitian_to_coords(est.entries) - p)
        )
    return ReconstructionReport(
        estimate=est,
        objective_history=[residual],
        iterations_used=0,
        converged=True,
        metadata=meta,
    )


def singular_value_entropy(columns: np.ndarray) -> float:
    """Shannon entropy of normalized singular values of a column stack."""
    s = np.linalg.svd(np.asarray(columns, dtype=float), compute_uv=False)
    total = s.sum()
    if total <= 0:
        return 0.0
    s = s / total
    s = s[s > 0]
    return float(-np.sum(s * np.log(s)))


def uniqueness_entropy(
    mmap: MeasurementMap,
    scan: IntensityScan,
    cfg: SolverConfig = SolverConfig(),
    branch: str = "positive",
) -> float:
    """Uniqueness diagnostic: entropy over cfg.multistart estimator runs.

    positive branch: each run starts from a random projected Ginibre state.
    pseudoinverse branch: each run adds a random null-space component
    (Gaussian coefficients, scale ||A^+ p|| / 10) to the baseline solution.
    """
    if cfg.multistart < 2:
        raise ValueError("uniqueness diagnostic needs multistart >= 2")
    if branch not in ("positive", "pseudoinverse"):
        raise ValueError(f"unknown estimator branch {branch!r}")
    d = mmap.basis.dim
    rng = np.random.default_rng(cfg.seed)
    columns = np.empty((d * d, cfg.multistart))
    if branch == "positive":
        for i in range(cfg.multistart):
            g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            rho0 = g @ g.conj().T
            rho0 /= np.trace(rho0).real
            init = DensityMatrix(mmap.basis, 0.5 * (rho0 + rho0.conj().T))
            rep = reconstruct_positive(mmap, scan, replace(cfg, seed=cfg.seed + i), init)
            columns[:, i] = hermitian_to_coords(rep.estimate.entries)
    else:
        _check_compatible(mmap, scan)
        x0, *_ = np.linalg.lstsq(mmap.matrix, scan.values, rcond=1e-10)
        _, s, vt = np.linalg.svd(mmap.matrix, full_matrices=True)
        rank = int(np.sum(s > 1e-10 * s[0]))
        null_basis = vt[rank:]
        scale = float(np.linalg.norm(x0)) / 10.0
        for i in range(cfg.multistart):
            shift = (
                null_basis.T @ rng.normal(size=null_basis.shape[0]) * scale
                if null_basis.shape[0]
                else 0.0
            )
            x = x0 + shift
            raw = coords_to_hermitian(x, d)
            tr = np.trace(raw).real
            columns[:, i] = hermitian_to_coords(raw / tr) if abs(tr) > DEGENERATE_TRACE else x
    return singular_value_entropy(columns)


def report_to_json_dict(rep: ReconstructionReport) -> dict:
    from .qstate import state_to_json_dict

    return {
        "estimate": state_to_json_dict(rep.estimate),
        "objective_history": list(rep.objective_history),
        "iterations_used": rep.iterations_used,
        "converged": rep.converged,
        "uniqueness_entropy": rep.uniqueness_entropy,
        "metadata": rep.metadata,
    }


def write_report_json(path, rep: ReconstructionReport) -> None:
    with open(path, "w") as fh:
        json.dump(report_to_json_dict(rep), fh)
