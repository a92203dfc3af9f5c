"""Population rate equation: generator, steady state, current and fluxes.

The generator chi acting on the eigenstate population vector has the rate
matrix on its off-diagonal and minus the column sums on its diagonal, so
total probability is conserved by construction.  Steady states are the
null space of chi, extracted from a singular value decomposition; a
rate graph that splits into disconnected components has a degenerate
null space and is reported as an error naming the components.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .spectral import EigenSystem, RateMatrix

_CLIP_TOL = 1e-12
_UNIQUENESS_RATIO = 1e6


class SteadyStateError(RuntimeError):
    """Raised when no unique steady state exists."""

    def __init__(self, message: str, components: list[list[int]] | None = None):
        super().__init__(message)
        self.components = components or []


@dataclass(frozen=True)
class Generator:
    """Probability-conserving generator chi for the population dynamics."""

    chi: np.ndarray

    @property
    def dimension(self) -> int:
        return self.chi.shape[0]


def _json_safe(value: float):
    return float(value) if np.isfinite(value) else None


@dataclass
class SteadyStateReport:
    """Solved steady state with current and per-channel flux accounting."""

    populations: np.ndarray
    current: float
    fluxes: dict[str, float]
    residual: float
    uniqueness_gap: float
    ground_population: float
    method: str = "pme"
    extras: dict = field(default_factory=dict)
    density_matrix: np.ndarray | None = field(default=None, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "current": self.current,
            "ground_population": self.ground_population,
            "residual": self.residual,
            "uniqueness_gap": _json_safe(self.uniqueness_gap),
            "fluxes": {k: float(v) for k, v in self.fluxes.items()},
            "populations": [float(p) for p in self.populations],
            **self.extras,
        }


def build_generator(w) -> Generator:
    """Build chi from a rate matrix (RateMatrix or plain array)."""
    matrix = w.w if isinstance(w, RateMatrix) else np.asarray(w, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("rate matrix must be square")
    off = matrix.copy()
    np.fill_diagonal(off, 0.0)
    if off.min() < 0:
        raise ValueError("off-diagonal rates must be nonnegative")
    chi = off.copy()
    chi[np.diag_indices_from(chi)] = -off.sum(axis=0)
    return Generator(chi=chi)


def _rate_graph_components(chi: np.ndarray) -> list[list[int]]:
    adjacency = (np.abs(chi) + np.abs(chi.T)) > 0
    np.fill_diagonal(adjacency, False)
    n_comp, labels = connected_components(adjacency, directed=False)
    return [list(np.flatnonzero(labels == c)) for c in range(n_comp)]


def steady_state(g: Generator) -> tuple[np.ndarray, float, float]:
    """Solve chi P = 0 for the normalized population vector.

    Returns (populations, residual, uniqueness_gap) where the gap is the
    ratio of the second-smallest to smallest singular value.  Tiny negative
    populations (above -1e-12) are clipped to zero; anything more negative
    is treated as a solver failure.
    """
    chi = g.chi
    dim = g.dimension
    if dim == 1:
        return np.ones(1), 0.0, np.inf
    _, svals, vt = np.linalg.svd(chi)
    scale = svals[0] if svals[0] > 0 else 1.0
    gap = svals[-2] / svals[-1] if svals[-1] > 0 else np.inf
    if svals[-2] <= 1e-10 * scale:
        comps = _rate_graph_components(chi)
        raise SteadyStateError(
            f"degenerate null space: rate graph has {len(comps)} "
            f"disconnected components {comps}", components=comps)
    p = vt[-1]
    if p.sum() < 0:
        p = -p
    p = p / p.sum()
    if p.min() < -_CLIP_TOL:
        raise SteadyStateError(
            f"null vector has negative entries below tolerance "
            f"({p.min():.3e} < -{_CLIP_TOL:g})")
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    residual = float(np.abs(chi @ p).max())
    return p, residual, float(gap)


def steady_current(populations: np.ndarray, rates: RateMatrix) -> float:
    """Steady exciton current: total extraction flux into the ground state."""
    ext = rates.blocks.get("extraction")
    if ext is None:
        return 0.0
    return float(ext[0, 1:] @ populations[1:])


def flux_report(populations: np.ndarray, rates: RateMatrix) -> dict[str, float]:
    """Ground <-> excited probability flux carried by each channel kind.

    Injection flows from the ground state into the excited manifold; the
    loss and extraction channels flow back.  In a steady state injection
    balances extraction + radiative + non-radiative exactly.
    """
    fluxes = {}
    for kind, block in rates.blocks.items():
        if kind == "phonon":
            continue
        into_excited = float(block[1:, 0].sum() * populations[0])
        into_ground = float(block[0, 1:] @ populations[1:])
        fluxes[kind] = into_excited if kind == "injection" else into_ground
    return fluxes


def site_populations(populations: np.ndarray, es: EigenSystem) -> np.ndarray:
    """Per-site excited populations implied by eigenstate populations."""
    amp2 = es.site_amplitudes**2
    return amp2.T @ populations[1:]


def solve_steady_state(rates: RateMatrix, method_label: str = "pme"
                       ) -> SteadyStateReport:
    """Build the generator, solve it, and assemble the full report."""
    gen = build_generator(rates)
    populations, residual, gap = steady_state(gen)
    current = steady_current(populations, rates)
    fluxes = flux_report(populations, rates)
    ground = float(populations[0])
    if ground <= 0.95:
        warnings.warn(
            f"ground population {ground:.4f} <= 0.95; the single-excitation "
            "treatment may not be justified at these rates", stacklevel=2)
    return SteadyStateReport(
        populations=populations, current=current, fluxes=fluxes,
        residual=residual, uniqueness_gap=gap, ground_population=ground,
        method=method_label,
    )
