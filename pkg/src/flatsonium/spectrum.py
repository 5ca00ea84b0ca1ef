"""
Flatsonium spectrum and flux sweet spots.

Handles:
- Lowest eigenlevels and eigenvectors at a flux bias
- Transition-frequency sweeps along the bias line Phi1 = r*Phi2
- Numerical sweet-spot search with plateau merging
- Closed-form sweet-spot predictions and the fluxonium linear approximation
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .circuit import DEFAULT_DIM, CircuitParams, FluxBias, build_hamiltonian
from .utils.parallel import parallel_map

logger = logging.getLogger(__name__)

DEFAULT_K = 4
DEFAULT_GRID_N = 401
DEFAULT_SWEET_GRID_N = 1001
DEFAULT_SLOPE_TOL = 1e-3  # GHz/Phi0
DEFAULT_FD_STEP = 1e-5  # Phi0
DEFAULT_MERGE_WINDOW = 0.02  # Phi0
DEFAULT_TRANSITIONS = ((0, 1), (1, 2), (2, 3))

MIN_SWEET_GRID_N = 101
DEDUP_WINDOW = 1e-4
MAX_BISECTIONS = 60
FLAT_RUN_REFINE = 1e-2  # bisection threshold inside flat runs, relative to the seed threshold


class SpectrumError(RuntimeError):
    """Eigensolver failure at a flux bias."""

    def __init__(self, message: str, flux: Optional[FluxBias] = None):
        self.flux = flux
        super().__init__(message)


class GridTooCoarseError(SpectrumError):
    """Two slope sign changes in adjacent grid intervals."""

    def __init__(self, message: str, suggested_grid_n: int):
        self.suggested_grid_n = suggested_grid_n
        super().__init__(f"{message} (try grid_n={suggested_grid_n})")


class SpotKind(str, Enum):
    MINIMUM = "minimum"
    MAXIMUM = "maximum"


@dataclass(frozen=True)
class SweetSpot:
    """
    A flux-insensitive point of f01 on the bias line.

    residual_slope is |df01/dPhi_s| along the bias line at the reported point,
    in GHz/Phi0. Stationary points merged into the same plateau are listed in
    `companions`.
    """

    phi2_over_phi0: float
    f01_ghz: float
    kind: SpotKind
    residual_slope: float
    companions: tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class SpectrumSweep:
    """
    Transition frequencies over a flux grid.

    frequencies[p, t] is the frequency in GHz of transitions[t] at grid[p].
    """

    params: CircuitParams
    grid: np.ndarray
    transitions: tuple[tuple[int, int], ...]
    frequencies: np.ndarray
    dim: int

    def transition(self, i: int, j: int) -> np.ndarray:
        """Column of f_ij over the grid."""
        try:
            column = self.transitions.index((i, j))
        except ValueError:
            raise KeyError(f"transition ({i}, {j}) was not swept; have {list(self.transitions)}")
        return self.frequencies[:, column]

    def at(self, index: int) -> dict[tuple[int, int], float]:
        """Map {(i, j): f_ij} at one grid point."""
        return {t: float(f) for t, f in zip(self.transitions, self.frequencies[index])}


# =============================================================================
# Eigenlevels
# =============================================================================

def eigensystem(
    params: CircuitParams,
    flux: FluxBias,
    dim: int = DEFAULT_DIM,
    k: int = DEFAULT_K,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Lowest k eigenpairs of the truncated Hamiltonian.

    Returns:
        (energies ascending in GHz, eigenvectors as columns)

    Raises:
        ValueError: if k is outside [1, dim]
        SpectrumError: if the eigensolver fails
    """
    H = _hamiltonian_checked(params, flux, dim, k)
    try:
        return linalg.eigh(H, subset_by_index=[0, k - 1])
    except linalg.LinAlgError as e:
        raise SpectrumError(f"Eigensolver failed at {flux}: {e}", flux=flux)


def eigenlevels(
    params: CircuitParams,
    flux: FluxBias,
    dim: int = DEFAULT_DIM,
    k: int = DEFAULT_K,
) -> np.ndarray:
    """
    Lowest k eigenvalues of `build_hamiltonian`, ascending, in GHz.

    Raises:
        ValueError: if k is outside [1, dim]
        SpectrumError: if the eigensolver fails
    """
    H = _hamiltonian_checked(params, flux, dim, k)
    try:
        return linalg.eigh(H, eigvals_only=True, subset_by_index=[0, k - 1])
    except linalg.LinAlgError as e:
        raise SpectrumError(f"Eigensolver failed at {flux}: {e}", flux=flux)


def _hamiltonian_checked(params: CircuitParams, flux: FluxBias, dim: int, k: int) -> np.ndarray:
    if not 1 <= k <= dim:
        raise ValueError(f"k must satisfy 1 <= k <= dim, got k={k}, dim={dim}")
    return build_hamiltonian(params, flux, dim)


def f01_at(params: CircuitParams, flux: FluxBias, dim: int = DEFAULT_DIM) -> float:
    """Qubit frequency E1 - E0 in GHz."""
    levels = eigenlevels(params, flux, dim, k=2)
    return float(levels[1] - levels[0])


def f01_on_bias_line(params: CircuitParams, phi2_ext: float, dim: int = DEFAULT_DIM) -> float:
    return f01_at(params, FluxBias.from_constrained(params, phi2_ext), dim)


# =============================================================================
# Sweeps
# =============================================================================

def validate_flux_grid(phi2_grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(phi2_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("flux grid must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(grid)):
        raise ValueError("flux grid must be finite")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("flux grid must be strictly increasing")
    return grid


def _validate_transitions(transitions: Sequence[Sequence[int]], dim: int) -> tuple[tuple[int, int], ...]:
    checked = []
    for pair in transitions:
        i, j = (int(x) for x in pair)
        if not 0 <= i < j:
            raise ValueError(f"transition ({i}, {j}) must satisfy 0 <= i < j")
        if j >= dim:
            raise ValueError(f"transition ({i}, {j}) needs more than dim={dim} levels")
        checked.append((i, j))
    if not checked:
        raise ValueError("at least one transition is required")
    return tuple(checked)


def sweep_spectrum(
    params: CircuitParams,
    phi2_grid: Sequence[float],
    transitions: Sequence[Sequence[int]] = DEFAULT_TRANSITIONS,
    dim: int = DEFAULT_DIM,
    workers: Optional[int] = None,
) -> SpectrumSweep:
    """
    Transition frequencies along Phi1 = r*Phi2.

    Args:
        params: circuit parameters
        phi2_grid: strictly increasing Phi2/Phi0 values
        transitions: (i, j) level pairs, i < j
        dim: Fock truncation
        workers: thread cap (None = all cores)

    Raises:
        ValueError: for an invalid grid or transition list
        SpectrumError: with the offending flux if a solve fails
    """
    grid = validate_flux_grid(phi2_grid)
    pairs = _validate_transitions(transitions, dim)
    k = max(j for _, j in pairs) + 1
    lower = np.array([i for i, _ in pairs])
    upper = np.array([j for _, j in pairs])

    def solve(phi2: float) -> np.ndarray:
        levels = eigenlevels(params, FluxBias.from_constrained(params, phi2), dim, k)
        return levels[upper] - levels[lower]

    logger.debug(f"Sweeping {grid.size} flux points, dim={dim}, k={k}")
    rows = parallel_map(solve, grid.tolist(), workers)
    frequencies = np.vstack(rows)
    return SpectrumSweep(params=params, grid=grid, transitions=pairs, frequencies=frequencies, dim=dim)


def transition_table(sweep: SpectrumSweep) -> np.ndarray:
    """Grid and frequencies side by side: column 0 is Phi2/Phi0, then one column per transition."""
    return np.column_stack([sweep.grid, sweep.frequencies])


# =============================================================================
# Sweet spots
# =============================================================================

def predicted_sweet_spot_count(r: float) -> int:
    """
    Sweet spots in [0, Phi0] on the bias line, endpoints included.

    r + 4 for odd r, r + 3 for even r.

    Raises:
        ValueError: if r is not an integer > 1
    """
    if isinstance(r, bool) or not float(r).is_integer() or r <= 1:
        raise ValueError(f"sweet-spot count is defined for integer r > 1, got {r!r}")
    r = int(r)
    return r + 4 if r % 2 else r + 3


def analytic_sweet_spot_candidates(r: float) -> list[float]:
    """Candidates m/(2r), m = 0..2r, in units of Phi0."""
    if isinstance(r, bool) or not float(r).is_integer() or r < 1:
        raise ValueError(f"candidates are defined for integer r >= 1, got {r!r}")
    r = int(r)
    return [m / (2 * r) for m in range(2 * r + 1)]


def _path_slope(params: CircuitParams, phi2: float, dim: int, step: float) -> float:
    """Central difference of f01 in Phi2 along the bias line, GHz/Phi0."""
    up = f01_on_bias_line(params, phi2 + step, dim)
    down = f01_on_bias_line(params, phi2 - step, dim)
    return (up - down) / (2.0 * step)


def _common_mode_scale(params: CircuitParams) -> float:
    """|dPhi_s/dPhi2| on the bias line."""
    scale = abs(params.r + 1.0)
    return scale if scale > 0 else 1.0


@dataclass
class _Stationary:
    phi2: float
    path_slope: float
    companions: list[float] = field(default_factory=list)


def _bisect_root(
    params: CircuitParams,
    lo: float,
    hi: float,
    slope_lo: float,
    slope_hi: float,
    threshold: float,
    dim: int,
    step: float,
) -> _Stationary:
    best = _Stationary(lo, slope_lo) if abs(slope_lo) <= abs(slope_hi) else _Stationary(hi, slope_hi)
    for iteration in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        slope_mid = _path_slope(params, mid, dim, step)
        if abs(slope_mid) < abs(best.path_slope):
            best = _Stationary(mid, slope_mid)
        if abs(slope_mid) < threshold:
            logger.debug(f"Root at {mid:.8f} after {iteration + 1} bisections")
            return best
        if math.copysign(1.0, slope_mid) == math.copysign(1.0, slope_lo):
            lo, slope_lo = mid, slope_mid
        else:
            hi = mid
    logger.warning(
        f"Bisection stopped at {best.phi2:.8f} with slope {best.path_slope:.3e} GHz/Phi0 "
        f"above threshold {threshold:.3e}"
    )
    return best


def _flat_run_points(
    params: CircuitParams,
    grid: np.ndarray,
    slopes: np.ndarray,
    start: int,
    end: int,
    threshold: float,
    dim: int,
    step: float,
) -> list[_Stationary]:
    # A run can hide a maximum and a minimum; each sign change is its own root.
    # The nodes just outside the run take part so edge crossings are not lost.
    lo_node = max(start - 1, 0)
    hi_node = min(end + 1, len(grid) - 1)
    found = [
        _Stationary(float(grid[j]), 0.0)
        for j in range(start, end + 1) if slopes[j] == 0.0
    ]
    for j in range(lo_node, hi_node):
        if slopes[j] * slopes[j + 1] < 0:
            found.append(_bisect_root(
                params, float(grid[j]), float(grid[j + 1]),
                float(slopes[j]), float(slopes[j + 1]), threshold, dim, step,
            ))
    if not found:
        best = start + int(np.argmin(np.abs(slopes[start:end + 1])))
        found.append(_Stationary(float(grid[best]), float(slopes[best])))
    return found


def _classify(params: CircuitParams, phi2: float, dim: int, step: float) -> SpotKind:
    delta = max(10.0 * step, 1e-4)
    second = (
        f01_on_bias_line(params, phi2 + delta, dim)
        + f01_on_bias_line(params, phi2 - delta, dim)
        - 2.0 * f01_on_bias_line(params, phi2, dim)
    )
    return SpotKind.MAXIMUM if second < 0 else SpotKind.MINIMUM


def _merge_plateaus(
    points: list[_Stationary],
    params: CircuitParams,
    merge_window: float,
) -> list[_Stationary]:
    candidates: list[float] = []
    if params.has_integer_r and params.r >= 1:
        candidates = analytic_sweet_spot_candidates(params.r)

    def rank(point: _Stationary) -> tuple[float, float]:
        if candidates:
            return min(abs(point.phi2 - c) for c in candidates), abs(point.path_slope)
        return abs(point.path_slope), 0.0

    clusters: list[list[_Stationary]] = []
    for point in points:
        if clusters and point.phi2 - clusters[-1][-1].phi2 < merge_window:
            clusters[-1].append(point)
        else:
            clusters.append([point])

    merged = []
    for cluster in clusters:
        representative = min(cluster, key=rank)
        representative.companions = [p.phi2 for p in cluster if p is not representative]
        if representative.companions:
            logger.warning(
                f"Merged stationary points {[round(p.phi2, 6) for p in cluster]} into a plateau "
                f"at {representative.phi2:.6f}"
            )
        merged.append(representative)
    return merged


def find_sweet_spots(
    params: CircuitParams,
    dim: int = DEFAULT_DIM,
    grid_n: int = DEFAULT_SWEET_GRID_N,
    slope_tol: float = DEFAULT_SLOPE_TOL,
    *,
    step: float = DEFAULT_FD_STEP,
    merge_window: float = DEFAULT_MERGE_WINDOW,
    workers: Optional[int] = None,
) -> list[SweetSpot]:
    """
    Locate the stationary points of f01 along the bias line for Phi2 in [0, Phi0].

    The slope is sampled on a uniform grid and every sign change between two
    nodes is refined by bisection. A run of nodes already below tolerance
    with no sign change in it contributes its flattest node. Points closer
    than 1e-4 Phi0 are deduplicated, and points closer than `merge_window`
    are reported as a single plateau.

    Args:
        params: circuit parameters
        dim: Fock truncation
        grid_n: number of seed nodes, >= 101
        slope_tol: bound on |df01/dPhi_s| at reported spots, GHz/Phi0
        step: finite-difference step in Phi0
        merge_window: plateau width in Phi0
        workers: thread cap for the seed grid

    Returns:
        Sweet spots in ascending flux order

    Raises:
        ValueError: if grid_n < 101 or slope_tol <= 0
        GridTooCoarseError: if sign changes fall in adjacent intervals
    """
    if grid_n < MIN_SWEET_GRID_N:
        raise ValueError(f"grid_n must be >= {MIN_SWEET_GRID_N}, got {grid_n}")
    if slope_tol <= 0:
        raise ValueError(f"slope_tol must be > 0, got {slope_tol}")

    scale = _common_mode_scale(params)
    threshold = slope_tol * scale
    grid = np.linspace(0.0, 1.0, grid_n)
    slopes = np.array(parallel_map(lambda x: _path_slope(params, x, dim, step), grid.tolist(), workers))
    flat = np.abs(slopes) < threshold

    points: list[_Stationary] = []
    i = 0
    while i < grid_n:
        if flat[i]:
            run_end = i
            while run_end + 1 < grid_n and flat[run_end + 1]:
                run_end += 1
            points.extend(_flat_run_points(
                params, grid, slopes, i, run_end, threshold * FLAT_RUN_REFINE, dim, step,
            ))
            i = run_end + 1
        else:
            i += 1

    brackets = [
        i for i in range(grid_n - 1)
        if not flat[i] and not flat[i + 1] and np.sign(slopes[i]) != np.sign(slopes[i + 1])
    ]
    for a, b in zip(brackets, brackets[1:]):
        if b == a + 1:
            raise GridTooCoarseError(
                f"Slope changes sign in adjacent intervals near Phi2={grid[b]:.6f}",
                suggested_grid_n=2 * grid_n - 1,
            )
    for i in brackets:
        points.append(_bisect_root(
            params, float(grid[i]), float(grid[i + 1]),
            float(slopes[i]), float(slopes[i + 1]), threshold, dim, step,
        ))

    points.sort(key=lambda p: p.phi2)
    deduplicated: list[_Stationary] = []
    for point in points:
        if deduplicated and point.phi2 - deduplicated[-1].phi2 < DEDUP_WINDOW:
            if abs(point.path_slope) < abs(deduplicated[-1].path_slope):
                deduplicated[-1] = point
            continue
        deduplicated.append(point)

    spots = []
    for point in _merge_plateaus(deduplicated, params, merge_window):
        spots.append(SweetSpot(
            phi2_over_phi0=point.phi2,
            f01_ghz=f01_on_bias_line(params, point.phi2, dim),
            kind=_classify(params, point.phi2, dim, step),
            residual_slope=abs(point.path_slope) / scale,
            companions=tuple(point.companions),
        ))
    logger.info(f"Found {len(spots)} sweet spots (grid_n={grid_n}, dim={dim})")
    return spots


# =============================================================================
# Fluxonium limit
# =============================================================================

def _warn_if_not_fluxonium(params: CircuitParams) -> None:
    if params.b != 0 or params.r != 0:
        logger.warning(f"Linear f01 approximation assumes b=0, r=0 (got b={params.b}, r={params.r})")


def fluxonium_linear_slope(params: CircuitParams) -> float:
    """|df01/dPhi| of the linear approximation, 4 pi^2 E_L E_J / (E_L + E_J), in GHz/Phi0."""
    _warn_if_not_fluxonium(params)
    el, ej = params.el_ghz, params.ej_sum_ghz
    return 4.0 * math.pi**2 * el * ej / (el + ej)


def fluxonium_linear_f01(params: CircuitParams, phi2_reduced: float) -> float:
    """Linear approximation of the fluxonium f01 away from half flux, in GHz."""
    return fluxonium_linear_slope(params) * abs(0.5 - phi2_reduced / (2.0 * math.pi))
