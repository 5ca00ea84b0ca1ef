"""
Figure commands for flatsonium.

Provides commands for:
- Transition spectrum versus flux
- Sweet-spot report against the closed-form predictions
- Dephasing-time sweep for global, uncorrelated or correlated noise

Each command writes its CSV (plus a gnuplot script) to config.output_path and
returns a summary dict.
"""

import logging
import math

import numpy as np

from .. import __version__
from ..config import RunConfig
from ..noise import dephasing_sweep, local_amplitude_overlay
from ..spectrum import (
    SweetSpot,
    analytic_sweet_spot_candidates,
    find_sweet_spots,
    predicted_sweet_spot_count,
    sweep_spectrum,
)
from ..utils.output import write_gnuplot_script, write_notes, write_table

logger = logging.getLogger(__name__)

# A numeric spot matches a candidate m/(2r) closer than this, in Phi0
CANDIDATE_MATCH = 1e-3

FLUX_AXIS = "Phi_2 / Phi_0"


def run_metadata(config: RunConfig, command: str) -> dict[str, object]:
    """'# key: value' header shared by all tables."""
    p = config.params
    return {
        "tool": f"flatsonium {__version__}",
        "command": command,
        "ec_ghz": repr(p.ec_ghz),
        "el_ghz": repr(p.el_ghz),
        "ej_sum_ghz": repr(p.ej_sum_ghz),
        "b": repr(p.b),
        "r": repr(p.r),
        "dim": config.dim,
        "grid_n": config.grid_n,
    }


def cmd_spectrum(config: RunConfig) -> dict:
    """
    Transition frequencies along Phi1 = r*Phi2.

    Args:
        config: run configuration

    Returns:
        Dict with output path, row count and the flux of the f01 minimum
    """
    sweep = sweep_spectrum(
        config.params, config.phi2_grid(), config.transitions, config.dim, workers=config.workers
    )
    names = [f"f{i}{j}" for i, j in sweep.transitions]
    # Phi_s/(r+1) equals Phi2 on the bias line; kept as the figure's own axis
    columns = ["phi2_over_phi0", "phis_over_(r+1)phi0"] + names
    rows = [[x, x, *freqs] for x, freqs in zip(sweep.grid, sweep.frequencies)]

    output = write_table(config.output_path, columns, rows, run_metadata(config, "spectrum"))
    script = write_gnuplot_script(output, columns, names, FLUX_AXIS, "f_ij (GHz)")

    result = {"output": str(output), "script": str(script), "rows": len(rows)}
    if (0, 1) in sweep.transitions:
        f01 = sweep.transition(0, 1)
        result["f01_min_at"] = float(sweep.grid[int(np.argmin(f01))])
        result["f01_min_ghz"] = float(np.min(f01))
    return result


def _candidate_verdict(spot: SweetSpot, candidates: list[float]) -> tuple[str, str]:
    if not candidates:
        return "", "no candidates"
    nearest = min(candidates, key=lambda c: abs(c - spot.phi2_over_phi0))
    verdict = "match" if abs(nearest - spot.phi2_over_phi0) <= CANDIDATE_MATCH else "mismatch"
    return f"{nearest:.6f}", verdict


def cmd_sweetspots(config: RunConfig) -> dict:
    """
    Numeric sweet spots compared with m/(2r) and the predicted count.

    Args:
        config: run configuration (sweet_grid_n seeds the finder)

    Returns:
        Dict with the spots, candidates, counts, verdicts and a text report

    Raises:
        GridTooCoarseError: if the seed grid cannot separate the spots
    """
    p = config.params
    spots = find_sweet_spots(
        p, config.dim, config.sweet_grid_n, config.slope_tol,
        step=config.fd_step, workers=config.workers,
    )

    candidates: list[float] = []
    if p.has_integer_r and p.r >= 1:
        candidates = analytic_sweet_spot_candidates(p.r)
    predicted = None
    if p.has_integer_r and p.r > 1:
        predicted = predicted_sweet_spot_count(p.r)

    rows = []
    entries = []
    for spot in spots:
        nearest, verdict = _candidate_verdict(spot, candidates)
        rows.append([
            spot.phi2_over_phi0, spot.f01_ghz, spot.kind.value, spot.residual_slope, nearest, verdict,
        ])
        entries.append({
            "phi2_over_phi0": spot.phi2_over_phi0,
            "f01_ghz": spot.f01_ghz,
            "kind": spot.kind.value,
            "residual_slope": spot.residual_slope,
            "companions": list(spot.companions),
            "candidate": nearest,
            "verdict": verdict,
        })

    columns = ["phi2_over_phi0", "f01_ghz", "kind", "residual_slope_ghz_per_phi0", "candidate", "verdict"]
    metadata = run_metadata(config, "sweetspots")
    metadata["sweet_grid_n"] = config.sweet_grid_n
    metadata["slope_tol_ghz_per_phi0"] = repr(config.slope_tol)
    output = write_table(config.output_path, columns, rows, metadata)
    script = write_gnuplot_script(
        output, columns, ["f01_ghz"], FLUX_AXIS, "f01 at sweet spot (GHz)", style="points"
    )

    count_verdict = "n/a"
    if predicted is not None:
        count_verdict = "matches" if predicted == len(spots) else "differs from"

    report = [f"Sweet spots for r={p.r:g}, b={p.b:g} (dim={config.dim}, grid_n={config.sweet_grid_n})"]
    report.append(f"  {'phi2/Phi0':>10}  {'f01 [GHz]':>12}  {'kind':<8}  {'|slope|':>10}  verdict")
    for e in entries:
        line = (
            f"  {e['phi2_over_phi0']:>10.6f}  {e['f01_ghz']:>12.6f}  {e['kind']:<8}  "
            f"{e['residual_slope']:>10.2e}  {e['verdict']}"
        )
        if e["companions"]:
            line += "  (plateau with " + ", ".join(f"{c:.6f}" for c in e["companions"]) + ")"
        report.append(line)
    report.append("Candidates m/(2r): " + (", ".join(f"{c:.6f}" for c in candidates) or "none (needs integer r >= 1)"))
    if predicted is not None:
        report.append(f"Numeric count {len(spots)} {count_verdict} the predicted count {predicted}")
    else:
        report.append(f"Numeric count {len(spots)}; the closed-form count needs integer r > 1")

    return {
        "output": str(output),
        "script": str(script),
        "spots": entries,
        "candidates": candidates,
        "predicted_count": predicted,
        "count": len(spots),
        "count_verdict": count_verdict,
        "report": "\n".join(report),
    }


def overlay_column(amplitude: float) -> str:
    """Column name of the T_phi overlay for one local-noise amplitude."""
    return f"t_phi_seconds_ad_{amplitude:g}"


def cmd_dephasing(config: RunConfig) -> dict:
    """
    Dephasing rates and T_phi along the bias line for the configured noise mode.

    Infinite T_phi is written as an empty cell and listed in a sidecar note.
    Each amplitude in config.a_d_overlay adds a T_phi column for that local
    noise amplitude.

    Args:
        config: run configuration

    Returns:
        Dict with output path, rows and the location and value of the largest T_phi
    """
    model = config.noise_for_mode()
    profile = dephasing_sweep(
        config.params, model, config.phi2_grid(), config.fd_step, config.dim, workers=config.workers
    )

    columns = ["phi2_over_phi0", "sens_s", "sens_d", "gamma_s", "gamma_d", "gamma_total", "t_phi_seconds"]
    table = [profile.grid, profile.sens_s, profile.sens_d, profile.gamma_s,
             profile.gamma_d, profile.gamma_total, profile.t_phi]
    if model.self_consistent:
        columns.append("log_factor")
        table.append(profile.log_factor)
    overlay = {}
    if config.a_d_overlay and config.mode == "global-only":
        logger.warning("a_d_overlay_phi0 is ignored in global-only mode")
    elif config.a_d_overlay:
        overlay = local_amplitude_overlay(model, profile, config.a_d_overlay)
        for amplitude, t_phi in overlay.items():
            columns.append(overlay_column(amplitude))
            table.append(t_phi)
    rows = np.column_stack(table).tolist()

    metadata = run_metadata(config, "dephasing")
    metadata.update({
        "mode": config.mode,
        "a_s_phi0": repr(model.a_s),
        "a_d_phi0": repr(model.a_d),
        "c_sd": repr(model.c_sd),
        "log_factor": "self-consistent" if model.self_consistent else repr(model.log_factor),
        "fd_step_phi0": repr(config.fd_step),
        "units": "sens GHz/Phi0, gamma 1/s, t_phi s",
    })
    if overlay:
        metadata["a_d_overlay_phi0"] = ", ".join(repr(a) for a in overlay)
    output = write_table(config.output_path, columns, rows, metadata)
    plotted = ["t_phi_seconds"] + [overlay_column(a) for a in overlay]
    script = write_gnuplot_script(output, columns, plotted, FLUX_AXIS, "T_phi (s)", logscale_y=True)

    result = {"output": str(output), "script": str(script), "rows": len(rows)}
    if overlay:
        result["overlay_a_d_phi0"] = list(overlay)
    infinite = [float(x) for x, t in zip(profile.grid, profile.t_phi) if math.isinf(t)]
    if infinite:
        logger.warning(f"T_phi is infinite at {len(infinite)} grid points; written as empty cells")
        notes = write_notes(
            output,
            [f"phi2_over_phi0={x:.12e}: gamma_total = 0, t_phi_seconds = +inf (empty cell)" for x in infinite],
            title=f"Empty t_phi_seconds cells in {output.name} stand for an infinite dephasing time.",
        )
        result["notes"] = str(notes)
    result["infinite_points"] = infinite

    finite = np.where(np.isfinite(profile.t_phi), profile.t_phi, -np.inf)
    peak = int(np.argmax(finite))
    result["t_phi_max_at"] = float(profile.grid[peak])
    result["t_phi_max_s"] = float(profile.t_phi[peak])
    return result
