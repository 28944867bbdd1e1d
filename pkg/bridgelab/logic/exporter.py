"""
Figure Data Exporter

Writes the CSV data behind the four figures (Wiener sample paths, a
conditioned Wiener path, the labelled region map, OU sample paths) and builds
run manifests that let a command be replayed and its outputs checked.
"""

import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from scipy import integrate

from . import path_engine, wiener_oracle
from .constants import ALL_KINDS, BridgeKind
from .contracts import BridgeSpec, ProcessParams, RunManifest, SeedSpec, TimeGrid
from .errors import DomainError
from .output_assembler import sha256_digest, write_csv

logger = logging.getLogger(__name__)

FIGURES = ("fig1", "fig2", "fig3", "fig4")

# OU drift rates of the OU sample-path figure
FIG4_RATES: Tuple[float, ...] = (-1.0, 2.0)

# Resolution and extent of the region-map figure
FIG3_RESOLUTION = 201
FIG3_EXTENT = 10.0


# =============================================================================
# FIGURES
# =============================================================================

def _path_rows(bundle) -> List[Tuple]:
    return [row[1:] for row in path_engine.bundle_rows(bundle)]


def export_paths(out: Path, spec: BridgeSpec, steps: int, seed: int, d: Optional[float] = None) -> List[str]:
    """One Wiener path with its three bridges on a shared driver (fig1; fig2 when d is given)."""
    grid = TimeGrid.uniform(spec.T, steps)
    bundle = path_engine.simulate_bundle(grid, spec, SeedSpec(master_seed=seed), 1, d=d)
    write_csv(out, ["t", "W", "W_av", "W_ir", "W_st"], _path_rows(bundle))
    notes = []
    if d is not None:
        notes.append(f"driver conditioned on W_T = {d:.17g}")
    return notes


def export_regions(out: Path, resolution: int = FIG3_RESOLUTION, extent: float = FIG3_EXTENT) -> List[str]:
    """Labelled (b_tilde, d_tilde) grid."""
    sweep = wiener_oracle.region_sweep(resolution, extent)
    write_csv(out, ["b_tilde", "d_tilde", "label"], ((p.b_tilde, p.d_tilde, label.tag) for p, label in sweep))
    counts: Dict[str, int] = {}
    for _, label in sweep:
        counts[label.tag] = counts.get(label.tag, 0) + 1
    return [f"label counts: {', '.join(f'{k}={counts[k]}' for k in sorted(counts))}"]


def export_ou_paths(
    out: Path,
    spec: BridgeSpec,
    steps: int,
    seed: int,
    sigma: float = 1.0,
    rates: Sequence[float] = FIG4_RATES,
) -> List[str]:
    """OU paths with their three bridges for each drift rate, in long format, one driver seed per rate."""
    grid = TimeGrid.uniform(spec.T, steps)
    t = grid.array
    rows: List[Tuple] = []
    notes: List[str] = []
    for q in rates:
        params = ProcessParams(q=q, sigma=sigma)
        bundle = path_engine.simulate_bundle(grid, spec, SeedSpec(master_seed=seed), 1, params=params)
        rows.extend((q,) + row for row in _path_rows(bundle))
        quad = {kind: float(integrate.trapezoid(path_engine.deviation(bundle, kind)[0] ** 2, t)) for kind in ALL_KINDS}
        endpoint = float(bundle.w_terminal[0])
        smaller = "AV" if quad[BridgeKind.AV] < quad[BridgeKind.IR] else "IR"
        notes.append(
            f"q={q:g}: integrated squared deviation av={quad[BridgeKind.AV]:.6g} ir={quad[BridgeKind.IR]:.6g} "
            f"st={quad[BridgeKind.ST]:.6g}; driver endpoint W_T={endpoint:.6g}; {smaller} is smaller on this path"
        )
    write_csv(out, ["q", "t", "U", "U_av", "U_ir", "U_st"], rows)
    return notes


def export_figure(
    figure: str,
    out: Path,
    spec: BridgeSpec,
    steps: int,
    seed: int,
    sigma: float = 1.0,
    d: Optional[float] = None,
) -> List[str]:
    """Write the CSV of one figure; returns notes for the run manifest."""
    if figure not in FIGURES:
        raise DomainError(f"figure must be one of {FIGURES}, got '{figure}'")
    logger.info(f"🖼️ Exporting {figure} to {out}")
    if figure == "fig1":
        return export_paths(out, spec, steps, seed)
    if figure == "fig2":
        return export_paths(out, spec, steps, seed, d=spec.b if d is None else d)
    if figure == "fig3":
        return export_regions(out)
    return export_ou_paths(out, spec, steps, seed, sigma)


# =============================================================================
# MANIFESTS
# =============================================================================

def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def build_manifest(
    command: Sequence[str],
    config: Dict[str, Any],
    version: str,
    started_at: str,
    outputs: Sequence[Path],
    master_seed: Optional[int] = None,
    notes: Optional[List[str]] = None,
) -> RunManifest:
    """Manifest with the sha256 digest of every output file."""
    return RunManifest(
        command=list(command),
        config=config,
        master_seed=master_seed,
        version=version,
        started_at=started_at,
        finished_at=utc_now(),
        outputs={str(p): sha256_digest(p) for p in outputs},
        notes=notes or [],
    )


def manifest_path(out: Path) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


def verify_digests(manifest: RunManifest) -> Dict[str, bool]:
    """Per output file: does its current digest match the recorded one."""
    result = {}
    for name, expected in manifest.outputs.items():
        path = Path(name)
        result[name] = path.exists() and sha256_digest(path) == expected
    return result
