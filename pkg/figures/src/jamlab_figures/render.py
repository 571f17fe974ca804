"""CSV readers and the five figure renderers.

Every reader validates its documented schema and reports the offending
row/column on mismatch.  Rendering is deterministic: fixed backend, fixed
geometry, and timestamp-free metadata, so repeated renders of the same
inputs are byte-identical.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "jamlab-figures"

import matplotlib.pyplot as plt
import numpy as np

from jamlab_figures.jobs import FigureJob, SchemaError


@dataclass(frozen=True)
class RenderResult:
    path: str
    n_panels: int


def _read_table(path, required: tuple, kind: str) -> dict:
    """Read a CSV with a header row into a dict of float arrays.

    Non-numeric columns (e.g. ``status``) stay as string arrays.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    if not rows:
        raise SchemaError(f"{kind}: {path} is empty")
    header, data = rows[0], rows[1:]
    missing = [col for col in required if col not in header]
    if missing:
        raise SchemaError(f"{kind}: {path} lacks column(s) {missing}; header = {header}")
    if not data:
        raise SchemaError(f"{kind}: {path} has a header but no data rows")
    columns = {name: [] for name in header}
    for i, row in enumerate(data, 2):
        if len(row) != len(header):
            raise SchemaError(
                f"{kind}: {path} row {i} has {len(row)} fields, expected {len(header)}")
        for name, value in zip(header, row):
            columns[name].append(value)
    out = {}
    for name, values in columns.items():
        try:
            out[name] = np.array([float(v) for v in values])
        except ValueError:
            out[name] = np.array(values)
    return out


def _read_profile(path) -> tuple[dict, dict]:
    """Read a wave-profile CSV: '# key,value' header block then x,v,rho,u."""
    meta = {}
    with open(path) as fh:
        lines = fh.read().splitlines()
    body_start = 0
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(",")
            try:
                meta[key.strip()] = float(value)
            except ValueError:
                raise SchemaError(f"profile: {path} bad header line {line!r}")
            body_start += 1
        else:
            break
    for key in ("m", "s", "L", "N", "A"):
        if key not in meta:
            raise SchemaError(f"profile: {path} header block lacks {key!r}")
    table = _read_table_from_lines(lines[body_start:], ("x", "v", "rho", "u"),
                                   "profile", path)
    return meta, table


def _read_table_from_lines(lines, required, kind, path):
    if not lines or lines[0].split(",") != list(required):
        raise SchemaError(f"{kind}: {path} expects columns {','.join(required)}")
    data = [ln.split(",") for ln in lines[1:] if ln.strip()]
    if not data:
        raise SchemaError(f"{kind}: {path} has no data rows")
    arr = np.array(data, dtype=float)
    return {name: arr[:, j] for j, name in enumerate(required)}


def _save(fig, out: str) -> None:
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    ext = path.suffix.lower()
    metadata = {}
    if ext == ".png":
        metadata = {"Software": "jamlab-figures"}
    elif ext == ".svg":
        metadata = {"Date": None}
    elif ext == ".pdf":
        metadata = {"CreationDate": None}
    fig.savefig(path, dpi=150, metadata=metadata)
    plt.close(fig)


# -- renderers -----------------------------------------------------------------

def _render_fd(job: FigureJob) -> RenderResult:
    flows = _read_table(job.inputs[0],
                        ("rho", "Q_smooth", "Q_nd", "Q_greenshields"), "fd")
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.plot(flows["rho"], flows["Q_smooth"], "k-", lw=2, label="smoothed flow")
    ax.plot(flows["rho"], flows["Q_nd"], "b--", lw=1, label="piecewise linear")
    ax.plot(flows["rho"], flows["Q_greenshields"], "g:", lw=1, label="quadratic")
    if len(job.inputs) > 1:
        seg = _read_table(job.inputs[1],
                          ("rho_s", "m", "s", "rho_M", "q_M", "rho_R", "q_R",
                           "rho_star", "q_star", "skipped"), "fd")
        for i in range(len(seg["rho_s"])):
            ax.plot([seg["rho_M"][i], seg["rho_R"][i]],
                    [seg["q_M"][i], seg["q_R"][i]],
                    color="crimson", lw=0.5, alpha=0.5)
        ax.plot(seg["rho_R"], seg["q_R"], "m-", lw=1.5, label="upper envelope")
        keep = seg["skipped"] == 0
        ax.plot(seg["rho_star"][keep], seg["q_star"][keep], "c-", lw=1.5,
                label="lower envelope")
    ax.set_xlabel(r"$\rho$ [veh/m]")
    ax.set_ylabel(r"$q$ [veh/s]")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("equilibrium flow and wave chords")
    _save(fig, job.out)
    return RenderResult(job.out, 1)


def _render_profile(job: FigureJob) -> RenderResult:
    meta, table = _read_profile(job.inputs[0])
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax1.plot(table["x"], table["rho"], "b-")
    ax1.set_ylabel(r"$\rho$ [veh/m]")
    ax2.plot(table["x"], table["u"], "r-")
    ax2.set_ylabel(r"$u$ [m/s]")
    ax2.set_xlabel("x [m]")
    ax1.set_title(
        f"traveling wave: s = {meta['s']:.3f} m/s, m = {meta['m']:.3f} veh/s, "
        f"L = {meta['L']:.1f} m, N = {meta['N']:.2f} veh, A = {meta['A']:.4f} veh/m")
    _save(fig, job.out)
    return RenderResult(job.out, 2)


_BATCH_COLUMNS = ("rho_s_in", "tau", "s_out", "m_out", "L_out", "A_out",
                  "rho_plus_out", "E_L", "t_settle", "status")


def _render_collision_panels(job: FigureJob) -> RenderResult:
    batch = _read_table(job.inputs[0], _BATCH_COLUMNS, "collision-panels")
    curve = None
    if len(job.inputs) > 1:
        curve = _read_table(job.inputs[1], ("rho_s", "m", "s"), "collision-panels")
    settled = batch["status"] == "settled"
    rho = batch["rho_s_in"]
    fig, axes = plt.subplots(3, 2, figsize=(10, 11))
    (ax_s, ax_l), (ax_a, ax_r), (ax_e, ax_spare) = axes
    ax_spare.axis("off")

    ax_s.plot(rho[settled], batch["s_out"][settled], "ko", ms=4)
    ax_s.set_title("exit velocity")
    ax_l.plot(rho[settled], batch["L_out"][settled], "bs", ms=4)
    ax_l.set_title("exit length")
    ax_a.plot(rho[settled], batch["A_out"][settled], "g^", ms=4)
    ax_a.set_title("exit amplitude")
    ax_r.plot(rho[settled], batch["rho_plus_out"][settled], "rv", ms=4)
    ax_r.set_title("exit peak density")

    ax_e.plot(rho[settled], batch["s_out"][settled], "ko", ms=4, label="exit velocity")
    if curve is not None:
        order = np.argsort(curve["rho_s"])
        ax_e.plot(curve["rho_s"][order], curve["s"][order], "c-", lw=1.5,
                  label="wave speed vs sonic density")
    ax_e.set_title("exit velocity vs the family speed curve")
    ax_e.legend(fontsize=8)
    for ax in (ax_s, ax_l, ax_a, ax_r, ax_e):
        ax.set_xlabel(r"$\rho_s$ of colliding wave [veh/m]")
    fig.tight_layout()
    _save(fig, job.out)
    return RenderResult(job.out, 5)


def _render_el(job: FigureJob) -> RenderResult:
    batch = _read_table(job.inputs[0], _BATCH_COLUMNS, "el")
    settled = batch["status"] == "settled"
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.axhline(0.0, color="gray", lw=0.8)
    for tau in np.unique(batch["tau"]):
        sel = settled & (batch["tau"] == tau)
        ax.plot(batch["rho_s_in"][sel], batch["E_L"][sel], "o", ms=4,
                label=f"tau = {tau:g} s")
    ax.set_xlabel(r"$\rho_s$ of colliding wave [veh/m]")
    ax.set_ylabel(r"$E_L$")
    ax.set_title("length-additivity defect")
    ax.legend(fontsize=8)
    _save(fig, job.out)
    return RenderResult(job.out, 1)


def _render_convergence(job: FigureJob) -> RenderResult:
    table = _read_table(job.inputs[0], ("n_cells", "tau", "t_final", "eps_rho",
                                        "eps_u"), "convergence")
    fig, ax = plt.subplots(figsize=(7, 5))
    combos = sorted({(t, tf) for t, tf in zip(table["tau"], table["t_final"])})
    for tau, t_final in combos:
        sel = (table["tau"] == tau) & (table["t_final"] == t_final)
        order = np.argsort(table["n_cells"][sel])
        ax.loglog(table["n_cells"][sel][order], table["eps_rho"][sel][order],
                  "o-", ms=4, label=f"tau = {tau:g}, t = {t_final:g}")
    ax.set_xlabel("grid cells")
    ax.set_ylabel(r"$\varepsilon_\rho$ [%]")
    ax.set_title("relative L1 error vs resolution")
    ax.legend(fontsize=8)
    _save(fig, job.out)
    return RenderResult(job.out, 1)


_RENDERERS = {
    "fd": _render_fd,
    "profile": _render_profile,
    "collision-panels": _render_collision_panels,
    "el": _render_el,
    "convergence": _render_convergence,
}


def render(job: FigureJob) -> RenderResult:
    """Render one figure job; raises SchemaError on malformed inputs."""
    job.validate_inputs()
    return _RENDERERS[job.kind](job)
