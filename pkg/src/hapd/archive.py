"""Plain-text archives for linear models, NLDI models, reports and trajectories.

Matrix files are a sequence of sections. ``[META]`` holds ``key = value``
lines; a matrix section starts with ``[NAME] rows cols`` and is followed by
exactly ``rows`` lines of ``cols`` whitespace-separated decimals (row-major,
printed with ``repr`` so that reading back is exact). ``#`` starts a comment.

Example::

    [META]
    Ts = 0.02
    [PHI0] 12 12
    0.9993 0.0123 ...
"""

import csv
import hashlib
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .discrete import DiscreteModel
from .errors import ParseError, ValidationError
from .ldi import MAX_CHANNELS, NldiModel, PldiModel
from .model import N_INPUTS, N_STATES, STATE_NAMES, STATE_UNITS
from .parameters import N_SURFACES
from .trim import LinearModel


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_matrix_file(meta, matrices, title=None):
    out = []
    if title:
        out.append(f"# {title}")
    out.append("[META]")
    for k, v in meta.items():
        out.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
    for name, M in matrices.items():
        M = np.atleast_2d(np.asarray(M, dtype=float))
        out.append(f"[{name}] {M.shape[0]} {M.shape[1]}")
        if M.shape[1] == 0:
            continue  # empty rows are not written
        for row in M:
            out.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(out) + "\n"


def parse_matrix_file(text, path=None):
    """Return ``(meta, matrices)``; raises :class:`ParseError` with a line number."""
    meta, mats = {}, {}
    lines = text.splitlines()
    i = 0
    section = None
    while i < len(lines):
        lineno = i + 1
        line = lines[i].split("#", 1)[0].strip()
        i += 1
        if not line:
            continue
        if line.startswith("["):
            head, _, rest = line.partition("]")
            name = head[1:].strip()
            if name == "META":
                section = "META"
                continue
            try:
                rows, cols = (int(s) for s in rest.split())
            except ValueError:
                raise ParseError(f"section header {line!r} needs 'rows cols'", path, lineno) from None
            if rows < 0 or cols < 0:
                raise ParseError(f"negative dimensions in {line!r}", path, lineno)
            if name in mats:
                raise ParseError(f"duplicate section [{name}]", path, lineno)
            M = np.empty((rows, cols))
            for r in range(rows if cols else 0):
                while i < len(lines) and not lines[i].split("#", 1)[0].strip():
                    i += 1
                if i >= len(lines):
                    raise ParseError(f"[{name}] truncated: expected {rows} rows, got {r}", path, len(lines))
                row_line = lines[i].split("#", 1)[0].strip()
                if row_line.startswith("["):
                    raise ParseError(f"[{name}] truncated: expected {rows} rows, got {r}", path, i + 1)
                try:
                    vals = [float(s) for s in row_line.split()]
                except ValueError:
                    raise ParseError(f"[{name}] row {r + 1}: not a number", path, i + 1) from None
                if len(vals) != cols:
                    raise ParseError(f"[{name}] row {r + 1}: expected {cols} values, got {len(vals)}",
                                     path, i + 1)
                M[r] = vals
                i += 1
            mats[name] = M
            section = name
            continue
        if section != "META":
            raise ParseError(f"unexpected content {line!r}", path, lineno)
        if "=" not in line:
            raise ParseError(f"expected 'key = value' in [META], got {line!r}", path, lineno)
        k, v = (s.strip() for s in line.split("=", 1))
        meta[k] = (v, lineno)
    return meta, mats


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path) from exc


def _need(mats, name, shape, path):
    if name not in mats:
        raise ParseError(f"missing section [{name}]", path)
    if mats[name].shape != shape:
        raise ValidationError(f"{path}: [{name}] has shape {mats[name].shape}, expected {shape}")
    return mats[name]


def _meta_float(meta, key, path):
    if key not in meta:
        raise ParseError(f"missing META key {key!r}", path)
    value, lineno = meta[key]
    try:
        return float(value)
    except ValueError:
        raise ParseError(f"META {key!r}: not a number: {value!r}", path, lineno) from None


# -- linear model files --------------------------------------------------------

def format_linear_model(lin, disc):
    meta = {"V_tas": float(lin.V_tas), "altitude": float(lin.altitude), "Ts": float(disc.Ts)}
    mats = {"X_TRIM": lin.x_trim[None, :], "U_TRIM": lin.u_trim[None, :],
            "A": lin.A, "B": lin.B, "PHI": disc.Phi, "G": disc.G}
    return format_matrix_file(meta, mats, "linearised and ZOH-discretised model about a trim point")


def save_linear_model(path, lin, disc):
    atomic_write(path, format_linear_model(lin, disc))


def load_linear_model(path):
    meta, mats = parse_matrix_file(_read(path), path)
    V, h, Ts = (_meta_float(meta, k, path) for k in ("V_tas", "altitude", "Ts"))
    x = _need(mats, "X_TRIM", (1, N_STATES), path)[0]
    u = _need(mats, "U_TRIM", (1, N_INPUTS), path)[0]
    lin = LinearModel(_need(mats, "A", (N_STATES, N_STATES), path),
                      _need(mats, "B", (N_STATES, N_INPUTS), path), x, u, V, h)
    disc = DiscreteModel(_need(mats, "PHI", (N_STATES, N_STATES), path),
                         _need(mats, "G", (N_STATES, N_INPUTS), path), Ts, x, u, V, h)
    return lin, disc


def vertex_filename(i):
    return f"vertex_{i:03d}.txt"


def format_manifest(conditions, files):
    lines = ["# index V_tas[m/s] altitude[m] file"]
    for i, ((V, h), f) in enumerate(zip(conditions, files)):
        lines.append(f"{i} {V!r} {h!r} {f}")
    return "\n".join(lines) + "\n"


def save_pldi(directory, pldi):
    """Write one file per vertex plus ``manifest.txt``; returns the manifest hash."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for i, (lin, disc) in enumerate(zip(pldi.linear_models, pldi.vertices)):
        name = vertex_filename(i)
        save_linear_model(directory / name, lin, disc)
        files.append(name)
    conds = [(float(d.V_tas), float(d.altitude)) for d in pldi.vertices]
    manifest = format_manifest(conds, files)
    atomic_write(directory / "manifest.txt", manifest)
    return manifest_hash(manifest)


def manifest_hash(text):
    return hashlib.sha256(text.encode()).hexdigest()


def load_pldi(directory):
    directory = Path(directory)
    mpath = directory / "manifest.txt"
    text = _read(mpath)
    lins, discs = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ParseError("manifest lines need 'index V_tas altitude file'", mpath, lineno)
        lin, disc = load_linear_model(directory / parts[3])
        lins.append(lin)
        discs.append(disc)
    return PldiModel(tuple(discs), (), tuple(lins)), manifest_hash(text)


# -- NLDI files ----------------------------------------------------------------

def format_nldi(nldi, manifest_sha=None):
    meta = {"Ts": float(nldi.Ts), "r": nldi.rank}
    if manifest_sha is not None:
        meta["grid_manifest_sha256"] = manifest_sha
    mats = {"PHI0": nldi.Phi0, "G0": nldi.G0,
            "BW": nldi.Bw.reshape(N_STATES, nldi.rank),
            "CZ": nldi.Cz.reshape(nldi.rank, N_STATES),
            "DZ": nldi.Dz.reshape(nldi.rank, N_INPUTS)}
    title = "norm-bounded LDI: x+ = PHI0 x + G0 u + BW w, z = CZ x + DZ u, w = Delta z, |Delta| <= 1"
    return format_matrix_file(meta, mats, title)


def export_nldi(path, nldi, manifest_sha=None):
    atomic_write(path, format_nldi(nldi, manifest_sha))


def import_nldi(path):
    """Read an NLDI archive, validating dimensions, channel count and META."""
    meta, mats = parse_matrix_file(_read(path), path)
    Ts = _meta_float(meta, "Ts", path)
    r_meta = _meta_float(meta, "r", path)
    for name in ("PHI0", "G0", "BW", "CZ", "DZ"):
        if name not in mats:
            raise ParseError(f"missing section [{name}]", path)
    r = mats["BW"].shape[1]
    if r != r_meta:
        raise ValidationError(f"{path}: META r = {r_meta:g} but [BW] has {r} columns")
    if r > MAX_CHANNELS:
        raise ValidationError(f"{path}: channel dimension {r} exceeds {MAX_CHANNELS}")
    extra = {"grid_manifest_sha256": meta["grid_manifest_sha256"][0]} if "grid_manifest_sha256" in meta else {}
    return NldiModel(
        _need(mats, "PHI0", (N_STATES, N_STATES), path), _need(mats, "G0", (N_STATES, N_INPUTS), path),
        _need(mats, "BW", (N_STATES, r), path), _need(mats, "CZ", (r, N_STATES), path),
        _need(mats, "DZ", (r, N_INPUTS), path), Ts, extra)


# -- trim results, reports, trajectories ----------------------------------------

def format_trim(result):
    meta = {"V_tas": float(result.spec.V_tas), "altitude": float(result.spec.altitude),
            "residual_norm": float(result.residual_norm), "iterations": result.iterations}
    return format_matrix_file(meta, {"X_TRIM": result.x_trim[None, :], "U_TRIM": result.u_trim[None, :]},
                              "symmetric level trim")


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


STATE_COLUMNS = tuple(f"{n} [{u}]" for n, u in zip(STATE_NAMES, STATE_UNITS))
SURFACE_COLUMNS = tuple(f"delta_{i} [rad]" for i in range(1, N_SURFACES + 1))


def trajectory_csv(traj):
    """Nonlinear trajectory: time, the 12 states, effective deflections, thrust."""
    header = ("t [s]",) + STATE_COLUMNS + SURFACE_COLUMNS + ("T [N]",)
    rows = np.column_stack([traj.t, traj.x, traj.delta, traj.thrust])
    return _csv_text(header, rows)


def ldi_trajectory_csv(traj):
    """LDI trajectory in deviation coordinates with the uncertainty channels."""
    r = traj.w.shape[1]
    header = (("t [s]",) + tuple(f"d{c}" for c in STATE_COLUMNS)
              + tuple(f"du_{i}" for i in range(1, N_INPUTS + 1))
              + tuple(f"w_{i}" for i in range(1, r + 1)) + tuple(f"z_{i}" for i in range(1, r + 1)))
    n = len(traj.w)
    rows = np.column_stack([traj.t[:n], traj.x[:n], traj.u, traj.w, traj.z])
    return _csv_text(header, rows)


def comparison_csv(comparison):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["output", "max_abs", "rms"])
    for n, m, r in zip(comparison.names, comparison.max_abs, comparison.rms):
        writer.writerow([n, repr(float(m)), repr(float(r))])
    return buf.getvalue()


def coverage_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["vertex", "sigma_max", "residual", "relative_residual"])
    for v in report.vertices:
        writer.writerow([v.index, repr(v.sigma_max), repr(v.residual), repr(v.relative_residual)])
    return buf.getvalue()
