"""Deterministic artifact serialization.

Every float is rendered with 17 significant digits and dictionaries keep
insertion order, so identical runs produce byte-identical JSON and CSV text.
"""

from __future__ import annotations

import math

import numpy as np


def fmt(value: float) -> str:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"refusing to serialize non-finite value {value!r}")
    return format(value, ".17g")


def json_text(obj, indent: int = 2) -> str:
    out: list[str] = []
    _write(obj, out, indent, 0)
    out.append("\n")
    return "".join(out)


def _write(obj, out: list[str], indent: int, level: int) -> None:
    pad = " " * (indent * (level + 1))
    closing = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(fmt(obj))
    elif isinstance(obj, str):
        out.append(_escape(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            out.append(pad)
            out.append(_escape(str(key)))
            out.append(": ")
            _write(value, out, indent, level + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(closing + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        out.append("[\n")
        for i, value in enumerate(seq):
            out.append(pad)
            _write(value, out, indent, level + 1)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(closing + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _escape(text: str) -> str:
    body = "".join(_ESCAPES.get(ch, ch) if ord(ch) >= 0x20 or ch in _ESCAPES
                   else f"\\u{ord(ch):04x}" for ch in text)
    return f'"{body}"'


def csv_text(header: list[str], columns: list[np.ndarray]) -> str:
    columns = [np.asarray(col, dtype=float) for col in columns]
    rows = columns[0].shape[0]
    if any(col.shape != (rows,) for col in columns):
        raise ValueError("all CSV columns must share one length")
    lines = [",".join(header)]
    for k in range(rows):
        lines.append(",".join(fmt(col[k]) for col in columns))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Artifact-specific helpers
# ---------------------------------------------------------------------------

def solution_csv(sol) -> str:
    """Trajectory table: t, u_1..u_m, x_1..x_n."""
    m = sol.u.shape[1]
    n = sol.x.shape[1]
    header = ["t"] + [f"u_{j + 1}" for j in range(m)] + [f"x_{i + 1}" for i in range(n)]
    cols = [sol.grid] + [sol.u[:, j] for j in range(m)] + [sol.x[:, i] for i in range(n)]
    return csv_text(header, cols)


def parse_solution_csv(text: str):
    """Inverse of solution_csv: returns (grid, u, x) arrays."""
    lines = [line for line in text.splitlines() if line.strip()]
    header = lines[0].split(",")
    m = sum(1 for name in header if name.startswith("u_"))
    n = sum(1 for name in header if name.startswith("x_"))
    if header[0] != "t" or 1 + m + n != len(header):
        raise ValueError("unrecognized trajectory CSV header")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return data[:, 0], data[:, 1:1 + m], data[:, 1 + m:1 + m + n]


def trajectory_csv(traj) -> str:
    """Time-optimal table: tau, t, y_1..y_n, w_1..w_m."""
    n = traj.y.shape[1]
    m = traj.w.shape[1]
    header = (["tau", "t"] + [f"y_{i + 1}" for i in range(n)]
              + [f"w_{j + 1}" for j in range(m)])
    cols = ([traj.tau, traj.t_of_tau] + [traj.y[:, i] for i in range(n)]
            + [traj.w[:, j] for j in range(m)])
    return csv_text(header, cols)


def adjoint_csv(adj) -> str:
    """Adjoint table: tau, q, p_1..p_n, H, stat_residual."""
    n = adj.p.shape[1]
    header = ["tau", "q"] + [f"p_{i + 1}" for i in range(n)] + ["H", "stat_residual"]
    cols = ([adj.tau, adj.q] + [adj.p[:, i] for i in range(n)]
            + [adj.hamiltonian, adj.stationarity])
    return csv_text(header, cols)


def probes_csv(probes) -> str:
    """Support probe table: t, y.., d.., support, rho, w.. ."""
    if not probes:
        return "t\n"
    n = probes[0].y.shape[0]
    m = probes[0].argmax_w.shape[0]
    header = (["t"] + [f"y_{i + 1}" for i in range(n)]
              + [f"d_{k}" for k in range(n + 1)]
              + ["support", "rho"] + [f"w_{j + 1}" for j in range(m)])
    cols = [np.array([pr.t for pr in probes])]
    cols += [np.array([pr.y[i] for pr in probes]) for i in range(n)]
    cols += [np.array([pr.direction[k] for pr in probes]) for k in range(n + 1)]
    cols += [np.array([pr.support_value for pr in probes]),
             np.array([pr.argmax_rho for pr in probes])]
    cols += [np.array([pr.argmax_w[j] for pr in probes]) for j in range(m)]
    return csv_text(header, cols)
