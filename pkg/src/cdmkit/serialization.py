"""Plain-text persistence for samples, star sets, and reconstructions.

All writers format floats with ``repr`` (shortest round-trip form), so a
fixed computation produces byte-identical files across runs.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .degradation import AffineMap
from .errors import ReportParseError
from .geometry import Side, StarSetApprox
from .identification import CdmReconstruction, EffectivePair, ModeReconstruction
from .simulation import ControlSample

MAGIC = "cdm-reconstruction v1"
STAR_HEADER = "center,dim,L,side"


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_vec(v) -> str:
    return ",".join(_fmt(x) for x in np.atleast_1d(v))


# ---------------------------------------------------------------------------
# Sample logs


def write_samples(path, samples: Sequence[ControlSample]) -> None:
    """Write observations as CSV rows ``time, state.., velocity.., input..``."""
    if not samples:
        raise ValueError("no samples to write")
    n = samples[0].state.shape[0]
    m = samples[0].input.shape[0]
    header = (
        ["time"]
        + [f"x{i}" for i in range(n)]
        + [f"dx{i}" for i in range(n)]
        + [f"u{i}" for i in range(m)]
    )
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for s in samples:
            row = [_fmt(s.time)] + [_fmt(x) for x in s.state] \
                + [_fmt(x) for x in s.velocity] + [_fmt(x) for x in s.input]
            fh.write(",".join(row) + "\n")


def read_samples(path) -> list[ControlSample]:
    """Read a sample log written by :func:`write_samples`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ReportParseError("empty sample log", line=1)
    header = lines[0].split(",")
    n = sum(1 for c in header if c.startswith("x") and not c.startswith("dx"))
    m = sum(1 for c in header if c.startswith("u"))
    if n == 0 or m == 0 or len(header) != 1 + 2 * n + m:
        raise ReportParseError("malformed sample log header", line=1)
    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        vals = [float(tok) for tok in line.split(",")]
        if len(vals) != 1 + 2 * n + m:
            raise ReportParseError("sample row has wrong column count", line=lineno)
        samples.append(
            ControlSample(
                time=vals[0],
                state=np.array(vals[1 : 1 + n]),
                velocity=np.array(vals[1 + n : 1 + 2 * n]),
                input=np.array(vals[1 + 2 * n :]),
            )
        )
    return samples


# ---------------------------------------------------------------------------
# Star-set approximations


def star_to_lines(approx: StarSetApprox) -> list[str]:
    """Serialize: header, one metadata line, then one direction,radius row each."""
    meta = (
        _fmt_vec(approx.center)
        + f",{approx.dim},{_fmt(approx.lipschitz)},{approx.side.value}"
    )
    lines = [STAR_HEADER, meta, f"samples,{approx.n_samples}"]
    for l, r in zip(approx.directions, approx.radii):
        lines.append(_fmt_vec(l) + "," + _fmt(r))
    return lines


class _Cursor:
    """Line reader that tracks line numbers for parse diagnostics."""

    def __init__(self, lines: Sequence[str], start: int = 1):
        self.lines = lines
        self.pos = 0
        self.start = start

    @property
    def lineno(self) -> int:
        return self.start + self.pos

    def next(self, expect: str | None = None) -> str:
        if self.pos >= len(self.lines):
            what = f"expected {expect!r}" if expect else "unexpected end of file"
            raise ReportParseError(f"truncated input, {what}", line=self.lineno)
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def expect(self, literal: str) -> None:
        line = self.next(expect=literal)
        if line != literal:
            raise ReportParseError(
                f"expected {literal!r}, found {line!r}", line=self.lineno - 1
            )


def _floats(text: str, lineno: int) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok != ""]
    except ValueError:
        raise ReportParseError(f"cannot parse numbers from {text!r}", line=lineno)


def star_from_cursor(cur: _Cursor) -> StarSetApprox:
    cur.expect(STAR_HEADER)
    meta_line = cur.next(expect="star metadata")
    fields = meta_line.split(",")
    if len(fields) < 4:
        raise ReportParseError("star metadata line too short", line=cur.lineno - 1)
    dim = len(fields) - 3
    try:
        declared_dim = int(fields[dim])
    except ValueError:
        raise ReportParseError("star metadata dim is not an integer", line=cur.lineno - 1)
    if declared_dim != dim:
        raise ReportParseError(
            f"star metadata declares dim {declared_dim}, line implies {dim}",
            line=cur.lineno - 1,
        )
    center = np.array(_floats(",".join(fields[:dim]), cur.lineno - 1))
    lipschitz = float(fields[dim + 1])
    side_token = fields[dim + 2]
    try:
        side = Side(side_token)
    except ValueError:
        raise ReportParseError(f"unknown side {side_token!r}", line=cur.lineno - 1)
    count_line = cur.next(expect="samples,<count>")
    if not count_line.startswith("samples,"):
        raise ReportParseError("expected 'samples,<count>'", line=cur.lineno - 1)
    count = int(count_line.split(",", 1)[1])
    dirs, radii = [], []
    for _ in range(count):
        vals = _floats(cur.next(expect="direction,radius row"), cur.lineno - 1)
        if len(vals) != dim + 1:
            raise ReportParseError("sample row has wrong arity", line=cur.lineno - 1)
        dirs.append(vals[:dim])
        radii.append(vals[dim])
    return StarSetApprox(
        center=center,
        lipschitz=lipschitz,
        directions=np.array(dirs) if dirs else np.empty((0, dim)),
        radii=np.array(radii),
        side=side,
    )


def write_star(path, approx: StarSetApprox) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(star_to_lines(approx)) + "\n")


def read_star(path) -> StarSetApprox:
    with open(path) as fh:
        lines = fh.read().splitlines()
    return star_from_cursor(_Cursor(lines))


# ---------------------------------------------------------------------------
# Reconstruction reports


def reconstruction_to_lines(recon: CdmReconstruction) -> list[str]:
    lines = [
        MAGIC,
        f"input_dim,{recon.input_dim}",
        f"mode_count,{recon.mode_count}",
        f"separation,{_fmt(recon.separation)}",
        f"modes,{len(recon.modes)}",
        f"unaffected,{len(recon.unaffected)}",
    ]
    for i, mode in enumerate(recon.modes):
        lines.append(f"[mode {i}]")
        lines.append(f"identified,{int(mode.identified)}")
        if mode.identified:
            lines.append("linear," + _fmt_vec(mode.map.linear.ravel()))
            lines.append("translation," + _fmt_vec(mode.map.translation))
            lines.append("residual," + _fmt(mode.residual))
        lines.append(f"pairs,{len(mode.pairs)}")
        for p in mode.pairs:
            lines.append("pair," + _fmt_vec(p.input) + "," + _fmt_vec(p.effective))
        lines.append("[inner]")
        lines.extend(star_to_lines(mode.inner))
        lines.append("[outer]")
        lines.extend(star_to_lines(mode.outer))
        lines.append(f"[end mode {i}]")
    lines.append("[unaffected]")
    for p in recon.unaffected:
        lines.append("pair," + _fmt_vec(p.input) + "," + _fmt_vec(p.effective))
    lines.append("[end unaffected]")
    return lines


def write_reconstruction(path, recon: CdmReconstruction) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(reconstruction_to_lines(recon)) + "\n")


def _parse_pair(line: str, lineno: int, m: int) -> EffectivePair:
    if not line.startswith("pair,"):
        raise ReportParseError("expected a 'pair,' row", line=lineno)
    vals = _floats(line[len("pair,"):], lineno)
    if len(vals) != 2 * m:
        raise ReportParseError("pair row has wrong arity", line=lineno)
    return EffectivePair(np.array(vals[:m]), np.array(vals[m:]))


def _scalar(cur: _Cursor, key: str) -> str:
    line = cur.next(expect=f"{key},<value>")
    if not line.startswith(key + ","):
        raise ReportParseError(f"expected '{key},<value>'", line=cur.lineno - 1)
    return line.split(",", 1)[1]


def reconstruction_from_lines(lines: Sequence[str]) -> CdmReconstruction:
    cur = _Cursor(lines)
    cur.expect(MAGIC)
    m = int(_scalar(cur, "input_dim"))
    mode_count = int(_scalar(cur, "mode_count"))
    separation = float(_scalar(cur, "separation"))
    n_modes = int(_scalar(cur, "modes"))
    n_unaffected = int(_scalar(cur, "unaffected"))
    modes = []
    for i in range(n_modes):
        cur.expect(f"[mode {i}]")
        identified = bool(int(_scalar(cur, "identified")))
        affine = None
        if identified:
            lin = _floats(_scalar(cur, "linear"), cur.lineno - 1)
            if len(lin) != m * m:
                raise ReportParseError("linear row has wrong arity", line=cur.lineno - 1)
            trans = _floats(_scalar(cur, "translation"), cur.lineno - 1)
            affine = AffineMap(np.array(lin).reshape(m, m), np.array(trans))
            float(_scalar(cur, "residual"))  # informational; recomputed from pairs
        n_pairs = int(_scalar(cur, "pairs"))
        pairs = tuple(
            _parse_pair(cur.next(expect="pair row"), cur.lineno - 1, m)
            for _ in range(n_pairs)
        )
        cur.expect("[inner]")
        inner = star_from_cursor(cur)
        cur.expect("[outer]")
        outer = star_from_cursor(cur)
        cur.expect(f"[end mode {i}]")
        residuals = None
        if affine is not None:
            residuals = np.array([
                np.linalg.norm(affine.translation + affine.linear @ p.input - p.effective)
                for p in pairs
            ])
        modes.append(
            ModeReconstruction(
                map=affine, inner=inner, outer=outer, pairs=pairs, residuals=residuals
            )
        )
    cur.expect("[unaffected]")
    unaffected = tuple(
        _parse_pair(cur.next(expect="pair row"), cur.lineno - 1, m)
        for _ in range(n_unaffected)
    )
    cur.expect("[end unaffected]")
    return CdmReconstruction(
        modes=tuple(modes),
        unaffected=unaffected,
        separation=separation,
        mode_count=mode_count,
        input_dim=m,
    )


def read_reconstruction(path) -> CdmReconstruction:
    with open(path) as fh:
        lines = fh.read().splitlines()
    return reconstruction_from_lines(lines)
