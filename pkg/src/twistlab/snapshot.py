"""TLAB1 field snapshots.

Header line::

    TLAB1 dim N1..Nd L1..Ld a1..ad m parity

followed by one row of ``m`` samples per node, axis 0 varying fastest.
Samples are written with 17 significant digits so float64 values round-trip
exactly.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .torus_grid import SampledField, TorusGrid, new_grid, parity_name, parse_parity

MAGIC = "TLAB1"


class SnapshotError(ValueError):
    pass


def format_header(grid: TorusGrid, m: int, parity: int) -> str:
    parts = [MAGIC, str(grid.dim)]
    parts += [str(n) for n in grid.sizes]
    parts += [repr(float(L)) for L in grid.lengths]
    parts += [str(a) for a in grid.parities]
    parts += [str(m), parity_name(parity)]
    return " ".join(parts)


def parse_header(line: str) -> tuple[TorusGrid, int, int]:
    tok = line.split()
    if not tok or tok[0] != MAGIC:
        raise SnapshotError(f"not a {MAGIC} snapshot (header {line[:40]!r})")
    try:
        dim = int(tok[1])
        if len(tok) != 4 + 3 * dim:
            raise SnapshotError(f"header has {len(tok)} tokens, expected {4 + 3 * dim}")
        sizes = [int(t) for t in tok[2 : 2 + dim]]
        lengths = [float(t) for t in tok[2 + dim : 2 + 2 * dim]]
        parities = [int(t) for t in tok[2 + 2 * dim : 2 + 3 * dim]]
        m = int(tok[2 + 3 * dim])
        parity = parse_parity(tok[3 + 3 * dim])
        grid = new_grid(dim, sizes, lengths, parities)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, SnapshotError):
            raise
        raise SnapshotError(f"malformed {MAGIC} header: {exc}") from exc
    return grid, m, parity


def dumps(f: SampledField) -> str:
    rows = f.values.reshape(f.components, -1, order="F").T
    buf = io.StringIO()
    buf.write(format_header(f.grid, f.components, f.parity) + "\n")
    np.savetxt(buf, rows, fmt="%.17g")
    return buf.getvalue()


def loads(text: str) -> SampledField:
    header, _, body = text.partition("\n")
    grid, m, parity = parse_header(header)
    try:
        data = np.loadtxt(io.StringIO(body), ndmin=2)
    except ValueError as exc:
        raise SnapshotError(f"unreadable sample rows: {exc}") from exc
    if data.shape != (grid.num_nodes, m):
        raise SnapshotError(f"expected {grid.num_nodes} rows of {m} samples, got {data.shape}")
    values = data.T.reshape((m, *grid.sizes), order="F")
    return SampledField(grid, values, parity)


def write(path: str | Path, f: SampledField) -> Path:
    path = Path(path)
    path.write_text(dumps(f))
    return path


def read(path: str | Path) -> SampledField:
    return loads(Path(path).read_text())
