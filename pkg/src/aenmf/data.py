"""Modality containers and plain-text matrix I/O."""

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError
from .graph import GraphPrior, build_graph_prior
from .linalg import as_dense


@dataclass
class ModalityData:
    """One modality: features ``X`` (d x n, samples as columns) and its graph prior."""

    X: np.ndarray
    name: str = "view"
    prior: GraphPrior = field(default=None, repr=False)

    def __post_init__(self):
        self.X = as_dense(self.X, self.name)

    @property
    def n_samples(self):
        return self.X.shape[1]

    def graph(self, **kwargs):
        """Build (once) and return the k-NN graph prior."""
        if self.prior is None:
            self.prior = build_graph_prior(self.X, **kwargs)
        return self.prior


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def parse_matrix(text, orientation="samples-as-rows", source="<string>"):
    """Parse comma-separated numeric text into a d x n matrix.

    A first row containing any non-numeric cell is treated as a header.
    """
    if orientation not in ("samples-as-rows", "samples-as-columns"):
        raise ParseError(f"unknown orientation {orientation!r}")
    rows = []
    width = None
    first = True
    for lineno, cells in enumerate(csv.reader(io.StringIO(text)), start=1):
        cells = [c.strip() for c in cells]
        if not cells or all(c == "" for c in cells):
            continue
        if first:
            first = False
            if not all(_is_number(c) for c in cells):
                continue
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise ParseError(f"{source}: line {lineno} has {len(cells)} fields, expected {width}")
        values = []
        for col, cell in enumerate(cells, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise ParseError(f"{source}: non-numeric cell {cell!r} at line {lineno}, column {col}") from None
        rows.append(values)
    if not rows:
        raise ParseError(f"{source}: no numeric rows")
    M = np.array(rows, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ParseError(f"{source}: non-finite values")
    return M.T.copy() if orientation == "samples-as-rows" else M


def load_matrix(path, orientation="samples-as-rows"):
    """Read a comma-separated matrix file; the result has samples as columns."""
    path = Path(path)
    return parse_matrix(path.read_text(), orientation, source=str(path))


def format_matrix(M, orientation="samples-as-rows"):
    M = np.asarray(M, dtype=float)
    if orientation == "samples-as-rows":
        M = M.T
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in M)


def save_matrix(path, M, orientation="samples-as-rows"):
    """Write ``M`` (samples as columns) with shortest round-trip float text."""
    Path(path).write_text(format_matrix(M, orientation))


def load_labels(path):
    """One integer label per line; blank lines are ignored."""
    labels = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            labels.append(int(line))
        except ValueError:
            raise ParseError(f"{path}: line {lineno} is not an integer label: {line!r}") from None
    return np.array(labels, dtype=int)


def save_labels(path, labels):
    Path(path).write_text("".join(f"{int(x)}\n" for x in labels))
