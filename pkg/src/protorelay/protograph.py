"""Protograph base matrices: the AR3A / AR4JA rate families and custom ones."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

FAMILIES = ("ar3a", "ar4ja", "custom")

# column index (0-based) of the punctured node in both AR families
_AR_PUNCTURED = 1

_AR3A_HEAD = [[1, 2, 1, 0, 0], [0, 2, 1, 1, 1], [0, 1, 2, 1, 1]]
_AR3A_TAIL = [(0, 0), (2, 1), (1, 2)]
_AR4JA_HEAD = [[1, 2, 0, 0, 0], [0, 3, 1, 1, 1], [0, 1, 2, 2, 1]]
_AR4JA_TAIL = [(0, 0), (3, 1), (1, 3)]


@dataclass(frozen=True, eq=False)
class BaseMatrix:
    """Edge-multiplicity matrix of a protograph.

    ``entries[i, j]`` is the number of parallel edges between check node i
    and variable node j; ``punctured[j]`` marks variable nodes that are never
    transmitted.
    """

    entries: np.ndarray
    punctured: np.ndarray
    family: str = "custom"
    n: int = 0

    def __post_init__(self):
        b = np.array(self.entries, dtype=np.int64)
        p = np.array(self.punctured, dtype=bool)
        if b.ndim != 2:
            raise ValueError("base matrix must be two-dimensional")
        m, n_cols = b.shape
        if p.shape != (n_cols,):
            raise ValueError("puncture flags must have one entry per column")
        if m >= n_cols:
            raise ValueError(f"need fewer rows than columns, got {m}x{n_cols}")
        if (b < 0).any():
            raise ValueError("edge multiplicities must be non-negative")
        if (b.sum(axis=0) == 0).any():
            raise ValueError("every column needs at least one edge")
        if (b.sum(axis=1) == 0).any():
            raise ValueError("every row needs at least one edge")
        if p.all():
            raise ValueError("at least one column must be transmitted")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        b.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "entries", b)
        object.__setattr__(self, "punctured", p)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def n_punctured(self) -> int:
        return int(self.punctured.sum())

    @property
    def transmitted(self) -> np.ndarray:
        """0/1 label per column, 0 for punctured nodes."""
        return (~self.punctured).astype(np.int64)

    def column_degrees(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    def row_degrees(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    @property
    def n_edges(self) -> int:
        return int(self.entries.sum())

    @property
    def label(self) -> str:
        if self.family == "custom":
            return f"custom{self.rows}x{self.cols}"
        return f"{self.family}-n{self.n}"

    def __eq__(self, other):
        if not isinstance(other, BaseMatrix):
            return NotImplemented
        return (np.array_equal(self.entries, other.entries)
                and np.array_equal(self.punctured, other.punctured))

    def __hash__(self):
        return hash((self.entries.tobytes(), self.entries.shape, self.punctured.tobytes()))

    def to_text(self) -> str:
        """Plain-text form: "M N", M rows of multiplicities, then puncture flags."""
        lines = [f"{self.rows} {self.cols}"]
        lines += [" ".join(str(v) for v in row) for row in self.entries]
        lines.append(" ".join(str(int(v)) for v in self.punctured))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BaseMatrix":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise ValueError("first line must be 'M N'")
        m, n_cols = int(rows[0][0]), int(rows[0][1])
        if len(rows) != m + 2:
            raise ValueError(f"expected {m} matrix rows plus a puncture row, got {len(rows) - 1} lines")
        body = np.array([[int(v) for v in r] for r in rows[1:m + 1]])
        if body.shape != (m, n_cols):
            raise ValueError(f"matrix body is {body.shape}, header says {(m, n_cols)}")
        flags = [int(v) for v in rows[m + 1]]
        if len(flags) != n_cols or any(f not in (0, 1) for f in flags):
            raise ValueError("puncture row must hold N flags in {0, 1}")
        return cls(body, np.array(flags, dtype=bool))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "BaseMatrix":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def _ar_family(head, tail, n: int, family: str) -> BaseMatrix:
    if n < 0:
        raise ValueError("extension index n must be non-negative")
    b = np.zeros((3, 5 + 2 * n), dtype=np.int64)
    b[:, :5] = head
    for k in range(n):
        for i, pair in enumerate(tail):
            b[i, 5 + 2 * k:7 + 2 * k] = pair
    punct = np.zeros(5 + 2 * n, dtype=bool)
    punct[_AR_PUNCTURED] = True
    return BaseMatrix(b, punct, family=family, n=n)


def build_ar3a(n: int) -> BaseMatrix:
    """AR3A protograph of rate (n+1)/(n+2); column 2 (1-based) punctured."""
    return _ar_family(_AR3A_HEAD, _AR3A_TAIL, n, "ar3a")


def build_ar4ja(n: int) -> BaseMatrix:
    """AR4JA protograph of rate (n+1)/(n+2); column 2 (1-based) punctured."""
    return _ar_family(_AR4JA_HEAD, _AR4JA_TAIL, n, "ar4ja")


def build(family: str, n: int) -> BaseMatrix:
    family = family.lower()
    if family == "ar3a":
        return build_ar3a(n)
    if family == "ar4ja":
        return build_ar4ja(n)
    raise ValueError(f"no constructor for family {family!r}")


def code_rate(base: BaseMatrix) -> Fraction:
    """Design rate (N - M) / (N - #punctured) as an exact fraction."""
    m, n_cols = base.rows, base.cols
    sent = n_cols - base.n_punctured
    if sent <= 0 or n_cols <= m:
        raise ValueError("base matrix has no positive design rate")
    return Fraction(n_cols - m, sent)
