"""Readers for the optimiser's tabular outputs.

Cell values are kept as the original strings so that a numeric dump of a
table is byte-identical to its input; floats are derived views only.
"""

from __future__ import annotations

from dataclasses import dataclass


class TableError(ValueError):
    pass


@dataclass
class Table:
    header: list[str]
    rows: list[list[str]]

    @classmethod
    def read(cls, path: str) -> "Table":
        with open(path) as handle:
            lines = handle.read().splitlines()
        if not lines:
            raise TableError(f"{path}: empty table")
        header = lines[0].split(",")
        rows = [line.split(",") for line in lines[1:] if line]
        for idx, row in enumerate(rows):
            if len(row) != len(header):
                raise TableError(f"{path}: row {idx + 2} has {len(row)} cells, expected {len(header)}")
        return cls(header=header, rows=rows)

    def dump(self) -> str:
        lines = [",".join(self.header)] + [",".join(row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def column(self, name: str) -> list[str]:
        try:
            idx = self.header.index(name)
        except ValueError:
            raise TableError(f"missing column {name!r}; have {self.header}") from None
        return [row[idx] for row in self.rows]

    def floats(self, name: str) -> list[float]:
        return [float(v) if v != "" else float("nan") for v in self.column(name)]


FRONTIER_COLUMNS = ("n_links", "p_bin", "F", "p", "T_seconds", "scheme_id")


@dataclass
class FrontierTable:
    """Rows of one frontier file, validated against the documented schema."""

    table: Table
    label: str = ""

    @classmethod
    def read(cls, path: str, label: str = "") -> "FrontierTable":
        table = Table.read(path)
        for column in FRONTIER_COLUMNS:
            if column not in table.header:
                raise TableError(f"{path}: missing frontier column {column!r}")
        for t in table.floats("T_seconds"):
            if not t > 0:
                raise TableError(f"{path}: non-positive generation time {t}")
        return cls(table=table, label=label or path)

    @property
    def fidelities(self) -> list[float]:
        return self.table.floats("F")

    @property
    def times(self) -> list[float]:
        return self.table.floats("T_seconds")

    def pareto_curve(self) -> tuple[list[float], list[float]]:
        """Best time at or above each achieved fidelity, fidelity-sorted."""
        pairs = sorted(zip(self.fidelities, self.times), reverse=True)
        out_f, out_t = [], []
        best = float("inf")
        for f, t in pairs:
            best = min(best, t)
            out_f.append(f)
            out_t.append(best)
        return out_f[::-1], out_t[::-1]
