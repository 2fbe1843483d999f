"""Published experimental data (pure-state and mixed-state tables), checksummed."""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .measures import binary_entropy

_FILES = {
    "S1": ("table_s1.csv", "764b71db919a337fdda5b6b64a3742cae23871d769a69f0f19668cd621713e99"),
    "S2": ("table_s2.csv", "8b28ded16544ac2304ceaa2dc1891ccfdd955cf4b4ba1ff95a791e173f960944"),
}


@dataclass(frozen=True)
class ReferenceRow:
    key: float
    c_initial: float | None
    discord: float
    c_final: float


@dataclass(frozen=True)
class ReferenceTable:
    """S1 is keyed by theta in degrees, S2 by crystal thickness l with measured C_I."""

    name: str
    rows: tuple[ReferenceRow, ...]

    @property
    def keys(self) -> list[float]:
        return [r.key for r in self.rows]

    @property
    def key_name(self) -> str:
        return "theta" if self.name == "S1" else "l"

    def ideal(self) -> np.ndarray:
        """Coherence an ideal cycle would give at each row.

        S1 has no C_I column, so it is computed as h(cos^2 2 theta); S2 uses
        its measured C_I.
        """
        if self.name == "S1":
            return np.array([binary_entropy(np.cos(np.radians(2 * r.key)) ** 2) for r in self.rows])
        return np.array([r.c_initial for r in self.rows])

    def raw_text(self) -> str:
        return _read(self.name)


def _read(name: str) -> str:
    if name not in _FILES:
        raise KeyError(f"unknown table {name!r}; expected one of {sorted(_FILES)}")
    filename, digest = _FILES[name]
    data = resources.files("coherence_cycle.data").joinpath(filename).read_bytes()
    if hashlib.sha256(data).hexdigest() != digest:
        raise RuntimeError(f"checksum mismatch for embedded table {filename}")
    return data.decode()


def load_table(name: str) -> ReferenceTable:
    rows = []
    for rec in csv.DictReader(io.StringIO(_read(name))):
        c_i = rec.get("c_initial")
        rows.append(
            ReferenceRow(
                key=float(rec["key"]),
                c_initial=float(c_i) if c_i else None,
                discord=float(rec["discord"]),
                c_final=float(rec["c_final"]),
            )
        )
    table = ReferenceTable(name, tuple(rows))
    expected = 15 if name == "S1" else 10
    if len(table.rows) != expected:
        raise RuntimeError(f"table {name} has {len(table.rows)} rows, expected {expected}")
    return table
