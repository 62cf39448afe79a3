"""Dense trajectory container and its delimited on-disk form.

A Trajectory is the sampled output of one extremal integration: grid of
the independent variable, states, costates, controls and the Hamiltonian,
all with one row per node.  The CSV schema (stable, consumed by the
plotting toolkit) is::

    t, r, L, l, w, gamma, chi,
    p_r, p_L, p_l, p_w, p_gamma, p_chi,
    u, beta, u1, u2, H

For abscissa-domain (reduced problem) trajectories the first column is
named ``s``, there is no w / p_w column, and the control columns are the
same.  Floats are written with repr precision; no locale, '.' decimal.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

FULL_COLUMNS = (
    "t", "r", "L", "l", "w", "gamma", "chi",
    "p_r", "p_L", "p_l", "p_w", "p_gamma", "p_chi",
    "u", "beta", "u1", "u2", "H",
)

SIMPLIFIED_COLUMNS = (
    "s", "r", "L", "l", "gamma", "chi",
    "p_r", "p_L", "p_l", "p_gamma", "p_chi",
    "u", "beta", "u1", "u2", "H",
)


@dataclass
class Trajectory:
    """Sampled extremal; kind is "full" (time domain) or "simplified"."""

    kind: str
    grid: np.ndarray            # (N+1,) independent variable samples
    states: np.ndarray          # (N+1, 6) or (N+1, 5)
    costates: np.ndarray        # same shape as states
    u: np.ndarray               # lift-coefficient modulus command
    beta: np.ndarray            # bank angle [rad]
    hamiltonian: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.grid.shape[0]
        for name in ("states", "costates", "u", "beta", "hamiltonian"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"{name} length does not match grid")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")

    @property
    def u1(self) -> np.ndarray:
        return self.u * np.cos(self.beta)

    @property
    def u2(self) -> np.ndarray:
        return self.u * np.sin(self.beta)

    @property
    def gamma(self) -> np.ndarray:
        return self.states[:, 4 if self.kind == "full" else 3]

    @property
    def columns(self) -> tuple[str, ...]:
        return FULL_COLUMNS if self.kind == "full" else SIMPLIFIED_COLUMNS

    def rows(self) -> np.ndarray:
        """Row matrix in CSV column order."""
        return np.column_stack([
            self.grid, self.states, self.costates,
            self.u, self.beta, self.u1, self.u2, self.hamiltonian,
        ])

    def to_csv(self, path) -> None:
        rows = self.rows()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in rows:
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            data = np.array([[float(v) for v in row] for row in reader])
        if tuple(header) == FULL_COLUMNS:
            kind, ns = "full", 6
        elif tuple(header) == SIMPLIFIED_COLUMNS:
            kind, ns = "simplified", 5
        else:
            raise ValueError(f"unrecognized trajectory header: {header}")
        return cls(
            kind=kind,
            grid=data[:, 0],
            states=data[:, 1:1 + ns],
            costates=data[:, 1 + ns:1 + 2 * ns],
            u=data[:, 1 + 2 * ns],
            beta=data[:, 2 + 2 * ns],
            hamiltonian=data[:, 5 + 2 * ns],
        )
