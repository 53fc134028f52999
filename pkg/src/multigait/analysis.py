"""Latent-trajectory distances, embedding export and gait diagrams."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gait_phase import LEG_NAMES

UNIT_TOL = 1e-6


@dataclass(frozen=True)
class LatentTrajectory:
    label: str
    frames: np.ndarray

    def __post_init__(self):
        frames = np.atleast_2d(np.asarray(self.frames, dtype=np.float64))
        if frames.shape[0] == 0:
            raise ValueError("trajectory is empty")
        norms = np.linalg.norm(frames, axis=1)
        if np.max(np.abs(norms - 1.0)) > UNIT_TOL:
            raise ValueError(f"trajectory {self.label!r} has frames off the unit sphere")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return self.frames.shape[0]


def _frames(x) -> np.ndarray:
    arr = x.frames if isinstance(x, LatentTrajectory) else np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] == 0:
        raise ValueError("trajectory is empty")
    return arr


def dtw_distance(a, b) -> float:
    """Classic DTW, Euclidean frame cost, unconstrained window."""
    fa, fb = _frames(a), _frames(b)
    if fa.shape[1] != fb.shape[1]:
        raise ValueError("trajectories have different frame sizes")
    # per-pair vector norm so every cost is rounded the same way regardless of batch shape
    cost = np.array([[np.linalg.norm(x - y) for y in fb] for x in fa])
    n, m = cost.shape
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        row, prev, c = acc[i], acc[i - 1], cost[i - 1]
        for j in range(1, m + 1):
            row[j] = c[j - 1] + min(prev[j], prev[j - 1], row[j - 1])
    return float(acc[n, m])


def distance_matrix(trajs) -> np.ndarray:
    trajs = list(trajs)
    if len(trajs) < 2:
        raise ValueError("need at least two trajectories")
    k = len(trajs)
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            out[i, j] = out[j, i] = dtw_distance(trajs[i], trajs[j])
    return out


def export_embeddings(trajs, path) -> Path:
    """One row per frame: label, frame index, then the latent coordinates."""
    path = Path(path)
    trajs = list(trajs)
    dim = trajs[0].frames.shape[1] if trajs else 16
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "frame", *(f"z{k}" for k in range(dim))])
        for t in trajs:
            for k, z in enumerate(t.frames):
                w.writerow([t.label, k, *(repr(float(v)) for v in z)])
    return path


def export_matrix(labels, matrix, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", *labels])
        for lab, row in zip(labels, np.asarray(matrix)):
            w.writerow([lab, *(repr(float(v)) for v in row)])
    return path


@dataclass(frozen=True)
class GaitDiagram:
    contacts: np.ndarray  # (T, 4) of 0/1
    dt: float = 0.02

    def __post_init__(self):
        c = np.asarray(self.contacts)
        if c.ndim != 2 or c.shape[1] != 4:
            raise ValueError("contact log must have shape (T, 4)")
        object.__setattr__(self, "contacts", (c > 0).astype(np.int8))

    def render_text(self, on: str = "#", off: str = ".") -> str:
        lines = [f"{name:>2} |" + "".join(on if v else off for v in self.contacts[:, k]) + "|"
                 for k, name in enumerate(LEG_NAMES)]
        return "\n".join(lines) + "\n"

    def to_svg(self, cell: float = 4.0, row_height: float = 14.0, title: str = "") -> str:
        T = self.contacts.shape[0]
        left, top = 28.0, 18.0 if title else 4.0
        width, height = left + T * cell + 4, top + 4 * row_height + 4
        parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}">']
        if title:
            parts.append(f'<text x="4" y="13" font-size="11" font-family="monospace">{title}</text>')
        for k, name in enumerate(LEG_NAMES):
            y = top + k * row_height
            parts.append(f'<text x="2" y="{y + row_height - 4:g}" font-size="10" font-family="monospace">{name}</text>')
            t = 0
            while t < T:
                if not self.contacts[t, k]:
                    t += 1
                    continue
                start = t
                while t < T and self.contacts[t, k]:
                    t += 1
                parts.append(f'<rect x="{left + start * cell:g}" y="{y + 1:g}" width="{(t - start) * cell:g}" '
                             f'height="{row_height - 2:g}" fill="black"/>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def contact_match_rate(contacts, schedule) -> float:
    """Fraction of (step, leg) entries whose contact equals the schedule thresholded at one half."""
    c = np.asarray(contacts) > 0
    s = np.asarray(schedule, dtype=np.float64) > 0.5
    if c.shape != s.shape:
        raise ValueError("contact log and schedule must have the same shape")
    return float(np.mean(c == s))


def gait_diagram(contacts, schedule=None, dt: float = 0.02) -> tuple[GaitDiagram, float | None]:
    diagram = GaitDiagram(np.asarray(contacts), dt)
    rate = None if schedule is None else contact_match_rate(contacts, schedule)
    return diagram, rate
