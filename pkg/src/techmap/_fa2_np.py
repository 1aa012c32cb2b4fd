"""NumPy force kernels for the force-directed layout.

Fallback used when the compiled extension is unavailable; same contract as
the C kernel: both functions add degree-scaled repulsion (k * m_i * m_j / d
along the separation vector) into the force array. Exact mode is the
O(n^2) reference; Barnes-Hut approximates far-field groups by their centre
of mass when cell_size / distance < theta.
"""
from __future__ import annotations

import numpy as np

BACKEND = "numpy"

_EPS = 1e-18
_MAX_DEPTH = 48


def repulsion_exact(pos, mass, force, k_repulsion):
    n = pos.shape[0]
    px = np.ascontiguousarray(pos[:, 0])
    py = np.ascontiguousarray(pos[:, 1])
    block = 512
    for start in range(0, n, block):
        end = min(start + block, n)
        dx = px[start:end, None] - px[None, :]
        dy = py[start:end, None] - py[None, :]
        d2 = dx * dx + dy * dy
        f = k_repulsion * mass[start:end, None] * mass[None, :]
        np.divide(f, d2, out=f, where=d2 > _EPS)
        f[d2 <= _EPS] = 0.0  # self pairs and coincident points
        force[start:end, 0] += np.sum(f * dx, axis=1)
        force[start:end, 1] += np.sum(f * dy, axis=1)


class _Cell:
    __slots__ = ("cx", "cy", "half", "mass", "com_x", "com_y", "count", "children", "point")

    def __init__(self, cx, cy, half):
        self.cx = cx
        self.cy = cy
        self.half = half
        self.mass = 0.0
        self.com_x = 0.0
        self.com_y = 0.0
        self.count = 0
        self.children = None  # list of 4 or None
        self.point = -1       # index for singleton leaves


def _quadrant(cell, x, y):
    return (1 if x >= cell.cx else 0) | (2 if y >= cell.cy else 0)


def _child(cell, quadrant):
    if cell.children is None:
        cell.children = [None, None, None, None]
    child = cell.children[quadrant]
    if child is None:
        h = cell.half / 2.0
        cx = cell.cx + (h if quadrant & 1 else -h)
        cy = cell.cy + (h if quadrant & 2 else -h)
        child = _Cell(cx, cy, h)
        cell.children[quadrant] = child
    return child


def _build_tree(pos, mass):
    n = pos.shape[0]
    xmin, ymin = pos.min(axis=0)
    xmax, ymax = pos.max(axis=0)
    half = max(xmax - xmin, ymax - ymin) / 2.0 + 1e-9
    root = _Cell((xmin + xmax) / 2.0, (ymin + ymax) / 2.0, half)
    for i in range(n):
        x, y, m = pos[i, 0], pos[i, 1], mass[i]
        cell = root
        depth = 0
        while True:
            cell.mass += m
            cell.com_x += m * x
            cell.com_y += m * y
            cell.count += 1
            if cell.count == 1:
                cell.point = i
                break
            if depth >= _MAX_DEPTH:
                break  # coincident points: cell stays opaque, uses its COM
            if cell.point >= 0:
                # split the singleton: push the resident point one level down
                resident = cell.point
                cell.point = -1
                rx, ry = pos[resident, 0], pos[resident, 1]
                rcell = _child(cell, _quadrant(cell, rx, ry))
                rcell.mass += mass[resident]
                rcell.com_x += mass[resident] * rx
                rcell.com_y += mass[resident] * ry
                rcell.count += 1
                rcell.point = resident
            cell = _child(cell, _quadrant(cell, x, y))
            depth += 1
    return root


def repulsion_bh(pos, mass, force, k_repulsion, theta):
    root = _build_tree(pos, mass)
    n = pos.shape[0]
    theta2 = theta * theta
    for i in range(n):
        x, y, m = pos[i, 0], pos[i, 1], mass[i]
        fx = fy = 0.0
        stack = [root]
        while stack:
            cell = stack.pop()
            if cell.count == 1 and cell.point == i:
                continue
            dx = x - cell.com_x / cell.mass
            dy = y - cell.com_y / cell.mass
            d2 = dx * dx + dy * dy
            size = 2.0 * cell.half
            if cell.children is None or size * size < theta2 * d2:
                if d2 > _EPS:
                    f = k_repulsion * m * cell.mass / d2
                    fx += f * dx
                    fy += f * dy
            else:
                for child in cell.children:
                    if child is not None:
                        stack.append(child)
        force[i, 0] += fx
        force[i, 1] += fy
