# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled force kernels for the force-directed layout (hot inner loops).

Same contract as the NumPy fallback: repulsion_exact / repulsion_bh add
degree-scaled repulsion into the force array.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "c"

cdef double EPS = 1e-18
cdef int MAX_DEPTH = 48


def repulsion_exact(double[:, ::1] pos, double[::1] mass, double[:, ::1] force,
                    double k_repulsion):
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t i, j
    cdef double xi, yi, mi, dx, dy, d2, f, fx, fy
    for i in range(n):
        xi = pos[i, 0]
        yi = pos[i, 1]
        mi = mass[i]
        fx = 0.0
        fy = 0.0
        for j in range(i + 1, n):
            dx = xi - pos[j, 0]
            dy = yi - pos[j, 1]
            d2 = dx * dx + dy * dy
            if d2 <= EPS:
                continue
            f = k_repulsion * mi * mass[j] / d2
            fx += f * dx
            fy += f * dy
            force[j, 0] -= f * dx
            force[j, 1] -= f * dy
        force[i, 0] += fx
        force[i, 1] += fy


def repulsion_bh(pos, mass, force, double k_repulsion, double theta):
    """Barnes-Hut approximation: quadtree cells act through their centre of
    mass when cell_size^2 < theta^2 * distance^2."""
    cdef Py_ssize_t n = pos.shape[0]
    if n == 0:
        return
    cdef Py_ssize_t cap = 8 * n + 64
    while True:
        if _bh_impl(pos, mass, force, k_repulsion, theta, cap):
            return
        cap *= 4  # nearly coincident points force deep splits


cdef bint _bh_impl(double[:, ::1] pos, double[::1] mass, double[:, ::1] force,
                   double k_repulsion, double theta, Py_ssize_t cap):
    cdef Py_ssize_t n = pos.shape[0]

    child_arr = np.full((cap, 4), -1, dtype=np.int64)
    cx_arr = np.zeros(cap)
    cy_arr = np.zeros(cap)
    half_arr = np.zeros(cap)
    cmass_arr = np.zeros(cap)
    comx_arr = np.zeros(cap)
    comy_arr = np.zeros(cap)
    count_arr = np.zeros(cap, dtype=np.int64)
    point_arr = np.full(cap, -1, dtype=np.int64)

    cdef long[:, ::1] child = child_arr
    cdef double[::1] ccx = cx_arr
    cdef double[::1] ccy = cy_arr
    cdef double[::1] chalf = half_arr
    cdef double[::1] cmass = cmass_arr
    cdef double[::1] comx = comx_arr
    cdef double[::1] comy = comy_arr
    cdef long[::1] count = count_arr
    cdef long[::1] point = point_arr

    cdef double xmin = pos[0, 0], xmax = pos[0, 0]
    cdef double ymin = pos[0, 1], ymax = pos[0, 1]
    cdef Py_ssize_t i
    for i in range(1, n):
        if pos[i, 0] < xmin: xmin = pos[i, 0]
        if pos[i, 0] > xmax: xmax = pos[i, 0]
        if pos[i, 1] < ymin: ymin = pos[i, 1]
        if pos[i, 1] > ymax: ymax = pos[i, 1]

    cdef Py_ssize_t n_cells = 1
    ccx[0] = (xmin + xmax) / 2.0
    ccy[0] = (ymin + ymax) / 2.0
    chalf[0] = (xmax - xmin if xmax - xmin > ymax - ymin else ymax - ymin) / 2.0 + 1e-9

    cdef Py_ssize_t cell, quadrant, resident, rcell, depth
    cdef double x, y, m, h, rx, ry

    for i in range(n):
        x = pos[i, 0]
        y = pos[i, 1]
        m = mass[i]
        cell = 0
        depth = 0
        while True:
            cmass[cell] += m
            comx[cell] += m * x
            comy[cell] += m * y
            count[cell] += 1
            if count[cell] == 1:
                point[cell] = i
                break
            if depth >= MAX_DEPTH:
                break  # coincident points: opaque cell, represented by its COM
            if point[cell] >= 0:
                # push the resident point of a singleton leaf one level down
                resident = point[cell]
                point[cell] = -1
                rx = pos[resident, 0]
                ry = pos[resident, 1]
                quadrant = (1 if rx >= ccx[cell] else 0) | (2 if ry >= ccy[cell] else 0)
                if child[cell, quadrant] < 0:
                    if n_cells >= cap:
                        return False
                    h = chalf[cell] / 2.0
                    ccx[n_cells] = ccx[cell] + (h if quadrant & 1 else -h)
                    ccy[n_cells] = ccy[cell] + (h if quadrant & 2 else -h)
                    chalf[n_cells] = h
                    child[cell, quadrant] = n_cells
                    n_cells += 1
                rcell = child[cell, quadrant]
                cmass[rcell] += mass[resident]
                comx[rcell] += mass[resident] * rx
                comy[rcell] += mass[resident] * ry
                count[rcell] += 1
                point[rcell] = resident
            quadrant = (1 if x >= ccx[cell] else 0) | (2 if y >= ccy[cell] else 0)
            if child[cell, quadrant] < 0:
                if n_cells >= cap:
                    return False
                h = chalf[cell] / 2.0
                ccx[n_cells] = ccx[cell] + (h if quadrant & 1 else -h)
                ccy[n_cells] = ccy[cell] + (h if quadrant & 2 else -h)
                chalf[n_cells] = h
                child[cell, quadrant] = n_cells
                n_cells += 1
            cell = child[cell, quadrant]
            depth += 1

    stack_arr = np.zeros(4 * MAX_DEPTH + 8, dtype=np.int64)
    cdef long[::1] stack = stack_arr
    cdef Py_ssize_t top, q, c
    cdef double theta2 = theta * theta
    cdef double dx, dy, d2, size, f, fx, fy, mi, xi, yi
    cdef bint is_leaf

    for i in range(n):
        xi = pos[i, 0]
        yi = pos[i, 1]
        mi = mass[i]
        fx = 0.0
        fy = 0.0
        top = 1
        stack[0] = 0
        while top > 0:
            top -= 1
            cell = stack[top]
            if count[cell] == 1 and point[cell] == i:
                continue
            dx = xi - comx[cell] / cmass[cell]
            dy = yi - comy[cell] / cmass[cell]
            d2 = dx * dx + dy * dy
            size = 2.0 * chalf[cell]
            is_leaf = (child[cell, 0] < 0 and child[cell, 1] < 0
                       and child[cell, 2] < 0 and child[cell, 3] < 0)
            if is_leaf or size * size < theta2 * d2:
                if d2 > EPS:
                    f = k_repulsion * mi * cmass[cell] / d2
                    fx += f * dx
                    fy += f * dy
            else:
                for q in range(4):
                    c = child[cell, q]
                    if c >= 0:
                        stack[top] = c
                        top += 1
        force[i, 0] += fx
        force[i, 1] += fy
    return True
