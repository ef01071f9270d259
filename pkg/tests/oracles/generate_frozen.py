"""Regenerate ``frozen.json`` from oracles that do not import connection_lab.

Symbolic curvatures come from sympy, grid stencils from plain ``np.roll``,
null-space dimensions from a dense rank computation, and group elements
from ``scipy.linalg.expm``.  Run from the repository root::

    python3 tests/oracles/generate_frozen.py
"""
import json
from pathlib import Path

import numpy as np
import sympy as sp
from scipy.linalg import expm

OUT = Path(__file__).with_name("frozen.json")

PAULI = [
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]
J_SU2 = [-0.5j * s for s in PAULI]


def pairs(a):
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def su3_table():
    # textbook Gell-Mann structure constants (totally antisymmetric)
    r3 = float(np.sqrt(3.0)) / 2
    return [
        [1, 2, 3, 1.0], [1, 4, 7, 0.5], [1, 5, 6, -0.5], [2, 4, 6, 0.5],
        [2, 5, 7, 0.5], [3, 4, 5, 0.5], [3, 6, 7, -0.5], [4, 5, 8, r3], [6, 7, 8, r3],
    ]


def symbolic_curvature():
    x = sp.symbols("x0:3")
    s = [sp.Matrix([[0, 1], [1, 0]]), sp.Matrix([[0, -sp.I], [sp.I, 0]]), sp.Matrix([[1, 0], [0, -1]])]
    J = [-sp.I / 2 * m for m in s]
    A = [J[0] * x[0] * x[1], J[1] * x[0] ** 2, J[2] * (x[1] - x[2] ** 2)]
    K = [J[2] * x[2], J[0] * x[0], sp.zeros(2, 2)]

    def F(C):
        out = {}
        for m in range(3):
            for n in range(m + 1, 3):
                out[(m, n)] = sp.diff(C[n], x[m]) - sp.diff(C[m], x[n]) + C[m] * C[n] - C[n] * C[m]
        return out

    FA = F(A)
    FB = F([a + k for a, k in zip(A, K)])
    pts = [(0.3, 0.7, 0.2), (1.0, -0.5, 0.25), (0.0, 0.9, -0.4)]
    res = {"points": pts, "F": {}, "F_shift": {}}
    for name, Fd in (("F", FA), ("F_shift", FB)):
        for (m, n), M in Fd.items():
            f = sp.lambdify(x, M, "numpy")
            res[name][f"{m},{n}"] = [pairs(np.array(f(*p), dtype=complex)) for p in pts]
    return res


def grid_curvature(n=8, L=1.0):
    h = L / n
    x0, x1 = np.meshgrid(np.arange(n) * h, np.arange(n) * h, indexing="ij")
    J = J_SU2
    A0 = np.sin(2 * np.pi * x1)[..., None, None] * J[0]
    A1 = np.cos(2 * np.pi * x0)[..., None, None] * J[1] + np.sin(2 * np.pi * (x0 + x1))[..., None, None] * J[2]

    def D(f, ax):
        return (np.roll(f, -1, axis=ax) - np.roll(f, 1, axis=ax)) / (2 * h)

    F01 = D(A1, 0) - D(A0, 1) + A0 @ A1 - A1 @ A0
    return {"n": n, "box_length": L, "F01": pairs(F01)}


def curl_null_dimension(n, d=2):
    """Dimension of the kernel of the centred-difference curl on scalar 1-forms."""
    h = 1.0 / n
    ncols = d * n ** d
    cols = []
    for j in range(ncols):
        e = np.zeros(ncols)
        e[j] = 1.0
        comps = e.reshape((n,) * d + (d,))
        rows = []
        for m in range(d):
            for k in range(m + 1, d):
                dk = (np.roll(comps[..., k], -1, m) - np.roll(comps[..., k], 1, m)) / (2 * h)
                dm = (np.roll(comps[..., m], -1, k) - np.roll(comps[..., m], 1, k)) / (2 * h)
                rows.append((dk - dm).ravel())
        cols.append(np.concatenate(rows))
    M = np.array(cols).T
    return int(ncols - np.linalg.matrix_rank(M, tol=1e-9))


def stabilizer_samples():
    # A = J1 dx0 + J2 dx1, g = exp(alpha J3), alpha = x0 (1 - x0)
    J = J_SU2
    pts = [(0.1, 0.4), (0.5, 0.5), (0.85, 0.2)]
    out = []
    for p in pts:
        a = p[0] * (1 - p[0])
        da = 1 - 2 * p[0]
        g = expm(a * J[2])
        gi = np.linalg.inv(g)
        K0 = g @ J[0] @ gi - J[0] - da * J[2]
        K1 = g @ J[1] @ gi - J[1]
        out.append([pairs(K0), pairs(K1)])
    return {"points": pts, "K": out}


def main():
    data = {
        "su2_structure": [[a + 1, b + 1, c + 1, float(v)] for a in range(3) for b in range(3)
                          for c in range(3) for v in [np.linalg.det(np.eye(3)[[a, b, c]])] if v != 0],
        "su3_structure": su3_table(),
        "symbolic_curvature": symbolic_curvature(),
        "grid_curvature": grid_curvature(),
        "u1_curl_null_dimension": {"4": curl_null_dimension(4), "8": curl_null_dimension(8)},
        "stabilizer_K": stabilizer_samples(),
    }
    OUT.write_text(json.dumps(data, indent=1) + "\n")


if __name__ == "__main__":
    main()
