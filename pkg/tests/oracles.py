"""Independent reference computations used only by the tests."""

import itertools
import math

import numpy as np
import sympy as sp


def permanent(m: np.ndarray) -> complex:
    n = m.shape[0]
    if n == 0:
        return 1.0
    return sum(
        math.prod(m[i, perm[i]] for i in range(n)) for perm in itertools.permutations(range(n))
    )


def transition_amplitude(u: np.ndarray, n_in, n_out) -> complex:
    """<n_out| U |n_in> for a passive linear map via the permanent formula.

    ``u[i, j]`` is the amplitude for a photon entering channel ``i`` to leave
    in channel ``j``.
    """
    if sum(n_in) != sum(n_out):
        return 0.0
    rows = [i for i, n in enumerate(n_in) for _ in range(n)]
    cols = [j for j, n in enumerate(n_out) for _ in range(n)]
    sub = u[np.ix_(rows, cols)]
    norm = math.sqrt(
        math.prod(math.factorial(n) for n in n_in) * math.prod(math.factorial(n) for n in n_out)
    )
    return permanent(sub) / norm


def symbolic_fock_expansion(rows, counts):
    """Expand prod_i (sum_j rows[i][j] b_j^dag)^counts[i] / sqrt(counts[i]!) |0>.

    Returns ``{output occupation tuple: amplitude}`` computed with sympy.
    """
    k = len(rows[0])
    b = sp.symbols(f"b0:{k}")
    expr = sp.Integer(1)
    for row, n in zip(rows, counts):
        expr *= sum(sp.nsimplify(c) * b[j] for j, c in enumerate(row)) ** n / sp.sqrt(sp.factorial(n))
    poly = sp.Poly(sp.expand(expr), *b)
    out = {}
    for mono, coeff in poly.terms():
        bose = sp.sqrt(sp.prod([sp.factorial(e) for e in mono]))
        out[tuple(mono)] = complex(sp.N(coeff * bose, 30))
    return out


def dense_partial_trace(rho: np.ndarray, dims, keep) -> np.ndarray:
    n = len(dims)
    t = rho.reshape(list(dims) * 2)
    traced = [i for i in range(n) if i not in keep]
    for count, i in enumerate(sorted(traced, reverse=True)):
        t = np.trace(t, axis1=i, axis2=i + t.ndim // 2)
    d = int(np.prod([dims[i] for i in keep]))
    return t.reshape(d, d)


def trace_norm_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.linalg.eigvalsh(a - b)).sum())
