"""Independent oracles used to pin expected values in the test suite.

Everything here is written in the most literal way possible (full DP
tables, exhaustive enumeration, an off-the-shelf QP solver) and stays
independent of the implementations it checks.
"""

from __future__ import annotations

import numpy as np


def dp_levenshtein(a: str, b: str) -> int:
    """Edit distance via the full (m+1)x(n+1) dynamic-programming table."""
    m, n = len(a), len(b)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        table[i][0] = i
    for j in range(n + 1):
        table[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + cost,
            )
    return table[m][n]


def brute_char_ngrams(text: str, n: int) -> list[str]:
    """Enumerate length-n windows by an explicit code-point walk."""
    points = list(text)
    return ["".join(points[i : i + n]) for i in range(len(points) - n + 1)]


def brute_word_ngrams(tokens: list[str], n: int) -> list[str]:
    return [" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def brute_count_grams(text: str, tokens: list[str], char_orders, word_orders) -> dict:
    """Count every n-gram of the given orders by brute-force enumeration.

    Returns a map (kind, order, gram) -> count.
    """
    counts: dict[tuple[str, int, str], int] = {}
    for n in sorted(char_orders):
        for g in brute_char_ngrams(text, n):
            key = ("char", n, g)
            counts[key] = counts.get(key, 0) + 1
    for n in sorted(word_orders):
        for g in brute_word_ngrams(tokens, n):
            key = ("word", n, g)
            counts[key] = counts.get(key, 0) + 1
    return counts


def qp_svm(points: np.ndarray, y: np.ndarray, c: float) -> tuple[np.ndarray, float]:
    """Solve the biased hinge-loss SVM as an explicit quadratic program.

    Primal epigraph form over z = (w, b, xi):

        minimize    0.5 ||w||^2 + c * sum(xi)
        subject to  xi >= 0
                    y_i (w . x_i + b) >= 1 - xi_i

    Solved with cvxopt's interior-point QP. A 1e-9 diagonal term keeps the
    KKT system nonsingular; it is far below the 1e-3 comparison tolerance.
    """
    from cvxopt import matrix, solvers

    points = np.asarray(points, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = points.shape
    nz = d + 1 + n

    P = np.zeros((nz, nz))
    P[:d, :d] = np.eye(d)
    P += 1e-9 * np.eye(nz)
    q = np.zeros(nz)
    q[d + 1 :] = c

    # Rows 0..n-1: -xi_i <= 0. Rows n..2n-1: -y_i(w.x_i + b) - xi_i <= -1.
    G = np.zeros((2 * n, nz))
    h = np.zeros(2 * n)
    for i in range(n):
        G[i, d + 1 + i] = -1.0
        G[n + i, :d] = -y[i] * points[i]
        G[n + i, d] = -y[i]
        G[n + i, d + 1 + i] = -1.0
        h[n + i] = -1.0

    solvers.options["show_progress"] = False
    solvers.options["abstol"] = 1e-10
    solvers.options["reltol"] = 1e-10
    solvers.options["feastol"] = 1e-10
    sol = solvers.qp(matrix(P), matrix(q), matrix(G), matrix(h))
    if sol["status"] not in ("optimal", "unknown"):
        raise RuntimeError(f"QP oracle failed: {sol['status']}")
    z = np.array(sol["x"]).ravel()
    return z[:d], float(z[d])
