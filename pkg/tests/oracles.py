"""Independent reference computations used by the tests.

None of these share code paths with the package: they use literal loops,
truncated series and dense eigensolvers.
"""

import numpy as np


def neumann_inverse(a, terms=200):
    """Sum_{p=0..terms} A^p."""
    a = np.asarray(a, dtype=float)
    total = np.eye(a.shape[0])
    power = np.eye(a.shape[0])
    for _ in range(terms):
        power = power @ a
        total = total + power
    return total


def coefficients_loop(use, output):
    n = len(output)
    a = np.zeros((n, n))
    for h in range(n):
        for k in range(n):
            a[h, k] = use[h][k] / output[k] if output[k] != 0 else 0.0
    return a


def embodied_flows_loop(c, linv, f, n_sec, n_eco):
    """W[(a,i),(b,j)] by a literal loop over i, j, a, b and the inner sum over e."""
    n = n_sec * n_eco
    w = np.zeros((n, n))
    for a in range(n_eco):
        for b in range(n_eco):
            for i in range(n_sec):
                for j in range(n_sec):
                    s = 0.0
                    for e in range(n_eco):
                        s += c[i][e] * linv[e * n_sec + i][a * n_sec + j]
                    q = s * f[a * n_sec + j][b]
                    w[a * n_sec + i, b * n_sec + j] = q if q > 0 else 0.0
    return w


def strengths_from_edges(w, n_sec, n_eco):
    """Layer and node in/out sums accumulated edge by edge."""
    layer_in = np.zeros(n_eco)
    layer_out = np.zeros(n_eco)
    node_in = np.zeros(n_sec)
    node_out = np.zeros(n_sec)
    n = n_sec * n_eco
    for h in range(n):
        for k in range(n):
            wt = w[h][k]
            if wt == 0:
                continue
            layer_out[h // n_sec] += wt
            node_out[h % n_sec] += wt
            layer_in[k // n_sec] += wt
            node_in[k % n_sec] += wt
    return layer_in, layer_out, node_in, node_out


def _pw(v, g):
    return 0.0 if v == 0 else v ** g


def mdhits_step_loop(w, n_sec, n_eco, x, y, b, z, gamma, normalize=True):
    """One literal evaluation of the four MD-HITS sums with a four-index loop."""
    g1, g2, g3, g4 = gamma
    xn = np.zeros(n_sec)
    yn = np.zeros(n_sec)
    bn = np.zeros(n_eco)
    zn = np.zeros(n_eco)
    for i in range(n_sec):
        for j in range(n_sec):
            for a in range(n_eco):
                for be in range(n_eco):
                    wt = w[a * n_sec + i][be * n_sec + j]
                    xn[i] += _pw(wt * y[j] * b[a] * z[be], g1)
                    yn[j] += _pw(wt * x[i] * b[a] * z[be], g2)
                    bn[a] += _pw(wt * x[i] * y[j] * z[be], g3)
                    zn[be] += _pw(wt * x[i] * y[j] * b[a], g4)
    if normalize:
        out = []
        for v in (xn, yn, bn, zn):
            m = max(v)
            out.append(v / m if m > 0 else v)
        return tuple(out)
    return xn, yn, bn, zn


def dominant_eigvec_sym(m):
    vals, vecs = np.linalg.eigh(m)
    v = vecs[:, np.argmax(vals)]
    return v if v.sum() >= 0 else -v


def angle(u, v):
    u = np.asarray(u, float) / np.linalg.norm(u)
    v = np.asarray(v, float) / np.linalg.norm(v)
    return float(np.arccos(np.clip(abs(u @ v), -1.0, 1.0)))


def average_ranks_naive(a):
    n = len(a)
    ranks = []
    for i in range(n):
        less = sum(1 for j in range(n) if a[j] < a[i])
        equal = sum(1 for j in range(n) if a[j] == a[i])
        ranks.append(less + (equal + 1) / 2)
    return ranks


def spearman_naive(a, b):
    ra, rb = average_ranks_naive(a), average_ranks_naive(b)
    n = len(a)
    ma, mb = sum(ra) / n, sum(rb) / n
    cov = sum((ra[k] - ma) * (rb[k] - mb) for k in range(n))
    va = sum((r - ma) ** 2 for r in ra)
    vb = sum((r - mb) ** 2 for r in rb)
    return cov / (va * vb) ** 0.5
