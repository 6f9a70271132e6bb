"""Independent reference computations used by the test suite.

Nothing here calls into the solver code paths it is used to check.
"""

import math

import numpy as np


def naive_matvec(M, x):
    n = len(x)
    out = [0.0] * n
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += M[i][j] * x[j]
        out[i] = acc
    return np.array(out)


def power_iteration(M, iters=20000, seed=0):
    """Largest |eigenvalue| of a symmetric matrix."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(M.shape[0])
    lam = 0.0
    for _ in range(iters):
        y = M @ x
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x_new = y / ny
        if np.linalg.norm(x_new - x) < 1e-15 or np.linalg.norm(x_new + x) < 1e-15:
            x = x_new
            break
        x = x_new
    lam = abs(x @ (M @ x))
    return lam


def smallest_eigenvalue_by_bisection(M, lo=None, hi=None, tol=1e-13):
    """Smallest eigenvalue via Sylvester inertia (LDL pivots count negatives)."""
    n = M.shape[0]
    r = np.max(np.sum(np.abs(M), axis=1))
    lo = -r - 1 if lo is None else lo
    hi = r + 1 if hi is None else hi

    def negatives(shift):
        # Gaussian elimination without pivoting on M - shift I; counts negative pivots
        A = [[M[i][j] - (shift if i == j else 0.0) for j in range(n)] for i in range(n)]
        count = 0
        for k in range(n):
            piv = A[k][k]
            if piv == 0.0:
                piv = 1e-300
            if piv < 0:
                count += 1
            for i in range(k + 1, n):
                f = A[i][k] / piv
                for j in range(k + 1, n):
                    A[i][j] -= f * A[k][j]
        return count

    while hi - lo > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if negatives(mid) >= 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---- 2D box-disk geometry ----------------------------------------------------


def _circle_box_points(lower, upper, r):
    """Points where the circle |x| = r meets the box boundary (inside the box)."""
    pts = []
    for axis in (0, 1):
        other = 1 - axis
        for c in (lower[axis], upper[axis]):
            if abs(c) > r:
                continue
            h = math.sqrt(max(r * r - c * c, 0.0))
            for s in (h, -h):
                p = [0.0, 0.0]
                p[axis] = c
                p[other] = s
                if lower[other] - 1e-12 <= s <= upper[other] + 1e-12:
                    pts.append(p)
    return np.array(pts).reshape(-1, 2)


def box_disk_distance(x, lower, upper, r):
    """Exact distance from points x (k, 2) to box[lower, upper] intersected with disk(0, r)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
    pb = np.clip(x, lower, upper)
    nx = np.linalg.norm(x, axis=1, keepdims=True)
    pd = np.where(nx > r, x * (r / np.maximum(nx, 1e-300)), x)
    best = np.full(len(x), np.inf)
    ok_b = np.linalg.norm(pb, axis=1) <= r + 1e-12
    best = np.where(ok_b, np.linalg.norm(x - pb, axis=1), best)
    ok_d = np.all((pd >= lower - 1e-12) & (pd <= upper + 1e-12), axis=1)
    best = np.minimum(best, np.where(ok_d, np.linalg.norm(x - pd, axis=1), np.inf))
    corners = _circle_box_points(lower, upper, r)
    if len(corners):
        dc = np.linalg.norm(x[:, None, :] - corners[None, :, :], axis=2).min(axis=1)
        best = np.minimum(best, dc)
    return best


def box_disk_extreme_samples(lower, upper, r, n_arc=2000):
    """Extreme points of box n disk: box vertices inside, circle-box crossings, dense arc points."""
    verts = np.array([[lower[0], lower[1]], [upper[0], lower[1]], [upper[0], upper[1]], [lower[0], upper[1]]])
    verts = verts[np.linalg.norm(verts, axis=1) <= r]
    th = np.linspace(0, 2 * np.pi, n_arc, endpoint=False)
    arc = r * np.column_stack([np.cos(th), np.sin(th)])
    arc = arc[np.all((arc >= lower) & (arc <= upper), axis=1)]
    return np.vstack([verts, _circle_box_points(lower, upper, r), arc])


def box_disk_hausdorff(box1, box2, r, n_arc=2000):
    """Hausdorff distance between (box1 n disk_r) and (box2 n disk_r), extreme-point sampled."""
    s1 = box_disk_extreme_samples(*box1, r, n_arc)
    s2 = box_disk_extreme_samples(*box2, r, n_arc)
    h12 = box_disk_distance(s1, *box2, r).max()
    h21 = box_disk_distance(s2, *box1, r).max()
    return max(h12, h21)


def box_distance_to_origin(lower, upper):
    return float(np.linalg.norm(np.clip(np.zeros(len(lower)), lower, upper)))


def lens_distance(x, c1, r1, r2):
    """Exact distance from x to disk(c1, r1) intersected with disk(0, r2), in 2D."""
    x, c1 = np.asarray(x, dtype=float), np.asarray(c1, dtype=float)

    def proj(c, r, y):
        d = y - c
        n = np.linalg.norm(d)
        return y if n <= r else c + d * (r / n)

    cands = []
    p1 = proj(c1, r1, x)
    if np.linalg.norm(p1) <= r2 + 1e-12:
        cands.append(p1)
    p2 = proj(np.zeros(2), r2, x)
    if np.linalg.norm(p2 - c1) <= r1 + 1e-12:
        cands.append(p2)
    d = np.linalg.norm(c1)
    if d > 0 and abs(r1 - r2) <= d <= r1 + r2:
        a = (r2 * r2 - r1 * r1 + d * d) / (2 * d)
        h = math.sqrt(max(r2 * r2 - a * a, 0.0))
        e = c1 / d
        perp = np.array([-e[1], e[0]])
        cands += [a * e + h * perp, a * e - h * perp]
    return min(float(np.linalg.norm(x - c)) for c in cands)


def cotangent_stiffness(xy, tris, coef):
    """P1 Laplacian via the cotangent formula: K_ij = -(cot a + cot b) / 2 over opposite angles."""
    n = len(xy)
    K = np.zeros((n, n))
    for (v0, v1, v2), c in zip(tris, coef):
        vs = (v0, v1, v2)
        for k in range(3):
            o, i, j = vs[k], vs[(k + 1) % 3], vs[(k + 2) % 3]
            e1, e2 = xy[i] - xy[o], xy[j] - xy[o]
            cot = (e1 @ e2) / abs(e1[0] * e2[1] - e1[1] * e2[0])
            K[i, j] -= 0.5 * c * cot
            K[j, i] -= 0.5 * c * cot
    K[np.diag_indices(n)] = -K.sum(axis=1)
    return K


def stuck_contact_run(A, B, load, u0, friction_dofs, times):
    """Implicit Euler with the friction dofs held fixed.

    Returns (states, tractions) where tractions[i] = (A w + B u_i - f(t_{i+1})) on the
    friction dofs; the stuck branch is the true solution while |traction| <= weight.
    """
    A, B = np.asarray(A), np.asarray(B)
    d = A.shape[0]
    free = np.setdiff1d(np.arange(d), friction_dofs)
    u = np.asarray(u0, dtype=float).copy()
    states, tractions = [u.copy()], []
    for i in range(len(times) - 1):
        rhs = load(times[i + 1]) - B @ u
        w = np.zeros(d)
        w[free] = np.linalg.solve(A[np.ix_(free, free)], rhs[free])
        tractions.append((A @ w - rhs)[friction_dofs])
        u = u + (times[i + 1] - times[i]) * w
        states.append(u.copy())
    return np.array(states), np.array(tractions)
