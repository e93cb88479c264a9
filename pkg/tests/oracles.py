"""Reference implementations used only by the tests.

They are deliberately naive (dense linear algebra, explicit loops) so they
share no code path with the package under test.
"""
import numpy as np


def dense_kkt_solve(P, c, A, b, G, h, active):
    """Solve an equality/active-inequality QP through its dense KKT system."""
    P, A, G = (np.asarray(M, dtype=float) for M in (P, A, G))
    C = np.vstack([A, G[active]])
    m = C.shape[0]
    K = np.block([[P, C.T], [C, np.zeros((m, m))]])
    sol = np.linalg.solve(K, np.concatenate([-np.asarray(c), b, np.asarray(h)[active]]))
    n = P.shape[0]
    y = sol[n:n + A.shape[0]]
    z = np.zeros(G.shape[0])
    z[active] = sol[n + A.shape[0]:]
    return sol[:n], y, z


def random_qp_with_known_active_set(rng, n=30, n_eq=8, n_in=20, density=0.3):
    """Build a convex QP whose optimum and active set are known by construction."""
    import scipy.sparse as sp
    B = sp.random(n, n, 0.2, random_state=rng).toarray()
    P = B @ B.T + 0.1 * np.eye(n)
    A = sp.random(n_eq, n, density, random_state=rng).toarray() + np.eye(n_eq, n)
    G = sp.random(n_in, n, density, random_state=rng).toarray() + np.eye(n_in, n, k=n_eq)
    x_star = rng.normal(size=n)
    y_star = rng.normal(size=n_eq)
    active = rng.random(n_in) < 0.4
    z_star = np.where(active, rng.uniform(0.1, 2.0, n_in), 0.0)
    h = G @ x_star + np.where(active, 0.0, rng.uniform(0.1, 2.0, n_in))
    c = -(P @ x_star + A.T @ y_star + G.T @ z_star)
    b = A @ x_star
    return P, c, A, b, G, h, active


def rot_x(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def rot_y(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def fk_loop(parents, offsets, p_root, rots):
    """Forward kinematics by walking the parent table one joint at a time."""
    n = len(parents)
    pos = np.zeros((n, 3))
    glob = np.zeros((n, 3, 3))
    pos[0], glob[0] = p_root, rots[0]
    for i in range(1, n):
        p = parents[i]
        glob[i] = glob[p] @ rots[i]
        pos[i] = pos[p] + glob[p] @ offsets[i]
    return pos, glob


def geodesic_deg(Ra, Rb):
    c = (np.trace(Ra.T @ Rb) - 1.0) / 2.0
    return float(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))


def central_difference_grad(f, x, h=1e-6):
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        old = x[i]
        x[i] = old + h
        fp = f(x)
        x[i] = old - h
        fm = f(x)
        x[i] = old
        g[i] = (fp - fm) / (2 * h)
    return g
