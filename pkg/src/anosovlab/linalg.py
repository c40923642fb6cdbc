"""Small shared linear-algebra helpers: subspaces, nullspaces, indefinite forms.

Subspaces are represented by matrices whose columns span them, and are
orthonormalized with respect to the auxiliary Euclidean inner product
(the indefinite form Q is never used for normalization, only for pairing).
"""

import numpy as np

SVD_THRESHOLD = 1e-10


class NumericalFailure(RuntimeError):
    """A computation could not be completed at the required accuracy."""


def orthonormal_span(vectors, tol=SVD_THRESHOLD):
    """Orthonormal basis (columns) of the column span of `vectors`.

    Rank is decided by singular values relative to the largest one.
    """
    a = np.atleast_2d(np.asarray(vectors, dtype=float))
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], 0))
    rank = int(np.sum(s > tol * s[0]))
    return u[:, :rank]


def nullspace(a, tol=SVD_THRESHOLD):
    """Orthonormal basis (rows) of the right null space of `a`."""
    a = np.asarray(a, dtype=float)
    u, s, vt = np.linalg.svd(a, full_matrices=True)
    if s.size == 0:
        return vt
    rank = int(np.sum(s > tol * s[0]))
    return vt[rank:]


def intersect_spans(a, b, tol=SVD_THRESHOLD):
    """Orthonormal basis of span(a) ∩ span(b) (columns)."""
    qa, qb = orthonormal_span(a, tol), orthonormal_span(b, tol)
    if qa.shape[1] == 0 or qb.shape[1] == 0:
        return np.zeros((qa.shape[0], 0))
    # null vectors of [qa, -qb] give matching coefficient pairs
    stacked = np.hstack([qa, -qb])
    coeffs = nullspace(stacked, tol)
    if coeffs.shape[0] == 0:
        return np.zeros((qa.shape[0], 0))
    return orthonormal_span(qa @ coeffs[:, : qa.shape[1]].T, tol)


def span_distance(a, b):
    """Largest principal-angle sine between two spans of equal dimension.

    Computed as the spectral norm of the projector difference, which stays
    accurate down to machine precision (the textbook 1 - cos² route loses
    half the digits near zero).
    """
    qa, qb = orthonormal_span(a), orthonormal_span(b)
    if qa.shape[1] != qb.shape[1]:
        return 1.0
    if qa.shape[1] == 0:
        return 0.0
    diff = qa @ qa.T - qb @ qb.T
    return float(np.linalg.norm(diff, 2))


def line_distance(u, v):
    """Sine of the angle between the lines spanned by vectors u and v."""
    return span_distance(np.asarray(u, float).reshape(-1, 1),
                         np.asarray(v, float).reshape(-1, 1))


def form_residual(m, q):
    """Relative residual of form preservation, ‖MᵀQM − Q‖ / max(1, ‖M‖²)."""
    m = np.asarray(m, float)
    num = np.abs(m.T @ q @ m - q).max()
    den = max(1.0, float(np.abs(m).max()) ** 2)
    return num / den


def signature(q, tol=1e-9):
    """Signature (n_plus, n_minus) of a symmetric matrix."""
    evals = np.linalg.eigvalsh(np.asarray(q, float))
    scale = max(1.0, np.abs(evals).max())
    plus = int(np.sum(evals > tol * scale))
    minus = int(np.sum(evals < -tol * scale))
    return plus, minus


def so_algebra_element(q, rng, scale=1.0):
    """Random element of the isometry algebra of the symmetric form q.

    so(q) = {A : QA skew-symmetric}, sampled as Q^{-1}S with S skew.
    """
    n = q.shape[0]
    s = rng.normal(size=(n, n)) * scale
    s = (s - s.T) / 2.0
    return np.linalg.solve(q, s)


def random_form_isometry(q, rng, scale=0.3):
    """Random element of the identity component of the isometry group of q."""
    from scipy.linalg import expm

    return expm(so_algebra_element(q, rng, scale))


def float17(x):
    """Serialize a float with 17 significant digits (lossless round trip)."""
    return format(float(x), ".17g")
