"""The principal (2p-1)-dimensional representation of SL(2,R) and its
embedding into SO(p,p).

The representation acts on binary forms of degree 2p-2 in the monomial
basis m_j = x^(2p-2-j) y^j, covariantly: a matrix [[a,b],[c,d]] substitutes
x -> a x + c y, y -> b x + d y. It preserves a bilinear form of signature
(p, p-1), unique up to scale, normalized here so that the weight basis
below pairs to the identity.

The weight basis eps_1 .. eps_{2p-1} diagonalizes diag(λ, 1/λ) with
eigenvalue law λ^(2p-2m) and pairs as <eps_k | eps_{2p-m}> = δ_{k,m}. On
E = V ⊕ L (L a line spanned by f with <f|f> = -1) the embedded basis

    e_i = eps_i,  ē_i = eps_{2p-i}  (i < p),
    e_p = (eps_p + f)/√2,  ē_p = (eps_p - f)/√2,

consists of isotropic vectors with <e_i|ē_j> = δ_{ij}; (e_1, ..., e_p)
spans the reference positive maximal isotropic plane. The two middle
vectors are the lightlike lines of span(eps_p, f); the labeling (+f into
e_p) is the orientation under which the eigenvalue-derivative identity of
`affine_deform` holds with its stated sign.
"""

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .linalg import NumericalFailure, form_residual, orthonormal_span, signature
from .fuchsian import sl2_eigenbasis


def sym_power_rep(p, m):
    """Action of an SL(2,R) matrix on binary forms of degree 2p-2.

    Multiplicative in m; the image of the monomial m_k is
    (a x + c y)^(d-k) (b x + d y)^k expanded in the monomial basis.

    Parameters
    ----------
    p : int
        Half-dimension parameter, p >= 2; the result is (2p-1) x (2p-1).
    m : ndarray
        2x2 real matrix with determinant 1 (checked to 1e-10).
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    m = np.asarray(m, float)
    if abs(np.linalg.det(m) - 1.0) > 1e-10:
        raise ValueError("matrix must have determinant 1")
    d = 2 * p - 2
    n = 2 * p - 1
    a, b, c, dd = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    out = np.zeros((n, n))
    for k in range(n):
        left = np.array([comb(d - k, i) * a ** (d - k - i) * c**i
                         for i in range(d - k + 1)])
        right = np.array([comb(k, j) * b ** (k - j) * dd**j for j in range(k + 1)])
        out[:, k] = np.convolve(left, right)
    return out


@dataclass
class QuadraticForm:
    """Symmetric bilinear form with cached signature."""

    matrix: np.ndarray
    _signature: tuple = field(default=None, repr=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, float)
        if np.abs(self.matrix - self.matrix.T).max() > 1e-12:
            raise ValueError("form matrix must be symmetric")

    @property
    def signature(self):
        if self._signature is None:
            self._signature = signature(self.matrix)
        return self._signature

    @property
    def dim(self):
        return self.matrix.shape[0]

    def pair(self, u, v):
        return float(np.asarray(u, float) @ self.matrix @ np.asarray(v, float))


def invariant_form(p):
    """The SL(2,R)-invariant form on degree-(2p-2) binary forms.

    Antidiagonal in the monomial basis, Q(m_j, m_{d-j}) = s_p (-1)^j / C(d,j)
    with s_p = (-1)^(p-1), which fixes signature (p, p-1) with the middle
    monomial spacelike.
    """
    d = 2 * p - 2
    n = 2 * p - 1
    sp = (-1) ** (p - 1)
    q = np.zeros((n, n))
    for j in range(n):
        q[j, d - j] = sp * (-1) ** j / comb(d, j)
    return QuadraticForm(q)


def form_on_e(p):
    """The signature-(p,p) form on E = V ⊕ L: Q(u + xf) = Q(u) - x²."""
    n = 2 * p - 1
    q = np.zeros((n + 1, n + 1))
    q[:n, :n] = invariant_form(p).matrix
    q[n, n] = -1.0
    return QuadraticForm(q)


@dataclass
class PrincipalBasis:
    """Weight basis of V and the embedded isotropic basis of E = V ⊕ L.

    `eps` has the vectors eps_1..eps_{2p-1} as columns (coordinates in the
    monomial basis); `e` and `ebar` are (2p x p) with columns e_1..e_p and
    ē_1..ē_p in E-coordinates (V followed by the f-coordinate).
    """

    p: int
    eps: np.ndarray
    e: np.ndarray
    ebar: np.ndarray
    form_v: QuadraticForm
    form_e: QuadraticForm

    @property
    def eps_p(self):
        """The unit spacelike middle weight vector."""
        return self.eps[:, self.p - 1]

    @property
    def f(self):
        v = np.zeros(2 * self.p)
        v[-1] = 1.0
        return v

    @property
    def orientation_sign(self):
        """Sign of det(eps-basis); calibrates the neutral-vector rule."""
        return float(np.sign(np.linalg.det(self.eps)))


def principal_basis(p):
    """Construct the principal basis and verify its defining identities.

    Deterministic normalization: eps_k = c_k m_{k-1} with c_k > 0 for
    k <= p and the partner scale forced by <eps_k | eps_{2p-k}> = 1. The
    resulting pairing is exactly δ and the unipotent pairing matrix is
    exactly triangular with unit diagonal.

    Raises
    ------
    NumericalFailure
        If any invariant fails its tolerance (wrong form normalization).
    """
    n = 2 * p - 1
    d = 2 * p - 2
    sp = (-1) ** (p - 1)
    qv = invariant_form(p)
    c = np.zeros(n + 1)
    for k in range(1, p + 1):
        c[k] = np.sqrt(comb(d, k - 1))
    for k in range(1, p):
        c[2 * p - k] = sp * (-1) ** (k - 1) * comb(d, k - 1) / c[k]
    eps = np.diag(c[1:])

    qe = form_on_e(p)
    e = np.zeros((n + 1, p))
    ebar = np.zeros((n + 1, p))
    for i in range(p - 1):
        e[:n, i] = eps[:, i]
        ebar[:n, i] = eps[:, 2 * p - 2 - i]
    e[:n, p - 1] = eps[:, p - 1] / np.sqrt(2.0)
    e[n, p - 1] = 1.0 / np.sqrt(2.0)
    ebar[:n, p - 1] = eps[:, p - 1] / np.sqrt(2.0)
    ebar[n, p - 1] = -1.0 / np.sqrt(2.0)

    basis = PrincipalBasis(p=p, eps=eps, e=e, ebar=ebar, form_v=qv, form_e=qe)
    _verify_principal_basis(basis)
    return basis


def _verify_principal_basis(basis, tol=1e-10):
    p, n = basis.p, 2 * basis.p - 1
    qv, qe = basis.form_v.matrix, basis.form_e.matrix
    eps = basis.eps
    # pairing <eps_k | bar eps_m> = delta
    pairing = eps.T @ qv @ eps
    delta = np.zeros((n, n))
    for k in range(1, n + 1):
        delta[k - 1, (2 * p - k) - 1] = 1.0
    if np.abs(pairing - delta).max() > tol:
        raise NumericalFailure("principal basis pairing failed")
    # Lambda eigenvalue law
    lam = 1.7
    diag = sym_power_rep(p, np.array([[lam, 0.0], [0.0, 1.0 / lam]]))
    for m in range(1, n + 1):
        v = eps[:, m - 1]
        if np.abs(diag @ v - lam ** (2 * p - 2 * m) * v).max() > tol * lam ** (2 * p - 2):
            raise NumericalFailure("eigenvalue law failed")
    # unipotent triangularity
    for z in (0.5, 1.0):
        al = alpha_matrix(basis, z)
        lower = np.tril(al, -1)
        if np.abs(lower).max() > tol:
            raise NumericalFailure("unipotent pairing not triangular")
        if np.min(np.abs(al[np.triu_indices(n)])) < 1e-8:
            raise NumericalFailure("unipotent pairing vanishes on/above diagonal")
    # embedded basis pairing
    eb = np.hstack([basis.e, basis.ebar])
    g = eb.T @ qe @ eb
    expect = np.zeros((2 * p, 2 * p))
    expect[:p, p:] = np.eye(p)
    expect[p:, :p] = np.eye(p)
    if np.abs(g - expect).max() > tol:
        raise NumericalFailure("embedded basis pairing failed")


def alpha_matrix(basis, z):
    """Pairing matrix of the weight basis against the unipotent flow.

    Entry (k, m) is <N_z(eps_k) | bar eps_m> for the unipotent N_z fixing
    the repelling boundary point ([[1,0],[z,1]]). Upper triangular with
    unit diagonal for every z; entries above the diagonal are nonzero for
    z != 0.
    """
    p = basis.p
    n = 2 * p - 1
    qv = basis.form_v.matrix
    nz = sym_power_rep(p, np.array([[1.0, 0.0], [z, 1.0]]))
    out = np.zeros((n, n))
    for k in range(1, n + 1):
        image = nz @ basis.eps[:, k - 1]
        for m in range(1, n + 1):
            out[k - 1, m - 1] = image @ qv @ basis.eps[:, (2 * p - m) - 1]
    return out


def embed_so_pp(p, m_v, tol=1e-9):
    """Extend a form-preserving matrix on V by the identity on L.

    The result preserves the signature-(p,p) form on E = V ⊕ L. Inputs
    that fail (p, p-1)-form preservation (relative residual > tol) are
    rejected.
    """
    m_v = np.asarray(m_v, float)
    n = 2 * p - 1
    if m_v.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} matrix")
    if form_residual(m_v, invariant_form(p).matrix) > tol:
        raise NumericalFailure("matrix does not preserve the (p,p-1) form")
    out = np.eye(n + 1)
    out[:n, :n] = m_v
    return out


class Representation:
    """Generator-indexed matrix representation with memoized evaluation.

    Generators are keyed by positive letters 1..n; inverses are cached.
    Evaluation is a pure function of the word, so the cache is safe under
    concurrent readers.

    When the representation factors through another one (`base`, here
    always the SL(2,R) representation) a `lift` map may be supplied;
    words are then evaluated as lift(base(word)). This is the same
    homomorphism evaluated in a better order: long products of the big
    matrices accumulate cancellation error with the product of all the
    generator norms, while the 2x2 chain stays near machine precision and
    one lift is exact.
    """

    def __init__(self, generators, form=None, labels=None, base=None, p=None,
                 lift=None):
        self.generators = {k: np.asarray(m, float) for k, m in generators.items()}
        self.form = form
        self.labels = labels
        self.base = base  # underlying SL(2,R) representation, if any
        self.p = p
        self.lift = lift
        first = next(iter(self.generators.values()))
        self.dim = first.shape[0]
        self._cache = {(): np.eye(self.dim)}
        self._inverses = {k: np.linalg.inv(m) for k, m in self.generators.items()}
        if form is not None:
            for k, m in self.generators.items():
                if form_residual(m, form.matrix) > 1e-10:
                    raise NumericalFailure(f"generator {k} does not preserve the form")

    def generator(self, letter):
        return self.generators[letter] if letter > 0 else self._inverses[-letter]

    def evaluate(self, word):
        """Image of a word (tuple of signed letters), memoized."""
        word = tuple(word)
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        if self.lift is not None and self.base is not None:
            m = self.lift(self.base.evaluate(word))
        else:
            m = np.eye(self.dim)
            for letter in word:
                m = m @ self.generator(letter)
        self._cache[word] = m
        return m

    def __call__(self, word):
        return self.evaluate(word)

    def relator_residual(self, presentation):
        """Distance of the relator image from ±identity."""
        h = self.evaluate(presentation.relator)
        eye = np.eye(self.dim)
        return float(min(np.abs(h - eye).max(), np.abs(h + eye).max()))


def word_form_residual(rho, word):
    """Form-preservation residual of a word image, backward-error scaled.

    Freely reduced words can still backtrack metrically, so intermediate
    prefix products may dwarf the final matrix; the residual of the
    computed product is therefore measured against the largest scale the
    multiplication chain actually passes through.
    """
    q = rho.form.matrix
    m = rho.evaluate(word)
    scale = 1.0
    prefix = np.eye(rho.dim)
    for letter in word:
        prefix = prefix @ rho.generator(letter)
        scale = max(scale, float(np.abs(prefix).max()) ** 2)
    residual = np.abs(m.T @ q @ m - q).max()
    return float(residual / scale)


def sym_representation(p, sl2_rep):
    """Principal (2p-1)-dimensional representation of an SL(2,R) group."""
    gens = {k: sym_power_rep(p, m) for k, m in sl2_rep.generators.items()}
    return Representation(gens, form=invariant_form(p), labels=sl2_rep.labels,
                          base=sl2_rep, p=p)


def embedded_representation(p, sl2_rep):
    """Principal representation embedded in SO(p,p) on E = V ⊕ L."""
    gens = {k: embed_so_pp(p, sym_power_rep(p, m))
            for k, m in sl2_rep.generators.items()}
    return Representation(gens, form=form_on_e(p), labels=sl2_rep.labels,
                          base=sl2_rep, p=p)


@dataclass
class EigenData:
    """Sorted eigenvalues with Q-normalized eigenvectors and induced flags.

    `eigenvalues` lists λ_1 > ... > λ_p followed by λ̄_p > ... > λ̄_1 (so
    entry i pairs with entry 2p-1-i and λ_i λ̄_i = 1). `vectors` holds the
    right eigenvectors as aligned columns, normalized so Q(v_i, v̄_i) = 1;
    the two middle columns are isotropic. `theta` / `theta_bar` are
    orthonormalized spans of the attracting and repelling maximal
    isotropics; `flag` lists the nested attracting subspaces L_1 ⊂ ... ⊂ L_p.
    """

    p: int
    eigenvalues: np.ndarray
    vectors: np.ndarray
    min_gap: float
    form: QuadraticForm = field(repr=False, default=None)

    @property
    def theta(self):
        return orthonormal_span(self.vectors[:, : self.p])

    @property
    def theta_bar(self):
        return orthonormal_span(self.vectors[:, self.p :][:, ::-1][:, : self.p])

    def line(self, i):
        """Attracting eigenline E_i (1-indexed, i <= p)."""
        return self.vectors[:, i - 1 : i]

    def line_bar(self, i):
        """Repelling eigenline Ē_i (1-indexed, i <= p)."""
        return self.vectors[:, 2 * self.p - i : 2 * self.p - i + 1]

    @property
    def flag(self):
        return [orthonormal_span(self.vectors[:, :i]) for i in range(1, self.p + 1)]

    @property
    def lambdas(self):
        """λ_1 .. λ_p."""
        return self.eigenvalues[: self.p]


def eigendata_fuchsian(p, m_sl2, basis):
    """EigenData of the embedded image of a hyperbolic SL(2,R) element.

    Structural route: the 2x2 eigenbasis h is mapped through the
    symmetric power, giving eigenvectors sym(h)·eps_k with eigenvalues
    λ^(2p-2k) and the two lightlike middle lines (sym(h)eps_p ± f)/√2.
    Exact Q-normalization and the λ_p = λ̄_p = 1 coincidence are resolved
    by construction; this is the only route that certifies λ_p = 1 at
    1e-9 for long words, where generic solvers lose the middle eigenpair.

    Best conditioned on cyclically reduced words: conjugation pulls the
    two fixed lines of the 2x2 matrix together and degrades h, while the
    eigen-structure itself transports exactly (equivariance), so callers
    evaluate class data on reduced representatives.
    """
    n = 2 * p - 1
    h, lam = sl2_eigenbasis(m_sl2)
    sym_h = sym_power_rep(p, h)
    eps_images = sym_h @ basis.eps
    x = eps_images[:, p - 1]  # unit spacelike fixed vector, oriented

    vectors = np.zeros((n + 1, n + 1))
    eigenvalues = np.zeros(n + 1)
    for i in range(1, p):
        vectors[:n, i - 1] = eps_images[:, i - 1]
        eigenvalues[i - 1] = lam ** (2 * (p - i))
        vectors[:n, 2 * p - i] = eps_images[:, 2 * p - i - 1]
        eigenvalues[2 * p - i] = lam ** (-2 * (p - i))
    root2 = np.sqrt(2.0)
    vectors[:n, p - 1] = x / root2
    vectors[n, p - 1] = 1.0 / root2     # e_p-side lightlike line
    eigenvalues[p - 1] = 1.0
    vectors[:n, p] = x / root2
    vectors[n, p] = -1.0 / root2        # ē_p-side lightlike line
    eigenvalues[p] = 1.0

    gaps = -np.diff(eigenvalues[: p])
    min_gap = float(gaps.min()) if gaps.size else np.inf
    return EigenData(p=p, eigenvalues=eigenvalues, vectors=vectors,
                     min_gap=min_gap, form=form_on_e(p))


def eigendata(a, q, p=None, tol=1e-7):
    """EigenData of a form-preserving matrix with real simple-ish spectrum.

    General solver path: eigenvalues are sorted decreasingly, paired
    λ ↔ 1/λ and Q-renormalized. A doubly degenerate eigenvalue 1 (the
    SO(p,p-1) locus) is split structurally into the two isotropic lines of
    its eigenplane; any other collision below `tol` is a numerical
    failure, as is a complex or defective spectrum.
    """
    a = np.asarray(a, float)
    qm = q.matrix if isinstance(q, QuadraticForm) else np.asarray(q, float)
    dim = a.shape[0]
    if p is None:
        p = dim // 2
    if dim != 2 * p:
        raise ValueError("eigendata expects an even-dimensional matrix on E")
    evals, evecs = np.linalg.eig(a)
    if np.abs(evals.imag).max() > tol * max(1.0, np.abs(evals.real).max()):
        raise NumericalFailure("complex spectrum")
    evals = evals.real
    order = np.argsort(-evals)
    evals = evals[order]
    evecs = np.real(evecs[:, order])

    # structural split of a repeated unit eigenvalue (middle pair)
    mid = evals[p - 1 : p + 1]
    structural = abs(mid[0] - mid[1]) < tol and abs(mid[0] - 1.0) < tol
    if structural:
        plane = evecs[:, p - 1 : p + 1]
        evecs[:, p - 1 : p + 1] = _isotropic_split(plane, qm)
        evals[p - 1 : p + 1] = 1.0
    gaps = np.abs(np.diff(evals))
    degenerate = gaps < tol
    if degenerate.any() and not (degenerate.sum() == 1 and degenerate[p - 1]
                                 and structural):
        raise NumericalFailure("eigenvalue collision outside the structural pair")

    vectors = evecs.copy()
    for i in range(dim // 2):
        j = dim - 1 - i
        pairing = vectors[:, i] @ qm @ vectors[:, j]
        if abs(pairing) < 1e-12:
            raise NumericalFailure("defective Q-pairing of eigenvectors")
        vectors[:, j] = vectors[:, j] / pairing
    if structural:
        gaps[p - 1] = np.inf
    min_gap = float(gaps.min())
    return EigenData(p=p, eigenvalues=evals, vectors=vectors, min_gap=min_gap,
                     form=QuadraticForm(qm))


def _isotropic_split(plane, qm):
    """The two isotropic lines inside a Q-nondegenerate 2-plane.

    Columns ordered with the spacelike-plus-f-like combination first, to
    match the structural (e_p, ē_p) labeling when the plane is
    span(eps_p, f).
    """
    gram = plane.T @ qm @ plane
    # solve Q(c0 u + c1 v) = 0: gram[0,0] c0^2 + 2 gram[0,1] c0 c1 + gram[1,1] c1^2 = 0
    a, b, c = gram[0, 0], gram[0, 1], gram[1, 1]
    if abs(a) < 1e-13:
        roots = [np.array([1.0, 0.0]),
                 np.array([-c / (2 * b), 1.0]) if abs(b) > 1e-13 else np.array([0.0, 1.0])]
    else:
        disc = b * b - a * c
        if disc <= 0:
            raise NumericalFailure("eigenplane carries a definite form; no isotropic split")
        r1 = (-b + np.sqrt(disc)) / a
        r2 = (-b - np.sqrt(disc)) / a
        roots = [np.array([r1, 1.0]), np.array([r2, 1.0])]
    lines = [plane @ r / np.linalg.norm(plane @ r) for r in roots]
    return np.column_stack(lines)
