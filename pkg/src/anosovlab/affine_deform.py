"""Affine deformations of SO(p,p-1) representations: Margulis invariants,
tangent directions in SO(p,p), and first-order eigenvalue variation.

An affine deformation of the linear representation ρ0 on V is a cocycle of
translation parts ω. Its Margulis invariant pairs the cocycle value with
the neutral vector (the oriented unit spacelike fixed vector),

    α(γ) = Q(ω_γ, x_γ),

and is evaluated here as the orbit sum of per-letter pairings with the
local neutral section: for the cyclic word γ = r_1 ... r_m,

    α(γ) = Σ_j ± Q(ω_{g_j}, x at the j-th rotation of γ),

which is the discrete form of the diffusion integral and, unlike the
direct pairing, stays at unit scale for long words (the direct prefix
products reach e^{(p-1)ℓ} and cancel catastrophically).

The tangent direction of the deformation inside SO(p,p) maps f to V with
the special shape X_w : u ↦ Q(u,w) f, f ↦ w. The normalization ρ̇_g =
½·X_{ω_g} (an Ad-cocycle, so ρ̇_γ = ½·X_{ω_γ} for every γ) is the one
under which the middle eigenvalue moves at half the Margulis invariant
while all other eigenvalues stay constant at first order; both facts are
cross-checked against central finite differences on free subgroups.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .linalg import NumericalFailure, line_distance
from .fuchsian import boundary_separation, fixed_points, sl2_eigenbasis
from .principal_rep import Representation, sym_power_rep
from .surface_group import cyclic_reduce, extend_cocycle, peel_conjugator


@dataclass
class Cocycle:
    """Translation parts per generator for an affine deformation of rho.

    `vectors` has shape (n_generators, dim). For surface groups the
    relator extension must vanish; `relator_residual` reports it.
    """

    vectors: np.ndarray
    rho: Representation = field(repr=False)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, float)
        if self.vectors.shape[1] != self.rho.dim:
            raise ValueError("cocycle vectors must match the representation dimension")

    def __getitem__(self, letter):
        return self.vectors[letter - 1]

    def as_dict(self):
        return {i + 1: self.vectors[i] for i in range(self.vectors.shape[0])}

    def value(self, word):
        """Cocycle value ω_w by the left-to-right cocycle rule."""
        return extend_cocycle(self.as_dict(), word, self.rho)

    def relator_residual(self, presentation):
        return float(np.abs(self.value(presentation.relator)).max())


def coboundary(rho, vector):
    """The coboundary cocycle ω_g = v - ρ(g)v."""
    vector = np.asarray(vector, float)
    n_gen = len(rho.generators)
    vectors = np.array([vector - rho.generator(g) @ vector
                        for g in range(1, n_gen + 1)])
    return Cocycle(vectors=vectors, rho=rho)


@dataclass
class NeutralVector:
    """Oriented unit spacelike fixed vector of a hyperbolic holonomy.

    `certificate` is the sign of the eigenbasis determinant normalized by
    the principal-basis orientation; +1 certifies the equivariant
    orientation (the section through +eps_p at the model point).
    """

    vector: np.ndarray
    word: tuple
    certificate: float


def neutral_vector(rho, word, basis, tol=1e-9):
    """Neutral vector of ρ0(word) for a principal Fuchsian representation.

    Computed equivariantly as sym(h)·eps_p with h the determinant-one
    SL(2,R) eigenbasis (attracting eigenvector first) of the cyclically
    reduced core, transported back along the peeled conjugator: exactly
    unit, exactly fixed, and stable for long words (conjugated words pull
    the two fixed lines together and degrade the eigenbasis, so the core
    is where the eigenproblem is solved). The determinant certificate
    det[v_1, ..., x, ..., v_{2p-1}], with the other eigenvectors pair-
    normalized, is evaluated against the principal-basis orientation.

    Parameters
    ----------
    rho : Representation
        The (2p-1)-dimensional linear representation; must carry its
        SL(2,R) base representation.
    word : tuple
        Nontrivial word with hyperbolic holonomy.
    basis : PrincipalBasis
    """
    if rho.base is None:
        raise ValueError("neutral_vector needs the SL(2,R) base representation")
    p = basis.p
    conjugator, core = peel_conjugator(word)
    if not core:
        raise ValueError("neutral vector of the trivial class")
    m2 = rho.base.evaluate(core)
    h, _ = sl2_eigenbasis(m2)
    sym_h = sym_power_rep(p, h)
    eigvecs = sym_h @ basis.eps
    x = eigvecs[:, p - 1]
    q = basis.form_v.matrix
    if conjugator:
        x = rho.evaluate(conjugator) @ x
    # Q(x, x) = 1 holds exactly by construction; the computed pairing
    # loses ~eps·|x|² to cancellation, so it is only guarded, never used
    # to renormalize.
    norm = x @ q @ x
    if norm <= 0:
        raise NumericalFailure("fixed vector is not spacelike")
    scale = float(np.abs(x).max()) ** 2
    if abs(norm - 1.0) > 1e-9 * max(1.0, scale):
        raise NumericalFailure(f"neutral vector normalization drifted: {norm}")
    m_word = rho.evaluate(word)
    residual = np.abs(m_word @ x - x).max()
    if residual > tol * max(1.0, np.abs(m_word).max()):
        raise NumericalFailure(f"fixed-vector residual {residual:.3e}")
    certificate = float(np.sign(np.linalg.det(eigvecs)) * basis.orientation_sign)
    return NeutralVector(vector=x, word=tuple(word), certificate=certificate)


def margulis_invariants(rho, omegas, word, basis):
    """Margulis invariants α(word) = Q(ω_word, x_word) for several cocycles.

    Orbit-sum evaluation over the cyclic word: each letter pairs its
    generator vector with the neutral vector of the corresponding
    rotation, so the neutral-section work is shared across cocycles and
    the sum stays at unit scale for long words. Conjugation invariant and
    a class function (the input is cyclically reduced first).
    """
    w = cyclic_reduce(word)
    if not w:
        raise ValueError("Margulis invariant of the trivial class")
    if rho.base is None:
        # generic fallback: direct pairing (moderate words only)
        x = neutral_vector(rho, w, basis).vector
        return np.array(
            [float(om.value(w) @ basis.form_v.matrix @ x) for om in omegas]
        )
    q = basis.form_v.matrix
    p = basis.p
    m = len(w)
    mats2 = [rho.base.generator(letter) for letter in w]
    totals = np.zeros(len(omegas))
    rotation_cache = {}

    def qx_at(j):
        j = j % m
        if j not in rotation_cache:
            prod = np.eye(2)
            for mm in mats2[j:] + mats2[:j]:
                prod = prod @ mm
            h, _ = sl2_eigenbasis(prod)
            rotation_cache[j] = q @ (sym_power_rep(p, h) @ basis.eps[:, p - 1])
        return rotation_cache[j]

    for j, letter in enumerate(w):
        if letter > 0:
            qx = qx_at(j)
            for i, om in enumerate(omegas):
                totals[i] += om[letter] @ qx
        else:
            qx = qx_at(j + 1)
            for i, om in enumerate(omegas):
                totals[i] -= om[-letter] @ qx
    return totals


def margulis_invariant(rho, omega, word, basis):
    """Margulis invariant α(word) = Q(ω_word, x_word) of one cocycle."""
    return float(margulis_invariants(rho, [omega], word, basis)[0])


@dataclass
class DeformationDirection:
    """Tangent direction in SO(p,p) matching an affine cocycle.

    `matrices` maps positive letters to ρ̇_g = ½·X_{ω_g} on E = V ⊕ L;
    the assignment extends by the adjoint cocycle rule and satisfies
    ρ̇_γ = ½·X_{ω_γ} for every word.
    """

    matrices: dict
    omega: Cocycle = field(repr=False)
    form_e: np.ndarray = field(repr=False)

    def value(self, word, rho_e=None):
        """Cocycle value ρ̇_w = ρ̇_u + Ad(ρ_E(u)) ρ̇_v along the word.

        The adjoint action preserves the special shape, Ad(ρ_E(u))·X_v =
        X_{ρ0(u)v}, so the extension collapses to ½·X_{ω_w}; evaluating it
        that way keeps the error linear in the word's matrix norm where
        the literal Ad-conjugation sum loses twice the digits.
        """
        qv = self.omega.rho.form.matrix
        return 0.5 * special_shape(self.omega.value(word), qv)

    def value_by_adjoint(self, word, rho_e):
        """Literal Ad-cocycle accumulation (cross-check for moderate words)."""
        dim = rho_e.dim
        out = np.zeros((dim, dim))
        prefix = np.eye(dim)
        for letter in word:
            if letter > 0:
                out = out + prefix @ self.matrices[letter] @ np.linalg.inv(prefix)
                prefix = prefix @ rho_e.generator(letter)
            else:
                prefix = prefix @ rho_e.generator(letter)
                out = out - prefix @ self.matrices[-letter] @ np.linalg.inv(prefix)
        return out


def special_shape(w_vector, q_v):
    """The so(p,p) element X_w : u ↦ Q(u,w) f, f ↦ w (u in V)."""
    n = w_vector.shape[0]
    x = np.zeros((n + 1, n + 1))
    x[n, :n] = w_vector @ q_v
    x[:n, n] = w_vector
    return x


def deformation_direction(omega, basis):
    """Map an affine cocycle to its tangent direction in SO(p,p).

    Per generator g the matrix is ½·X_{ω_g}; the image lies in the
    isometry algebra, vanishes on V ⊗ V pairings, and reproduces the
    cocycle through pairing: Q(ω_g, v) = 2·⟨ρ̇_g(f) | v⟩ for all v in V.
    """
    q_v = basis.form_v.matrix
    mats = {g: 0.5 * special_shape(omega[g], q_v)
            for g in range(1, omega.vectors.shape[0] + 1)}
    return DeformationDirection(matrices=mats, omega=omega,
                                form_e=basis.form_e.matrix)


def eigenvalue_derivative(eig, rho_dot_w, matrix):
    """First-order eigenvalue variation under a tangent direction.

    Standard simple-spectrum perturbation with left eigenvectors obtained
    by Q-pairing: for the eigenpair (λ_i, v_i) with Q-partner v̄_i,

        λ̇_i = ⟨v̄_i | ρ̇_w · A · v_i⟩ / ⟨v̄_i | v_i⟩.

    The doubly degenerate middle pair must be structurally split in `eig`
    (the projected perturbation block is diagonal in the lightlike basis,
    so the naive formula is exact there too).

    Parameters
    ----------
    eig : EigenData
        Eigen-structure of A = ρ0(w), with the split middle pair.
    rho_dot_w : ndarray
        Cocycle value of the deformation direction at w.
    matrix : ndarray
        A = ρ0(w) itself.

    Returns
    -------
    (lambda_dot, lambda_bar_dot) : ndarray, ndarray
        Derivatives of λ_1..λ_p and of λ̄_1..λ̄_p.
    """
    q = eig.form.matrix
    dim = matrix.shape[0]
    p = eig.p
    derivs = np.zeros(dim)
    for i in range(dim):
        v = eig.vectors[:, i]
        partner = eig.vectors[:, dim - 1 - i]
        # (ρ̇ A) v = λ_i ρ̇ v on the exact eigenvector: evaluating the
        # right factor first keeps the products at the scale of ρ̇ instead
        # of ‖ρ̇‖·‖A‖
        num = eig.eigenvalues[i] * (partner @ q @ rho_dot_w @ v)
        den = partner @ q @ v
        if abs(den) < 1e-12:
            raise NumericalFailure("degenerate eigenvector pairing")
        derivs[i] = num / den
    lam_dot = derivs[:p]
    lam_bar_dot = derivs[p:][::-1]
    return lam_dot, lam_bar_dot


def ping_pong_certificate(sl2_rep, letters, min_separation=0.05, probe_length=4):
    """Numerical freeness certificate for a generating pair.

    Checks that the four boundary fixed points are pairwise separated and
    that no short nontrivial word in the pair is the identity. Desk-scale
    evidence of a ping-pong configuration, not a proof.
    """
    pts = []
    for letter in letters:
        att, rep = fixed_points(sl2_rep.generator(letter))
        pts.extend([att, rep])
    worst = min(
        boundary_separation(pts[i], pts[j])
        for i in range(len(pts))
        for j in range(i + 1, len(pts))
    )
    if worst < min_separation:
        return False, worst
    # short-word non-triviality
    frontier = [()]
    for _ in range(probe_length):
        nxt = []
        for w in frontier:
            for letter in (letters[0], -letters[0], letters[1], -letters[1]):
                if w and w[-1] == -letter:
                    continue
                nxt.append(w + (letter,))
        frontier = nxt
        for w in frontier:
            m = sl2_rep.evaluate(w)
            if min(np.abs(m - np.eye(2)).max(), np.abs(m + np.eye(2)).max()) < 1e-6:
                return False, 0.0
    return True, worst


class FiniteDeformation:
    """Finite-t representation of a free subgroup, exp(t·ρ̇_g)·ρ_E(g).

    A genuine homomorphism of the free group on the chosen letters (the
    surface relator obstructs exponentiation of the full group); serves as
    the independent finite-difference oracle for the eigenvalue-derivative
    identity.
    """

    def __init__(self, rho_e, direction, letters, t, check_freeness=True):
        if check_freeness and rho_e.base is not None:
            ok, sep = ping_pong_certificate(rho_e.base, letters)
            if not ok:
                raise NumericalFailure(
                    f"letters {letters} failed the ping-pong certificate ({sep:.3f})"
                )
        self.letters = tuple(letters)
        self.t = float(t)
        gens = {}
        for letter in letters:
            gens[letter] = expm(t * direction.matrices[letter]) @ rho_e.generator(letter)
        self.rep = Representation(gens, form=rho_e.form, p=rho_e.p)
        self.rho_e = rho_e

    def evaluate(self, word):
        for letter in word:
            if abs(letter) not in self.letters:
                raise ValueError(f"word leaves the free subgroup on {self.letters}")
        return self.rep.evaluate(word)

    def middle_eigenvalue(self, word, reference_line, tol=1e-6):
        """Eigenvalue of the middle pair tracked by eigenline continuity.

        Selects, among eigenvalues within 25% of 1, the one whose
        eigenline is closest to `reference_line` (the t=0 lightlike line);
        spectral collisions at the requested t raise with the word.
        """
        m = self.evaluate(word)
        evals, evecs = np.linalg.eig(m)
        candidates = [
            (line_distance(np.real(evecs[:, i]), reference_line), float(evals[i].real), i)
            for i in range(m.shape[0])
            if abs(evals[i].imag) <= 1e-8 * max(1.0, abs(evals[i].real))
            and abs(evals[i].real - 1.0) < 0.25
        ]
        if not candidates:
            raise NumericalFailure(
                f"no trackable middle eigenvalue for word {word} at t={self.t}"
            )
        candidates.sort()
        if len(candidates) > 1 and candidates[1][0] - candidates[0][0] < tol:
            raise NumericalFailure(
                f"spectral collision at t={self.t} for word {word}"
            )
        return candidates[0][1]
