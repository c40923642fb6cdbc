"""Words, presentations and cocycle linear algebra for the genus-2 surface group.

A word is a tuple of nonzero signed integers: letter ``k`` is the k-th
generator, ``-k`` its inverse. Generators are labeled ``a1, b1, a2, b2`` and
serialized with case marking the sign (``A1`` is the inverse of ``a1``).

Conjugacy classes are canonicalized with the cyclic variant of Dehn's
algorithm for the single surface relator: cyclic free reduction, greedy
replacement of cyclic subwords longer than half the relator, closure under
the equal-length half-relator swaps, then minimal rotation. The relator
satisfies the small-cancellation condition that makes the shortening step
terminate, and the result is cross-checked downstream against holonomy
traces (same class ⇒ same trace).
"""

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

GENERATOR_LABELS = ("a1", "b1", "a2", "b2")

Word = tuple  # tuple of nonzero signed ints


def free_reduce(word):
    """Freely reduce a word (cancel adjacent g g^-1)."""
    out = []
    for letter in word:
        if letter == 0:
            raise ValueError("letters are nonzero signed integers")
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def inverse_word(word):
    return tuple(-letter for letter in reversed(word))


def cyclic_reduce(word):
    """Freely reduce, then cancel across the wrap-around."""
    w = list(free_reduce(word))
    while len(w) >= 2 and w[0] == -w[-1]:
        w = w[1:-1]
    return tuple(w)


def peel_conjugator(word):
    """Split a word as h · c · h^{-1} with c cyclically reduced.

    Returns (h, c); the identity gives ((), ()). Exact free-group algebra,
    used to evaluate conjugation-equivariant data on the well-conditioned
    core.
    """
    w = list(free_reduce(word))
    h = []
    while len(w) >= 2 and w[0] == -w[-1]:
        h.append(w[0])
        w = w[1:-1]
    return tuple(h), tuple(w)


def rotations(word):
    n = len(word)
    return [word[i:] + word[:i] for i in range(n)] if n else [word]


def min_rotation(word):
    """Lexicographically minimal rotation (canonical representative)."""
    return min(rotations(word)) if word else word


def format_word(word, labels=GENERATOR_LABELS):
    """Serialize a word, uppercase marking inverse letters; identity is '1'."""
    if not word:
        return "1"
    parts = []
    for letter in word:
        lab = labels[abs(letter) - 1]
        parts.append(lab if letter > 0 else lab.upper())
    return ".".join(parts)


def parse_word(text, labels=GENERATOR_LABELS):
    """Inverse of :func:`format_word`."""
    text = text.strip()
    if text in ("", "1"):
        return ()
    lower = {lab: i + 1 for i, lab in enumerate(labels)}
    letters = []
    for token in text.split("."):
        if token.lower() not in lower:
            raise ValueError(f"unknown generator token {token!r}")
        idx = lower[token.lower()]
        letters.append(idx if token.islower() else -idx)
    return free_reduce(tuple(letters))


@dataclass(frozen=True)
class GroupPresentation:
    """One-relator presentation with a fixed cyclically reduced relator."""

    n_generators: int
    relator: Word
    labels: tuple = GENERATOR_LABELS

    def __post_init__(self):
        if self.n_generators < 2:
            raise ValueError("need at least 2 generators")
        if cyclic_reduce(self.relator) != self.relator or not self.relator:
            raise ValueError("relator must be nonempty and cyclically reduced")

    @classmethod
    def genus2(cls):
        """The genus-2 commutator presentation on a1, b1, a2, b2."""
        return cls(4, (1, 2, -1, -2, 3, 4, -3, -4))

    @property
    def half_length(self):
        return len(self.relator) // 2


@dataclass(frozen=True)
class CyclicWord:
    """Conjugacy-class representative: cyclically reduced, minimal rotation."""

    letters: Word

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return format_word(self.letters)

    @property
    def is_trivial(self):
        return not self.letters


@lru_cache(maxsize=8)
def _relator_tables(relator):
    """Replacement tables for Dehn moves of a cyclically reduced relator.

    Returns (long_moves, half_moves): maps from a subword s of a cyclic
    rotation of the relator or its inverse to the equivalent complement
    t^{-1}, for |s| > half (strictly shortening) and |s| == half
    (length preserving), respectively.
    """
    n = len(relator)
    half = n // 2
    long_moves = {}
    half_moves = {}
    for base in (relator, inverse_word(relator)):
        for rot in rotations(base):
            for k in range(half, n):
                s, t = rot[:k], rot[k:]
                repl = inverse_word(t)
                if k > half:
                    long_moves.setdefault(s, repl)
                elif k == half:
                    half_moves.setdefault(s, repl)
    return long_moves, half_moves


def _apply_linear_dehn(word, long_moves):
    """Leftmost longest strictly-shortening replacement, or None."""
    n = len(word)
    lengths = sorted({len(s) for s in long_moves}, reverse=True)
    for k in lengths:
        if k > n:
            continue
        for i in range(n - k + 1):
            s = word[i : i + k]
            if s in long_moves:
                return free_reduce(word[:i] + long_moves[s] + word[i + k :])
    return None


def reduce(word, presentation=None):
    """Free reduction, optionally followed by Dehn reduction.

    With a presentation, any subword matching more than half of a cyclic
    rotation of the relator (or its inverse) is replaced by the shorter
    complement until no such subword remains.
    """
    w = free_reduce(word)
    if presentation is None:
        return w
    long_moves, _ = _relator_tables(presentation.relator)
    while True:
        nxt = _apply_linear_dehn(w, long_moves)
        if nxt is None:
            return w
        w = nxt


def _cyclic_dehn_step(word, long_moves):
    """Best strictly-shortening cyclic replacement, or None.

    Among all applicable replacements, the one whose result has the
    smallest (length, minimal rotation) is chosen, which makes the greedy
    reduction independent of the input rotation.
    """
    n = len(word)
    if n == 0:
        return None
    doubled = word + word
    best = None
    lengths = sorted({len(s) for s in long_moves}, reverse=True)
    for k in lengths:
        if k > n:
            continue
        for i in range(n):
            s = doubled[i : i + k]
            if s in long_moves:
                rest = doubled[i + k : i + n]
                candidate = cyclic_reduce(long_moves[s] + rest)
                key = (len(candidate), min_rotation(candidate))
                if best is None or key < best[0]:
                    best = (key, candidate)
        if best is not None:
            return best[1]
    return None


def _half_swap_variants(word, half_moves):
    """Equal-length conjugates obtained by one half-relator swap."""
    n = len(word)
    out = set()
    if not half_moves:
        return out
    half = len(next(iter(half_moves)))
    if n < half:
        return out
    doubled = word + word
    for i in range(n):
        s = doubled[i : i + half]
        if s in half_moves:
            rest = doubled[i + half : i + n]
            out.add(cyclic_reduce(half_moves[s] + rest))
    return out


def conjugacy_canonical(word, presentation):
    """Canonical CyclicWord of the conjugacy class of `word`.

    Cyclic reduction, cyclic Dehn reduction, closure under half-relator
    swaps, then minimal rotation over everything reachable. Conjugate
    inputs map to equal outputs; the relator itself maps to the empty
    class.
    """
    long_moves, half_moves = _relator_tables(presentation.relator)
    w = cyclic_reduce(word)
    # shorten as far as possible first
    while True:
        nxt = _cyclic_dehn_step(w, long_moves)
        if nxt is None:
            break
        w = nxt
    if not w:
        return CyclicWord(())
    # closure of the shortest representatives under rotations + half swaps
    seen = {min_rotation(w)}
    frontier = [min_rotation(w)]
    guard = 0
    while frontier:
        guard += 1
        if guard > 10000:
            raise RuntimeError("canonicalization closure did not stabilize")
        current = frontier.pop()
        for variant in _half_swap_variants(current, half_moves):
            shorter = _cyclic_dehn_step(variant, long_moves)
            if shorter is not None:
                # strictly shorter representative found: restart from it
                return conjugacy_canonical(shorter, presentation)
            key = min_rotation(variant)
            if key not in seen:
                seen.add(key)
                frontier.append(key)
    return CyclicWord(min(seen))


def evaluate_word(word, generators):
    """Product of generator matrices along a word.

    `generators` maps positive letter -> matrix; inverses are computed.
    """
    first = next(iter(generators.values()))
    m = np.eye(first.shape[0])
    for letter in word:
        g = generators[abs(letter)]
        m = m @ (g if letter > 0 else np.linalg.inv(g))
    return m


def extend_cocycle(omega, word, rho):
    """Value of the cocycle at `word`: ω_e = 0, ω_{gh} = ω_g + ρ(g)ω_h.

    Parameters
    ----------
    omega : dict or array
        Translation vectors per positive generator letter (dict keyed by
        letter, or array of shape (n_generators, dim)).
    word : tuple
        Word in signed letters.
    rho : Representation
        Linear representation supplying ρ(g).

    Notes
    -----
    The word is freely reduced first (the value depends only on the group
    element, and reduction removes exactly the prefix products that would
    cancel). Direct evaluation; intended for words of moderate length.
    Class invariants of the Margulis pairing are evaluated by the
    numerically stable orbit sum in `affine_deform`.
    """
    word = free_reduce(word)
    vectors = _omega_as_dict(omega, rho.dim)
    value = np.zeros(rho.dim)
    prefix = np.eye(rho.dim)
    for letter in word:
        if letter > 0:
            value = value + prefix @ vectors[letter]
            prefix = prefix @ rho.generator(letter)
        else:
            inv = rho.generator(letter)  # rho caches inverses
            value = value - prefix @ inv @ vectors[-letter]
            prefix = prefix @ inv
    return value


def _omega_as_dict(omega, dim):
    if isinstance(omega, dict):
        return omega
    arr = np.asarray(omega, float)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError("omega must be (n_generators, dim)")
    return {i + 1: arr[i] for i in range(arr.shape[0])}


@dataclass
class CocycleBasis:
    """Basis of the relator-compatible cocycle space Z^1.

    Each basis element assigns one vector in R^dim to every generator;
    `vectors` has shape (dimension, n_generators, dim).
    """

    vectors: np.ndarray
    rank: int
    presentation: GroupPresentation = field(repr=False, default=None)

    @property
    def dimension(self):
        return self.vectors.shape[0]

    def element(self, coefficients):
        """Generator assignment (n_generators, dim) for given coefficients."""
        coefficients = np.asarray(coefficients, float)
        return np.tensordot(coefficients, self.vectors, axes=(0, 0))


def relator_constraint_matrix(rho, presentation):
    """Matrix of ω ↦ ω_R on stacked generator vectors (Fox-derivative style).

    Shape (dim, n_generators * dim); the cocycle rule expands the relator
    into prefix-weighted blocks, one per letter.
    """
    dim, n_gen = rho.dim, presentation.n_generators
    c = np.zeros((dim, n_gen * dim))
    prefix = np.eye(dim)
    for letter in presentation.relator:
        if letter > 0:
            c[:, (letter - 1) * dim : letter * dim] += prefix
            prefix = prefix @ rho.generator(letter)
        else:
            prefix = prefix @ rho.generator(letter)
            c[:, (-letter - 1) * dim : (-letter) * dim] -= prefix
    return c


def solve_cocycle_space(rho, presentation, tol=1e-10):
    """Basis of generator assignments with vanishing relator extension.

    Dense SVD with singular values thresholded at tol × σ_max. Emits a
    warning when the relator constraint is rank deficient (an invariant
    vector or a degenerate representation).
    """
    dim = rho.dim
    c = relator_constraint_matrix(rho, presentation)
    u, s, vt = np.linalg.svd(c, full_matrices=True)
    rank = int(np.sum(s > tol * s[0])) if s.size else 0
    if rank < dim:
        warnings.warn(
            f"relator constraint has rank {rank} < {dim}: invariant vector "
            "or numerically degenerate representation",
            stacklevel=2,
        )
    basis_rows = vt[rank:]
    vectors = basis_rows.reshape(basis_rows.shape[0], presentation.n_generators, dim)
    return CocycleBasis(vectors=vectors, rank=rank, presentation=presentation)
