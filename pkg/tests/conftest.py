import numpy as np
import pytest

from anosovlab.cli import random_cocycle
from anosovlab.fuchsian import enumerate_ball, octagon_group
from anosovlab.principal_rep import (
    Representation,
    embedded_representation,
    principal_basis,
    sym_representation,
)
from anosovlab.surface_group import GENERATOR_LABELS


class Lab:
    """Shared bundle: octagon group, principal representations, orbit ball."""

    def __init__(self, radius, slack=2.0):
        self.presentation, self.sl2_generators = octagon_group()
        self.sl2 = Representation(self.sl2_generators, labels=GENERATOR_LABELS)
        self.basis = {p: principal_basis(p) for p in (2, 3, 4)}
        self.rho_v = {p: sym_representation(p, self.sl2) for p in (2, 3)}
        self.rho_e = {p: embedded_representation(p, self.sl2) for p in (2, 3)}
        self.ball = enumerate_ball(
            self.sl2.generators, radius, slack, presentation=self.presentation
        )

    def hyperbolic_words(self, max_count=None, rng=None):
        words = [
            w for w, m in zip(self.ball.words, self.ball.matrices)
            if w and abs(float(np.trace(m))) > 2.001
        ]
        if rng is not None:
            words = [words[i] for i in rng.permutation(len(words))]
        return words[:max_count] if max_count else words

    def random_cocycle(self, p, seed):
        return random_cocycle(self.rho_v[p], self.presentation, seed)


@pytest.fixture(scope="session")
def lab():
    """Small workspace for module tests (ball radius 9.5)."""
    return Lab(radius=9.5)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
