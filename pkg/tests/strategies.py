"""Shared hypothesis strategies."""
from hypothesis import strategies as st

from forchflow.constitutive import ForchheimerLaw


@st.composite
def laws(draw, max_terms=4):
    """Laws with ``0 = alpha_0 < alpha_1 < ... <= 4`` and coefficients in
    ``[1e-2, 1e2]``."""
    N = draw(st.integers(0, max_terms - 1))
    exps = sorted(draw(st.lists(st.floats(0.05, 4.0), min_size=N, max_size=N,
                                unique=True)))
    exps = [0.0] + exps
    if len(set(round(e, 6) for e in exps)) != len(exps):
        exps = [0.0] + [i + 0.5 for i in range(N)]
    coeffs = draw(st.lists(st.floats(1e-2, 1e2), min_size=N + 1, max_size=N + 1))
    return ForchheimerLaw.from_pairs(list(zip(exps, coeffs)))
