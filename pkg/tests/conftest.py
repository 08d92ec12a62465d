import os
import sys

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from starflow import Context, GaussianRational, PhasePoly, monomials

sys.path.insert(0, os.path.dirname(__file__))

# reproducible runs; examples are deterministic for a given test body
settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

small_rationals = st.fractions(min_value=-3, max_value=3, max_denominator=4)
nonzero_rationals = small_rationals.filter(lambda q: q != 0)


@st.composite
def gaussians(draw, real=False):
    re = draw(small_rationals)
    im = 0 if real else draw(small_rationals)
    return GaussianRational(re, im)


@st.composite
def phase_polys(draw, dim=1, max_degree=3, max_terms=4, real=False):
    monos = monomials(2 * dim, max_degree)
    keys = draw(st.lists(st.sampled_from(monos), min_size=1, max_size=max_terms, unique=True))
    terms = {k: draw(gaussians(real=real)) for k in keys}
    return PhasePoly(dim, terms)


@st.composite
def deformed(draw, ctx, max_degree=3, max_terms=4, real=False):
    """Random DeformedFn on ``ctx`` with parameter degrees inside truncation."""
    nv = 2 * ctx.dim
    terms = {}
    for _ in range(draw(st.integers(1, max_terms))):
        pk = tuple(draw(st.integers(0, o)) for o in ctx.trunc)
        mono = draw(st.sampled_from(monomials(nv, max_degree)))
        terms[pk + mono] = draw(gaussians(real=real))
    return ctx.series(terms)


def hbar_ctx(dim=1, K=4):
    return Context(dim, ("h",), (K,))
