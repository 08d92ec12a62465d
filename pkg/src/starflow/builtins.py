"""Closed-form intertwiners and derivations for the built-in systems.

These are reference data: the engine computes the same objects from the
flows, and the tests compare the two.
"""

from .flows import TIME
from .gaussian import as_rational
from .intertwiner import DiffOperator, apply_op_exp
from .moyal import HBAR
from .transform import Derivation

__all__ = [
    "coupled2_generator",
    "coupled2_derivations",
    "x2p2_intertwiner",
    "builtin_intertwiner",
    "expected_flow",
    "sec4_series",
]


def _fractions(system, *names):
    return [as_rational(system.constants.get(n, 1)) for n in names]


def coupled2_generator(ctx, m1=1, k=1):
    """``h^2 (k t^2/(8 m1) dx1 dx2^2 + k t/4 dp1 dx2^2 + k^2 t^3/(12 m1) p2 dx2^3)``."""
    m1, k = as_rational(m1), as_rational(k)
    h, t = ctx.var(HBAR), ctx.var(TIME)
    p2 = ctx.var("p2")
    h2 = h * h
    return DiffOperator(
        ctx,
        {
            (1, 2, 0, 0): h2 * t * t * (k / (8 * m1)),
            (0, 2, 1, 0): h2 * t * (k / 4),
            (0, 3, 0, 0): h2 * t * t * t * p2 * (k * k / (12 * m1)),
        },
    )


def coupled2_derivations(ctx, m1=1, m2=1, k=1):
    """The four derivations ``D_x1, D_x2, D_p1, D_p2`` carried by the
    coupled-system flow, as closed-form polynomials in ``t``."""
    m1, m2, k = (as_rational(v) for v in (m1, m2, k))
    t = ctx.var(TIME)
    x1, x2, p1, p2 = (ctx.var(v) for v in ("x1", "x2", "p1", "p2"))
    one, zero = ctx.one(), ctx.zero()
    d_x1 = Derivation([one, t * p2 * (2 * k), zero, zero])
    d_x2 = Derivation([zero, one, zero, zero])
    d_p1 = Derivation([t / m1, t * t * p2 * (k / m1), one, zero])
    d_p2 = Derivation(
        [
            -(t * t * p2 * (k / m1)),
            t / m2 + t * x1 * (2 * k) - t * t * p1 * (k / m1) - t * t * t * p2 * p2 * (k * k / m1),
            -(t * p2 * (2 * k)),
            one,
        ]
    )
    return (d_x1, d_x2, d_p1, d_p2)


def x2p2_intertwiner(ctx):
    """Second-order-in-h intertwiner for ``H = x^2 p^2``."""
    h, t = ctx.var(HBAR), ctx.var(TIME)
    x, p = ctx.var("x"), ctx.var("p")
    h2 = h * h
    t2, t3 = t * t, t * t * t
    half, sixth = as_rational("1/2"), as_rational("1/6")
    terms = {
        (0, 0): ctx.one(),
        (3, 0): h2 * (t2 * x**3 * 3 + t3 * x**4 * p * 4) * sixth,
        (0, 3): h2 * (t2 * p**3 * 3 - t3 * x * p**4 * 4) * sixth,
        (1, 2): h2 * (-(t * p) - t2 * x * p**2 + t3 * x**2 * p**3 * 4) * half,
        (2, 1): h2 * (t * x - t2 * x**2 * p - t3 * x**3 * p**2 * 4) * half,
        (2, 0): h2 * (t2 * x**2 * 2 + t3 * x**3 * p * 2),
        (0, 2): h2 * (t2 * p**2 * 2 - t3 * x * p**3 * 2),
        (1, 1): h2 * (t2 * x * p * -2),
    }
    return DiffOperator(ctx, terms)


def builtin_intertwiner(system, ctx=None):
    """Closed-form intertwiner for a built-in system, on ``ctx`` (defaults to
    the system's own ``(h, t)`` context)."""
    ctx = ctx or system.context
    if system.name == "harmonic":
        return DiffOperator.identity(ctx)
    if system.name == "coupled2":
        m1, k = _fractions(system, "m1", "k")
        return apply_op_exp(coupled2_generator(ctx, m1, k))
    if system.name == "x2p2":
        return x2p2_intertwiner(ctx)
    raise KeyError(f"no closed-form intertwiner for {system.name!r}")


def expected_flow(system, ctx=None):
    """Closed-form trajectories as truncated series, or None when no closed
    form is pinned at the system's orders.

    ``x2p2`` is pinned only for ``h`` order at most 3, where the expansion
    ``Q_C (1 + h^2 (t^2 + 2/3 t^3 x p))`` is complete.
    """
    from math import factorial

    from .maps import PhaseMap

    ctx = ctx or system.context
    t = ctx.var(TIME)
    L = ctx.order(TIME)
    if system.name == "harmonic":
        (w,) = _fractions(system, "w")
        x, p = ctx.var("x"), ctx.var("p")
        cos = sum((t ** n * (w ** n * (-1) ** (n // 2) / factorial(n)) for n in range(0, L + 1, 2)), ctx.zero())
        sin = sum((t ** n * (w ** n * (-1) ** (n // 2) / factorial(n)) for n in range(1, L + 1, 2)), ctx.zero())
        return PhaseMap([x * cos + p * sin / w, p * cos - x * sin * w])
    if system.name == "coupled2":
        m1, m2, k = _fractions(system, "m1", "m2", "k")
        x1, x2, p1, p2 = (ctx.var(v) for v in ("x1", "x2", "p1", "p2"))
        return PhaseMap(
            [
                x1 + p1 * t / m1 - p2 * p2 * t * t * (k / (2 * m1)),
                x2 + (p2 / m2 + x1 * p2 * (2 * k)) * t + p1 * p2 * t * t * (k / m1) - p2**3 * t**3 * (k * k / (3 * m1)),
                p1 - p2 * p2 * t * k,
                p2,
            ]
        )
    if system.name == "x2p2":
        if ctx.order(HBAR) > 3:
            return None
        x, p, h = ctx.var("x"), ctx.var("p"), ctx.var(HBAR)
        xp = x * p
        grow = sum((t ** n * xp ** n * (as_rational(2) ** n / factorial(n)) for n in range(L + 1)), ctx.zero())
        decay = sum((t ** n * xp ** n * (as_rational(-2) ** n / factorial(n)) for n in range(L + 1)), ctx.zero())
        qc, pc = x * grow, p * decay
        return PhaseMap(
            [
                qc * (1 + h * h * (t * t + t**3 * xp * as_rational("2/3"))),
                pc * (1 + h * h * (t * t - t**3 * xp * as_rational("2/3"))),
            ]
        )
    return None


def sec4_series(ctx):
    """``sec(h t)^4`` expanded on ``ctx``: the classical bracket ``{Q, P}``
    of the ``x2p2`` flow."""
    from math import factorial

    u = ctx.var(HBAR) * ctx.var(TIME)
    n = min(ctx.order(HBAR), ctx.order(TIME))
    cos = sum((u ** (2 * j) * as_rational(f"{(-1) ** j}/{factorial(2 * j)}") for j in range(n // 2 + 1)), ctx.zero())
    sec = ctx.one()
    # sec = 1 + (1 - cos) sec, exact after n // 2 rounds since 1 - cos = O(u^2)
    for _ in range(n // 2 + 1):
        sec = 1 + (1 - cos) * sec
    return sec**4
