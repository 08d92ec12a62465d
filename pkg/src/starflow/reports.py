"""Run scenarios and render the results as text or JSON.

Every series in a report is stored twice: as canonical text and as an exact
term list, so :func:`series_from_json` rebuilds it without loss.  Residuals
are differences that must vanish; on a passing task they are all zero.
"""

import json
import time
from dataclasses import dataclass, field

from gmpy2 import mpq

from .builtins import builtin_intertwiner, coupled2_derivations, expected_flow, sec4_series
from .flows import (
    TIME,
    QuantumFlow,
    check_classical_canonicity,
    check_quantum_canonicity,
    classical_flow,
    evolve_observable,
    quantum_flow,
)
from .gaussian import GaussianRational
from .intertwiner import (
    DiffOperator,
    apply_op,
    apply_op_exp,
    check_group_law,
    monomial_pairs,
    solve_intertwiner,
    verify_intertwiner,
)
from .maps import invert_map
from .moyal import HBAR, MOYAL, moyal_bracket
from .parsing import parse_operator, parse_poly
from .scenario import Scenario, load_scenario
from .series import DeformedFn, PhasePoly, var_names
from .transform import Derivation, induced_derivations, transformed_star, verify_transform_identity

__all__ = [
    "series_to_json",
    "series_from_json",
    "operator_to_json",
    "operator_from_json",
    "TaskResult",
    "Report",
    "run_scenario",
    "resolve_operator",
]

X2P2_CAVEAT = (
    "x2p2: the closed-form trajectories exist only for |t| < pi/(2h); "
    "formal (h, t) series carry no domain information, so this is not checked"
)


# -- serialization ------------------------------------------------------------


def series_to_json(f):
    params = list(getattr(f, "params", ()))
    return {
        "text": f.to_text(),
        "dim": f.dim,
        "params": params,
        "truncation": list(getattr(f, "trunc", ())),
        "terms": [{"exponents": list(k), "re": str(c.re), "im": str(c.im)} for k, c in f.sorted_terms()],
    }


def series_from_json(data):
    """Inverse of :func:`series_to_json`: a DeformedFn, or a PhasePoly when
    there are no parameters."""
    terms = {tuple(t["exponents"]): GaussianRational(mpq(t["re"]), mpq(t["im"])) for t in data["terms"]}
    if not data["params"]:
        return PhasePoly(data["dim"], terms)
    return DeformedFn(data["dim"], tuple(data["params"]), tuple(data["truncation"]), terms)


def operator_to_json(S):
    return {
        "text": S.to_text(),
        "dim": S.dim,
        "params": list(S.ctx.params),
        "truncation": list(S.ctx.trunc),
        "terms": [{"derivative": list(a), "coefficient": series_to_json(c)} for a, c in S.sorted_terms()],
    }


def operator_from_json(data):
    from .series import Context

    ctx = Context(data["dim"], tuple(data["params"]), tuple(data["truncation"]))
    return DiffOperator(ctx, {tuple(t["derivative"]): series_from_json(t["coefficient"]) for t in data["terms"]})


def _derivation_to_json(D):
    return {"text": D.to_text(), "components": [series_to_json(c) for c in D.coeffs]}


def _to_json(obj):
    if isinstance(obj, (DeformedFn, PhasePoly)):
        return series_to_json(obj)
    if isinstance(obj, DiffOperator):
        return operator_to_json(obj)
    if isinstance(obj, Derivation):
        return _derivation_to_json(obj)
    return obj


# -- report types -----------------------------------------------------------------


@dataclass
class TaskResult:
    """One task outcome.  ``computed``, ``expected`` and ``residuals`` map
    labels to series, operators or derivations; ``info`` holds plain data."""

    task: str
    passed: bool
    orders: dict
    computed: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    wall_time: float = None

    def to_dict(self, timing=False):
        out = {
            "task": self.task,
            "passed": self.passed,
            "orders": dict(self.orders),
            "computed": {k: _to_json(v) for k, v in self.computed.items()},
            "expected": {k: _to_json(v) for k, v in self.expected.items()},
            "residuals": {k: _to_json(v) for k, v in self.residuals.items()},
            "info": self.info,
        }
        if timing and self.wall_time is not None:
            out["wall_time_s"] = round(self.wall_time, 6)
        return out


@dataclass
class Report:
    scenario: dict
    tasks: list = field(default_factory=list)
    caveats: list = field(default_factory=list)
    timing: bool = False

    @property
    def passed(self):
        return all(t.passed for t in self.tasks)

    def to_dict(self):
        out = {
            "scenario": self.scenario,
            "passed": self.passed,
            "caveats": list(self.caveats),
            "tasks": [t.to_dict(self.timing) for t in self.tasks],
        }
        if self.timing:
            out["wall_time_s"] = round(sum(t.wall_time or 0 for t in self.tasks), 6)
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self):
        sc = self.scenario
        lines = [f"scenario {sc['name']}: {sc['hamiltonian']} (dim {sc['dim']})"]
        if sc["constants"]:
            lines.append("constants " + ", ".join(f"{k}={v}" for k, v in sc["constants"].items()))
        for t in self.tasks:
            orders = ", ".join(f"{k}<={v}" for k, v in t.orders.items())
            head = f"[{'PASS' if t.passed else 'FAIL'}] {t.task} ({orders})"
            if self.timing and t.wall_time is not None:
                head += f" {t.wall_time:.3f}s"
            lines.append(head)
            for k, v in t.computed.items():
                lines.append(f"  {k} = {_text(v)}")
            for k, v in t.expected.items():
                lines.append(f"  expected {k} = {_text(v)}")
            for k, v in t.residuals.items():
                lines.append(f"  residual {k} = {_text(v)}")
            for k, v in t.info.items():
                lines.append(f"  {k}: {_info_text(v)}")
        for c in self.caveats:
            lines.append(f"caveat: {c}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"

    def render(self, fmt="text"):
        return self.to_json() if fmt == "json" else self.to_text()


def _text(v):
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_text(x) for x in v) + "]"
    return v.to_text() if hasattr(v, "to_text") else str(v)


def _info_text(v):
    if isinstance(v, dict):
        return ", ".join(f"{k}={_info_text(x)}" for k, x in v.items())
    if isinstance(v, list):
        return "; ".join(_info_text(x) for x in v) if v else "none"
    return str(v)


# -- runner -------------------------------------------------------------------------


def resolve_operator(text, system, ctx, constants=None):
    """Operator literal, ``exp(<literal>)``, or ``builtin`` on ``ctx``."""
    text = text.strip()
    if text == "builtin":
        return builtin_intertwiner(system, ctx)
    if text.startswith("exp(") and text.endswith(")"):
        return apply_op_exp(parse_operator(text[4:-1], ctx, constants))
    return parse_operator(text, ctx, constants)


def _labels(dim):
    return [("Q" if v.startswith("x") else "P") + v[1:] for v in var_names(dim)]


class _Runner:
    def __init__(self, scenario):
        self.sc = scenario
        self.system = scenario.system()
        self.K = scenario.hbar_order
        self.L = scenario.t_order
        self._flows = {}
        self._solved = {}
        b = scenario.builtin
        # the x2p2 intertwiner is only known to second order in h
        default = min(self.K, 2) if b == "x2p2" and scenario.S == "builtin" else self.K
        self.s_order = scenario.verify_order if scenario.verify_order is not None else default

    def orders(self, h=None, **extra):
        out = {HBAR: self.K if h is None else h, TIME: self.L}
        out.update(extra)
        return out

    def flow(self, system=None):
        system = system or self.system
        key = (system.hbar_order, system.t_order)
        if key not in self._flows:
            self._flows[key] = quantum_flow(system)
        return self._flows[key]

    def intertwiner(self, system):
        """The scenario's S on ``system``'s context, truncated to ``s_order``."""
        S_text = self.sc.S
        if S_text == "solve":
            key = (system.hbar_order, system.t_order)
            if key not in self._solved:
                phi = self.flow(system).map
                res = solve_intertwiner(phi, self.s_order, self.sc.solve_derivative_order, self.sc.solve_coeff_degree)
                self._solved[key] = res.operator
            return self._solved[key]
        S = resolve_operator(S_text, system, system.context, self.sc.constants)
        return S.truncate(**{HBAR: min(self.s_order, S.ctx.order(HBAR))})

    # each task returns a TaskResult

    def task_evolve(self):
        sc, system = self.sc, self.system
        ctx = system.context
        H = ctx.lift(system.H)
        names = var_names(system.dim)
        observables = sc.observables or tuple(names)
        pinned = expected_flow(system)
        res = TaskResult("evolve", True, self.orders())
        for text in observables:
            A = system.H if text.strip() == "H" else parse_poly(text, system.dim, sc.constants)
            At = evolve_observable(system, A)
            res.computed[f"A({text})"] = At
            if self.L > 0:
                lhs = At.param_derivative(TIME)
                rhs = moyal_bracket(MOYAL, At, H).truncate(**{TIME: self.L - 1})
                res.residuals[f"d/dt A({text}) - [[A({text}), H]]"] = lhs - rhs
            if pinned is not None and text.strip() in names:
                exp = pinned[names.index(text.strip())]
                res.expected[f"A({text})"] = exp
                res.residuals[f"A({text}) - expected"] = At - exp
        res.passed = all(r.is_zero() for r in res.residuals.values())
        return res

    def task_flow(self):
        flow = self.flow()
        cflow = classical_flow(self.system)
        labels = _labels(self.system.dim)
        pinned = expected_flow(self.system)
        res = TaskResult("flow", True, self.orders())
        for lab, q, c in zip(labels, flow.map, cflow.map):
            res.computed[lab] = q
            res.residuals[f"{lab} classical limit"] = q.truncate(**{HBAR: 0}) - c.truncate(**{HBAR: 0})
        if pinned is not None:
            for lab, q, e in zip(labels, flow.map, pinned):
                res.expected[lab] = e
                res.residuals[f"{lab} - expected"] = q - e
        res.info["quantum flow equals classical flow"] = flow.map == cflow.map
        res.passed = all(r.is_zero() for r in res.residuals.values())
        return res

    def task_canonicity(self):
        flow = self.flow()
        ctx = self.system.context
        quantum = check_quantum_canonicity(flow)
        classical = check_classical_canonicity(flow)
        b = self.sc.builtin
        res = TaskResult("canonicity", quantum.passed, self.orders())
        for e in quantum.entries:
            res.computed[f"[[{e['label']}]]"] = e["value"]
            res.residuals[f"[[{e['label']}]] - canonical"] = e["deviation"]
        for e in classical.entries:
            res.computed[f"{{{e['label']}}}"] = e["value"]
            if b is None:
                continue
            expected = ctx.const(e["expected"])
            if b == "x2p2" and e["label"] == "Q,P":
                expected = sec4_series(ctx)
            res.expected[f"{{{e['label']}}}"] = expected
            res.residuals[f"{{{e['label']}}} - expected"] = e["value"] - expected
        res.info["quantum canonical"] = quantum.passed
        res.info["classically canonical"] = classical.passed
        res.passed = all(r.is_zero() for r in res.residuals.values())
        return res

    def task_transform(self):
        system = self.system
        phi = self.flow().map
        ctx = phi.context
        derivs = induced_derivations(phi)
        names = var_names(system.dim)
        res = TaskResult("transform", True, self.orders(), info={"pairs_degree": self.sc.monomial_test_degree})
        b = self.sc.builtin
        expected = None
        if b == "coupled2":
            c = system.constants
            expected = coupled2_derivations(ctx, c["m1"], c["m2"], c["k"])
        elif b == "harmonic":
            # linear flow: D_v is the constant column d_v Phi
            closed = expected_flow(system)
            expected = [Derivation(c.partial(i) for c in closed) for i in range(len(names))]
        for i, (v, D) in enumerate(zip(names, derivs)):
            res.computed[f"D_{v}"] = D
            if expected is not None:
                res.expected[f"D_{v}"] = expected[i]
                res.residuals[f"D_{v} - expected"] = D - expected[i]
        spec = transformed_star(phi)
        inverse = invert_map(phi)
        pairs = monomial_pairs(system.dim, self.sc.monomial_test_degree)
        failed = 0
        for a, bb in pairs:
            f = ctx.lift(PhasePoly(system.dim, {a: 1}))
            g = ctx.lift(PhasePoly(system.dim, {bb: 1}))
            check = verify_transform_identity(phi, f, g, spec, inverse)
            if not check.passed:
                failed += 1
                if failed <= 5:
                    res.residuals[f"identity on ({f.to_text()}, {g.to_text()})"] = check.difference
        res.info["pairs checked"] = len(pairs)
        res.info["pairs failed"] = failed
        res.passed = failed == 0 and all(r.is_zero() for r in res.residuals.values())
        return res

    def task_verify_S(self):
        system = self.system
        ctx = system.context
        S = self.intertwiner(system)
        phi = self.flow().map
        report = verify_intertwiner(S, phi, self.s_order, self.sc.monomial_test_degree)
        res = TaskResult("verify-S", report.passed, self.orders(h=self.s_order))
        res.computed["S"] = S
        for name, rel in report.relations.items():
            res.info[name] = {"passed": rel["passed"], "checked": rel["checked"], "failed": rel["failed"]}
            for k, fail in enumerate(rel["failures"]):
                label = fail["f"] if "g" not in fail else f"{fail['f']}, {fail['g']}"
                res.residuals[f"{name} ({label})"] = fail["residual"]
        res.info["S-operator form"] = report.is_s_operator
        if self.sc.builtin == "coupled2":
            c = system.constants
            A = ctx.var("x1") * ctx.var("x2") ** 2
            got = apply_op(S, A)
            exp = A + ctx.var(HBAR) ** 2 * ctx.var(TIME) ** 2 * (c["k"] / (4 * c["m1"]))
            exp = exp.truncate(**{HBAR: got.context.order(HBAR)})
            res.computed["S(x1*x2^2)"] = got
            res.expected["S(x1*x2^2)"] = exp
            res.residuals["S(x1*x2^2) - expected"] = got - exp
        res.passed = report.passed and all(r.is_zero() for r in res.residuals.values())
        return res

    def task_solve_S(self):
        sc, system = self.sc, self.system
        phi = self.flow().map
        result = solve_intertwiner(
            phi, self.s_order, sc.solve_derivative_order, sc.solve_coeff_degree, verify_degree=sc.monomial_test_degree
        )
        self._solved[(system.hbar_order, system.t_order)] = result.operator
        res = TaskResult("solve-S", result.found, self.orders(h=self.s_order))
        res.computed["S"] = result.operator
        res.info["status"] = result.status
        res.info["order reached"] = result.order_reached
        res.info["unique"] = result.unique
        if result.message:
            res.info["message"] = result.message
        if sc.builtin is not None:
            ref = builtin_intertwiner(system).truncate(**{HBAR: min(self.s_order, 2 if sc.builtin == "x2p2" else self.K)})
            if ref.ctx.order(HBAR) == self.s_order:
                res.expected["S"] = ref
                res.residuals["S - expected"] = result.operator - ref
        res.passed = result.found and all(r.is_zero() for r in res.residuals.values())
        return res

    def _group(self, task, degree):
        c = self.sc.compose_order
        system = self.system.with_orders(t_order=max(self.L, 2 * c))
        S = self.intertwiner(system)
        flow = self.flow(system)
        h = S.ctx.order(HBAR)
        flow = QuantumFlow(system, flow.map.truncate(**{HBAR: h}))
        report = check_group_law(system, S, c, degree, flow)
        res = TaskResult(task, report.passed, {HBAR: h, "t1": c, "t2": c})
        for label, r in report.composition.items():
            for lab, d in zip(_labels(system.dim), r["residuals"]):
                res.residuals[f"{label}: {lab} - {lab}(t1+t2)"] = d
        for label, r in report.pullback.items():
            res.info[label] = {"passed": r["passed"], "checked": r["checked"]}
            for fail in r["failures"]:
                res.residuals[f"pull-back on {fail['A']}"] = fail["residual"]
        return res

    def task_compose(self):
        return self._group("compose", None)

    def task_group_law(self):
        return self._group("group-law", self.sc.monomial_test_degree)


def run_scenario(scenario, timing=False):
    """Run a :class:`Scenario` (or a path to a scenario file) and return the
    :class:`Report`.  Tasks run in a fixed dependency order."""
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(scenario)
    runner = _Runner(scenario)
    report = Report(scenario.to_dict(), timing=timing)
    if scenario.builtin == "x2p2":
        report.caveats.append(X2P2_CAVEAT)
    for task in scenario.tasks:
        start = time.perf_counter()
        result = getattr(runner, "task_" + task.replace("-", "_"))()
        result.wall_time = time.perf_counter() - start
        report.tasks.append(result)
    return report
