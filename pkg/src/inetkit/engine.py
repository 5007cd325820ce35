"""Reduction engine: step rules, deterministic strategies, normalization.

Four step kinds rewrite a configuration: communication merges the two
equations sharing a top-level name, substitution pushes a name's binding
into another equation, collect resolves a name into the interface, and
interaction replaces an agent-agent equation by a rule's right-hand side.
Interaction dispatch is two-phase: ordinary rules first, then the two
generic probes, in a fixed order.

The calculus itself fixes no reduction order; strategies only choose which
reducible equation fires next, and for a validated rule set every strategy
reaches the same normal form in the same number of steps.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .core import (
    Agent,
    CanonicalConfiguration,
    Configuration,
    Equation,
    Name,
    NameSupply,
    NetError,
    Term,
    canonicalize,
    max_name_id,
    substitute,
    term_names,
)
from .rules import (
    GenericRef,
    OrdinaryMatch,
    OrdinaryPattern,
    RAgent,
    RhsTerm,
    Rule,
    RuleTable,
    VarName,
    lookup,
)

KIND_COMMUNICATION = "communication"
KIND_SUBSTITUTION = "substitution"
KIND_COLLECT = "collect"
KIND_INTERACTION = "interaction"


class ArityUnderflowError(NetError):
    """Variadic rule applied to a partner with fewer ports than fixed ones."""

    code = "E_ARITY_UNDER"


# ---------------------------------------------------------------------------
# Strategies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Fifo:
    def __str__(self) -> str:
        return "fifo"


@dataclass(frozen=True)
class Lifo:
    def __str__(self) -> str:
        return "lifo"


@dataclass(frozen=True)
class Seeded:
    seed: int

    def __str__(self) -> str:
        return f"seed:{self.seed}"


Strategy = Union[Fifo, Lifo, Seeded]


def strategy_from_spec(spec: str) -> Strategy:
    """Parse ``fifo``, ``lifo`` or ``seed:<u64>``."""
    if spec == "fifo":
        return Fifo()
    if spec == "lifo":
        return Lifo()
    if spec.startswith("seed:"):
        return Seeded(int(spec.split(":", 1)[1]))
    raise ValueError(f"unknown strategy {spec!r}")


def _candidate_order(strategy: Strategy, n: int, rng: Optional[random.Random]) -> list[int]:
    if isinstance(strategy, Fifo):
        return list(range(n))
    if isinstance(strategy, Lifo):
        return list(range(n - 1, -1, -1))
    order = list(range(n))
    (rng or random.Random(strategy.seed)).shuffle(order)
    return order


# ---------------------------------------------------------------------------
# Step results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepResult:
    kind: str
    rule_id: Optional[str]
    equation_before: Equation
    equations_after: tuple[Equation, ...]
    fresh_names: tuple[Name, ...]


@dataclass
class NormalizeOutcome:
    status: str  # "normal_form" | "stuck" | "budget_exhausted"
    final: Configuration
    steps: int
    trace: Optional[list[StepResult]]
    stuck_equations: tuple[Equation, ...] = ()


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def _whole_side_match(eq: Equation, x: Name) -> Optional[Term]:
    """The other side if ``x`` is a whole side of ``eq``."""
    if eq.left == x:
        return eq.right
    if eq.right == x:
        return eq.left
    return None


def _inside_nonname_side(eq: Equation, x: Name) -> bool:
    for side in (eq.left, eq.right):
        if isinstance(side, Agent) and any(n == x for n in term_names(side)):
            return True
    return False


def _classify_at(config: Configuration, i: int, table: RuleTable) -> Optional[str]:
    eq = config.equations[i]
    if isinstance(eq.left, Agent) and isinstance(eq.right, Agent):
        return KIND_INTERACTION
    sides = [
        (x, other)
        for x, other in ((eq.left, eq.right), (eq.right, eq.left))
        if isinstance(x, Name)
    ]
    # A name wired to its own equation (x=x or x inside the other side) has
    # no applicable step; normalize reports it as stuck.
    sides = [(x, other) for x, other in sides if not any(n == x for n in term_names(other))]
    for x, _ in sides:
        for j, other_eq in enumerate(config.equations):
            if j != i and _whole_side_match(other_eq, x) is not None:
                return KIND_COMMUNICATION
    for x, _ in sides:
        for j, other_eq in enumerate(config.equations):
            if j != i and _inside_nonname_side(other_eq, x):
                return KIND_SUBSTITUTION
    for x, _ in sides:
        if any(n == x for t in config.interface for n in term_names(t)):
            return KIND_COLLECT
    return None


def classify(eq: Equation, config: Configuration, table: RuleTable) -> Optional[str]:
    """Which step kind applies to ``eq`` within ``config``, if any.

    Agent-agent equations classify as interaction whether or not the table
    holds a matching rule; rule availability is the engine's concern.
    """
    for i, e in enumerate(config.equations):
        if e is eq:
            return _classify_at(config, i, table)
    for i, e in enumerate(config.equations):
        if e == eq:
            return _classify_at(config, i, table)
    raise NetError("equation does not belong to the configuration")


def _is_stuck(eq: Equation, table: RuleTable) -> bool:
    if isinstance(eq.left, Agent) and isinstance(eq.right, Agent):
        return lookup(table, eq.left.symbol, eq.right.symbol) is None
    for x, other in ((eq.left, eq.right), (eq.right, eq.left)):
        if isinstance(x, Name) and any(n == x for n in term_names(other)):
            return True  # closed loop, e.g. x=x
    return False


# ---------------------------------------------------------------------------
# The three name-resolution steps (pure: inputs are left untouched)
# ---------------------------------------------------------------------------

def _find_equation(config: Configuration, x: Name, t: Term, exclude: int = -1) -> int:
    for i, eq in enumerate(config.equations):
        if i == exclude:
            continue
        if (eq.left == x and eq.right == t) or (eq.right == x and eq.left == t):
            return i
    raise NetError(f"no equation {x.display} = ... present")


def step_communication(config: Configuration, x: Name, t: Term, u: Term) -> Configuration:
    """Merge ``x=t`` and ``x=u`` into ``t=u``; both occurrences of x vanish."""
    i = _find_equation(config, x, t)
    j = _find_equation(config, x, u, exclude=i)
    keep = [eq for k, eq in enumerate(config.equations) if k not in (i, j)]
    keep.append(Equation(t, u))
    return Configuration(list(config.interface), keep)


def step_substitution(
    config: Configuration, x: Name, t: Term, target: Equation
) -> Configuration:
    """Consume ``x=t`` by substituting ``t`` for ``x`` inside ``target``."""
    i = _find_equation(config, x, t)
    j = None
    for k, eq in enumerate(config.equations):
        if k != i and eq == target:
            j = k
            break
    if j is None:
        raise NetError("substitution target not present")
    eq = config.equations[j]
    if isinstance(eq.left, Agent) and any(n == x for n in term_names(eq.left)):
        new_eq = Equation(substitute(eq.left, x, t), eq.right)
    elif isinstance(eq.right, Agent) and any(n == x for n in term_names(eq.right)):
        new_eq = Equation(eq.left, substitute(eq.right, x, t))
    else:
        raise NetError("substitution target does not contain the name inside an agent side")
    keep = []
    for k, eq2 in enumerate(config.equations):
        if k == i:
            continue
        keep.append(new_eq if k == j else eq2)
    return Configuration(list(config.interface), keep)


def step_collect(config: Configuration, x: Name, t: Term) -> Configuration:
    """Consume ``x=t`` by substituting ``t`` for ``x`` in the interface."""
    i = _find_equation(config, x, t)
    if not any(n == x for s in config.interface for n in term_names(s)):
        raise NetError("collect requires the name to occur in the interface")
    interface = [substitute(s, x, t) for s in config.interface]
    keep = [eq for k, eq in enumerate(config.equations) if k != i]
    return Configuration(interface, keep)


# ---------------------------------------------------------------------------
# Rule instantiation
# ---------------------------------------------------------------------------

def _bindings_ordinary(rule: Rule, eq: Equation, swapped: bool) -> dict[Name, Term]:
    assert isinstance(rule.right, OrdinaryPattern)
    assert isinstance(eq.left, Agent) and isinstance(eq.right, Agent)
    left_actual, right_actual = (eq.right, eq.left) if swapped else (eq.left, eq.right)
    env: dict[Name, Term] = {}
    env.update(zip(rule.left.params, left_actual.args))
    env.update(zip(rule.right.params, right_actual.args))
    return env


def _resolve_generic_side(rule: Rule, eq: Equation, generic_side: Optional[str]) -> str:
    if generic_side is not None:
        return generic_side
    assert isinstance(eq.left, Agent) and isinstance(eq.right, Agent)
    # Prefer binding the wildcard to the left term, mirroring the first probe.
    if eq.right.symbol == rule.left.symbol:
        return "left"
    if eq.left.symbol == rule.left.symbol:
        return "right"
    raise NetError(f"equation does not match rule {rule.id}")


def _instantiate_generic(
    rule: Rule,
    eq: Equation,
    supply: NameSupply,
    generic_side: Optional[str],
    *,
    variadic: bool,
) -> list[Equation]:
    g = rule.generic
    assert g is not None and g.is_variadic == variadic
    side = _resolve_generic_side(rule, eq, generic_side)
    assert isinstance(eq.left, Agent) and isinstance(eq.right, Agent)
    generic_actual = eq.left if side == "left" else eq.right
    ordinary_actual = eq.right if side == "left" else eq.left
    beta = generic_actual.symbol

    f = len(g.fixed_params)
    if variadic:
        if beta.arity < f:
            raise ArityUnderflowError(
                f"rule {rule.id}: partner {beta.name}/{beta.arity} has fewer than "
                f"{f} port(s)"
            )
        ports: tuple[Term, ...] = generic_actual.args[f:]
    else:
        if beta.arity != f:
            raise NetError(f"rule {rule.id}: arity mismatch against {beta.name}/{beta.arity}")
        ports = ()
    m = len(ports)

    env: dict[Name, Term] = {}
    env.update(zip(rule.left.params, ordinary_actual.args))
    env.update(zip(g.fixed_params, generic_actual.args[:f]))

    rhs_vectors: dict[str, tuple[Name, ...]] = {}

    def vector(rng: str) -> tuple[Term, ...]:
        if rng == g.range_name:
            return ports
        if rng not in rhs_vectors:
            rhs_vectors[rng] = tuple(supply.fresh(f"{rng}{i + 1}") for i in range(m))
        return rhs_vectors[rng]

    fresh_map: dict[Name, Name] = {}

    def conv(t: RhsTerm, vn_map: dict[str, Term], fresh: dict[Name, Name]) -> Term:
        if isinstance(t, Name):
            if t in env:
                return env[t]
            if t not in fresh:
                fresh[t] = supply.fresh(t.display)
            return fresh[t]
        if isinstance(t, VarName):
            return vn_map[t.range_name]
        head = beta if isinstance(t.head, GenericRef) else t.head
        args: tuple[Term, ...] = tuple(conv(a, vn_map, fresh) for a in t.args)
        if t.range_tail is not None:
            args = args + tuple(vector(t.range_tail))
        return Agent(head, args)

    out: list[Equation] = []
    for req in rule.rhs:
        vns = set()
        stack: list[RhsTerm] = [req.left, req.right]
        while stack:
            part = stack.pop()
            if isinstance(part, VarName):
                vns.add(part.range_name)
            elif isinstance(part, RAgent):
                stack.extend(part.args)
        if vns:
            for i in range(m):
                vn_map = {r: vector(r)[i] for r in vns}
                copy_fresh: dict[Name, Name] = {}
                out.append(
                    Equation(conv(req.left, vn_map, copy_fresh), conv(req.right, vn_map, copy_fresh))
                )
        else:
            out.append(Equation(conv(req.left, {}, fresh_map), conv(req.right, {}, fresh_map)))
    return out


def instantiate_ordinary(rule: Rule, eq: Equation, supply: NameSupply) -> list[Equation]:
    """Right-hand side of an ordinary rule, with parameters bound to the
    equation's argument terms and internal names freshened."""
    assert isinstance(eq.left, Agent) and isinstance(eq.right, Agent)
    assert isinstance(rule.right, OrdinaryPattern)
    if eq.left.symbol == rule.left.symbol and eq.right.symbol == rule.right.symbol:
        swapped = False
    elif eq.left.symbol == rule.right.symbol and eq.right.symbol == rule.left.symbol:
        swapped = True
    else:
        raise NetError(f"equation does not match rule {rule.id}")
    env = _bindings_ordinary(rule, eq, swapped)
    fresh: dict[Name, Name] = {}

    def conv(t: RhsTerm) -> Term:
        if isinstance(t, Name):
            if t in env:
                return env[t]
            if t not in fresh:
                fresh[t] = supply.fresh(t.display)
            return fresh[t]
        if isinstance(t, VarName):
            raise NetError("ordinary rule with a variadic name in its RHS")
        if isinstance(t.head, GenericRef) or t.range_tail is not None:
            raise NetError("ordinary rule with generic or variadic constructs in its RHS")
        return Agent(t.head, tuple(conv(a) for a in t.args))

    return [Equation(conv(r.left), conv(r.right)) for r in rule.rhs]


def instantiate_fixed_generic(
    rule: Rule, eq: Equation, supply: NameSupply, generic_side: Optional[str] = None
) -> list[Equation]:
    """Like :func:`instantiate_ordinary`, with every occurrence of the
    wildcard agent in the right-hand side rewritten to the matched symbol."""
    return _instantiate_generic(rule, eq, supply, generic_side, variadic=False)


def instantiate_variadic(
    rule: Rule, eq: Equation, supply: NameSupply, generic_side: Optional[str] = None
) -> list[Equation]:
    """Direct variadic instantiation against a concrete partner.

    The partner's first ``f`` arguments bind the fixed parameters; the range
    covers the rest.  A left-hand range maps to those remaining argument
    terms, right-hand-only ranges map to fresh name vectors of matching
    length, and each equation holding variadic names is emitted once per
    covered port with that port's images substituted.
    """
    return _instantiate_generic(rule, eq, supply, generic_side, variadic=True)


# ---------------------------------------------------------------------------
# Single-step reduction and normalization
# ---------------------------------------------------------------------------

def _names_of_equations(eqs: Iterable[Equation]) -> set[Name]:
    out: set[Name] = set()
    for eq in eqs:
        out.update(term_names(eq.left))
        out.update(term_names(eq.right))
    return out


def _fresh_in(after: Sequence[Equation], before: Equation) -> tuple[Name, ...]:
    known = _names_of_equations([before])
    seen: list[Name] = []
    for eq in after:
        for n in list(term_names(eq.left)) + list(term_names(eq.right)):
            if n not in known and n not in seen:
                seen.append(n)
    return tuple(seen)


def _default_supply(config: Configuration, table: RuleTable) -> NameSupply:
    top = max_name_id(config.interface)
    for eq in config.equations:
        top = max(top, max_name_id((eq.left, eq.right)))
    return NameSupply(max(top, table.max_name_id) + 1)


def _apply_at(
    config: Configuration, i: int, kind: str, table: RuleTable, supply: NameSupply
) -> StepResult:
    eq = config.equations[i]
    if kind == KIND_INTERACTION:
        assert isinstance(eq.left, Agent) and isinstance(eq.right, Agent)
        match = lookup(table, eq.left.symbol, eq.right.symbol)
        assert match is not None
        if isinstance(match, OrdinaryMatch):
            produced = instantiate_ordinary(match.rule, eq, supply)
        else:
            produced = instantiate_fixed_generic(match.rule, eq, supply, match.generic_side)
        config.equations.pop(i)
        config.equations.extend(produced)
        return StepResult(
            kind,
            match.rule.id,
            eq,
            tuple(produced),
            _fresh_in(produced, eq),
        )

    # Name-driven steps: locate the side and partner that classified it.
    sides = [
        (x, other)
        for x, other in ((eq.left, eq.right), (eq.right, eq.left))
        if isinstance(x, Name) and not any(n == x for n in term_names(other))
    ]
    if kind == KIND_COMMUNICATION:
        for x, t in sides:
            for j, other_eq in enumerate(config.equations):
                if j == i:
                    continue
                u = _whole_side_match(other_eq, x)
                if u is not None:
                    new = step_communication(config, x, t, u)
                    config.interface, config.equations = new.interface, new.equations
                    return StepResult(kind, None, eq, (Equation(t, u),), ())
    elif kind == KIND_SUBSTITUTION:
        for x, t in sides:
            for j, other_eq in enumerate(config.equations):
                if j != i and _inside_nonname_side(other_eq, x):
                    new = step_substitution(config, x, t, other_eq)
                    after = new.equations[j if j < i else j - 1]
                    config.interface, config.equations = new.interface, new.equations
                    return StepResult(kind, None, eq, (after,), ())
    elif kind == KIND_COLLECT:
        for x, t in sides:
            if any(n == x for s in config.interface for n in term_names(s)):
                new = step_collect(config, x, t)
                config.interface, config.equations = new.interface, new.equations
                return StepResult(kind, None, eq, (), ())
    raise NetError(f"cannot apply {kind} at equation {i}")


def _reduce_step(
    config: Configuration,
    table: RuleTable,
    strategy: Strategy,
    supply: NameSupply,
    rng: Optional[random.Random],
) -> Optional[StepResult]:
    order = _candidate_order(strategy, len(config.equations), rng)
    for i in order:
        kind = _classify_at(config, i, table)
        if kind is None:
            continue
        if kind == KIND_INTERACTION:
            eq = config.equations[i]
            assert isinstance(eq.left, Agent) and isinstance(eq.right, Agent)
            if lookup(table, eq.left.symbol, eq.right.symbol) is None:
                continue  # stuck pair; keep looking for reducible work
        return _apply_at(config, i, kind, table, supply)
    return None


def _has_reducible(config: Configuration, table: RuleTable) -> bool:
    for i, eq in enumerate(config.equations):
        kind = _classify_at(config, i, table)
        if kind is None:
            continue
        if kind == KIND_INTERACTION:
            assert isinstance(eq.left, Agent) and isinstance(eq.right, Agent)
            if lookup(table, eq.left.symbol, eq.right.symbol) is None:
                continue
        return True
    return False


def reduce_once(
    config: Configuration,
    table: RuleTable,
    strategy: Strategy = Fifo(),
    supply: Optional[NameSupply] = None,
) -> Optional[StepResult]:
    """Apply exactly one reduction in place; ``None`` when none applies.

    The strategy picks among reducible equations only; agent pairs without a
    matching rule are skipped (they are stuck, not reducible).
    """
    if supply is None:
        supply = _default_supply(config, table)
    rng = random.Random(strategy.seed) if isinstance(strategy, Seeded) else None
    return _reduce_step(config, table, strategy, supply, rng)


def normalize(
    config: Configuration,
    table: RuleTable,
    strategy: Strategy = Fifo(),
    budget: int = 100_000,
    trace: bool = False,
    supply: Optional[NameSupply] = None,
) -> NormalizeOutcome:
    """Reduce to exhaustion or budget; the input configuration is not touched.

    ``normal_form`` means no step applies and nothing is stuck; residual
    agent pairs without a rule (and closed name loops such as x=x) yield
    ``stuck`` once everything else has been reduced.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    work = config.copy()
    if supply is None:
        supply = _default_supply(work, table)
    rng = random.Random(strategy.seed) if isinstance(strategy, Seeded) else None
    steps = 0
    recorded: Optional[list[StepResult]] = [] if trace else None
    while steps < budget:
        result = _reduce_step(work, table, strategy, supply, rng)
        if result is None:
            break
        steps += 1
        if recorded is not None:
            recorded.append(result)
    if steps >= budget and _has_reducible(work, table):
        return NormalizeOutcome("budget_exhausted", work, steps, recorded)
    stuck = tuple(eq for eq in work.equations if _is_stuck(eq, table))
    status = "stuck" if stuck else "normal_form"
    return NormalizeOutcome(status, work, steps, recorded, stuck)


# ---------------------------------------------------------------------------
# Confluence probing
# ---------------------------------------------------------------------------

@dataclass
class RunSummary:
    strategy: Strategy
    status: str
    steps: int
    canonical: Optional[CanonicalConfiguration]


@dataclass
class ConfluenceReport:
    consistent: bool
    runs: list[RunSummary]
    divergence: Optional[tuple[RunSummary, RunSummary]] = None
    traces: Optional[tuple[list[StepResult], list[StepResult]]] = None

    @property
    def terminated(self) -> list[RunSummary]:
        return [r for r in self.runs if r.status != "budget_exhausted"]


def confluence_probe(
    config: Configuration,
    table: RuleTable,
    strategies: Sequence[Strategy],
    budget: int = 100_000,
) -> ConfluenceReport:
    """Normalize under every strategy and compare outcomes.

    All terminating runs must agree on status, canonical final configuration
    and step count; the first disagreeing pair is re-run with tracing on and
    reported as a counterexample.
    """
    base = _default_supply(config, table)
    runs: list[RunSummary] = []
    for strategy in strategies:
        outcome = normalize(
            config, table, strategy, budget, supply=NameSupply(base.next_id)
        )
        canonical = (
            canonicalize(outcome.final) if outcome.status != "budget_exhausted" else None
        )
        runs.append(RunSummary(strategy, outcome.status, outcome.steps, canonical))

    finished = [r for r in runs if r.status != "budget_exhausted"]
    for other in finished[1:]:
        first = finished[0]
        if (
            other.status != first.status
            or other.steps != first.steps
            or other.canonical != first.canonical
        ):
            trace_a = normalize(
                config, table, first.strategy, budget, trace=True,
                supply=NameSupply(base.next_id),
            ).trace
            trace_b = normalize(
                config, table, other.strategy, budget, trace=True,
                supply=NameSupply(base.next_id),
            ).trace
            assert trace_a is not None and trace_b is not None
            return ConfluenceReport(False, runs, (first, other), (trace_a, trace_b))
    return ConfluenceReport(True, runs)
