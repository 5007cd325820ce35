"""Interaction rules: patterns, validation, variadic expansion, rule table.

A rule rewrites an active pair (an equation between two agent terms) into a
multiset of right-hand-side equations.  Three kinds exist:

* ordinary      - both pattern sides name concrete symbols;
* fixed generic - one side matches any agent of one specific arity;
* variadic      - one side matches any agent with at least ``f`` ports, the
                  remainder of its ports covered by a range ``[x]``.

Variadic rules never reach the reduction engine directly: they are expanded
into one fixed generic rule per partner arity, which also makes the static
overlap checks finite.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Iterable, Iterator, Optional, Sequence, Union

from .core import (
    Agent,
    Configuration,
    Equation,
    Name,
    NameSupply,
    NetError,
    Symbol,
    Term,
    canonicalize,
)

DEFAULT_ARITY_CAP = 64


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    span: Optional[Span] = None

    def __str__(self) -> str:
        where = f" ({self.span})" if self.span else ""
        return f"{self.severity}: {self.code}: {self.message}{where}"


def errors_in(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.severity == "error"]


class RuleSetError(NetError):
    """Raised when a rule set with error diagnostics is forced into a table."""

    def __init__(self, diagnostics: Sequence[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in diagnostics))


# ---------------------------------------------------------------------------
# Rule shapes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrdinaryPattern:
    """A concrete agent pattern: symbol plus one parameter name per port."""

    symbol: Symbol
    params: tuple[Name, ...]

    def __post_init__(self) -> None:
        if len(self.params) != self.symbol.arity:
            raise NetError(
                f"pattern {self.symbol.name}/{self.symbol.arity} has "
                f"{len(self.params)} parameter(s)"
            )


@dataclass(frozen=True)
class GenericPattern:
    """A wildcard agent pattern.

    Without a range it matches any agent of arity ``len(fixed_params)``.
    With a range it matches any agent of arity >= ``len(fixed_params)``; the
    fixed parameters bind the partner's first ports in order and the range
    stands for all remaining ports.
    """

    generic_name: str
    fixed_params: tuple[Name, ...] = ()
    range_name: Optional[str] = None

    @property
    def is_variadic(self) -> bool:
        return self.range_name is not None


@dataclass(frozen=True)
class GenericRef:
    """Occurrence of the rule's wildcard agent inside a right-hand side."""

    name: str


@dataclass(frozen=True)
class VarName:
    """One arbitrary port of a range: ``x'`` stands for a single port of [x]."""

    range_name: str


@dataclass(frozen=True)
class RAgent:
    """Right-hand-side agent application.

    ``range_tail`` splices a whole range behind the explicit arguments, so
    ``phi(s, [y])`` is ``RAgent(GenericRef(...), (s,), "y")``.
    """

    head: Union[Symbol, GenericRef]
    args: tuple["RhsTerm", ...] = ()
    range_tail: Optional[str] = None


RhsTerm = Union[Name, VarName, RAgent]


@dataclass(frozen=True)
class RuleEquation:
    left: RhsTerm
    right: RhsTerm


class RuleKind(str, Enum):
    ORDINARY = "ordinary"
    FIXED_GENERIC = "fixed-generic"
    VARIADIC = "variadic"


@dataclass(frozen=True)
class Rule:
    """One interaction rule.

    A generic side, when present, is always stored on the right; parsers and
    builders normalize the orientation (equations are undirected anyway).
    """

    id: str
    left: OrdinaryPattern
    right: Union[OrdinaryPattern, GenericPattern]
    rhs: tuple[RuleEquation, ...]
    kind: RuleKind
    origin: str = ""

    @property
    def generic(self) -> Optional[GenericPattern]:
        return self.right if isinstance(self.right, GenericPattern) else None

    @property
    def params(self) -> tuple[Name, ...]:
        if isinstance(self.right, GenericPattern):
            return self.left.params + self.right.fixed_params
        return self.left.params + self.right.params

    def lhs_text(self) -> str:
        if isinstance(self.right, GenericPattern):
            g = self.right
            partner = f"{g.generic_name}/{len(g.fixed_params)}"
            if g.is_variadic:
                partner += "+"
            return f"{self.left.symbol.name} >< {partner}"
        return f"{self.left.symbol.name} >< {self.right.symbol.name}"


def rhs_walk(t: RhsTerm) -> Iterator[RhsTerm]:
    yield t
    if isinstance(t, RAgent):
        for a in t.args:
            yield from rhs_walk(a)


def _eq_parts(eq: RuleEquation) -> Iterator[RhsTerm]:
    yield from rhs_walk(eq.left)
    yield from rhs_walk(eq.right)


def _eq_names(eq: RuleEquation) -> Iterator[Name]:
    for part in _eq_parts(eq):
        if isinstance(part, Name):
            yield part


def _eq_varnames(eq: RuleEquation) -> Iterator[str]:
    for part in _eq_parts(eq):
        if isinstance(part, VarName):
            yield part.range_name


def _eq_ranges(eq: RuleEquation) -> Iterator[str]:
    for part in _eq_parts(eq):
        if isinstance(part, RAgent) and part.range_tail is not None:
            yield part.range_tail


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_linearity(rule: Rule) -> list[Diagnostic]:
    """Port-discipline check for a single rule.

    Every left-hand parameter must be used exactly once on the right, every
    other right-hand name exactly twice; ranges and variadic names follow the
    same discipline (a left-hand range is a parameter, a right-hand-only
    range is an internal wire bundle).
    """
    diags: list[Diagnostic] = []

    def err(code: str, message: str) -> None:
        diags.append(Diagnostic("error", code, f"rule {rule.id}: {message}"))

    params = rule.params
    for name, count in Counter(params).items():
        if count > 1:
            err("E_LIN_DUP", f"parameter {name.display} bound more than once in the LHS")

    param_set = set(params)
    name_count: Counter = Counter()
    for eq in rule.rhs:
        name_count.update(_eq_names(eq))

    for p in params:
        c = name_count.get(p, 0)
        if c == 0:
            err("E_LIN_ERASED", f"LHS parameter {p.display} is never used in the RHS")
        elif c > 1:
            err("E_LIN_DUP", f"LHS parameter {p.display} used {c} times in the RHS")
    for n, c in name_count.items():
        if n in param_set:
            continue
        if c == 1:
            err("E_LIN_ERASED", f"name {n.display} occurs only once in the RHS (dangling wire)")
        elif c > 2:
            err("E_LIN_DUP", f"name {n.display} occurs {c} times in the RHS")

    # Generic occurrences must agree with the LHS wildcard shape.
    g = rule.generic
    for eq in rule.rhs:
        for part in _eq_parts(eq):
            if isinstance(part, RAgent) and isinstance(part.head, GenericRef):
                if g is None:
                    err("E_STRAY_GENERIC", "generic agent in the RHS of a non-generic rule")
                elif g.is_variadic:
                    if part.range_tail is None:
                        err("E_GEN_ARITY", "generic occurrence in a variadic rule must carry the range")
                    elif len(part.args) != len(g.fixed_params):
                        err(
                            "E_GEN_ARITY",
                            f"generic occurrence has {len(part.args)} fixed argument(s), "
                            f"LHS declares {len(g.fixed_params)}",
                        )
                else:
                    if part.range_tail is not None:
                        err("E_GEN_ARITY", "range on a generic occurrence of a fixed-generic rule")
                    elif len(part.args) != len(g.fixed_params):
                        err(
                            "E_GEN_ARITY",
                            f"generic occurrence has {len(part.args)} argument(s), "
                            f"expected {len(g.fixed_params)}",
                        )
            elif isinstance(part, RAgent) and isinstance(part.head, Symbol):
                if part.range_tail is not None:
                    # A range stands for the partner's remaining ports, so its
                    # width varies with the match; a concrete agent cannot
                    # absorb that.
                    err(
                        "E_RANGE_CONCRETE",
                        f"range argument on concrete agent {part.head.name}",
                    )
                elif len(part.args) != part.head.arity:
                    err(
                        "E_ARITY_CONFLICT",
                        f"agent {part.head.name}/{part.head.arity} applied to "
                        f"{len(part.args)} argument(s)",
                    )

    # Ranges and variadic names.
    variadic = g is not None and g.is_variadic
    lhs_range = g.range_name if variadic else None
    range_count: Counter = Counter()
    for eq in rule.rhs:
        ranges = list(_eq_ranges(eq))
        varnames = list(_eq_varnames(eq))
        range_count.update(ranges)
        range_count.update(varnames)
        if ranges and varnames:
            err("E_MIXED", "an equation may not contain both a range and a variadic name")
        if not variadic and (ranges or varnames):
            err("E_STRAY_VARIADIC", "range or variadic name in a non-variadic rule")
        if varnames:
            # A replicated equation is instantiated once per covered port, so
            # a plain name may not wire it to the rest of the rule and the
            # LHS parameters may not be captured by every copy.
            local = Counter(_eq_names(eq))
            for n, c in local.items():
                if n in param_set:
                    err("E_VN_SPAN", f"parameter {n.display} inside a replicated equation")
                elif name_count[n] != c or c != 2:
                    err(
                        "E_VN_SPAN",
                        f"name {n.display} is shared between a replicated equation and the rest of the rule",
                    )

    for rng, c in range_count.items():
        if rng == lhs_range:
            if c > 1:
                err("E_LIN_DUP", f"LHS range [{rng}] used {c} times in the RHS")
        else:
            if c == 1:
                err("E_LIN_ERASED", f"range [{rng}] occurs only once in the RHS (dangling bundle)")
            elif c > 2:
                err("E_LIN_DUP", f"range [{rng}] occurs {c} times in the RHS")
    if variadic and lhs_range is not None and range_count.get(lhs_range, 0) == 0:
        err("E_LIN_ERASED", f"LHS range [{lhs_range}] is never used in the RHS")

    return diags


def _plain_term(t: RhsTerm, rename: dict[Name, Name]) -> Term:
    if isinstance(t, Name):
        return rename.get(t, t)
    if isinstance(t, RAgent) and isinstance(t.head, Symbol) and t.range_tail is None:
        return Agent(t.head, tuple(_plain_term(a, rename) for a in t.args))
    raise NetError("ordinary rule RHS contains generic or variadic constructs")


def _self_rule_symmetric(rule: Rule) -> bool:
    """Does swapping the two parameter vectors leave the RHS net unchanged?

    Compared canonically: the parameter names are anchored in an interface so
    only internal names may be renamed.  Alpha-equivalent right-hand sides
    instantiate to literally identical nets, so accepting them is sound.
    """
    assert isinstance(rule.right, OrdinaryPattern)
    xs, ys = rule.left.params, rule.right.params
    swap = dict(zip(xs, ys)) | dict(zip(ys, xs))
    ident: dict[Name, Name] = {}
    original = [Equation(_plain_term(e.left, ident), _plain_term(e.right, ident)) for e in rule.rhs]
    swapped = [Equation(_plain_term(e.left, swap), _plain_term(e.right, swap)) for e in rule.rhs]
    anchor = list(xs + ys)
    return canonicalize(Configuration(anchor, original)) == canonicalize(
        Configuration(anchor, swapped)
    )


def _generic_slot_kind(rule: Rule) -> Optional[tuple[str, str, int]]:
    """(kind, ordinary symbol, arity-or-fixed-ports) of a generic rule."""
    g = rule.generic
    if g is None:
        return None
    if g.is_variadic:
        return ("variadic", rule.left.symbol.name, len(g.fixed_params))
    return ("fixed", rule.left.symbol.name, len(g.fixed_params))


def check_no_ambiguity(rules: Sequence[Rule]) -> list[Diagnostic]:
    """Reject rule sets in which one active pair could match two rules.

    Checks ordinary pair uniqueness, the swap condition on self rules, and
    generic slot uniqueness (a variadic rule occupies every slot from its
    fixed-port count upward).
    """
    diags: list[Diagnostic] = []

    seen_pairs: dict[tuple[str, str], Rule] = {}
    for rule in rules:
        if rule.kind is not RuleKind.ORDINARY:
            continue
        assert isinstance(rule.right, OrdinaryPattern)
        a, b = rule.left.symbol.name, rule.right.symbol.name
        key = (a, b) if a <= b else (b, a)
        if key in seen_pairs:
            diags.append(
                Diagnostic(
                    "error",
                    "E_DUP_PAIR",
                    f"rules {seen_pairs[key].id} and {rule.id} both rewrite the pair "
                    f"({key[0]}, {key[1]})",
                )
            )
        else:
            seen_pairs[key] = rule
        if a == b:
            try:
                symmetric = _self_rule_symmetric(rule)
            except NetError:
                continue  # nonlinear rule; validate_linearity reports it
            if not symmetric:
                diags.append(
                    Diagnostic(
                        "error",
                        "E_SELF_ASYM",
                        f"rule {rule.id}: self rule on {a} is not invariant under "
                        f"swapping its two parameter vectors",
                    )
                )

    generics = [r for r in rules if r.generic is not None]
    for r1, r2 in combinations(generics, 2):
        k1 = _generic_slot_kind(r1)
        k2 = _generic_slot_kind(r2)
        assert k1 and k2
        kind1, sym1, n1 = k1
        kind2, sym2, n2 = k2
        if sym1 != sym2:
            continue
        if kind1 == "fixed" and kind2 == "fixed":
            clash = n1 == n2
        elif kind1 == "variadic" and kind2 == "variadic":
            clash = True  # both cover every arity >= max(f1, f2)
        else:
            fixed_arity = n1 if kind1 == "fixed" else n2
            f = n2 if kind1 == "fixed" else n1
            clash = fixed_arity >= f
        if clash:
            diags.append(
                Diagnostic(
                    "error",
                    "E_DUP_GENERIC",
                    f"rules {r1.id} and {r2.id} occupy the same generic slot for "
                    f"symbol {sym1}",
                )
            )
    return diags


def collect_symbols(
    rules: Sequence[Rule] = (),
    configs: Sequence[Configuration] = (),
    extra: Iterable[Symbol] = (),
) -> set[Symbol]:
    """Every concrete symbol appearing in the given rules and nets."""
    out: set[Symbol] = set(extra)
    for rule in rules:
        out.add(rule.left.symbol)
        if isinstance(rule.right, OrdinaryPattern):
            out.add(rule.right.symbol)
        for eq in rule.rhs:
            for part in _eq_parts(eq):
                if isinstance(part, RAgent) and isinstance(part.head, Symbol):
                    out.add(part.head)
    for config in configs:
        stack: list[Term] = list(config.interface)
        for eq in config.equations:
            stack.append(eq.left)
            stack.append(eq.right)
        while stack:
            t = stack.pop()
            if isinstance(t, Agent):
                out.add(t.symbol)
                stack.extend(t.args)
    return out


def max_arity(symbols: Iterable[Symbol]) -> int:
    """Largest arity over all given symbols (0 for an empty program)."""
    return max((s.arity for s in symbols), default=0)


# ---------------------------------------------------------------------------
# Variadic expansion
# ---------------------------------------------------------------------------

class ExpansionLimitError(NetError):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic
        super().__init__(str(diagnostic))


def _rule_max_name_id(rule: Rule) -> int:
    best = -1
    for n in rule.params:
        best = max(best, n.id)
    for eq in rule.rhs:
        for n in _eq_names(eq):
            best = max(best, n.id)
    return best


def expand_variadic(
    rule: Rule, max_arity: int, *, cap: int = DEFAULT_ARITY_CAP
) -> list[Rule]:
    """Translate a variadic rule into fixed generic rules, one per arity.

    The arity-``k`` instance is the rule instantiated against an abstract
    partner with ``k`` ports: the left-hand range becomes ``k - f`` explicit
    parameters, right-hand-only ranges become that many fresh names (shared
    across a range's two occurrences), and every equation holding a variadic
    name is replicated once per covered port.  Non-variadic rules are
    returned unchanged.
    """
    if max_arity > cap:
        raise ExpansionLimitError(
            Diagnostic(
                "error",
                "E_EXPAND_OVERFLOW",
                f"maximum arity {max_arity} exceeds the expansion cap {cap}",
            )
        )
    g = rule.generic
    if g is None or not g.is_variadic:
        return [rule]
    f = len(g.fixed_params)
    return [_expand_at(rule, g, f, k) for k in range(f, max_arity + 1)]


def _expand_at(rule: Rule, g: GenericPattern, f: int, k: int) -> Rule:
    m = k - f
    supply = NameSupply(_rule_max_name_id(rule) + 1)
    lhs_ports = tuple(supply.fresh(f"{g.range_name}{i + 1}") for i in range(m))
    rhs_vectors: dict[str, tuple[Name, ...]] = {}
    params = set(rule.params)

    def vector(rng: str) -> tuple[Name, ...]:
        if rng == g.range_name:
            return lhs_ports
        if rng not in rhs_vectors:
            rhs_vectors[rng] = tuple(supply.fresh(f"{rng}{i + 1}") for i in range(m))
        return rhs_vectors[rng]

    def conv(t: RhsTerm, vn_map: dict[str, Name], names: dict[Name, Name]) -> RhsTerm:
        if isinstance(t, Name):
            return names.get(t, t)
        if isinstance(t, VarName):
            return vn_map[t.range_name]
        args = tuple(conv(a, vn_map, names) for a in t.args)
        if t.range_tail is not None:
            args = args + vector(t.range_tail)
        return RAgent(t.head, args, None)

    new_rhs: list[RuleEquation] = []
    for eq in rule.rhs:
        vns = set(_eq_varnames(eq))
        if vns:
            local = [n for n in dict.fromkeys(_eq_names(eq)) if n not in params]
            for i in range(m):
                vn_map = {r: vector(r)[i] for r in vns}
                names = {n: supply.fresh(n.display) for n in local}
                new_rhs.append(
                    RuleEquation(conv(eq.left, vn_map, names), conv(eq.right, vn_map, names))
                )
        else:
            new_rhs.append(RuleEquation(conv(eq.left, {}, {}), conv(eq.right, {}, {})))

    return Rule(
        id=f"{rule.id}@{k}",
        left=rule.left,
        right=GenericPattern(g.generic_name, g.fixed_params + lhs_ports, None),
        rhs=tuple(new_rhs),
        kind=RuleKind.FIXED_GENERIC,
        origin=f"expanded-from({rule.id}, {k})",
    )


# ---------------------------------------------------------------------------
# Generic rule constraint
# ---------------------------------------------------------------------------

def check_grc(rules: Sequence[Rule]) -> list[Diagnostic]:
    """Generic-overlap check over a fully expanded rule set.

    Two generic rules ``A >< phi_m`` and ``B >< phi_n`` both match the active
    pair (A, B) exactly when arity(A) = n and arity(B) = m; such a pair must
    then be covered by an ordinary rule, which takes priority at run time.
    """
    if any(r.kind is RuleKind.VARIADIC for r in rules):
        raise ValueError("check_grc expects an expanded rule set (no variadic rules)")
    diags: list[Diagnostic] = []
    ordinary_pairs = set()
    for r in rules:
        if r.kind is RuleKind.ORDINARY:
            assert isinstance(r.right, OrdinaryPattern)
            a, b = r.left.symbol.name, r.right.symbol.name
            ordinary_pairs.add((a, b) if a <= b else (b, a))

    generics = [r for r in rules if r.generic is not None]
    for r in generics:
        g = r.generic
        assert g is not None
        if r.left.symbol.arity == len(g.fixed_params):
            diags.append(
                Diagnostic(
                    "warning",
                    "W_SELF_GENERIC",
                    f"rule {r.id} can match its own symbol pair "
                    f"({r.left.symbol.name}, {r.left.symbol.name}); the two-probe "
                    f"lookup order makes the binding deterministic",
                )
            )
    for r1, r2 in combinations(generics, 2):
        a_sym = r1.left.symbol
        b_sym = r2.left.symbol
        g1 = r1.generic
        g2 = r2.generic
        assert g1 is not None and g2 is not None
        m, n = len(g1.fixed_params), len(g2.fixed_params)
        if (a_sym.name, m) == (b_sym.name, n):
            continue  # identical slot: reported as E_DUP_GENERIC elsewhere
        if a_sym.arity == n and b_sym.arity == m:
            key = (
                (a_sym.name, b_sym.name)
                if a_sym.name <= b_sym.name
                else (b_sym.name, a_sym.name)
            )
            if key not in ordinary_pairs:
                diags.append(
                    Diagnostic(
                        "error",
                        "E_GRC_OVERLAP",
                        f"generic rules {r1.id} ({r1.lhs_text()}) and {r2.id} "
                        f"({r2.lhs_text()}) both match the active pair "
                        f"({a_sym.name}, {b_sym.name}) and no ordinary rule covers it",
                    )
                )
    return diags


# ---------------------------------------------------------------------------
# Rule table and lookup
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrdinaryMatch:
    rule: Rule
    swapped: bool  # True: the equation's left term binds the rule's right pattern


@dataclass(frozen=True)
class GenericMatch:
    rule: Rule
    generic_side: str  # "left" | "right": equation side bound by the wildcard


MatchResult = Union[OrdinaryMatch, GenericMatch, None]


@dataclass
class RuleTable:
    """Immutable lookup structure; safe to share read-only across threads."""

    ordinary: dict[tuple[str, str], Rule]
    generic: dict[tuple[int, str], Rule]
    max_name_id: int = -1


def build_rule_table(rules: Sequence[Rule], *, validate: bool = True) -> RuleTable:
    """Index an expanded rule set for two-probe lookup.

    Ordinary rules are stored under an unordered symbol-pair key, generic
    rules under (wildcard arity, concrete partner symbol).  With ``validate``
    the full static check suite runs first and error diagnostics raise
    :class:`RuleSetError`; tests may bypass it to study ill-formed systems.
    """
    if any(r.kind is RuleKind.VARIADIC for r in rules):
        raise ValueError("build_rule_table expects an expanded rule set")
    if validate:
        diags: list[Diagnostic] = []
        for r in rules:
            diags.extend(validate_linearity(r))
        diags.extend(check_no_ambiguity(rules))
        diags.extend(check_grc(rules))
        bad = errors_in(diags)
        if bad:
            raise RuleSetError(bad)

    ordinary: dict[tuple[str, str], Rule] = {}
    generic: dict[tuple[int, str], Rule] = {}
    max_id = -1
    for r in rules:
        max_id = max(max_id, _rule_max_name_id(r))
        if r.kind is RuleKind.ORDINARY:
            assert isinstance(r.right, OrdinaryPattern)
            a, b = r.left.symbol.name, r.right.symbol.name
            key = (a, b) if a <= b else (b, a)
            ordinary.setdefault(key, r)
        else:
            g = r.generic
            assert g is not None and not g.is_variadic
            generic.setdefault((len(g.fixed_params), r.left.symbol.name), r)
    return RuleTable(ordinary, generic, max_id)


def lookup(table: RuleTable, a: Symbol, b: Symbol) -> MatchResult:
    """Resolve the rule for an active pair with left symbol ``a``, right ``b``.

    Ordinary rules take priority; otherwise the generic slot for ``a`` in the
    wildcard position is probed before the one for ``b``.  Returns ``None``
    when nothing matches.
    """
    key = (a.name, b.name) if a.name <= b.name else (b.name, a.name)
    rule = table.ordinary.get(key)
    if rule is not None:
        assert isinstance(rule.right, OrdinaryPattern)
        swapped = rule.left.symbol.name != a.name
        return OrdinaryMatch(rule, swapped)
    rule = table.generic.get((a.arity, b.name))
    if rule is not None:
        return GenericMatch(rule, "left")
    rule = table.generic.get((b.arity, a.name))
    if rule is not None:
        return GenericMatch(rule, "right")
    return None


# ---------------------------------------------------------------------------
# Whole-rule-set analysis pipeline
# ---------------------------------------------------------------------------

@dataclass
class Analysis:
    diagnostics: list[Diagnostic]
    expanded_rules: list[Rule]
    table: Optional[RuleTable]
    max_arity: int

    @property
    def ok(self) -> bool:
        return self.table is not None


def analyze_rules(
    rules: Sequence[Rule],
    symbols: Iterable[Symbol],
    *,
    arity_cap: int = DEFAULT_ARITY_CAP,
) -> Analysis:
    """Run every static check in order and build the table if all pass.

    Order: per-rule linearity, ambiguity over the written rules, variadic
    expansion up to the program's maximum arity, generic-overlap check over
    the expanded set.
    """
    diags: list[Diagnostic] = []
    for r in rules:
        diags.extend(validate_linearity(r))
    diags.extend(check_no_ambiguity(rules))
    if errors_in(diags):
        return Analysis(diags, [], None, 0)

    top = max_arity(symbols)
    expanded: list[Rule] = []
    try:
        for r in rules:
            expanded.extend(expand_variadic(r, top, cap=arity_cap))
    except ExpansionLimitError as exc:
        diags.append(exc.diagnostic)
        return Analysis(diags, [], None, top)

    diags.extend(check_grc(expanded))
    if errors_in(diags):
        return Analysis(diags, expanded, None, top)
    return Analysis(diags, expanded, build_rule_table(expanded, validate=False), top)
