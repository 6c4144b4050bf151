"""The rule catalog: guarded inequality schemas over the bound store.

Each rule matches fact shapes in an elaborated scene and contributes
structured conclusions.  Firing turns conclusions into meet updates; every
additive upper bound additionally yields its sound rearranged lower
bounds (p <= q + r gives lo(q) >= lo(p) - hi(r), truncated), and every
multiplicative bound of the shape p + 1 <= (q+1)(r+1) yields the ceiling
division rearrangements.  Rearrangement can be switched off
diagnostically; the conclusions listed per rule are its direct content.

Rule ids are stable public strings that appear in traces and golden
files.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Union

from .elaborate import ElaboratedScene
from .extnat import (
    INF,
    ExtNat,
    ext_add,
    ext_ceil_div,
    ext_lt,
    ext_max,
    ext_monus,
    ext_mul,
)
from .model import (
    BoundStore,
    InvariantKey,
    Kind,
    Premise,
    Side,
    key_L,
    key_Lcat,
    key_cat,
    key_cl,
    key_kit,
    key_kl,
)
from .scene import Fact

# -- conclusion shapes ---------------------------------------------------------


@dataclass(frozen=True)
class UpperSum:
    """hi(target) <= sum(adds) + max(maxes) + const.

    Rearrangement emits, for each summed term t,
    lo(t) >= lo(target) - (other adds + max part + const).
    The max operands admit no sound individual lower bound.
    """

    target: InvariantKey
    adds: tuple[InvariantKey, ...] = ()
    maxes: tuple[InvariantKey, ...] = ()
    const: int = 0


@dataclass(frozen=True)
class UpperProd:
    """Multiplicative upper bound from a fibration-style product.

    minus_one=True:  hi(target) <= (hi(left)+1) * (hi(right)+1) - 1
    minus_one=False: hi(target) <=  hi(left) * (hi(right)+1)

    Both shapes imply target+1 <= (left+1)(right+1), which backs the
    ceiling-division lower bounds on left and right.
    """

    target: InvariantKey
    left: InvariantKey
    right: InvariantKey
    minus_one: bool = True


@dataclass(frozen=True)
class Unify:
    """interval(a) == interval(b): both sides meet both ways."""

    a: InvariantKey
    b: InvariantKey


@dataclass(frozen=True)
class LowerMonus:
    """lo(target) >= lo(base) - (sum of hi(subs) + const), truncated."""

    target: InvariantKey
    base: InvariantKey
    subs: tuple[InvariantKey, ...] = ()
    const: int = 0


@dataclass(frozen=True)
class LowerMax:
    """lo(target) >= max over lo(sources)."""

    target: InvariantKey
    sources: tuple[InvariantKey, ...]


@dataclass(frozen=True)
class LowerInf:
    """lo(target) = inf."""

    target: InvariantKey


@dataclass(frozen=True)
class CondLower:
    """If hi(gate) < lo(floor) then lo(target) >= lo(floor).

    The guard is stable: upper bounds only fall and lower bounds only
    rise, so once true it stays true.
    """

    target: InvariantKey
    gate: InvariantKey
    floor: InvariantKey


@dataclass(frozen=True)
class DeriveEquiv:
    """If either invariant of the map has upper bound 0, the map is an
    equivalence; emits an equiv fact rather than a bound."""

    map_id: str


Conclusion = Union[UpperSum, UpperProd, Unify, LowerMonus, LowerMax, LowerInf,
                   CondLower, DeriveEquiv]


@dataclass(frozen=True)
class RuleInstance:
    rule_id: str
    facts: tuple[str, ...]  # fact ids bound by the match
    conclusions: tuple[Conclusion, ...]

    def read_keys(self) -> frozenset[InvariantKey]:
        keys: set[InvariantKey] = set()
        for c in self.conclusions:
            if isinstance(c, UpperSum):
                keys.add(c.target)
                keys.update(c.adds)
                keys.update(c.maxes)
            elif isinstance(c, UpperProd):
                keys.update((c.target, c.left, c.right))
            elif isinstance(c, Unify):
                keys.update((c.a, c.b))
            elif isinstance(c, LowerMonus):
                keys.add(c.target)
                keys.add(c.base)
                keys.update(c.subs)
            elif isinstance(c, LowerMax):
                keys.add(c.target)
                keys.update(c.sources)
            elif isinstance(c, LowerInf):
                keys.add(c.target)
            elif isinstance(c, CondLower):
                keys.update((c.target, c.gate, c.floor))
            elif isinstance(c, DeriveEquiv):
                keys.update((key_L(c.map_id), key_Lcat(c.map_id)))
        return frozenset(keys)


@dataclass(frozen=True)
class BoundUpdate:
    key: InvariantKey
    side: Side
    value: ExtNat
    rule_id: str
    compute: str
    const: int = 0
    premises: tuple[Premise, ...] = ()
    facts: tuple[str, ...] = ()
    rearranged: bool = False


@dataclass(frozen=True)
class FactDerivation:
    fact: Fact
    rule_id: str
    premises: tuple[Premise, ...]
    facts: tuple[str, ...] = ()


Update = Union[BoundUpdate, FactDerivation]


Matcher = Callable[[ElaboratedScene], Iterator[RuleInstance]]


@dataclass(frozen=True)
class Rule:
    """A guarded inequality schema.

    ``guard`` lists the collection closure flags required for soundness;
    an instance is only created when the scene's profile has them all.
    ``law`` documents the exact inequality the rule enforces, in the
    surface notation of the scene language.
    """

    id: str
    guard: frozenset[str]
    law: str
    matcher: Matcher


# -- rule construction helpers -------------------------------------------------

KINDS = (Kind.CONE_LENGTH, Kind.CATEGORY)


def _mk(kind: Kind, map_id: str) -> InvariantKey:
    return InvariantKey(map_id, kind)


def _space_keys(kind: Kind, space: str) -> tuple[InvariantKey, InvariantKey]:
    """(cl|cat, kl|kit) of a space for the given map-invariant kind."""
    if kind is Kind.CONE_LENGTH:
        return key_cl(space), key_kl(space)
    return key_cat(space), key_kit(space)


def _fact_rule(rule_id: str, guard: frozenset[str], law: str, kind: str,
               build: Callable[[ElaboratedScene, str, Fact], Optional[list[Conclusion]]],
               ) -> Rule:
    def match(elab: ElaboratedScene) -> Iterator[RuleInstance]:
        for fid, fact in elab.facts_of(kind):
            built = build(elab, fid, fact)
            if built:
                yield RuleInstance(rule_id, (fid,), tuple(built))

    return Rule(rule_id, guard, law, match)


def _per_map_rule(rule_id: str, guard: frozenset[str], law: str,
                  build: Callable[[ElaboratedScene, str], Optional[list[Conclusion]]],
                  ) -> Rule:
    def match(elab: ElaboratedScene) -> Iterator[RuleInstance]:
        for map_id in elab.maps:
            built = build(elab, map_id)
            if built:
                yield RuleInstance(rule_id, (), tuple(built))

    return Rule(rule_id, guard, law, match)


def _per_space_rule(rule_id: str, guard: frozenset[str], law: str,
                    build: Callable[[ElaboratedScene, str], Optional[list[Conclusion]]],
                    ) -> Rule:
    def match(elab: ElaboratedScene) -> Iterator[RuleInstance]:
        for space in elab.spaces:
            built = build(elab, space)
            if built:
                yield RuleInstance(rule_id, (), tuple(built))

    return Rule(rule_id, guard, law, match)


ANY = frozenset()
W = frozenset({"wedges"})
S = frozenset({"suspensions"})
J = frozenset({"joins"})
WS = frozenset({"wedges", "suspensions"})
WJ = frozenset({"wedges", "joins"})
SM = frozenset({"smash_ideal"})
SMWS = frozenset({"smash_ideal", "wedges", "suspensions"})
ALL_SPACES = frozenset({"all_spaces"})


def _build_catalog() -> list[Rule]:
    rules: list[Rule] = []

    def add(rule: Rule) -> None:
        rules.append(rule)

    # -- axioms and structural relations ------------------------------------

    add(_fact_rule(
        "AX-HTPY", ANY,
        "homotopic(f, g): L(f) = L(g) and Lcat(f) = Lcat(g)",
        "homotopic",
        lambda elab, fid, fact: [
            Unify(_mk(k, fact.args[0]), _mk(k, fact.args[1])) for k in KINDS
        ],
    ))

    add(_fact_rule(
        "AX-NORM", ANY,
        "equiv(f): L(f) = 0 and Lcat(f) = 0",
        "equiv",
        lambda elab, fid, fact: [
            UpperSum(_mk(k, fact.args[0])) for k in KINDS
        ],
    ))

    add(_per_map_rule(
        "P7-EQ", ANY,
        "hi L(f) = 0 or hi Lcat(f) = 0: f is an equivalence (derived fact)",
        lambda elab, map_id: [DeriveEquiv(map_id)],
    ))

    add(_fact_rule(
        "AX-COMP", ANY,
        "compose(h, g, f): L(h) <= L(f) + L(g); same for Lcat",
        "compose",
        lambda elab, fid, fact: [
            UpperSum(_mk(k, fact.args[0]),
                     adds=(_mk(k, fact.args[2]), _mk(k, fact.args[1])))
            for k in KINDS
        ],
    ))

    def mc_build(elab: ElaboratedScene, fid: str, fact: Fact) -> Optional[list[Conclusion]]:
        cone = elab.sig(fact.args[0])[0]
        if cone not in elab.members:
            return None
        return [UpperSum(key_L(fact.args[1]), const=1)]

    def mc_match(elab: ElaboratedScene) -> Iterator[RuleInstance]:
        for fid, fact in elab.facts_of("cofiber"):
            built = mc_build(elab, fid, fact)
            if built:
                member_fid = elab.member_fact[elab.sig(fact.args[0])[0]]
                yield RuleInstance("AX-MC", (fid, member_fid), tuple(built))

    add(Rule("AX-MC", ANY,
             "cofiber(f, j, C) with member(dom f): L(j) <= 1", mc_match))

    add(_fact_rule(
        "AX-DOM", ANY,
        "dominates(g, f): Lcat(f) <= Lcat(g), hence lo Lcat(g) >= lo Lcat(f)",
        "dominates",
        lambda elab, fid, fact: [
            UpperSum(key_Lcat(fact.args[1]), adds=(key_Lcat(fact.args[0]),)),
            LowerMonus(key_Lcat(fact.args[0]), base=key_Lcat(fact.args[1])),
        ],
    ))

    add(_fact_rule(
        "AX-EQM", ANY,
        "equiv_maps(f, g): L(f) = L(g) and Lcat(f) = Lcat(g)",
        "equiv_maps",
        lambda elab, fid, fact: [
            Unify(_mk(k, fact.args[0]), _mk(k, fact.args[1])) for k in KINDS
        ],
    ))

    add(_per_map_rule(
        "REL-CL", ANY,
        "Lcat(f) <= L(f), hence lo L(f) >= lo Lcat(f)",
        lambda elab, map_id: [
            UpperSum(key_Lcat(map_id), adds=(key_L(map_id),)),
            LowerMonus(key_L(map_id), base=key_Lcat(map_id)),
        ],
    ))

    add(_fact_rule(
        "REL-PI0", ANY,
        "pi0_not_onto(f): L(f) = Lcat(f) = inf",
        "pi0_not_onto",
        lambda elab, fid, fact: [
            LowerInf(key_L(fact.args[0])), LowerInf(key_Lcat(fact.args[0])),
        ],
    ))

    add(_fact_rule(
        "REL-MEM", ANY,
        "member(A): kl(A) <= 1",
        "member",
        lambda elab, fid, fact: [UpperSum(key_kl(fact.args[0]), const=1)],
    ))

    add(_per_space_rule(
        "REL-ALL", ALL_SPACES,
        "every space X: kl(X) <= 1 and kit(X) <= 1",
        lambda elab, space: [
            UpperSum(key_kl(space), const=1),
            UpperSum(key_kit(space), const=1),
        ],
    ))

    # -- pushout-square mapping bounds ---------------------------------------

    def pm_keys(fact: Fact, kind: Kind) -> tuple[InvariantKey, ...]:
        a, b, c, d = (fact.args[i] for i in range(2, 6))
        return _mk(kind, a), _mk(kind, b), _mk(kind, c), _mk(kind, d)

    add(_fact_rule(
        "T32", WS,
        "pushout_map(A, A2, a, b, c, d): X(d) <= X(a) + max(X(b), X(c)) for X in {L, Lcat}",
        "pushout_map",
        lambda elab, fid, fact: [
            UpperSum(pm_keys(fact, k)[3], adds=(pm_keys(fact, k)[0],),
                     maxes=(pm_keys(fact, k)[1], pm_keys(fact, k)[2]))
            for k in KINDS
        ],
    ))

    add(_fact_rule(
        "T32-W", W,
        "pushout_map with a an equivalence: X(d) <= max(X(b), X(c)) for X in {L, Lcat}",
        "pushout_map",
        lambda elab, fid, fact: [
            UpperSum(pm_keys(fact, k)[3],
                     maxes=(pm_keys(fact, k)[1], pm_keys(fact, k)[2]))
            for k in KINDS
        ] if fact.args[2] in elab.equivs else None,
    ))

    add(_fact_rule(
        "T32-S", S,
        "pushout_map with b, c equivalences: X(d) <= X(a) for X in {L, Lcat}",
        "pushout_map",
        lambda elab, fid, fact: [
            UpperSum(pm_keys(fact, k)[3], adds=(pm_keys(fact, k)[0],))
            for k in KINDS
        ] if fact.args[3] in elab.equivs and fact.args[4] in elab.equivs else None,
    ))

    add(_fact_rule(
        "C34", S,
        "pushout_map: X(d) <= X(a) + X(b) + X(c) for X in {L, Lcat}",
        "pushout_map",
        lambda elab, fid, fact: [
            UpperSum(pm_keys(fact, k)[3],
                     adds=(pm_keys(fact, k)[0], pm_keys(fact, k)[1], pm_keys(fact, k)[2]))
            for k in KINDS
        ],
    ))

    add(_fact_rule(
        "C34-NC", ANY,
        "pushout_map with a an equivalence: X(d) <= X(b) + X(c) for X in {L, Lcat}",
        "pushout_map",
        lambda elab, fid, fact: [
            UpperSum(pm_keys(fact, k)[3],
                     adds=(pm_keys(fact, k)[1], pm_keys(fact, k)[2]))
            for k in KINDS
        ] if fact.args[2] in elab.equivs else None,
    ))

    # -- single pushout squares ----------------------------------------------

    def po_legs(elab: ElaboratedScene, fid: str, fact: Fact) -> list[RuleInstance]:
        _, f, g, ib, ic, _ = fact.args
        first = [UpperSum(_mk(k, ib), adds=(_mk(k, g),)) for k in KINDS]
        second = [UpperSum(_mk(k, ic), adds=(_mk(k, f),)) for k in KINDS]
        return [
            RuleInstance("C41-1", (fid,), tuple(first)),
            RuleInstance("C41-1", (fid,), tuple(second)),
        ]

    def c411_match(elab: ElaboratedScene) -> Iterator[RuleInstance]:
        for fid, fact in elab.facts_of("pushout"):
            yield from po_legs(elab, fid, fact)

    add(Rule("C41-1", ANY,
             "pushout(A, f, g, ib, ic, d): X(ib) <= X(g) and X(ic) <= X(f) for X in {L, Lcat}",
             c411_match))

    add(_fact_rule(
        "C41-4", W,
        "pushout(A, f, g, ib, ic, d): X(d) <= max(X(f), X(g)) for X in {L, Lcat}",
        "pushout",
        lambda elab, fid, fact: [
            UpperSum(_mk(k, fact.args[5]),
                     maxes=(_mk(k, fact.args[1]), _mk(k, fact.args[2])))
            for k in KINDS
        ],
    ))

    def c42_build(elab: ElaboratedScene, fid: str, fact: Fact) -> list[Conclusion]:
        apex = fact.args[0]
        corner_b = elab.sig(fact.args[1])[1]
        corner_c = elab.sig(fact.args[2])[1]
        out = elab.sig(fact.args[3])[1]
        conclusions: list[Conclusion] = []
        for kind in KINDS:
            for pick in (0, 1):  # 0: cl/cat, 1: kl/kit
                conclusions.append(UpperSum(
                    _space_keys(kind, out)[pick],
                    adds=(_space_keys(kind, apex)[pick],),
                    maxes=(_space_keys(kind, corner_b)[pick],
                           _space_keys(kind, corner_c)[pick]),
                ))
        return conclusions

    add(_fact_rule(
        "C42", WS,
        "pushout with corners B, C, pushout D: i(D) <= i(A) + max(i(B), i(C)) "
        "for i in {cl, cat, kl, kit}",
        "pushout", c42_build,
    ))

    # -- cofiber sequence bounds ----------------------------------------------

    def cof(fact: Fact, elab: ElaboratedScene) -> tuple[str, str, str, str, str]:
        f, j, cofiber_space = fact.args
        cone, total = elab.sig(f)
        return f, j, cone, total, cofiber_space

    add(_fact_rule(
        "C44-1", ANY,
        "cofiber(f, j, C): cl(C) <= L(f) and cat(C) <= Lcat(f)",
        "cofiber",
        lambda elab, fid, fact: [
            UpperSum(key_cl(cof(fact, elab)[4]), adds=(key_L(fact.args[0]),)),
            UpperSum(key_cat(cof(fact, elab)[4]), adds=(key_Lcat(fact.args[0]),)),
        ],
    ))

    add(_fact_rule(
        "C44-2", ANY,
        "cofiber(f, j, C) with cone A: L(j) <= kl(A) and Lcat(j) <= kit(A)",
        "cofiber",
        lambda elab, fid, fact: [
            UpperSum(key_L(fact.args[1]), adds=(key_kl(cof(fact, elab)[2]),)),
            UpperSum(key_Lcat(fact.args[1]), adds=(key_kit(cof(fact, elab)[2]),)),
        ],
    ))

    add(_fact_rule(
        "C44-3", ANY,
        "cofiber over A -> B -> C: cl(C) <= kl(A) + cl(B); cat analog",
        "cofiber",
        lambda elab, fid, fact: [
            UpperSum(key_cl(cof(fact, elab)[4]),
                     adds=(key_kl(cof(fact, elab)[2]), key_cl(cof(fact, elab)[3]))),
            UpperSum(key_cat(cof(fact, elab)[4]),
                     adds=(key_kit(cof(fact, elab)[2]), key_cat(cof(fact, elab)[3]))),
        ],
    ))

    add(_fact_rule(
        "C44-4", ANY,
        "cofiber over A -> B -> C: kl(B) <= kl(A) + kl(C); kit analog",
        "cofiber",
        lambda elab, fid, fact: [
            UpperSum(key_kl(cof(fact, elab)[3]),
                     adds=(key_kl(cof(fact, elab)[2]), key_kl(cof(fact, elab)[4]))),
            UpperSum(key_kit(cof(fact, elab)[3]),
                     adds=(key_kit(cof(fact, elab)[2]), key_kit(cof(fact, elab)[4]))),
        ],
    ))

    add(_fact_rule(
        "C46", S,
        "cofiber_map(f, f2, al, be, ga): X(ga) <= X(al) + X(be) for X in {L, Lcat}",
        "cofiber_map",
        lambda elab, fid, fact: [
            UpperSum(_mk(k, fact.args[4]),
                     adds=(_mk(k, fact.args[2]), _mk(k, fact.args[3])))
            for k in KINDS
        ],
    ))

    add(_fact_rule(
        "C48", ANY,
        "susp_space(S, B): cl(S) <= kl(B) and cat(S) <= kit(B)",
        "susp_space",
        lambda elab, fid, fact: [
            UpperSum(key_cl(fact.args[0]), adds=(key_kl(fact.args[1]),)),
            UpperSum(key_cat(fact.args[0]), adds=(key_kit(fact.args[1]),)),
        ],
    ))

    # -- suspension-closed structural bounds -----------------------------------

    def c4101_build(elab: ElaboratedScene, map_id: str) -> list[Conclusion]:
        dom, cod = elab.sig(map_id)
        return [
            UpperSum(key_L(map_id), adds=(key_cl(dom), key_cl(cod))),
            UpperSum(key_Lcat(map_id), adds=(key_cat(dom), key_cat(cod))),
        ]

    add(_per_map_rule(
        "C410-1", S,
        "any f: A -> B: L(f) <= cl(A) + cl(B) and Lcat(f) <= cat(A) + cat(B)",
        c4101_build,
    ))

    add(_per_space_rule(
        "C410-2", S,
        "any space A: kl(A) <= cl(A) and kit(A) <= cat(A)",
        lambda elab, space: [
            UpperSum(key_kl(space), adds=(key_cl(space),)),
            UpperSum(key_kit(space), adds=(key_cat(space),)),
        ],
    ))

    add(_fact_rule(
        "C410-3", S,
        "compose(h, g, f): X(g) <= X(f) + X(h) for X in {L, Lcat}",
        "compose",
        lambda elab, fid, fact: [
            UpperSum(_mk(k, fact.args[1]),
                     adds=(_mk(k, fact.args[2]), _mk(k, fact.args[0])))
            for k in KINDS
        ],
    ))

    add(_fact_rule(
        "C410-4", S,
        "section(f, g): Lcat(g) <= cat(dom g)",
        "section",
        lambda elab, fid, fact: [
            UpperSum(key_Lcat(fact.args[1]),
                     adds=(key_cat(elab.sig(fact.args[1])[0]),)),
        ],
    ))

    add(_fact_rule(
        "C410-5", S,
        "section(f, g): L(g) <= L(f) and Lcat(g) <= Lcat(f)",
        "section",
        lambda elab, fid, fact: [
            UpperSum(_mk(k, fact.args[1]), adds=(_mk(k, fact.args[0]),)) for k in KINDS
        ],
    ))

    def c411_build(elab: ElaboratedScene, map_id: str) -> list[Conclusion]:
        dom, cod = elab.sig(map_id)
        return [
            LowerMonus(key_L(map_id), base=key_kl(dom), subs=(key_kl(cod),)),
            LowerMonus(key_L(map_id), base=key_kl(cod), subs=(key_kl(dom),)),
            LowerMonus(key_Lcat(map_id), base=key_kit(dom), subs=(key_kit(cod),)),
            LowerMonus(key_Lcat(map_id), base=key_kit(cod), subs=(key_kit(dom),)),
            LowerMonus(key_L(map_id), base=key_cl(cod), subs=(key_cl(dom),)),
            LowerMonus(key_Lcat(map_id), base=key_cat(cod), subs=(key_cat(dom),)),
        ]

    add(_per_map_rule(
        "C411", S,
        "any f: A -> B: L(f) >= |kl(B) - kl(A)|, L(f) >= cl(B) - cl(A); "
        "Lcat analogs with kit and cat",
        c411_build,
    ))

    # -- products ---------------------------------------------------------------

    def t51_build(elab: ElaboratedScene, fid: str, fact: Fact) -> list[Conclusion]:
        h, f, g = fact.args
        dom_f = elab.sig(f)[0]
        dom_g = elab.sig(g)[0]
        return [
            UpperSum(_mk(k, h), adds=(_mk(k, f), _mk(k, g)),
                     maxes=(key_cl(dom_f), key_cl(dom_g)))
            for k in KINDS
        ]

    add(_fact_rule(
        "T51", WJ,
        "product_map(h, f, g): X(h) <= X(f) + X(g) + max(cl(dom f), cl(dom g)) for X in {L, Lcat}",
        "product_map", t51_build,
    ))

    def c52_build(elab: ElaboratedScene, fid: str, fact: Fact) -> list[Conclusion]:
        prod, x, y = fact.args
        return [
            UpperSum(key_cl(prod), adds=(key_cl(x), key_cl(y))),
            UpperSum(key_kl(prod), adds=(key_kl(x), key_kl(y)),
                     maxes=(key_cl(x), key_cl(y))),
            UpperSum(key_cat(prod), adds=(key_cat(x), key_cat(y))),
            UpperSum(key_kit(prod), adds=(key_kit(x), key_kit(y)),
                     maxes=(key_cl(x), key_cl(y))),
        ]

    add(_fact_rule(
        "C52", WJ,
        "product_space(P, X, Y): cl(P) <= cl(X) + cl(Y); "
        "kl(P) <= kl(X) + kl(Y) + max(cl(X), cl(Y)); cat and kit analogs",
        "product_space", c52_build,
    ))

    add(_fact_rule(
        "P54", SMWS,
        "product_space(P, X, Y): kl(P) <= kl(X) + kl(Y) and kit(P) <= kit(X) + kit(Y)",
        "product_space",
        lambda elab, fid, fact: [
            UpperSum(key_kl(fact.args[0]),
                     adds=(key_kl(fact.args[1]), key_kl(fact.args[2]))),
            UpperSum(key_kit(fact.args[0]),
                     adds=(key_kit(fact.args[1]), key_kit(fact.args[2]))),
        ],
    ))

    add(_fact_rule(
        "P54-SM", SM,
        "smash_space(S, X, Y): kl(S) <= min(kl(X), kl(Y))",
        "smash_space",
        lambda elab, fid, fact: [
            UpperSum(key_kl(fact.args[0]), adds=(key_kl(fact.args[1]),)),
            UpperSum(key_kl(fact.args[0]), adds=(key_kl(fact.args[2]),)),
        ],
    ))

    def l61_match(elab: ElaboratedScene) -> Iterator[RuleInstance]:
        for fid, fact in elab.facts_of("projection"):
            p = fact.args[0]
            dom, cod = elab.sig(p)
            for _, prod_fact in elab.facts_of("product_space"):
                prod, first, second = prod_fact.args
                if prod != dom or second != cod or first not in elab.members:
                    continue
                member_fid = elab.member_fact[first]
                conclusions = (
                    UpperSum(key_L(p), adds=(key_cl(cod),), const=1),
                    UpperSum(key_Lcat(p), adds=(key_cat(cod),), const=1),
                )
                yield RuleInstance("L61", (fid, member_fid), conclusions)
                break

    add(Rule("L61", J,
             "projection p: A x B -> B with member(A): L(p) <= cl(B) + 1 and "
             "Lcat(p) <= cat(B) + 1", l61_match))

    # -- pullbacks and fibrations -------------------------------------------------

    add(_fact_rule(
        "T62", WJ,
        "pullback over fibration bd with fiber F: L(ab) <= L(cd) * (cl(F) + 1); "
        "Lcat analog with cat(F)",
        "pullback",
        lambda elab, fid, fact: [
            UpperProd(key_L(fact.args[4]), key_L(fact.args[7]),
                      key_cl(fact.args[8]), minus_one=False),
            UpperProd(key_Lcat(fact.args[4]), key_Lcat(fact.args[7]),
                      key_cat(fact.args[8]), minus_one=False),
        ],
    ))

    def c63_build(elab: ElaboratedScene, fid: str, fact: Fact) -> list[Conclusion]:
        p, fiber = fact.args
        total, base = elab.sig(p)
        return [
            UpperProd(key_cl(total), key_cl(base), key_cl(fiber)),
            UpperProd(key_cat(total), key_cat(base), key_cat(fiber)),
        ]

    add(_fact_rule(
        "C63", WJ,
        "fibration(p: E -> B, F): cl(E) + 1 <= (cl(B)+1)(cl(F)+1); cat analog",
        "fibration", c63_build,
    ))

    # -- wedges of maps and trivial maps ------------------------------------------

    add(_fact_rule(
        "P72-A", W,
        "wedge_map(w, f, g): L(w) <= max(L(f), L(g))",
        "wedge_map",
        lambda elab, fid, fact: [
            UpperSum(key_L(fact.args[0]),
                     maxes=(key_L(fact.args[1]), key_L(fact.args[2]))),
        ],
    ))

    def p72b_build(elab: ElaboratedScene, fid: str, fact: Fact) -> list[Conclusion]:
        w, f, g = (key_Lcat(m) for m in fact.args)
        return [
            UpperSum(w, maxes=(f, g)),
            LowerMax(w, (f, g)),
            UpperSum(f, adds=(w,)),
            UpperSum(g, adds=(w,)),
            CondLower(f, gate=g, floor=w),
            CondLower(g, gate=f, floor=w),
        ]

    add(_fact_rule(
        "P72-B", W,
        "wedge_map(w, f, g): Lcat(w) = max(Lcat(f), Lcat(g)), propagated both ways "
        "with the conditional floor when one operand's hi drops below the wedge's lo",
        "wedge_map", p72b_build,
    ))

    def c73_build(elab: ElaboratedScene, fid: str, fact: Fact) -> list[Conclusion]:
        m = fact.args[0]
        dom, cod = elab.sig(m)
        lf, lcf = key_L(m), key_Lcat(m)
        klx, clx = key_kl(dom), key_cl(cod)
        kitx, caty = key_kit(dom), key_cat(cod)
        return [
            UpperSum(lf, maxes=(klx, clx)),
            UpperSum(lcf, maxes=(kitx, caty)),
            LowerMax(lcf, (kitx, caty)),
            UpperSum(kitx, adds=(lcf,)),
            UpperSum(caty, adds=(lcf,)),
            CondLower(kitx, gate=caty, floor=lcf),
            CondLower(caty, gate=kitx, floor=lcf),
        ]

    add(_fact_rule(
        "C73", W,
        "null(f: X -> Y): L(f) <= max(kl(X), cl(Y)); "
        "Lcat(f) = max(kit(X), cat(Y)) propagated both ways",
        "null", c73_build,
    ))

    return rules


_CATALOG: Optional[list[Rule]] = None


def catalog() -> list[Rule]:
    """All rules, sorted by id.  The list is built once and shared."""
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = sorted(_build_catalog(), key=lambda r: r.id)
    return _CATALOG


def rules_by_id() -> dict[str, Rule]:
    return {r.id: r for r in catalog()}


def applicable_rules(profile_flags: frozenset[str]) -> list[Rule]:
    return [r for r in catalog() if r.guard <= profile_flags]


def instantiate(elab: ElaboratedScene) -> list[RuleInstance]:
    """All guard-satisfying, shape-correct rule instances, in deterministic
    order: rules by id, instances in fact/registry order."""
    flags = elab.profile.flags()
    instances: list[RuleInstance] = []
    for rule in applicable_rules(flags):
        instances.extend(rule.matcher(elab))
    return instances


# -- firing --------------------------------------------------------------------


def _premise(store: BoundStore, key: InvariantKey, side: Side, role: str) -> Premise:
    # Snapshot both the value and the provenance pointer at read time, so a
    # later tightening of the same key cannot detach the derivation tree.
    return Premise(key, side, store.value(key, side), role,
                   store.source_of(key, side))


def _sum_value(store: BoundStore, adds, maxes, const) -> tuple[ExtNat, list[Premise]]:
    premises = [_premise(store, k, Side.HI, "add") for k in adds]
    premises += [_premise(store, k, Side.HI, "max") for k in maxes]
    total: ExtNat = const
    for p in premises:
        if p.role == "add":
            total = ext_add(total, p.value)
    if maxes:
        m: ExtNat = 0
        for p in premises:
            if p.role == "max":
                m = ext_max(m, p.value)
        total = ext_add(total, m)
    return total, premises


def fire(inst: RuleInstance, store: BoundStore, elab: ElaboratedScene,
         rearrange: bool = True) -> list[Update]:
    """Evaluate an instance against the store; returns only updates that
    would strictly tighten (no-ops are dropped)."""
    out: list[Update] = []

    def emit(key: InvariantKey, side: Side, value: ExtNat, compute: str,
             premises: list[Premise], const: int = 0, rearranged: bool = False) -> None:
        if store.would_tighten(key, side, value):
            out.append(BoundUpdate(
                key=key, side=side, value=value, rule_id=inst.rule_id,
                compute=compute, const=const, premises=tuple(premises),
                facts=inst.facts, rearranged=rearranged,
            ))

    for c in inst.conclusions:
        if isinstance(c, UpperSum):
            value, premises = _sum_value(store, c.adds, c.maxes, c.const)
            emit(c.target, Side.HI, value, "sum", premises, c.const)
            if rearrange and c.adds:
                for i, term in enumerate(c.adds):
                    others = tuple(t for j, t in enumerate(c.adds) if j != i)
                    sub_value, sub_premises = _sum_value(store, others, c.maxes, c.const)
                    base = _premise(store, c.target, Side.LO, "base")
                    lo_value = ext_monus(base.value, sub_value)
                    emit(term, Side.LO, lo_value, "monus",
                         [base] + sub_premises, c.const, rearranged=True)
        elif isinstance(c, UpperProd):
            left = _premise(store, c.left, Side.HI, "left")
            right = _premise(store, c.right, Side.HI, "right")
            if c.minus_one:
                value = ext_monus(
                    ext_mul(ext_add(left.value, 1), ext_add(right.value, 1)), 1)
                emit(c.target, Side.HI, value, "prod1", [left, right])
            else:
                value = ext_mul(left.value, ext_add(right.value, 1))
                emit(c.target, Side.HI, value, "prod0", [left, right])
            if rearrange:
                base = _premise(store, c.target, Side.LO, "base")
                for factor, other in ((c.left, c.right), (c.right, c.left)):
                    div = _premise(store, other, Side.HI, "div")
                    lo_value = ext_monus(
                        ext_ceil_div(ext_add(base.value, 1), ext_add(div.value, 1)), 1)
                    emit(factor, Side.LO, lo_value, "ceil1", [base, div],
                         rearranged=True)
        elif isinstance(c, Unify):
            for key, src in ((c.a, c.b), (c.b, c.a)):
                hi_premise = _premise(store, src, Side.HI, "copy")
                emit(key, Side.HI, hi_premise.value, "copy", [hi_premise])
                lo_premise = _premise(store, src, Side.LO, "copy")
                emit(key, Side.LO, lo_premise.value, "copy", [lo_premise])
        elif isinstance(c, LowerMonus):
            base = _premise(store, c.base, Side.LO, "base")
            subs = [_premise(store, k, Side.HI, "add") for k in c.subs]
            sub_total: ExtNat = c.const
            for p in subs:
                sub_total = ext_add(sub_total, p.value)
            emit(c.target, Side.LO, ext_monus(base.value, sub_total), "monus",
                 [base] + subs, c.const)
        elif isinstance(c, LowerMax):
            premises = [_premise(store, k, Side.LO, "lo") for k in c.sources]
            value: ExtNat = 0
            for p in premises:
                value = ext_max(value, p.value)
            emit(c.target, Side.LO, value, "maxlo", premises)
        elif isinstance(c, LowerInf):
            emit(c.target, Side.LO, INF, "inf", [])
        elif isinstance(c, CondLower):
            gate = _premise(store, c.gate, Side.HI, "gate")
            floor = _premise(store, c.floor, Side.LO, "base")
            if ext_lt(gate.value, floor.value):
                emit(c.target, Side.LO, floor.value, "copy", [gate, floor])
        elif isinstance(c, DeriveEquiv):
            if c.map_id in elab.equivs:
                continue
            for key in (key_L(c.map_id), key_Lcat(c.map_id)):
                if store.hi(key) == 0:
                    witness = _premise(store, key, Side.HI, "base")
                    out.append(FactDerivation(
                        fact=Fact("equiv", (c.map_id,)),
                        rule_id=inst.rule_id,
                        premises=(witness,),
                        facts=inst.facts,
                    ))
                    break
    return out


# -- post-hoc verification -------------------------------------------------------


def check_instance(inst: RuleInstance, store: BoundStore, elab: ElaboratedScene,
                   rearrange: bool = True) -> list[str]:
    """Inequalities of this instance violated by the store's current values.

    At a fixpoint this must be empty for every instance: firing anything
    would be a no-op.
    """
    violations = []
    for update in fire(inst, store, elab, rearrange=rearrange):
        if isinstance(update, BoundUpdate):
            side = "upper" if update.side is Side.HI else "lower"
            violations.append(
                f"{inst.rule_id}: {side} bound {update.value} on "
                f"{update.key.surface()} not satisfied by {store.interval(update.key)}"
            )
        else:
            violations.append(
                f"{inst.rule_id}: derived fact {update.fact.render()} missing"
            )
    return violations


def render_rules_markdown() -> str:
    """The catalog as a stable reference table."""
    lines = [
        "# Rule catalog",
        "",
        "Stable rule identifiers, their collection guards, and the bound",
        "each rule enforces.  These ids appear verbatim in traces, JSON",
        "output, and golden files.",
        "",
        "| id | guard | bound |",
        "|----|-------|-------|",
    ]
    for rule in catalog():
        guard = ", ".join(sorted(rule.guard)) if rule.guard else "any"
        lines.append(f"| `{rule.id}` | {guard} | {rule.law} |")
    return "\n".join(lines) + "\n"
