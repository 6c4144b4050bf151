"""Chaotic iteration of the rule catalog to a fixpoint over the bound store.

Asserted bounds are applied first, then instances fire in deterministic
order (rules by id, instances in match order).  After the first full pass
a worklist keyed by dirty invariant keys re-fires only the instances that
read a changed key; the meet lattice makes the fixpoint independent of
firing order.  Termination is enforced, not assumed: upper chains are
well founded, lower chains are capped at ``max_finite`` and tripping the
cap reports the pumping chain instead of spinning.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .elaborate import ElaboratedScene
from .extnat import ExtNat, Interval, extnat_to_json, fmt_extnat, is_inf
from .model import (
    BoundStore,
    InvariantKey,
    Justification,
    Premise,
    Side,
    StoreConflict,
)
from .rules import BoundUpdate, FactDerivation, RuleInstance, fire, instantiate

ASSERTED = "asserted"


@dataclass(frozen=True)
class Limits:
    max_rounds: int = 10_000
    max_finite: int = 65_536


@dataclass(frozen=True)
class DerivationTree:
    """Justification DAG rendered as a tree down to asserted facts."""

    label: str
    key: Optional[str] = None
    side: Optional[str] = None
    value: Optional[ExtNat] = None
    rule_id: Optional[str] = None
    children: tuple["DerivationTree", ...] = ()

    def size(self) -> int:
        return 1 + sum(child.size() for child in self.children)

    def leaves(self) -> list["DerivationTree"]:
        if not self.children:
            return [self]
        out: list[DerivationTree] = []
        for child in self.children:
            out.extend(child.leaves())
        return out

    def render(self, indent: int = 0) -> str:
        lines = ["  " * indent + self.label]
        for child in self.children:
            lines.append(child.render(indent + 1))
        return "\n".join(lines)

    def to_json(self) -> dict:
        payload: dict = {"label": self.label}
        if self.key is not None:
            payload["key"] = self.key
            payload["side"] = self.side
            payload["value"] = extnat_to_json(self.value)
        if self.rule_id is not None:
            payload["rule"] = self.rule_id
        if self.children:
            payload["children"] = [c.to_json() for c in self.children]
        return payload


@dataclass(frozen=True)
class ContradictionReport:
    key: InvariantKey
    lo_value: ExtNat
    hi_value: ExtNat
    lo_tree: DerivationTree
    hi_tree: DerivationTree

    def describe(self) -> str:
        return (
            f"{self.key.surface()}: lower bound {fmt_extnat(self.lo_value)} "
            f"exceeds upper bound {fmt_extnat(self.hi_value)}"
        )


@dataclass(frozen=True)
class BudgetReport:
    reason: str  # "max_rounds" | "max_finite"
    detail: str
    tree: Optional[DerivationTree] = None


@dataclass
class SaturationResult:
    store: BoundStore
    status: str  # "fixpoint" | "contradiction" | "budget_exhausted"
    rounds: int
    firings: int
    elab: ElaboratedScene
    instances: list[RuleInstance]
    contradiction: Optional[ContradictionReport] = None
    budget: Optional[BudgetReport] = None


@dataclass(frozen=True)
class QueryAnswer:
    key: InvariantKey
    interval: Interval
    status: str
    lo_rule: str  # "default" | "asserted" | rule id
    hi_rule: str


class TreeBuilder:
    """Reconstructs derivation trees from the store log and fact registry."""

    def __init__(self, store: BoundStore, elab: ElaboratedScene):
        self.store = store
        self.elab = elab

    def of_justification(self, just: Justification) -> DerivationTree:
        side = just.side.value
        surface = just.key.surface()
        value = fmt_extnat(just.value)
        if just.rule_id == ASSERTED:
            label = f"{side} {surface} = {value} (asserted)"
        else:
            label = f"{side} {surface} = {value} by {just.rule_id}"
        children = [self.of_premise(p) for p in just.premises]
        children += [self.of_fact(fid) for fid in just.facts]
        return DerivationTree(
            label=label, key=surface, side=side, value=just.value,
            rule_id=just.rule_id, children=tuple(children),
        )

    def of_premise(self, premise: Premise) -> DerivationTree:
        if premise.source is not None:
            return self.of_justification(self.store.log[premise.source])
        surface = premise.key.surface()
        default = BoundStore.default_interval(premise.key)
        return DerivationTree(
            label=f"{premise.side.value} {surface} = "
                  f"{fmt_extnat(premise.value)} (default {default})",
            key=surface, side=premise.side.value, value=premise.value,
        )

    def of_fact(self, fact_id: str) -> DerivationTree:
        derived = self.elab.fact_provenance.get(fact_id)
        text = self.elab.describe_fact(fact_id)
        if derived is not None:
            children = tuple(self.of_premise(p) for p in derived.premises)
            return DerivationTree(
                label=f"fact {fact_id}: {text} by {derived.rule_id}",
                rule_id=derived.rule_id, children=children,
            )
        origin = self.elab.fact_origin(fact_id)
        tag = "" if origin == "user" else f" ({origin})"
        return DerivationTree(label=f"fact {fact_id}: {text}{tag}")

    def default_leaf(self, key: InvariantKey, side: Side) -> DerivationTree:
        default = BoundStore.default_interval(key)
        value = default.side(side.value)
        return DerivationTree(
            label=f"{side.value} {key.surface()} = {fmt_extnat(value)} "
                  f"(default {default})",
            key=key.surface(), side=side.value, value=value,
        )

    def side_tree(self, key: InvariantKey, side: Side) -> DerivationTree:
        just = self.store.justification_of(key, side)
        if just is None:
            return self.default_leaf(key, side)
        return self.of_justification(just)

    def conflict_report(self, conflict: StoreConflict) -> ContradictionReport:
        attempted = conflict.attempted
        attempted_tree = self.of_justification(attempted)
        if conflict.opposing_source is not None:
            opposing_tree = self.of_justification(
                self.store.log[conflict.opposing_source])
        else:
            opposing_side = Side.LO if attempted.side is Side.HI else Side.HI
            opposing_tree = self.default_leaf(attempted.key, opposing_side)
        if attempted.side is Side.HI:
            return ContradictionReport(
                key=attempted.key,
                lo_value=conflict.current.lo, hi_value=attempted.value,
                lo_tree=opposing_tree, hi_tree=attempted_tree,
            )
        return ContradictionReport(
            key=attempted.key,
            lo_value=attempted.value, hi_value=conflict.current.hi,
            lo_tree=attempted_tree, hi_tree=opposing_tree,
        )


class _Run:
    def __init__(self, elab: ElaboratedScene, limits: Limits, rearrange: bool,
                 shuffle: Optional[random.Random]):
        self.elab = elab
        self.limits = limits
        self.rearrange = rearrange
        self.shuffle = shuffle
        self.store = BoundStore()
        self.trees = TreeBuilder(self.store, elab)
        self.instances: list[RuleInstance] = []
        self.instance_set: set[tuple] = set()
        self.subscribers: dict[InvariantKey, set[int]] = {}
        self.dirty: set[InvariantKey] = set()
        self.rounds = 0
        self.firings = 0
        self.contradiction: Optional[ContradictionReport] = None
        self.budget: Optional[BudgetReport] = None

    def apply_bound(self, update: BoundUpdate) -> Optional[StoreConflict]:
        just = Justification(
            rule_id=update.rule_id, key=update.key, side=update.side,
            value=update.value, compute=update.compute, const=update.const,
            premises=update.premises, facts=update.facts,
        )
        result = self.store.apply(just)
        if isinstance(result, StoreConflict):
            return result
        if result:
            self.firings += 1
            self.dirty.add(update.key)
            if (update.side is Side.LO and not is_inf(update.value)
                    and update.value > self.limits.max_finite):
                self.budget = BudgetReport(
                    reason="max_finite",
                    detail=f"lower bound on {update.key.surface()} climbed past "
                           f"{self.limits.max_finite}; pumping chain follows",
                    tree=self.trees.of_justification(just),
                )
        return None

    def apply_fact(self, derivation: FactDerivation) -> None:
        fid = self.elab.add_fact(derivation.fact, derivation.rule_id)
        if fid is None:
            return
        self.elab.fact_provenance[fid] = Justification(
            rule_id=derivation.rule_id,
            key=derivation.premises[0].key, side=Side.HI, value=0,
            compute="copy", premises=derivation.premises, facts=derivation.facts,
        )

    @staticmethod
    def _identity(inst: RuleInstance) -> tuple:
        return (inst.rule_id, inst.facts, inst.conclusions)

    def add_instances(self, new: list[RuleInstance]) -> list[int]:
        added = []
        for inst in new:
            ident = self._identity(inst)
            if ident in self.instance_set:
                continue
            self.instance_set.add(ident)
            self.instances.append(inst)
            idx = len(self.instances) - 1
            for key in inst.read_keys():
                self.subscribers.setdefault(key, set()).add(idx)
            added.append(idx)
        return added

    def refresh_instances(self) -> list[int]:
        return self.add_instances(instantiate(self.elab))

    def apply_asserted(self) -> None:
        for bound in self.elab.bounds:
            if bound.rel == "<=":
                sides = [Side.HI]
            elif bound.rel == ">=":
                sides = [Side.LO]
            else:
                sides = [Side.LO, Side.HI]
            for side in sides:
                just = Justification(
                    rule_id=ASSERTED, key=bound.key, side=side, value=bound.value,
                    compute=ASSERTED,
                )
                result = self.store.apply(just)
                if isinstance(result, StoreConflict):
                    self.contradiction = self.trees.conflict_report(result)
                    return

    def run(self) -> SaturationResult:
        self.apply_asserted()
        if self.contradiction is None:
            self.refresh_instances()
            agenda = list(range(len(self.instances)))
            while agenda:
                if self.rounds >= self.limits.max_rounds:
                    self.budget = BudgetReport(
                        reason="max_rounds",
                        detail=f"no fixpoint after {self.limits.max_rounds} rounds",
                    )
                    break
                self.rounds += 1
                self.dirty = set()
                if self.shuffle is not None:
                    self.shuffle.shuffle(agenda)
                facts_before = len(self.elab.facts)
                for idx in agenda:
                    updates = fire(self.instances[idx], self.store, self.elab,
                                   rearrange=self.rearrange)
                    conflicts: list[StoreConflict] = []
                    for update in updates:
                        if isinstance(update, BoundUpdate):
                            conflict = self.apply_bound(update)
                            if conflict is not None:
                                conflicts.append(conflict)
                        else:
                            self.apply_fact(update)
                        if self.budget is not None:
                            break
                    if conflicts:
                        # one firing can cross bounds through several
                        # conclusions; report the smallest provenance pair
                        reports = [self.trees.conflict_report(c) for c in conflicts]
                        self.contradiction = min(
                            reports,
                            key=lambda r: r.lo_tree.size() + r.hi_tree.size(),
                        )
                        break
                    if self.budget is not None:
                        break
                if self.contradiction is not None or self.budget is not None:
                    break
                scheduled: set[int] = set()
                for key in self.dirty:
                    scheduled.update(self.subscribers.get(key, ()))
                if len(self.elab.facts) != facts_before:
                    scheduled.update(self.refresh_instances())
                agenda = sorted(scheduled)
        status = "fixpoint"
        if self.contradiction is not None:
            status = "contradiction"
        elif self.budget is not None:
            status = "budget_exhausted"
        return SaturationResult(
            store=self.store, status=status, rounds=self.rounds,
            firings=self.firings, elab=self.elab, instances=self.instances,
            contradiction=self.contradiction, budget=self.budget,
        )


def saturate(elab: ElaboratedScene, limits: Limits = Limits(), *,
             rearrange: bool = True,
             shuffle: Optional[random.Random] = None) -> SaturationResult:
    """Saturate an elaborated scene.

    ``shuffle`` randomizes firing order inside each round; the final store
    must not depend on it (confluence), only logs and trees may differ.
    """
    return _Run(elab, limits, rearrange, shuffle).run()


def query(result: SaturationResult, key: InvariantKey) -> QueryAnswer:
    """The stored interval for a key plus the classification of each side."""
    if key.map_id not in result.elab.maps:
        raise KeyError(f"unknown invariant target {key.surface()}")

    def classify(side: Side) -> str:
        just = result.store.justification_of(key, side)
        if just is None:
            return "default"
        return ASSERTED if just.rule_id == ASSERTED else just.rule_id

    return QueryAnswer(
        key=key,
        interval=result.store.interval(key),
        status=result.status,
        lo_rule=classify(Side.LO),
        hi_rule=classify(Side.HI),
    )


def explain(result: SaturationResult, key: InvariantKey, side: Side) -> DerivationTree:
    """Minimal tree reconstructing the final value of one side of a key.

    A side still at its default bound yields a single default leaf.
    """
    if key.map_id not in result.elab.maps:
        raise KeyError(f"unknown invariant target {key.surface()}")
    return TreeBuilder(result.store, result.elab).side_tree(key, side)
