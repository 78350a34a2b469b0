"""Linear planner: best-first search over tree-shaped conditional plans.

Plans are built by regression.  Every search node is a complete plan graph
whose steps form a tree rooted at start; conditional and observation steps
fork the tree, other steps sit on an edge.  Resolving an open precondition
may link it to start, to an existing ancestor, or to a new step inserted on
*any* edge of the path from start to the consumer.  Offering every position
matters: interleaved goals (stack a on b, b on c) have no solution if new
steps may only appear directly above their consumer.

The frontier is ordered by potential mass, then by workload (steps plus
unresolved flaws, so lean plans come before padded ones), then newest
first.  A node whose potential falls below 1 - epsilon can never be
repaired, because inserting steps only shrinks context masses, so it is
pruned.  Acceptance needs only the *achieved* mass: branches that still
have flaws are abandoned as give-up leaves and reported as uncovered
contexts.
"""

from __future__ import annotations

import heapq
import itertools
import time
from typing import Callable, Iterable

from .domain import GroundDomain, GroundOperator, Problem, Proposition, var_id
from .errors import PlanningFailure, WouldCreateCycle
from .plangraph import (Label, Link, PlanGraph, START_ID, add_link,
                        canonical_key, extract_conditional_plan,
                        find_threats, make_root_plan, tree_insert)
from .probmodel import (PlanResult, SuccessBound, model_for_plan,
                        select_goal_node, success_bound)

__all__ = ["plan_linear", "DEFAULT_NODE_BUDGET"]

DEFAULT_NODE_BUDGET = 10000

TraceFn = Callable[[dict], None]


def plan_linear(gdomain: GroundDomain, problem: Problem, *,
                model: str = "kbmc", epsilon: float | None = None,
                node_budget: int = DEFAULT_NODE_BUDGET,
                trace: TraceFn | None = None) -> PlanResult:
    """Search for a conditional plan whose finished branches carry mass at
    least 1 - epsilon.  Raises PlanningFailure (carrying the best bound
    seen) when the frontier empties or the node budget runs out."""
    eps = problem.epsilon if epsilon is None else epsilon
    started = time.monotonic()
    stats = {"planner": "linear", "expanded": 0, "generated": 1,
             "pruned": 0, "deduplicated": 0}

    root = make_root_plan(problem, "tree")
    root_bound = _bound(root, problem, model, eps)
    heap: list[tuple[tuple[float, int, int], PlanGraph, SuccessBound, int]] = []
    counter = itertools.count()
    seen = {canonical_key(root)}
    heapq.heappush(heap, ((-root_bound.potential_mass, _workload(root),
                           -next(counter)),
                          root, root_bound, len(root_bound.completed)))
    best = root_bound

    while heap:
        _key, plan, bound, parent_done = heapq.heappop(heap)
        if trace:
            trace({"event": "node-expanded", "n": stats["expanded"],
                   "achieved": bound.achieved_mass,
                   "potential": bound.potential_mass,
                   "steps": len(plan.steps),
                   "openGoals": len(plan.open_goals),
                   "openInfluences": len(plan.open_influences)})
        if len(bound.completed) > parent_done and trace:
            trace({"event": "branch-completed",
                   "completed": list(bound.completed),
                   "achieved": bound.achieved_mass})
        if _better(bound, best):
            best = bound
            if trace:
                trace({"event": "bound-updated",
                       "achieved": best.achieved_mass,
                       "potential": best.potential_mass})
        if bound.accepted:
            stats["elapsed"] = time.monotonic() - started
            m = model_for_plan(plan, problem, model)
            conditional = extract_conditional_plan(
                plan, covered=list(bound.completed))
            return PlanResult(conditional, plan, bound, m, stats)
        if stats["expanded"] >= node_budget:
            break
        stats["expanded"] += 1

        for child in _expand(plan, gdomain, problem, model):
            key = canonical_key(child)
            if key in seen:
                stats["deduplicated"] += 1
                continue
            seen.add(key)
            stats["generated"] += 1
            cbound = _bound(child, problem, model, eps)
            if not cbound.viable:
                stats["pruned"] += 1
                continue
            heapq.heappush(heap, ((-cbound.potential_mass, _workload(child),
                                   -next(counter)),
                                  child, cbound, len(bound.completed)))

    stats["elapsed"] = time.monotonic() - started
    reason = ("node budget exhausted" if heap else "search space exhausted")
    raise PlanningFailure(
        f"no plan reaches mass {1 - eps:.6g} ({reason}); "
        f"best achieved {best.achieved_mass:.6g}, "
        f"potential {best.potential_mass:.6g}",
        best_bound=best, stats=stats)


def _better(a: SuccessBound, b: SuccessBound) -> bool:
    return (a.achieved_mass, a.potential_mass) > (b.achieved_mass,
                                                  b.potential_mass)


def _workload(plan: PlanGraph) -> int:
    return (len(plan.steps) + 2 * len(plan.open_goals)
            + 2 * len(plan.open_influences))


def _bound(plan: PlanGraph, problem: Problem, model: str,
           eps: float) -> SuccessBound:
    return success_bound(plan, model_for_plan(plan, problem, model), eps)


# ---------------------------------------------------------------------------
# expansion


def _expand(plan: PlanGraph, gdomain: GroundDomain, problem: Problem,
            model: str) -> Iterable[PlanGraph]:
    """Children of a search node: all ways to resolve one chosen flaw on the
    heaviest unfinished branch (influences before preconditions)."""
    m = model_for_plan(plan, problem, model)
    gid = select_goal_node(plan, m)
    if gid is None:
        return []
    gctx = plan.steps[gid].context
    infl = sorted(((sid, v) for sid, v in plan.open_influences
                   if plan.steps[sid].context <= gctx),
                  key=lambda it: (plan.steps[it[0]].sort_key(), it[1]))
    if infl:
        return _resolve_influence(plan, gdomain, model, *infl[0])
    goals = sorted(((sid, p) for sid, p in plan.open_goals
                    if plan.steps[sid].context <= gctx),
                   key=lambda it: (plan.steps[it[0]].sort_key(), str(it[1])))
    if not goals:
        return []
    return _resolve_precondition(plan, gdomain, model, *goals[0])


def _safe(plan: PlanGraph | None) -> list[PlanGraph]:
    """Keep a candidate only if it is internally consistent: tree plans
    cannot reorder steps, so any threat is fatal and pruned right here."""
    if plan is None:
        return []
    if find_threats(plan):
        return []
    return [plan]


def _path_edges(plan: PlanGraph, sid: str) -> list[tuple[str, str]]:
    path = plan.tree_path(sid)
    return list(zip(path, path[1:]))


def _determined_value(plan: PlanGraph, sid: str, var: str) -> str | None:
    """The value of ``var`` already fixed at ``sid``: an outcome label bound
    to the variable, or a deterministic effect of an ancestor."""
    for lab in plan.steps[sid].context:
        if lab.source == var:
            return lab.outcome
    value = None
    for wid in plan.tree_path(sid)[:-1]:
        op = plan.steps[wid].operator
        if op.kind not in ("det", "start"):
            continue
        for p in op.add:
            if var_id(p.positive) == var:
                value = "false" if p.negated else "true"
        for p in op.delete:
            if var_id(p.positive) == var:
                value = "false"
    return value


def _step_source(plan: PlanGraph, op: GroundOperator, model: str) -> str:
    """What the new step's outcome labels bind to.  Observations share the
    observed variable under the network model (so re-observation agrees
    with itself); everything else labels its own fresh step id."""
    if op.kind == "obs" and model == "kbmc":
        return op.observes
    return f"s{plan.next_index}"


def _priceable(op: GroundOperator, model: str) -> bool:
    """Under the simple model a chance step needs its own outcome
    distribution; skip operators the model cannot price."""
    if model == "simple" and op.kind in ("cond", "obs"):
        return op.simple_distribution is not None
    return True


def _redundant_observation(plan: PlanGraph, op: GroundOperator, child: str,
                           model: str) -> bool:
    """Observing a variable that is already settled at the insertion point
    (or observed again in the subtree below) can never split any mass."""
    if op.kind != "obs" or model != "kbmc":
        return False
    var = op.observes
    if _determined_value(plan, child, var) is not None:
        return True
    for below in plan.subtree_ids(child) | {child}:
        if plan.steps[below].operator.observes == var:
            return True
    return False


def _insert_producer(plan: PlanGraph, op: GroundOperator, outcome: str | None,
                     parent: str, child: str, model: str
                     ) -> tuple[PlanGraph, str] | None:
    """Insert op on the tree edge parent->child, continuing the existing
    subtree under ``outcome`` when the op is chancy."""
    if not _priceable(op, model):
        return None
    if _redundant_observation(plan, op, child, model):
        return None
    source = None
    influences: tuple[str, ...] = ()
    if op.kind in ("cond", "obs"):
        source = _step_source(plan, op, model)
        if op.kind == "cond":
            influences = op.influences
    try:
        plan2, sid, _leaves = tree_insert(plan, op, parent, child,
                                          chosen_outcome=outcome,
                                          source=source,
                                          influences=influences)
    except WouldCreateCycle:
        return None
    return plan2, sid


def _link_establisher(plan: PlanGraph, producer: str, prop: Proposition,
                      consumer: str) -> PlanGraph | None:
    try:
        plan2 = add_link(plan, Link("causal", producer, consumer, prop))
    except WouldCreateCycle:
        return None
    return plan2.without_open_goal((consumer, prop))


def _resolve_precondition(plan: PlanGraph, gdomain: GroundDomain, model: str,
                          sid: str, prop: Proposition) -> list[PlanGraph]:
    out: list[PlanGraph] = []
    ctx = plan.steps[sid].context

    # reuse an ancestor (start included); a chancy ancestor only serves if
    # the consumer already sits in the establishing outcome's branch
    for wid in plan.tree_path(sid)[:-1]:
        w = plan.steps[wid]
        for o in w.operator.establishing_outcomes(prop):
            if o is not None and Label(w.source, o) not in ctx:
                continue
            out.extend(_safe(_link_establisher(plan, wid, prop, sid)))

    # or insert a fresh producer anywhere on the path
    for op in gdomain.operators:
        for o in op.establishing_outcomes(prop):
            for parent, child in _path_edges(plan, sid):
                made = _insert_producer(plan, op, o, parent, child, model)
                if made is None:
                    continue
                plan2, new_id = made
                out.extend(_safe(_link_establisher(plan2, new_id, prop, sid)))
    return out


def _resolve_influence(plan: PlanGraph, gdomain: GroundDomain, model: str,
                       sid: str, var: str) -> list[PlanGraph]:
    """Discharge one influence: it may already be settled in this branch,
    may be pledged unknown (an ignorance link from start), or may be pinned
    down first by inserting an observer or a forcing action on the path."""
    if _determined_value(plan, sid, var) is not None:
        return [plan.without_open_influence((sid, var))]

    out: list[PlanGraph] = []
    try:
        pledged = add_link(plan, Link("ignorance", START_ID, sid, var))
        out.extend(_safe(pledged.without_open_influence((sid, var))))
    except WouldCreateCycle:
        pass

    for op in gdomain.operators:
        settles = (op.kind == "obs" and op.observes == var and model == "kbmc")
        settles = settles or (op.kind == "det" and any(
            var_id(p.positive) == var for p in op.add + op.delete))
        if not settles:
            continue
        outcomes = list(op.outcomes) if op.kind == "obs" else [None]
        for o in outcomes:
            for parent, child in _path_edges(plan, sid):
                made = _insert_producer(plan, op, o, parent, child, model)
                if made is None:
                    continue
                plan2, _new = made
                if _determined_value(plan2, sid, var) is None:
                    continue
                out.extend(_safe(plan2.without_open_influence((sid, var))))
    return out
