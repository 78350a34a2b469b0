"""Belief nets, exact inference, context masses, success bounds.

The headline numbers (0.9091 and friends) are checked three ways: a
hand-rolled enumeration local to this file, the package's enumeration
oracle, and variable elimination.
"""

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskplan.domain import GroundOperator, prop_from_text
from riskplan.errors import (InconsistentLabels, LabelWithoutDistribution,
                             MissingCptRow, MissingInfluenceVariable,
                             OutcomeSpaceMismatch, OverlappingGoalContexts,
                             UnknownVariable, ZeroProbabilityContext)
from riskplan.plangraph import (Label, Link, add_link, condition_step,
                                dag_add_step, make_root_plan)
from riskplan.probmodel import (BeliefNet, NetVariable, add_conditional_node,
                                bind_observation, build_initial_net,
                                conditional_outcome_probability,
                                context_probability, d_connected,
                                force_influence, joint_probability,
                                net_for_plan, select_goal_node,
                                simple_context_probability, success_bound)
from riskplan.worlds import load_texts, ski_world

from .gen import random_evidence, random_net
from .test_plangraph import cond, det, lit, problem

CBS = "clear(b,snowbird)"
CCP = "clear(c,parkcity)"


@pytest.fixture(scope="module")
def ski():
    gdom, prob = load_texts(*ski_world())
    return gdom, prob, build_initial_net(prob)


def _ski_hand_joint(**fix):
    """Local three-variable enumeration, sharing nothing with the package."""
    p_clear = {True: 0.1, False: 0.999}  # P(road clear | blizzard)
    total = 0.0
    for bliz in (True, False):
        for cbs in (True, False):
            for ccp in (True, False):
                if fix.get("blizzard", bliz) != bliz:
                    continue
                if fix.get("cbs", cbs) != cbs:
                    continue
                if fix.get("ccp", ccp) != ccp:
                    continue
                w = 0.1 if bliz else 0.9
                w *= p_clear[bliz] if cbs else 1 - p_clear[bliz]
                w *= p_clear[bliz] if ccp else 1 - p_clear[bliz]
                total += w
    return total


def test_frozen_ski_numbers_match_hand_enumeration():
    assert _ski_hand_joint(cbs=True) == pytest.approx(0.9091, abs=1e-12)
    assert _ski_hand_joint(cbs=False, ccp=True) == \
        pytest.approx(0.0098991, abs=1e-12)
    assert _ski_hand_joint(cbs=False) == pytest.approx(0.0909, abs=1e-12)


@pytest.mark.parametrize("method", ["enumerate", "ve"])
def test_ski_joint_probabilities(ski, method):
    _gdom, _prob, net = ski
    assert joint_probability(net, [Label(CBS, "true")], method) == \
        pytest.approx(0.9091, abs=1e-12)
    assert joint_probability(net, [Label(CBS, "false"), Label(CCP, "true")],
                             method) == pytest.approx(0.0098991, abs=1e-12)
    assert joint_probability(net, [], method) == pytest.approx(1.0, abs=1e-12)


def test_ski_conditional_probability(ski):
    _gdom, _prob, net = ski
    got = conditional_outcome_probability(
        net, Label(CCP, "true"), [Label(CBS, "false")])
    assert got == pytest.approx(0.0098991 / 0.0909, abs=1e-12)
    assert got == pytest.approx(0.10890099, abs=1e-8)


def test_zero_probability_context_raises():
    net = BeliefNet({"x": NetVariable(("true", "false"), (),
                                      {("true",): 1.0, ("false",): 0.0}),
                     "y": NetVariable(("true", "false"), (),
                                      {("true",): 0.5, ("false",): 0.5})})
    with pytest.raises(ZeroProbabilityContext):
        conditional_outcome_probability(net, Label("y", "true"),
                                        [Label("x", "false")])


def test_evidence_validation(ski):
    _gdom, _prob, net = ski
    with pytest.raises(UnknownVariable):
        joint_probability(net, [Label("nosuch", "true")])
    with pytest.raises(OutcomeSpaceMismatch):
        joint_probability(net, [Label(CBS, "sideways")])
    with pytest.raises(InconsistentLabels):
        joint_probability(net, [Label(CBS, "true"), Label(CBS, "false")])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_enumeration_and_ve_agree_on_random_nets(seed):
    rng = random.Random(seed)
    net = random_net(rng, max_vars=8)
    ev = random_evidence(rng, net)
    a = joint_probability(net, ev, "enumerate")
    b = joint_probability(net, ev, "ve")
    assert a == pytest.approx(b, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**9))
def test_joint_over_no_evidence_is_one(seed):
    net = random_net(random.Random(seed), max_vars=8)
    assert joint_probability(net, [], "ve") == pytest.approx(1.0, abs=1e-12)
    assert joint_probability(net, [], "enumerate") == \
        pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**9))
def test_marginals_sum_to_one(seed):
    rng = random.Random(seed)
    net = random_net(rng, max_vars=8)
    v = rng.choice(sorted(net.variables))
    total = sum(joint_probability(net, [Label(v, o)])
                for o in net.variables[v].space)
    assert total == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# net construction


def test_build_initial_net_orders_parents_first(ski):
    _gdom, _prob, net = ski
    order = net.topological_order()
    assert order.index("blizzard") < order.index(CBS)
    assert set(net.variables) == {"blizzard", CBS, CCP}


def test_add_conditional_node_with_open_influence():
    net = BeliefNet({"x": NetVariable(("true", "false"), (),
                                      {("true",): 0.3, ("false",): 0.7})})
    op = GroundOperator(
        name="walk", kind="cond", outcomes=("arrive", "slip"),
        influences=("x",),
        cpt={("arrive", "true"): 0.6, ("slip", "true"): 0.4,
             ("arrive", "false"): 0.99, ("slip", "false"): 0.01})
    net2, parents = add_conditional_node(net, "s2", op)
    assert parents == ("x",)
    assert joint_probability(net2, [Label("s2", "arrive")]) == \
        pytest.approx(0.3 * 0.6 + 0.7 * 0.99, abs=1e-12)


def test_add_conditional_node_known_influence_selects_rows():
    net = BeliefNet({})
    op = GroundOperator(
        name="walk", kind="cond", outcomes=("arrive", "slip"),
        influences=("x",),
        cpt={("arrive", "true"): 0.6, ("slip", "true"): 0.4,
             ("arrive", "false"): 0.99, ("slip", "false"): 0.01})
    net2, parents = add_conditional_node(net, "s2", op,
                                         known_values={"x": "false"})
    assert parents == ()
    assert joint_probability(net2, [Label("s2", "arrive")]) == \
        pytest.approx(0.99, abs=1e-12)


def test_add_conditional_node_missing_influence():
    op = GroundOperator(name="walk", kind="cond", outcomes=("a", "b"),
                        influences=("ghost",),
                        cpt={("a", "true"): 0.5, ("b", "true"): 0.5})
    with pytest.raises(MissingInfluenceVariable):
        add_conditional_node(BeliefNet({}), "s2", op)


def test_add_conditional_node_incomplete_cpt():
    net = BeliefNet({"x": NetVariable(("true", "false"), (),
                                      {("true",): 0.5, ("false",): 0.5})})
    op = GroundOperator(name="w", kind="cond", outcomes=("a", "b"),
                        influences=("x",),
                        cpt={("a", "true"): 0.5, ("b", "true"): 0.5})
    with pytest.raises(MissingCptRow):
        add_conditional_node(net, "s2", op)


def test_bind_observation(ski):
    gdom, _prob, net = ski
    assert bind_observation(net, gdom.operator("check-road-b-snowbird")) == CBS
    bad = GroundOperator(name="peek", kind="obs", outcomes=("true", "false"),
                         observes="nosuch")
    with pytest.raises(UnknownVariable):
        bind_observation(net, bad)
    worse = GroundOperator(name="peek", kind="obs", outcomes=("yes", "no"),
                           observes=CBS)
    with pytest.raises(OutcomeSpaceMismatch):
        bind_observation(net, worse)


def test_force_influence_cuts_arc():
    net = BeliefNet({"x": NetVariable(("true", "false"), (),
                                      {("true",): 0.3, ("false",): 0.7})})
    op = GroundOperator(
        name="walk", kind="cond", outcomes=("arrive", "slip"),
        influences=("x",),
        cpt={("arrive", "true"): 0.6, ("slip", "true"): 0.4,
             ("arrive", "false"): 0.99, ("slip", "false"): 0.01})
    net2, _ = add_conditional_node(net, "s2", op)
    net3 = force_influence(net2, "s2", "x", "true")
    assert net3.variables["s2"].parents == ()
    assert joint_probability(net3, [Label("s2", "arrive")]) == \
        pytest.approx(0.6, abs=1e-12)


# ---------------------------------------------------------------------------
# d-connection


def test_d_connection_fork_and_blocking(ski):
    _gdom, _prob, net = ski
    assert d_connected(net, CBS, CCP)  # common cause open
    assert not d_connected(net, CBS, CCP, observed=["blizzard"])
    assert d_connected(net, "blizzard", CBS)


def test_d_connection_collider():
    half = {("true",): 0.5, ("false",): 0.5}
    tf = ("true", "false")
    collider_cpt = {(c,) + pair: 0.5
                    for c in tf
                    for pair in itertools.product(tf, repeat=2)}
    net = BeliefNet({"a": NetVariable(tf, (), half),
                     "b": NetVariable(tf, (), half)})
    net = net.with_variable("c", NetVariable(tf, ("a", "b"), collider_cpt))
    assert not d_connected(net, "a", "b")
    assert d_connected(net, "a", "b", observed=["c"])


# ---------------------------------------------------------------------------
# context masses


def test_simple_context_probability_multiplies():
    plan = make_root_plan(problem(), "dag")
    flip = cond("flip", {"h": (["(p)"], ()), "t": ((), ())},
                dist={"h": 0.7, "t": 0.3})
    plan, c1 = dag_add_step(plan, flip, (), source=f"s{plan.next_index}")
    plan, c2 = dag_add_step(plan, flip, (), source=f"s{plan.next_index}")
    ctx = [Label(c1, "h"), Label(c2, "t")]
    assert simple_context_probability(plan, ctx) == \
        pytest.approx(0.21, abs=1e-12)
    assert context_probability(plan, ctx, "simple") == \
        pytest.approx(0.21, abs=1e-12)


def test_simple_model_requires_distribution():
    plan = make_root_plan(problem(), "dag")
    mute = GroundOperator(name="mute", kind="cond", outcomes=("a", "b"))
    plan, sid = dag_add_step(plan, mute, (), source=f"s{plan.next_index}")
    with pytest.raises(LabelWithoutDistribution):
        simple_context_probability(plan, [Label(sid, "a")])


def test_inconsistent_context_has_zero_mass():
    plan = make_root_plan(problem(), "dag")
    flip = cond("flip", {"h": ((), ()), "t": ((), ())})
    plan, c1 = dag_add_step(plan, flip, (), source=f"s{plan.next_index}")
    bad = [Label(c1, "h"), Label(c1, "t")]
    assert context_probability(plan, bad, "simple") == 0.0


def test_net_for_plan_uses_deterministic_establishment():
    """A det step that pins an influence before the chancy step runs should
    row-select the CPT instead of drawing an arc."""
    gdom, prob = load_texts(
        """
        (operator make-rain (kind det) (add (x)))
        (operator walk (kind cond)
          (outcomes (arrive (add (g))) (slip))
          (influences (x))
          (cpt ((arrive true) 0.6) ((slip true) 0.4)
               ((arrive false) 0.99) ((slip false) 0.01)))
        """,
        "(problem (init (not (x)) (not (g))) (goal (g)) (epsilon 1))")
    plan = make_root_plan(prob, "dag")
    plan, mid = dag_add_step(plan, gdom.operator("make-rain"), ())
    plan, wid = dag_add_step(plan, gdom.operator("walk"), (),
                             source=f"s{plan.next_index}")
    plan = add_link(plan, Link("ordering", mid, wid))
    net = net_for_plan(plan, prob)
    assert net.variables[wid].parents == ()
    assert joint_probability(net, [Label(wid, "arrive")]) == \
        pytest.approx(0.6, abs=1e-12)
    # without the establisher ordered first, x stays known-false from init
    plan2 = make_root_plan(prob, "dag")
    plan2, wid2 = dag_add_step(plan2, gdom.operator("walk"), (),
                               source=f"s{plan2.next_index}")
    net2 = net_for_plan(plan2, prob)
    assert joint_probability(net2, [Label(wid2, "arrive")]) == \
        pytest.approx(0.99, abs=1e-12)


# ---------------------------------------------------------------------------
# success bounds


def _flip_plan_with_goal():
    plan = make_root_plan(problem(), "dag")
    flip = cond("flip", {"h": (["(g)"], ()), "t": ((), ())},
                dist={"h": 0.7, "t": 0.3})
    plan, cid = dag_add_step(plan, flip, (), source=f"s{plan.next_index}")
    plan = condition_step(plan, "s1", [(Label(cid, "h"), cid)])
    plan = add_link(plan, Link("causal", cid, "s1", lit("(g)")))
    plan = plan.without_open_goal(("s1", lit("(g)")))
    return plan, cid


def test_success_bound_counts_completed_and_open():
    plan, cid = _flip_plan_with_goal()
    b = success_bound(plan, "simple", epsilon=0.3)
    assert b.achieved_mass == pytest.approx(0.7, abs=1e-12)
    # the tails continuation is uncovered but still open
    assert b.potential_mass == pytest.approx(1.0, abs=1e-12)
    assert b.completed == ("s1",)
    assert b.accepted and b.viable
    tight = success_bound(plan, "simple", epsilon=0.05)
    assert not tight.accepted and tight.viable


def test_success_bound_epsilon_one_accepts_anything():
    plan = make_root_plan(problem(), "dag")
    b = success_bound(plan, "simple", epsilon=1.0)
    assert b.achieved_mass == 0.0
    assert b.accepted


def test_overlapping_goals_rejected():
    plan, cid = _flip_plan_with_goal()
    plan, gid = dag_add_step(
        plan, GroundOperator(name="goal", kind="goal",
                             preconditions=(lit("(g)"),)), ())
    with pytest.raises(OverlappingGoalContexts):
        success_bound(plan, "simple", epsilon=0.5)


def test_select_goal_node_prefers_mass():
    plan, cid = _flip_plan_with_goal()
    # cover the tails branch with a fresh (incomplete) goal
    plan, gid = dag_add_step(
        plan, GroundOperator(name="goal", kind="goal",
                             preconditions=(lit("(g)"),)),
        [(Label(cid, "t"), cid)])
    plan = plan._rebuild(
        open_goals=plan.open_goals | {(gid, lit("(g)"))})
    assert select_goal_node(plan, "simple") == gid
