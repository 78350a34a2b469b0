"""
Classical block stacking as the deterministic special case
==========================================================

With no chance variables and epsilon 0 the machinery reduces to ordinary
partial-order planning: one branch, mass 1.0, and a DAG of steps rather
than a fixed sequence.  The task is the classic three-block restack where
the naive subgoal order traps greedy planners.
"""

from riskplan import plan_nonlinear
from riskplan.plangraph import linearizations
from riskplan.worlds import load_texts, sussman

gdom, problem = load_texts(*sussman())
print("init:", " ".join(p.text() for p in sorted(problem.known_true)))
print("goal:", " ".join(g.text() for g in problem.goals))

res = plan_nonlinear(gdom, problem, epsilon=0.0)
print(f"\nsuccess mass {res.bound.achieved_mass}, "
      f"{res.stats['expanded']} nodes expanded")

# the plan is a DAG; every total order consistent with its links solves
# the problem, and the planner never commits beyond those links
orders = list(linearizations(res.graph))
print(f"{len(orders)} consistent execution order(s):")
for order in orders:
    names = [res.graph.steps[sid].operator.name for sid in order
             if res.graph.steps[sid].operator.kind == "det"]
    print("  ", " -> ".join(names))

# the causal links that pin those orders down
print("\ncausal links:")
for link in sorted(res.graph.links, key=lambda l: l.text()):
    if link.kind == "causal":
        print("  ", link.text())
