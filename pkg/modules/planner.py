"""Query planning over materialized models.

Ids are closed ranges, graph vertices are boundaries: descriptor [l, u] spans the vertices
l and u + 1, and an edge (p, q) with p < q stands for the ids p..q-1. A query [l_q, u_q] is a
path from l_q to u_q + 1. Walking an edge upwards adds its points, walking it downwards
removes them, so the signed ranges along any such path sum to exactly the query.
"""
import heapq
import itertools
from dataclasses import dataclass
from dataclasses import field
from enum import Enum
from typing import Optional

from modules.common import IdRange
from modules.common import ModelKind
from modules.error_classes import InvalidPlanError
from modules.error_classes import NoPlanError


class PlanMode(Enum):
    UNDIRECTED = "undirected"
    # insertion-only models: edges may only be walked upwards
    DIRECTED = "directed"

    @classmethod
    def for_kind(cls, kind):
        return cls.UNDIRECTED if kind.supports_removal else cls.DIRECTED


class StepOp(Enum):
    ADD = "add"
    REMOVE = "remove"

    @property
    def sign(self):
        return 1 if self is StepOp.ADD else -1

    @property
    def symbol(self):
        return "+" if self is StepOp.ADD else "-"


@dataclass(frozen=True)
class EdgeOption:
    cost: float
    model_id: Optional[str] = None

    @property
    def is_fetch(self):
        return self.model_id is None


@dataclass(frozen=True)
class PlanEdge:
    lo: int
    hi: int
    options: tuple

    @property
    def best(self):
        # cheapest option; a model beats a fetch of equal cost
        return min(self.options, key=lambda o: (o.cost, o.is_fetch, o.model_id or ""))

    @property
    def weight(self):
        return self.best.cost

    @property
    def covered(self):
        return IdRange(self.lo, self.hi - 1)


@dataclass
class PlanGraph:
    vertices: tuple
    edges: dict
    mode: PlanMode
    merge_cost: float = 0.0
    _adjacency: dict = field(default=None, repr=False)

    @property
    def directed(self):
        return self.mode is PlanMode.DIRECTED

    @property
    def option_count(self):
        return sum(len(e.options) for e in self.edges.values())

    def edge(self, a, b):
        return self.edges.get((min(a, b), max(a, b)))

    def neighbors(self, v):
        if self._adjacency is None:
            adjacency = {u: [] for u in self.vertices}
            for (lo, hi), e in self.edges.items():
                adjacency[lo].append((hi, e))
                if not self.directed:
                    adjacency[hi].append((lo, e))
            self._adjacency = adjacency
        return self._adjacency.get(v, [])


@dataclass(frozen=True)
class PlanStep:
    op: StepOp
    id_range: IdRange
    model_id: Optional[str]
    cost: float

    @property
    def is_fetch(self):
        return self.model_id is None

    def describe(self):
        source = "fetch" if self.is_fetch else f"model {self.model_id}"
        return f"{self.op.symbol} {source} {self.id_range}"


@dataclass(frozen=True)
class ExecutionPlan:
    query: IdRange
    kind: ModelKind
    steps: tuple
    estimated_cost: float
    baseline_cost: float
    path: tuple = ()

    @property
    def model_ids(self):
        return tuple(s.model_id for s in self.steps if not s.is_fetch)

    def to_dict(self):
        return {
            "query": self.query.to_string(),
            "kind": self.kind.value,
            "path": list(self.path),
            "estimated_cost": self.estimated_cost,
            "baseline_cost": self.baseline_cost,
            "steps": [
                {"op": s.op.value,
                 "source": "fetch" if s.is_fetch else "materialized",
                 "model_id": s.model_id,
                 "range": s.id_range.to_string(),
                 "cost": s.cost}
                for s in self.steps
            ],
        }


def _fetch_cost(cost_model, n, mode):
    cost = cost_model.fetch_cost(n)
    if mode is PlanMode.DIRECTED:
        cost += cost_model.train_cost(n)
    return cost


def generate_graph(relevant, query, cost_model, mode=PlanMode.UNDIRECTED, chunk_size=None):
    """Complete graph over the boundaries of the relevant models and the query.

    Every vertex pair gets a fetch option; a model adds an option on its own boundary pair.
    In directed mode only models fully inside the query (and on the chunk grid, when
    chunk_size is given) are usable.
    """
    if mode is PlanMode.DIRECTED:
        relevant = [d for d in relevant if query.contains(d.id_range)
                    and (chunk_size is None or (d.l % chunk_size == 0 and len(d.id_range) == chunk_size))]
    boundaries = {query.lo, query.hi + 1}
    for d in relevant:
        boundaries.update((d.l, d.u + 1))
    vertices = tuple(sorted(boundaries))

    options = {}
    for lo, hi in itertools.combinations(vertices, 2):
        options[(lo, hi)] = [EdgeOption(_fetch_cost(cost_model, hi - lo, mode))]
    for d in relevant:
        options[(d.l, d.u + 1)].append(EdgeOption(cost_model.model_cost(d), d.model_id))
    edges = {pair: PlanEdge(pair[0], pair[1], tuple(opts)) for pair, opts in options.items()}
    return PlanGraph(vertices, edges, mode, cost_model.merge_cost)


def optimal_path(graph, query):
    """Dijkstra from l_q to u_q + 1; path cost is the edge sum plus c_merge per join.

    Every edge is charged weight + c_merge during search and one c_merge is taken off at the
    end. Equal costs are broken by fewer edges, then by the smaller vertex sequence.
    """
    source, target = query.lo, query.hi + 1
    c_merge = graph.merge_cost
    best = {source: (0.0, 0, (source,))}
    heap = [(0.0, 0, (source,))]
    settled = set()
    while heap:
        label = heapq.heappop(heap)
        cost, hops, path = label
        v = path[-1]
        if v in settled:
            continue
        settled.add(v)
        if v == target:
            break
        for u, edge in graph.neighbors(v):
            if u in settled:
                continue
            candidate = (cost + edge.weight + c_merge, hops + 1, path + (u,))
            if u not in best or candidate < best[u]:
                best[u] = candidate
                heapq.heappush(heap, candidate)
    if target not in settled:
        raise NoPlanError(f"No path from {source} to {target} covers the query {query}")
    return best[target][2]


def path_to_steps(graph, path):
    steps = []
    for a, b in zip(path, path[1:]):
        edge = graph.edge(a, b)
        if edge is None or (graph.directed and a > b):
            raise InvalidPlanError(f"Path walks a missing edge ({a}, {b})")
        option = edge.best
        steps.append(PlanStep(StepOp.ADD if a < b else StepOp.REMOVE, edge.covered, option.model_id, option.cost))
    return tuple(steps)


def plan_cost(plan, cost_model):
    """Sum of step costs plus c_merge for every join of two steps."""
    if not plan.steps:
        return 0.0
    return sum(s.cost for s in plan.steps) + (len(plan.steps) - 1) * cost_model.merge_cost


def check_telescoping(steps, query):
    """The signed step ranges must add up to the indicator of the query, id by id."""
    delta = {}
    for s in steps:
        delta[s.id_range.lo] = delta.get(s.id_range.lo, 0) + s.op.sign
        delta[s.id_range.hi + 1] = delta.get(s.id_range.hi + 1, 0) - s.op.sign
    delta[query.lo] = delta.get(query.lo, 0) - 1
    delta[query.hi + 1] = delta.get(query.hi + 1, 0) + 1
    running = 0
    for point in sorted(delta):
        running += delta[point]
        if running != 0:
            raise InvalidPlanError(f"Plan covers ids from {point} on with multiplicity off by {running}")


def baseline_plan(query, kind, cost_model):
    mode = PlanMode.for_kind(kind)
    cost = _fetch_cost(cost_model, len(query), mode)
    return ExecutionPlan(query, kind, (PlanStep(StepOp.ADD, query, None, cost),), cost, cost,
                         (query.lo, query.hi + 1))


def plan_query(relevant, query, kind, cost_model, chunk_size=None):
    """relevant models -> graph -> cheapest path -> checked execution plan."""
    mode = PlanMode.for_kind(kind)
    graph = generate_graph(relevant, query, cost_model, mode, chunk_size=chunk_size)
    path = optimal_path(graph, query)
    steps = path_to_steps(graph, path)
    check_telescoping(steps, query)
    if mode is PlanMode.DIRECTED and any(s.op is StepOp.REMOVE for s in steps):
        raise InvalidPlanError(f"Insertion-only plan for {query} removes points")
    estimated = sum(s.cost for s in steps) + (len(steps) - 1) * cost_model.merge_cost
    baseline = _fetch_cost(cost_model, len(query), mode)
    return ExecutionPlan(query, kind, steps, estimated, baseline, path)


def render_plan(plan):
    lines = [f"Plan for {plan.kind.cli_name} query {plan.query} ({len(plan.steps)} steps)"]
    for num, step in enumerate(plan.steps, 1):
        lines.append(f"  {num}. {step.describe():<48} cost {step.cost:.4f}")
    lines.append(f"Path: {' -> '.join(str(v) for v in plan.path)}")
    lines.append(f"Estimated cost: {plan.estimated_cost:.4f}")
    lines.append(f"Baseline cost:  {plan.baseline_cost:.4f}")
    return "\n".join(lines)
