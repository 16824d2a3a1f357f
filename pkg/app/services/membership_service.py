"""
Membership
Bounded procedures deciding membership of lasso words and coded words,
witness re-checking, certificate checking and a brute-force oracle.
"""
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple
import logging

from app.core.config import settings
from app.core.exceptions import (
    CertificateError,
    ExplorationLimitError,
    RunError,
)
from app.domain.models import (
    AcceptanceKind,
    BlockRecord,
    CodedPrefix,
    CodedReport,
    Configuration,
    CounterMachine,
    FrontierEntry,
    LassoRun,
    LassoWord,
    RunCertificate,
    RunPrefix,
    UnknownReason,
    Verdict,
    VerdictKind,
)
from app.services import coding_service, construction_service, machine_service

logger = logging.getLogger(__name__)

Node = Tuple[int, str, Tuple[int, ...]]


# ============= Lasso membership =============

def _check_lasso(machine: CounterMachine, x: LassoWord) -> None:
    for letter in sorted(x.letters()):
        machine_service.check_letter(machine, letter)


def _reachable_control(machine: CounterMachine) -> Set[str]:
    seen = {machine.initial}
    stack = [machine.initial]
    while stack:
        state = stack.pop()
        for t in machine.transitions:
            if t.source == state and t.target not in seen:
                seen.add(t.target)
                stack.append(t.target)
    return seen


def _hopeless(machine: CounterMachine) -> bool:
    """No run can satisfy the acceptance condition whatever the counters do."""
    reachable = _reachable_control(machine)
    if machine.is_buchi:
        return not machine.final & reachable
    return not any(family and family <= reachable for family in machine.acceptance.families)


def live_states(machine: CounterMachine) -> Set[str]:
    """States from which some accepting state is reachable in the control graph."""
    live = set(machine_service.tracked_states(machine))
    changed = True
    while changed:
        changed = False
        for t in machine.transitions:
            if t.target in live and t.source not in live:
                live.add(t.source)
                changed = True
    return live


def _strongly_connected(nodes: Sequence[Node], edges: Dict[Node, List[Node]]) -> List[List[Node]]:
    """Tarjan's algorithm without recursion."""
    index: Dict[Node, int] = {}
    low: Dict[Node, int] = {}
    on_stack: Set[Node] = set()
    stack: List[Node] = []
    components: List[List[Node]] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            node, child = work.pop()
            if child == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            successors = edges.get(node, [])
            descended = False
            while child < len(successors):
                nxt = successors[child]
                child += 1
                if nxt not in index:
                    work.append((node, child))
                    work.append((nxt, 0))
                    descended = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if descended:
                continue
            if low[node] == index[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                components.append(component)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return components


def _nontrivial(component: List[Node], edges: Dict[Node, List[Node]]) -> bool:
    if len(component) > 1:
        return True
    node = component[0]
    return node in edges.get(node, [])


def _path_within(
    start: Node, goal: Node, allowed: Set[Node], edges: Dict[Node, List[Node]]
) -> List[Node]:
    """Shortest nonempty path start → goal inside `allowed` (start excluded from the result)."""
    parents: Dict[Node, Node] = {}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for nxt in edges.get(node, []):
            if nxt not in allowed or nxt in parents:
                continue
            parents[nxt] = node
            if nxt == goal:
                path = [goal]
                node = parents[goal]
                while node != start:
                    path.append(node)
                    node = parents[node]
                return list(reversed(path))
            queue.append(nxt)
    raise RunError("no path inside strongly connected component")


def _lasso_from_nodes(x: LassoWord, nodes: List[Node], loop_start: int) -> LassoRun:
    return LassoRun(
        configurations=tuple(Configuration(state, counters) for _, state, counters in nodes),
        letters="".join(x.letter(pos) for pos, _, _ in nodes[:-1]),
        loop_start=loop_start,
    )


def _stem(node: Node, parents: Dict[Node, Optional[Node]]) -> List[Node]:
    path = [node]
    while parents[path[-1]] is not None:
        path.append(parents[path[-1]])
    return list(reversed(path))


def _accepting_component(
    machine: CounterMachine, nodes: List[Node], edges: Dict[Node, List[Node]]
) -> Optional[Tuple[Node, List[Node]]]:
    """(entry node, closed walk from it) meeting the acceptance condition."""
    if machine.is_buchi:
        for component in _strongly_connected(nodes, edges):
            if not _nontrivial(component, edges):
                continue
            marked = sorted(n for n in component if n[1] in machine.final)
            if marked:
                entry = marked[0]
                return entry, _path_within(entry, entry, set(component), edges)
        return None

    for family in machine.acceptance.families:
        allowed = [n for n in nodes if n[1] in family]
        restricted = {n: [m for m in edges.get(n, []) if m[1] in family] for n in allowed}
        for component in _strongly_connected(allowed, restricted):
            if not _nontrivial(component, restricted):
                continue
            if {n[1] for n in component} != set(family):
                continue
            members = sorted(component)
            inside = set(component)
            walk: List[Node] = []
            current = members[0]
            for goal in members[1:] + [members[0]]:
                walk.extend(_path_within(current, goal, inside, restricted))
                current = goal
            return members[0], walk
    return None


def lasso_member(
    machine: CounterMachine,
    x: LassoWord,
    counter_bound: Optional[int] = None,
    cycle_bound: Optional[int] = None,
    node_budget: Optional[int] = None,
) -> Verdict:
    """
    Decide x ∈ L(machine) within bounds.

    Accept carries a LassoRun that verify_lasso_run re-checks. Reject is only
    returned when the whole configuration graph stayed below the counter bound.
    For all-blind Büchi machines a run segment that returns to the same state
    with no smaller counters and visits F in between also proves acceptance.
    """
    bound = counter_bound if counter_bound is not None else settings.counter_bound
    unwindings = cycle_bound if cycle_bound is not None else settings.cycle_bound
    budget = node_budget or settings.node_budget
    if bound < 1 or unwindings < 1:
        raise RunError("counter and cycle bounds must be >= 1")
    _check_lasso(machine, x)
    bounds = (("C", bound), ("K", unwindings))

    if _hopeless(machine):
        return Verdict(VerdictKind.REJECT, bounds=bounds)

    total = len(x.spoke) + len(x.cycle)
    live = live_states(machine)
    root: Node = (0, machine.initial, machine.zero_counters())
    parents: Dict[Node, Optional[Node]] = {root: None}
    edges: Dict[Node, List[Node]] = {}
    order: List[Node] = [root]
    queue = deque([root])
    clipped = False
    while queue:
        node = queue.popleft()
        pos, state, counters = node
        following = pos + 1 if pos + 1 < total else len(x.spoke)
        successors = []
        for t, updated in machine_service.moves(machine, state, counters, x.letter(pos)):
            # runs that can never accept again are irrelevant
            if t.target not in live:
                continue
            if max(updated, default=0) > bound:
                clipped = True
                continue
            nxt = (following, t.target, updated)
            successors.append(nxt)
            if nxt not in parents:
                parents[nxt] = node
                order.append(nxt)
                queue.append(nxt)
        edges[node] = sorted(set(successors))
        if len(parents) > budget:
            logger.warning("lasso search over budget after %d nodes", len(parents))
            return Verdict(
                VerdictKind.UNKNOWN,
                reason=UnknownReason.BUDGET,
                bounds=bounds,
                explored=len(parents),
            )

    found = _accepting_component(machine, order, edges)
    if found is not None:
        entry, walk = found
        stem = _stem(entry, parents)
        run = _lasso_from_nodes(x, stem + walk, len(stem) - 1)
        if verify_lasso_run(machine, x, run):
            return Verdict(VerdictKind.ACCEPT, witness=run, bounds=bounds, explored=len(parents))
        logger.error("discarding witness that failed re-verification: %s", run.descriptor())

    if not clipped:
        return Verdict(VerdictKind.REJECT, bounds=bounds, explored=len(parents))

    if machine.all_blind and machine.is_buchi:
        try:
            run = _growth_witness(machine, x, unwindings, budget)
        except ExplorationLimitError:
            return Verdict(
                VerdictKind.UNKNOWN,
                reason=UnknownReason.BUDGET,
                bounds=bounds,
                explored=len(parents),
            )
        if run is not None:
            return Verdict(VerdictKind.ACCEPT, witness=run, bounds=bounds, explored=len(parents))

    return Verdict(
        VerdictKind.UNKNOWN, reason=UnknownReason.HORIZON, bounds=bounds, explored=len(parents)
    )


def _growth_witness(
    machine: CounterMachine, x: LassoWord, unwindings: int, budget: int
) -> Optional[LassoRun]:
    """Search a pumpable segment between two cycle-aligned positions of a common run."""
    period = len(x.cycle)
    horizon = len(x.spoke) + unwindings * period
    start = Configuration(machine.initial, machine.zero_counters())
    layers: List[Dict[Configuration, Optional[Configuration]]] = [{start: None}]
    size = 1
    for position in range(horizon):
        following: Dict[Configuration, Optional[Configuration]] = {}
        for configuration in sorted(layers[-1]):
            letter = x.letter(position)
            for target in sorted(machine_service.successors(machine, configuration, letter)):
                following.setdefault(target, configuration)
        size += len(following)
        if size > budget:
            raise ExplorationLimitError("growth search over node budget")
        layers.append(following)

    for j in range(unwindings):
        anchor_position = len(x.spoke) + j * period
        for anchor in sorted(layers[anchor_position]):
            run = _pump_from(machine, x, layers, anchor_position, anchor, horizon, budget)
            if run is not None:
                return run
    return None


def _pump_from(machine, x, layers, anchor_position, anchor, horizon, budget) -> Optional[LassoRun]:
    period = len(x.cycle)
    Key = Tuple[Configuration, bool]
    frontier: Dict[Key, Optional[Key]] = {(anchor, anchor.state in machine.final): None}
    history: List[Dict[Key, Optional[Key]]] = [frontier]
    size = 0
    for position in range(anchor_position, horizon):
        following: Dict[Key, Optional[Key]] = {}
        for key in sorted(frontier):
            configuration, seen = key
            letter = x.letter(position)
            for target in sorted(machine_service.successors(machine, configuration, letter)):
                following.setdefault((target, seen or target.state in machine.final), key)
        size += len(following)
        if size > budget:
            raise ExplorationLimitError("growth search over node budget")
        history.append(following)
        frontier = following
        if (position + 1 - anchor_position) % period:
            continue
        for configuration, seen in sorted(frontier):
            if not seen or configuration.state != anchor.state:
                continue
            if any(b < a for a, b in zip(anchor.counters, configuration.counters)):
                continue
            loop = [configuration]
            key = (configuration, seen)
            for layer in reversed(history[1:]):
                key = layer[key]
                loop.append(key[0])
            stem = [anchor]
            for layer in reversed(layers[1 : anchor_position + 1]):
                stem.append(layer[stem[-1]])
            configurations = tuple(reversed(stem)) + tuple(reversed(loop))[1:]
            run = LassoRun(
                configurations=configurations,
                letters=x.prefix(len(configurations) - 1),
                loop_start=anchor_position,
            )
            if verify_lasso_run(machine, x, run):
                return run
    return None


def verify_lasso_run(machine: CounterMachine, x: LassoWord, run: LassoRun, pumps: int = 3) -> bool:
    """
    Re-check a lasso witness step by step, straight off the transition list:
    it reads x, starts initial, stays non-negative for `pumps` extra loop
    iterations and meets the acceptance condition.
    """
    steps = len(run.configurations) - 1
    if steps != len(run.letters) or run.period < 1 or run.loop_start < 0:
        return False
    if run.configurations[0] != Configuration(machine.initial, machine.zero_counters()):
        return False
    word = LassoWord(run.letters[: run.loop_start], run.letters[run.loop_start:])
    if word.canonical() != x.canonical():
        return False
    growth = run.growth
    if any(g < 0 for g in growth):
        return False
    if any(g != 0 and not blind for g, blind in zip(growth, machine.blind)):
        return False
    for index in range(steps + pumps * run.period):
        before, after = run.at(index), run.at(index + 1)
        if min(after.counters, default=0) < 0:
            return False
        if not _legal_step(machine, before, run.letter_at(index), after):
            return False
    if machine.acceptance.kind is AcceptanceKind.BUCHI:
        return machine_service.buchi_accepts_lasso_run(machine, run.descriptor())
    return machine_service.muller_accepts_lasso_run(machine, run.descriptor())


def _legal_step(
    machine: CounterMachine, before: Configuration, letter: str, after: Configuration
) -> bool:
    for t in machine.transitions:
        if t.source != before.state or t.letter != letter or t.target != after.state:
            continue
        if not all(g.matches(c) for g, c in zip(t.guards, before.counters)):
            continue
        if tuple(c + e for c, e in zip(before.counters, t.effects)) == after.counters:
            return True
    return False


# ============= Coded membership =============

History = Tuple[Configuration, ...]


def _dominated(entry: FrontierEntry, others: Iterable[FrontierEntry]) -> bool:
    return any(
        other != entry
        and other.state == entry.state
        and other.visits >= entry.visits
        and all(b >= a for a, b in zip(entry.counters, other.counters))
        for other in others
    )


@dataclass(frozen=True)
class BlockExploration:
    """Frontier after every block; `final` keeps the boundary histories of the last one."""
    frontiers: Tuple[FrozenSet[FrontierEntry], ...]
    final: Dict[FrontierEntry, Set[History]]
    truncated: bool


def explore_blocks(
    machine: CounterMachine,
    prefix: CodedPrefix,
    visit_cap: Optional[int] = None,
    history_cap: Optional[int] = None,
    node_budget: Optional[int] = None,
    prune: bool = False,
    track_history: bool = False,
) -> BlockExploration:
    """
    Exhaustive block-by-block unfolding of `machine` over a coded prefix.

    Counters above twice the longest block are dropped and flagged; with
    `prune` only maximal counter vectors per (state, visits) are kept, which
    is sound for blind counters. With `track_history` every entry keeps its
    first `history_cap` boundary histories in sorted order.
    """
    cap = visit_cap if visit_cap is not None else settings.visit_cap
    keep = history_cap if history_cap is not None else settings.history_cap
    budget = node_budget or settings.node_budget
    for letter in set(prefix.flatten()):
        machine_service.check_letter(machine, letter)

    tracked = machine_service.tracked_states(machine)
    clip = 2 * max([len(prefix.blocks)] + list(prefix.zero_runs))
    start = FrontierEntry(
        machine.initial, machine.zero_counters(), 1 if machine.initial in tracked else 0
    )
    frontier: Dict[FrontierEntry, Set[History]] = {start: {()}}
    frontiers: List[FrozenSet[FrontierEntry]] = []
    truncated = False
    for block in prefix.blocks:
        for letter in block.flatten():
            following: Dict[FrontierEntry, Set[History]] = {}
            for entry in sorted(frontier, key=_entry_key):
                histories = frontier[entry]
                steps = machine_service.moves(machine, entry.state, entry.counters, letter)
                for t, counters in steps:
                    if max(counters, default=0) > clip:
                        truncated = True
                        continue
                    visits = min(cap, entry.visits + (1 if t.target in tracked else 0))
                    bucket = following.setdefault(FrontierEntry(t.target, counters, visits), set())
                    bucket.update(histories)
            if len(following) > budget:
                truncated = True
            frontier = _trim(following, prune, keep, budget)
        if track_history:
            frontier = {
                entry: {h + (Configuration(entry.state, entry.counters),) for h in histories}
                for entry, histories in frontier.items()
            }
        frontiers.append(frozenset(frontier))
        logger.debug("block %d: %d frontier entries", len(frontiers), len(frontier))
    return BlockExploration(tuple(frontiers), frontier, truncated)


def coded_member(
    machine: CounterMachine,
    x: LassoWord,
    blocks: Optional[int] = None,
    a_machine: Optional[CounterMachine] = None,
    visit_cap: Optional[int] = None,
    history_cap: Optional[int] = None,
    node_budget: Optional[int] = None,
    prune: bool = False,
) -> CodedReport:
    """
    Run `machine` over the first `blocks` blocks of h(x), keeping the set of
    (state, counters, capped F-visits) at every block boundary.

    With `a_machine` set, `machine` is taken to be build_b(a_machine): the
    boundary configurations of every survivor are projected to runs of A and
    searched for an accepting lasso of A on x.
    """
    horizon = blocks if blocks is not None else settings.coded_blocks
    if horizon < 1:
        raise RunError("block count must be >= 1")
    track_history = a_machine is not None
    exploration = explore_blocks(
        machine,
        coding_service.encode_lasso(x, horizon),
        visit_cap=visit_cap,
        history_cap=history_cap,
        node_budget=node_budget,
        prune=prune,
        track_history=track_history,
    )
    frontier = exploration.final
    survivors = [len(entries) for entries in exploration.frontiers]
    truncated = exploration.truncated

    projections: Tuple[RunPrefix, ...] = ()
    accepting: Optional[LassoRun] = None
    if track_history:
        word = x.prefix(horizon)
        runs = set()
        for histories in frontier.values():
            for history in histories:
                runs.add(construction_service.extract_a_run(a_machine, word, history))
        projections = tuple(sorted(runs, key=lambda r: r.configurations))
        accepting = _accepting_a_lasso(a_machine, x, projections)

    return CodedReport(
        blocks=horizon,
        survivors=tuple(survivors),
        max_visits=max((entry.visits for entry in frontier), default=0),
        frontier=frozenset(frontier),
        projections=projections,
        accepting_lasso=accepting,
        truncated=truncated,
    )


def _entry_key(entry: FrontierEntry):
    return (entry.state, entry.counters, entry.visits)


def _trim(
    frontier: Dict[FrontierEntry, Set[History]], prune: bool, keep: int, budget: int
) -> Dict[FrontierEntry, Set[History]]:
    entries = sorted(frontier, key=_entry_key)
    if prune:
        entries = [e for e in entries if not _dominated(e, entries)]
    if len(entries) > budget:
        logger.warning("coded frontier truncated at %d entries", budget)
        entries = entries[:budget]
    return {entry: set(sorted(frontier[entry])[:keep]) for entry in entries}


def _accepting_a_lasso(
    a_machine: CounterMachine, x: LassoWord, runs: Sequence[RunPrefix]
) -> Optional[LassoRun]:
    """An A-run prefix revisiting a configuration at cycle-aligned positions, F in between."""
    period = len(x.cycle)
    for run in runs:
        configurations = run.configurations
        for j in range(len(x.spoke) + period, len(configurations)):
            for i in range(j - period, len(x.spoke) - 1, -period):
                if configurations[i] != configurations[j]:
                    continue
                if not any(c.state in a_machine.final for c in configurations[i:j]):
                    continue
                lasso = LassoRun(configurations[: j + 1], run.word[:j], i)
                if verify_lasso_run(a_machine, x, lasso):
                    return lasso
    return None


# ============= Certificates =============

def check_certificate(machine: CounterMachine, x: LassoWord, cert: RunCertificate) -> bool:
    """Whether the block schema expands to a legal run of B on the coded prefix of x."""
    if any(not isinstance(record, BlockRecord) for record in cert.blocks):
        raise CertificateError("certificate entries must be block records")
    if cert.horizon == 0:
        return True
    problems = construction_service.certificate_problems(cert, x)
    if problems:
        logger.info("certificate rejected: %s", "; ".join(problems))
        return False
    sigma = tuple(letter for letter in machine.alphabet if coding_service.is_payload(letter))
    try:
        letters, names = construction_service.expand_certificate(cert, sigma)
    except RunError as exc:
        logger.info("certificate rejected: %s", exc)
        return False
    if letters != coding_service.encode_lasso(x, cert.horizon).flatten():
        return False
    if names[0] != machine.initial:
        return False

    counters = machine.zero_counters()
    for index, letter in enumerate(letters):
        source, target = names[index], names[index + 1]
        for t in machine.outgoing(source, letter):
            if t.target != target or not all(g.matches(c) for g, c in zip(t.guards, counters)):
                continue
            updated = tuple(c + e for c, e in zip(counters, t.effects))
            if min(updated, default=0) >= 0:
                counters = updated
                break
        else:
            logger.info("certificate rejected: no step %s --%s--> %s", source, letter, target)
            return False
    return True


# ============= Brute force =============

def brute_force_oracle(
    machine: CounterMachine, word: str, max_length: Optional[int] = None
) -> FrozenSet[Tuple[Configuration, int]]:
    """Every (final configuration, tracked-state visits) by plain recursion; test ground truth."""
    limit = max_length if max_length is not None else settings.brute_force_max_length
    if len(word) > limit:
        raise ExplorationLimitError(f"word of length {len(word)} exceeds the limit {limit}")
    for letter in word:
        machine_service.check_letter(machine, letter)
    tracked = machine_service.tracked_states(machine)
    results: Set[Tuple[Configuration, int]] = set()

    def walk(state: str, counters: Tuple[int, ...], position: int, visits: int) -> None:
        if position == len(word):
            results.add((Configuration(state, counters), visits))
            return
        for t in machine.transitions:
            if t.source != state or t.letter != word[position]:
                continue
            if not all(g.matches(c) for g, c in zip(t.guards, counters)):
                continue
            updated = tuple(c + e for c, e in zip(counters, t.effects))
            if any(c < 0 for c in updated):
                continue
            walk(t.target, updated, position + 1, visits + (t.target in tracked))

    walk(machine.initial, machine.zero_counters(), 0, int(machine.initial in tracked))
    return frozenset(results)


def brute_force_lasso(
    machine: CounterMachine,
    x: LassoWord,
    counter_bound: Optional[int] = None,
    unwindings: Optional[int] = None,
) -> Optional[LassoRun]:
    """
    Depth-first search over every run on the spoke plus `unwindings` copies
    of the cycle for two cycle-aligned positions with the same state, no
    counter lower at the second, tested counters unchanged and the acceptance
    condition met in between. Such a segment can be repeated forever, so a
    returned run is a witness; None only means none fits the bounds.
    """
    bound = counter_bound if counter_bound is not None else settings.counter_bound
    copies = unwindings if unwindings is not None else settings.cycle_bound
    _check_lasso(machine, x)
    spoke, period = len(x.spoke), len(x.cycle)
    horizon = spoke + copies * period
    path = [Configuration(machine.initial, machine.zero_counters())]
    visited: Set[tuple] = set()

    def aligned(position: int) -> bool:
        return position >= spoke and (position - spoke) % period == 0

    def closes(anchor: Configuration, current: Configuration, states: FrozenSet[str]) -> bool:
        if current.state != anchor.state:
            return False
        for before, after, blind in zip(anchor.counters, current.counters, machine.blind):
            if after < before or (after != before and not blind):
                return False
        if machine.is_buchi:
            return bool(states & machine.final)
        return states in machine.acceptance.families

    def search(position: int, anchor_at: Optional[int], states: FrozenSet[str]) -> Optional[int]:
        current = path[-1]
        anchor = path[anchor_at] if anchor_at is not None else None
        if anchor is not None and position > anchor_at and aligned(position):
            if closes(anchor, current, states):
                return anchor_at
        key = (position, current, anchor, states)
        if key in visited:
            return None
        visited.add(key)
        if anchor is None and aligned(position):
            found = search(position, position, frozenset())
            if found is not None:
                return found
        if position == horizon:
            return None
        for t, counters in machine_service.moves(
            machine, current.state, current.counters, x.letter(position)
        ):
            if max(counters, default=0) > bound:
                continue
            path.append(Configuration(t.target, counters))
            seen = states | {current.state} if anchor is not None else states
            found = search(position + 1, anchor_at, seen)
            if found is not None:
                return found
            path.pop()
        return None

    loop_start = search(0, None, frozenset())
    if loop_start is None:
        return None
    configurations = tuple(path)
    return LassoRun(configurations, x.prefix(len(configurations) - 1), loop_start)
