"""Online test algorithms: uniform, greedy, epsilon-greedy, and MCTS.

Every algorithm drives a black-box session while tracking the requirement
automaton state, and classifies each finished run as covering (objective
reached), error (non-conformance revealed), inconclusive (left the
coreachable set; restart), or active (truncated by the step bound).

The MCTS testers build a tree over input sequences.  Tree nodes are
selected by the UCT rule under minimization (the exploration constant is
negative), rollouts estimate a node by playing uniform or epsilon-greedy
inputs to the step bound, and rewards are shaped from the automaton
distance layers, either the final layer index or its discounted
aggregate, normalized to [0, 1].
"""

from __future__ import annotations

import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .analysis import RewardLayers, coreach_inp, discounted_reward, pad_rewards, reward_layers
from .automaton import SpecAutomaton, compiled
from .errors import ContractError, RunError, SpecError
from .game import GreedyArtifacts, greedy_strategy

COVERING = "covering"
ERROR = "error"
COVERING_ERROR = "covering+error"
INCONCLUSIVE = "inconclusive"
ACTIVE = "active"

ALGORITHMS = ("uniform", "greedy", "eps-greedy", "mcts", "greedy-mcts")
REWARD_MODES = ("last", "discounted")


@dataclass(frozen=True)
class TesterConfig:
    algorithm: str = "uniform"
    max_steps: int = 250  # run/rollout bound (K)
    runs: int = 3000
    attempts: int = 10
    epsilon: float = 0.25
    gamma: float = 0.99
    greedy_visits: int = 30  # per-node visit bound of the greedy tree policy (M)
    # normalized rewards cluster within a few percent of the worst value on
    # collision-heavy systems; the exploration constant must sit at that scale
    uct_c: float = -0.025
    reward_mode: str = "discounted"
    seed: int = 0
    greedy_tree: bool = True
    greedy_rollout: bool = True
    continue_after_error: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise SpecError(f"unknown algorithm {self.algorithm!r}")
        if self.max_steps < 1:
            raise ContractError("max_steps must be >= 1")
        if not 0 < self.epsilon <= 1:
            raise ContractError("epsilon must be in (0, 1]")
        if not 0 < self.gamma < 1:
            raise ContractError("gamma must be in (0, 1)")
        if self.greedy_visits < 0:
            raise ContractError("greedy_visits must be >= 0")
        if self.uct_c >= 0:
            raise ContractError("uct_c must be negative under minimization")
        if self.reward_mode not in REWARD_MODES:
            raise SpecError(f"unknown reward mode {self.reward_mode!r}")


@dataclass(frozen=True)
class TestContext:
    """Precomputed spec-side artifacts shared by all attempts (read-only)."""

    automaton: SpecAutomaton
    objective_name: str
    objective: frozenset[str]
    coreach: frozenset[str]
    allowed: dict[str, tuple[int, ...]]
    layers: RewardLayers

    @property
    def worst_reward(self) -> int:
        return self.layers.sink_index


def build_context(a: SpecAutomaton, objective) -> TestContext:
    """Resolve an objective (name or state set) and precompute analyses."""
    if isinstance(objective, str):
        try:
            states = a.objectives[objective]
        except KeyError:
            raise SpecError(
                f"unknown objective {objective!r}; declared: "
                f"{sorted(a.objectives) or 'none'}"
            ) from None
        name = objective
    else:
        states = frozenset(objective)
        name = ",".join(sorted(states))
    ci = coreach_inp(a, states)
    return TestContext(
        automaton=a,
        objective_name=name,
        objective=frozenset(states),
        coreach=ci.coreach,
        allowed=ci.allowed,
        layers=reward_layers(a, states),
    )


def classify(state: str, objective, coreach, errors) -> str:
    """Four-way verdict for the state a trace ended in.

    Covering and error can hold together (the objective may contain error
    states); inconclusive is only reported when neither does.
    """
    covering = state in objective
    error = state in errors
    if covering and error:
        return COVERING_ERROR
    if covering:
        return COVERING
    if error:
        return ERROR
    if state not in coreach:
        return INCONCLUSIVE
    return ACTIVE


def _classify(ctx: TestContext, state: str) -> str:
    return classify(state, ctx.objective, ctx.coreach, ctx.automaton.error_states)


@dataclass
class RunResult:
    index: int  # 1-based run number within the attempt
    verdict: str
    trace: list[int]  # full valuations in step order
    end_state: str

    @property
    def is_covering(self) -> bool:
        return self.verdict in (COVERING, COVERING_ERROR)

    @property
    def is_error(self) -> bool:
        return self.verdict in (ERROR, COVERING_ERROR)


# ---------------------------------------------------------------------------
# Step policies and the plain run loop.
# ---------------------------------------------------------------------------


def uniform_policy(ctx: TestContext):
    """Uniform choice among the inputs that keep the run coreachable."""
    allowed = ctx.allowed

    def pick(state: str, rng: random.Random) -> int:
        return rng.choice(allowed[state])

    return pick


def greedy_policy(greedy: GreedyArtifacts):
    """Uniform choice inside the greedy strategy's prescription."""
    strategy = greedy.strategy

    def pick(state: str, rng: random.Random) -> int:
        return rng.choice(strategy[state])

    return pick


def eps_greedy_policy(ctx: TestContext, greedy: GreedyArtifacts, epsilon: float):
    """Greedy prescription with probability 1-epsilon, else uniform."""
    allowed = ctx.allowed
    strategy = greedy.strategy

    def pick(state: str, rng: random.Random) -> int:
        pool = allowed[state] if rng.random() < epsilon else strategy[state]
        return rng.choice(pool)

    return pick


def run_once(ctx: TestContext, session, policy, rng: random.Random, max_steps: int,
             index: int = 0) -> RunResult:
    """One reset-and-drive run, stopped on a terminal verdict or the bound."""
    eng = compiled(ctx.automaton)
    ab = ctx.automaton.alphabet
    session.reset()
    state = ctx.automaton.initial
    trace: list[int] = []
    verdict = _classify(ctx, state)
    while verdict == ACTIVE and len(trace) < max_steps:
        v_inp = policy(state, rng)
        v_out = session.step(v_inp)
        v = ab.join(v_inp, v_out)
        nxt = eng.step(state, v)
        if nxt is None:
            raise RunError(
                f"requirement has no transition from {state} on "
                f"{ab.format_full(v)} at step {len(trace)}",
                step=len(trace),
            )
        trace.append(v)
        state = nxt
        verdict = _classify(ctx, state)
    return RunResult(index=index, verdict=verdict, trace=trace, end_state=state)


def _run_stream(ctx, session, policy, cfg: TesterConfig, rng: random.Random):
    for i in range(1, cfg.runs + 1):
        result = run_once(ctx, session, policy, rng, cfg.max_steps, index=i)
        yield result
        if result.is_covering:
            return
        if result.is_error and not cfg.continue_after_error:
            return


def run_uniform(cfg: TesterConfig, session, ctx: TestContext, rng=None):
    """Verdict stream of uniform runs; stops per the covering/error policy."""
    rng = rng if rng is not None else random.Random(cfg.seed)
    yield from _run_stream(ctx, session, uniform_policy(ctx), cfg, rng)


def run_greedy(cfg: TesterConfig, session, greedy: GreedyArtifacts,
               ctx: TestContext, rng=None):
    rng = rng if rng is not None else random.Random(cfg.seed)
    yield from _run_stream(ctx, session, greedy_policy(greedy), cfg, rng)


def run_eps_greedy(cfg: TesterConfig, session, greedy: GreedyArtifacts,
                   ctx: TestContext, rng=None):
    rng = rng if rng is not None else random.Random(cfg.seed)
    policy = eps_greedy_policy(ctx, greedy, cfg.epsilon)
    yield from _run_stream(ctx, session, policy, cfg, rng)


# ---------------------------------------------------------------------------
# MCTS.
# ---------------------------------------------------------------------------


def uct_score(mean_reward: float, parent_visits: float, child_visits: int,
              c: float) -> float:
    """UCT value of a child; unvisited children rank first under minimization."""
    if child_visits == 0:
        return -math.inf
    return mean_reward + c * math.sqrt(math.log(parent_visits) / child_visits)


class SearchNode:
    """Statistics for one input sequence: visits, mean reward, children."""

    __slots__ = ("visits", "mean_reward", "children")

    def __init__(self):
        self.visits = 0
        self.mean_reward = 0.0
        self.children: dict[int, SearchNode] = {}


@dataclass
class AttemptReport:
    algorithm: str
    seed: int
    success: bool
    runs_used: int
    covering_trace: list[str] | None
    error_traces: list[list[str]]
    wall_time_ms: float
    tree: dict | None = None

    def to_json_dict(self, include_timing: bool = False) -> dict:
        doc = {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "success": self.success,
            "runs_used": self.runs_used,
            "covering_trace": self.covering_trace,
            "error_traces": self.error_traces,
            "tree": self.tree,
        }
        if include_timing:
            doc["wall_time_ms"] = self.wall_time_ms
        return doc


class _MctsAttempt:
    """One attempt: a fresh tree, one session, up to cfg.runs iterations."""

    def __init__(self, ctx: TestContext, session, cfg: TesterConfig,
                 greedy: GreedyArtifacts | None, rng: random.Random):
        self.ctx = ctx
        self.session = session
        self.cfg = cfg
        self.greedy = greedy
        self.rng = rng
        self.eng = compiled(ctx.automaton)
        self.ab = ctx.automaton.alphabet
        self.root = SearchNode()
        self.node_count = 1
        self.max_depth = 0
        self.use_greedy_tree = (
            cfg.greedy_tree and greedy is not None and cfg.greedy_visits > 0
        )
        self.use_greedy_rollout = cfg.greedy_rollout and greedy is not None
        if self.use_greedy_rollout:
            self.rollout_policy = eps_greedy_policy(ctx, greedy, cfg.epsilon)
        else:
            self.rollout_policy = uniform_policy(ctx)
        k = cfg.max_steps
        if cfg.reward_mode == "discounted":
            worst = ctx.worst_reward
            self.norm = worst * worst * (1 - cfg.gamma**k) / (1 - cfg.gamma)
        else:
            self.norm = ctx.worst_reward
        self.norm = self.norm or 1.0

    def candidate_pool(self, node: SearchNode, state: str) -> tuple[int, ...]:
        if self.use_greedy_tree and node.visits <= self.cfg.greedy_visits:
            pool = self.greedy.strategy[state]
            if pool:
                return pool
        return self.ctx.allowed[state]

    def select_input(self, node: SearchNode, pool) -> tuple[int, bool]:
        """Untried candidate (expansion) or the UCT-minimal child input."""
        best_v = None
        best_score = math.inf
        for v in pool:
            child = node.children.get(v)
            if child is None:
                return v, True
            score = uct_score(
                child.mean_reward, node.visits, child.visits, self.cfg.uct_c
            )
            if score < best_score:
                best_score = score
                best_v = v
        return best_v, False

    def run(self) -> AttemptReport:
        started = time.perf_counter()
        cfg = self.cfg
        ctx = self.ctx
        error_traces: list[list[int]] = []
        seen_errors: set[tuple[int, ...]] = set()
        success_run = 0
        covering: list[int] | None = None
        runs_done = 0

        root_verdict = _classify(ctx, ctx.automaton.initial)
        for run_idx in range(1, cfg.runs + 1):
            runs_done = run_idx
            if root_verdict != ACTIVE:
                # degenerate: the empty trace already decides every run
                if root_verdict in (COVERING, COVERING_ERROR):
                    covering = []
                    success_run = run_idx
                elif root_verdict == ERROR:
                    error_traces.append([])
                    success_run = run_idx
                break

            verdict, trace = self._iteration()
            if verdict in (COVERING, COVERING_ERROR):
                covering = trace
                if verdict == COVERING_ERROR:
                    error_traces.append(trace)
                if not success_run:
                    success_run = run_idx
                break
            if verdict == ERROR:
                key = tuple(trace)
                if key not in seen_errors:
                    seen_errors.add(key)
                    error_traces.append(trace)
                    if not success_run:
                        success_run = run_idx
                if not cfg.continue_after_error:
                    break

        elapsed_ms = (time.perf_counter() - started) * 1000.0
        success = covering is not None or bool(error_traces)
        return AttemptReport(
            algorithm=cfg.algorithm,
            seed=cfg.seed,
            success=success,
            runs_used=success_run if success else runs_done,
            covering_trace=self._fmt(covering) if covering is not None else None,
            error_traces=[self._fmt(t) for t in error_traces],
            wall_time_ms=elapsed_ms,
            tree={"nodes": self.node_count, "max_depth": self.max_depth},
        )

    def _fmt(self, trace: list[int]) -> list[str]:
        return [self.ab.format_full(v) for v in trace]

    def _iteration(self) -> tuple[str, list[int]]:
        """One reset / select / expand / simulate / propagate cycle."""
        ctx = self.ctx
        cfg = self.cfg
        layer_of = ctx.layers.index
        self.session.reset()
        state = ctx.automaton.initial
        node = self.root
        node.visits += 1
        path = [node]
        trace: list[int] = []
        rewards: list[int] = []
        verdict = ACTIVE

        # selection, ending with at most one expansion
        while verdict == ACTIVE and len(trace) < cfg.max_steps:
            pool = self.candidate_pool(node, state)
            v_inp, is_new = self.select_input(node, pool)
            if v_inp is None:  # pool exhausted by terminal children bookkeeping
                break
            if is_new:
                child = SearchNode()
                node.children[v_inp] = child
                self.node_count += 1
            else:
                child = node.children[v_inp]
            state, verdict = self._advance(state, v_inp, trace, rewards)
            child.visits += 1
            path.append(child)
            node = child
            if is_new:
                break

        # simulation from the expanded node
        while verdict == ACTIVE and len(trace) < cfg.max_steps:
            v_inp = self.rollout_policy(state, self.rng)
            state, verdict = self._advance(state, v_inp, trace, rewards)

        self.max_depth = max(self.max_depth, len(path) - 1)
        if not rewards:
            rewards = [layer_of[state]]
        if cfg.reward_mode == "discounted":
            raw = discounted_reward(pad_rewards(rewards, cfg.max_steps), cfg.gamma)
        else:
            raw = rewards[-1]
        normalized = raw / self.norm
        for n in path:
            n.mean_reward += (normalized - n.mean_reward) / n.visits
        return verdict, trace

    def _advance(self, state, v_inp, trace, rewards):
        v_out = self.session.step(v_inp)
        v = self.ab.join(v_inp, v_out)
        nxt = self.eng.step(state, v)
        if nxt is None:
            raise RunError(
                f"requirement has no transition from {state} on "
                f"{self.ab.format_full(v)} at step {len(trace)}",
                step=len(trace),
            )
        trace.append(v)
        rewards.append(self.ctx.layers.index[nxt])
        return nxt, _classify(self.ctx, nxt)


def mcts_attempt(ctx: TestContext, session, cfg: TesterConfig,
                 greedy: GreedyArtifacts | None = None,
                 rng: random.Random | None = None) -> AttemptReport:
    rng = rng if rng is not None else random.Random(cfg.seed)
    return _MctsAttempt(ctx, session, cfg, greedy, rng).run()


# ---------------------------------------------------------------------------
# Attempts and campaigns.
# ---------------------------------------------------------------------------


def needs_greedy(cfg: TesterConfig) -> bool:
    return cfg.algorithm in ("greedy", "eps-greedy", "greedy-mcts")


def run_attempt(ctx: TestContext, session, cfg: TesterConfig,
                greedy: GreedyArtifacts | None = None) -> AttemptReport:
    """Run one attempt of the configured algorithm on a fresh session."""
    rng = random.Random(cfg.seed)
    if cfg.algorithm in ("mcts", "greedy-mcts"):
        if cfg.algorithm == "mcts":
            basic = replace(cfg, greedy_tree=False, greedy_rollout=False)
            return mcts_attempt(ctx, session, basic, greedy=None, rng=rng)
        if greedy is None:
            raise ContractError("greedy-mcts needs greedy artifacts")
        return mcts_attempt(ctx, session, cfg, greedy=greedy, rng=rng)

    started = time.perf_counter()
    if cfg.algorithm == "uniform":
        stream = run_uniform(cfg, session, ctx, rng=rng)
    elif cfg.algorithm == "greedy":
        if greedy is None:
            raise ContractError("greedy needs greedy artifacts")
        stream = run_greedy(cfg, session, greedy, ctx, rng=rng)
    else:
        if greedy is None:
            raise ContractError("eps-greedy needs greedy artifacts")
        stream = run_eps_greedy(cfg, session, greedy, ctx, rng=rng)

    ab = ctx.automaton.alphabet
    covering: RunResult | None = None
    errors: list[RunResult] = []
    runs_done = 0
    success_run = 0
    for result in stream:
        runs_done = result.index
        if result.is_covering:
            covering = result
            if not success_run:
                success_run = result.index
        if result.is_error:
            errors.append(result)
            if not success_run:
                success_run = result.index
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    success = covering is not None or bool(errors)
    return AttemptReport(
        algorithm=cfg.algorithm,
        seed=cfg.seed,
        success=success,
        runs_used=success_run if success else runs_done,
        covering_trace=(
            [ab.format_full(v) for v in covering.trace] if covering else None
        ),
        error_traces=[[ab.format_full(v) for v in r.trace] for r in errors],
        wall_time_ms=elapsed_ms,
        tree=None,
    )


@dataclass
class CampaignReport:
    config: dict
    attempts: list[AttemptReport]
    summary: dict = field(default_factory=dict)

    def finalize(self) -> "CampaignReport":
        successes = [a for a in self.attempts if a.success]
        rate = 100.0 * len(successes) / len(self.attempts) if self.attempts else 0.0
        avg = (
            sum(a.runs_used for a in successes) / len(successes)
            if successes
            else None
        )
        self.summary = {
            "attempts": len(self.attempts),
            "successes": len(successes),
            "success_rate": rate,
            "average_runs": avg,
        }
        return self


def _campaign_payload(spec_source, objective_name, completion, sut_uri, cfg, index):
    return (spec_source, objective_name, completion, sut_uri, cfg, index)


_worker_cache: dict = {}


def _worker_context(spec_source: str, objective_name: str, completion: str | None):
    key = (spec_source, objective_name, completion)
    entry = _worker_cache.get(key)
    if entry is None:
        from .catalog import resolve_spec
        from .automaton import complete as complete_automaton, validate

        a = resolve_spec(spec_source)
        if completion and not validate(a).complete:
            a = complete_automaton(a, completion)
        ctx = build_context(a, objective_name)
        greedy = greedy_strategy(a, ctx.objective)
        entry = (ctx, greedy)
        _worker_cache[key] = entry
    return entry


def _attempt_worker(payload) -> AttemptReport:
    spec_source, objective_name, completion, sut_uri, cfg, index = payload
    from .catalog import make_sut_factory

    ctx, greedy = _worker_context(spec_source, objective_name, completion)
    factory = make_sut_factory(sut_uri, ctx.automaton.alphabet)
    attempt_cfg = replace(cfg, seed=cfg.seed + index)
    with factory() as session:
        return run_attempt(
            ctx, session, attempt_cfg, greedy if needs_greedy(attempt_cfg) else None
        )


def run_campaign(
    ctx: TestContext,
    factory,
    cfg: TesterConfig,
    greedy: GreedyArtifacts | None = None,
    jobs: int = 1,
    spec_source: str | None = None,
    objective_name: str | None = None,
    sut_uri: str | None = None,
    completion: str | None = None,
) -> CampaignReport:
    """Run cfg.attempts independent attempts, serially or across processes.

    Attempt i derives its RNG seed as cfg.seed + i, so parallel and serial
    campaigns produce identical reports.  Parallel campaigns rebuild the
    context per worker and therefore need the spec source, objective and
    SUT URI in serializable form.
    """
    if needs_greedy(cfg) and greedy is None:
        greedy = greedy_strategy(ctx.automaton, ctx.objective)
    reports: list[AttemptReport] = []
    if jobs > 1:
        if not (spec_source and sut_uri and objective_name):
            raise ContractError(
                "parallel campaigns need spec_source, objective_name and sut_uri"
            )
        payloads = [
            _campaign_payload(spec_source, objective_name, completion, sut_uri, cfg, i)
            for i in range(cfg.attempts)
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_attempt_worker, payloads))
    else:
        for i in range(cfg.attempts):
            attempt_cfg = replace(cfg, seed=cfg.seed + i)
            with factory() as session:
                reports.append(
                    run_attempt(
                        ctx,
                        session,
                        attempt_cfg,
                        greedy if needs_greedy(attempt_cfg) else None,
                    )
                )
    config_echo = {
        "algorithm": cfg.algorithm,
        "K": cfg.max_steps,
        "runs": cfg.runs,
        "attempts": cfg.attempts,
        "epsilon": cfg.epsilon,
        "gamma": cfg.gamma,
        "M": cfg.greedy_visits,
        "c": cfg.uct_c,
        "reward": cfg.reward_mode,
        "seed": cfg.seed,
        "greedy_tree": cfg.greedy_tree,
        "greedy_rollout": cfg.greedy_rollout,
        "continue_after_error": cfg.continue_after_error,
        "objective": objective_name,
        "sut": sut_uri,
        "spec": spec_source,
    }
    return CampaignReport(config=config_echo, attempts=reports).finalize()
