"""Online black-box test synthesis from safety-automaton requirements.

The library models requirements as deterministic, complete two-phase
automata, analyzes them (coreachability, distance layers, two-player game
strategies), and drives black-box systems under test with uniform,
greedy, epsilon-greedy, or MCTS input-selection policies until a test
objective is covered or a non-conformance is revealed.
"""

from .automaton import (
    Alphabet,
    SpecAutomaton,
    Transition,
    complete,
    post_states,
    pre_states,
    product,
    run_trace,
    structurally_equal,
    validate,
)
from .analysis import (
    CoreachInput,
    RewardLayers,
    coreach_inp,
    discounted_reward,
    last_reward,
    pad_rewards,
    post_star,
    pre_star,
    reward_layers,
)
from .errors import ContractError, ReachtestError, RunError, SpecError, TransportError
from .game import (
    GreedyArtifacts,
    Strategy,
    cooperative_strategy,
    cpre,
    cpre_star,
    greedy_strategy,
    winning_strategy,
)
from .guards import Guard, eval_guard, parse_guard
from .specfile import parse_spec, serialize_spec, spec_to_json
from .testers import (
    AttemptReport,
    CampaignReport,
    TesterConfig,
    TestContext,
    build_context,
    classify,
    mcts_attempt,
    run_attempt,
    run_campaign,
    run_eps_greedy,
    run_greedy,
    run_uniform,
    uct_score,
)

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "AttemptReport",
    "CampaignReport",
    "ContractError",
    "CoreachInput",
    "GreedyArtifacts",
    "Guard",
    "ReachtestError",
    "RewardLayers",
    "RunError",
    "SpecAutomaton",
    "SpecError",
    "Strategy",
    "TestContext",
    "TesterConfig",
    "Transition",
    "TransportError",
    "build_context",
    "classify",
    "complete",
    "cooperative_strategy",
    "coreach_inp",
    "cpre",
    "cpre_star",
    "discounted_reward",
    "eval_guard",
    "greedy_strategy",
    "last_reward",
    "mcts_attempt",
    "pad_rewards",
    "parse_guard",
    "parse_spec",
    "post_star",
    "post_states",
    "pre_star",
    "pre_states",
    "product",
    "reward_layers",
    "run_attempt",
    "run_campaign",
    "run_eps_greedy",
    "run_greedy",
    "run_trace",
    "run_uniform",
    "serialize_spec",
    "spec_to_json",
    "structurally_equal",
    "uct_score",
    "validate",
    "winning_strategy",
]
