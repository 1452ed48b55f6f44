"""
Command-line interface: train victims and attackers, run the reward-free
pipeline, evaluate, verify the steps-to-win property and report.

Exit codes: 0 success, 1 runtime or verification failure, 2 usage errors.

:copyright: (c) 2026 by the reward-free-attack authors.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import argparse
import logging
from collections.abc import Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from reward_free_attack import const
from reward_free_attack.agents import (
    AgentError,
    EpsilonGreedyPolicy,
    GreedyPolicy,
    QTable,
    RewardKind,
    RewardSpec,
    behavior_policy,
    train_q_agent,
    uniform_random_policy,
)
from reward_free_attack.config import (
    ConfigError,
    EvalConfig,
    GameConfig,
    PipelineConfig,
    SampleBoundParams,
    TrainConfig,
    as_key_values,
    config_digest,
    game_from_preset,
    load_key_value_file,
)
from reward_free_attack.entropy import EntropyKind
from reward_free_attack.errors import RewardFreeAttackError
from reward_free_attack.evaluation import (
    MetricsSummary,
    evaluate_swap_in,
    play_match,
    summarize,
    verify_theorem_one,
)
from reward_free_attack.game import RewardAuditGame, opponent_of
from reward_free_attack.pipeline import (
    explore_phase,
    learn_victim_entropy,
    plan_phase,
    rollout_phase,
    sample_bound,
)
from reward_free_attack.seeding import make_rng

_LOG = logging.getLogger(__name__)

USAGE_CODES = frozenset({"invalid-config", "invalid-params", "invalid-order", "missing-victim-table"})

PHASES = ("explore", "rollout", "plan", "entropy", "all")

EXPLORER_FILE = "explorer.qtable"
DATASET_FILE = "dataset.txt"
COUNTS_FILE = "counts.txt"
ATTACKER_FILE = "attacker.qtable"
ENTROPY_FILE = "entropy.txt"
MANIFEST_FILE = "manifest.json"

# --svg values a config file may give instead of a file name
_TRUE_WORDS = frozenset({"true", "yes", "1"})
_FALSE_WORDS = frozenset({"false", "no", "0", ""})


def _player(value: str) -> int:
    try:
        return const.PLAYERS_BY_NAME[value]
    except KeyError as err:
        raise argparse.ArgumentTypeError(f"player must be p1 or p2, got {value!r}") from err


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="key = value file supplying defaults for the flags")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--jobs",
        type=int,
        default=1,
        help="rollout and evaluation shards, run on threads; output is fixed by --seed and N",
    )
    parser.add_argument("--out", default=".", help="output directory")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    return parser


def _game_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--game", default="connect-k", choices=sorted(const.GAME_PRESETS))
    parser.add_argument("--rows", type=int)
    parser.add_argument("--cols", type=int)
    parser.add_argument("--k", type=int)
    parser.add_argument("--pawn-rows", type=int)
    parser.add_argument("--max-moves", type=int)
    return parser


def _training_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--episodes", type=int, default=const.DEFAULT_EPISODES)
    parser.add_argument("--lr", type=float, default=const.DEFAULT_LEARNING_RATE)
    parser.add_argument("--gamma", type=float, help="discount (default depends on the reward)")
    parser.add_argument("--epsilon-start", type=float, default=const.DEFAULT_EPSILON_START)
    parser.add_argument("--epsilon-end", type=float, default=const.DEFAULT_EPSILON_END)
    parser.add_argument("--decay-episodes", type=int, default=const.DEFAULT_EPSILON_DECAY_EPISODES)
    parser.add_argument("--checkpoint-every", type=int, default=const.DEFAULT_CHECKPOINT_EVERY)
    parser.add_argument("--eval-games", type=int, default=const.DEFAULT_EVAL_GAMES, help="games per curve point")
    parser.add_argument("--output", help="Q-table file name inside --out")
    parser.add_argument("--svg", nargs="?", const=True, default=False, help="also plot the training curve [to FILE]")
    return parser


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    game = _game_parser()
    training = _training_parser()
    parser = argparse.ArgumentParser(prog="reward-free-attack", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-victim", parents=[common, game, training], help="train a victim against random play")
    p.add_argument("--player", type=_player, default=const.P1)

    p = sub.add_parser("train-attacker", parents=[common, game, training], help="train an attacker online")
    p.add_argument("--victim-table", "--victim")
    p.add_argument("--victim-player", type=_player, default=const.P1)
    p.add_argument("--victim-behavior", default="greedy", choices=const.VICTIM_BEHAVIORS)
    p.add_argument("--reward", default=RewardKind.GAME.value, choices=[k.value for k in RewardKind])
    p.add_argument("--order", type=float, default=const.DEFAULT_RENYI_ORDER)
    p.add_argument("--victim-state", default="faced", choices=const.VICTIM_STATES)
    p.add_argument("--counts", help="victim action count table for the empirical entropy reward")
    p.add_argument("--penalty", type=float, default=const.DEFAULT_UNOBSERVED_PENALTY)
    p.add_argument("--constant", type=float, default=0.0)
    p.add_argument(
        "--opening-moves",
        type=int,
        default=const.DEFAULT_OPENING_MOVES,
        help="random opening moves per side, in training episodes and curve evaluation",
    )

    p = sub.add_parser("pipeline", parents=[common, game], help="run the reward-free attack phases")
    p.add_argument("--victim-table", "--victim")
    p.add_argument("--victim-player", type=_player, default=const.P1)
    p.add_argument("--phase", default="all", choices=PHASES)
    p.add_argument("--explorer-table", help="explorer Q-table for rollout (default: the one in --out)")
    p.add_argument("--explore-episodes", type=int, default=const.DEFAULT_EXPLORE_EPISODES)
    p.add_argument("--rollout-transitions", "--transitions", type=int, default=const.DEFAULT_ROLLOUT_TRANSITIONS)
    p.add_argument("--victim-actions", type=int, default=const.DEFAULT_VICTIM_ACTION_TARGET)
    p.add_argument("--rollout-epsilon", type=float, default=const.DEFAULT_ROLLOUT_EPSILON)
    p.add_argument("--victim-behavior", default="softmax", choices=const.VICTIM_BEHAVIORS)
    p.add_argument("--renyi-order", type=float, default=const.DEFAULT_RENYI_ORDER)
    p.add_argument("--penalty", type=float, default=const.DEFAULT_UNOBSERVED_PENALTY)
    p.add_argument("--plan-epochs", type=int, default=const.DEFAULT_PLAN_EPOCHS)
    p.add_argument("--plan-lr", type=float, default=const.DEFAULT_PLAN_LR)
    p.add_argument("--plan-gamma", type=float, default=const.ENTROPY_GAMMA)
    p.add_argument("--plan-reward", default=const.PLAN_REWARDS[0], choices=const.PLAN_REWARDS)
    p.add_argument("--entropy-epsilon", type=float, default=const.DEFAULT_CONVERGENCE_EPSILON)
    p.add_argument("--entropy-min-episodes", type=int, default=1)
    p.add_argument("--entropy-max-episodes", type=int, default=const.DEFAULT_ENTROPY_EPISODE_BUDGET)

    p = sub.add_parser("evaluate", parents=[common, game], help="swap-in evaluation of an attacker")
    p.add_argument("--victim-table", "--victim")
    p.add_argument("--attacker-table", "--attacker", help="greedy attacker (default: uniform random)")
    p.add_argument("--victim-player", type=_player, default=const.P1)
    p.add_argument("--opening-moves", type=int, default=const.DEFAULT_OPENING_MOVES)
    p.add_argument("--games", type=int, default=const.DEFAULT_EVAL_GAMES)
    p.add_argument("--max-retries", type=int, default=const.DEFAULT_MAX_OPENING_RETRIES)
    p.add_argument("--output", default="matches.csv")
    p.add_argument("--svg", nargs="?", const=True, default=False, help="also plot the summary [to FILE]")

    p = sub.add_parser("verify-theorem1", parents=[common, game], help="check steps-to-win against oracle values")
    p.add_argument("--gamma", type=float, action="append", help="repeatable (default 0.5, 0.9, 0.99)")
    p.add_argument("--player", type=_player, default=const.P1)

    p = sub.add_parser("sample-bound", parents=[common], help="evaluate the exploration sample bound")
    p.add_argument("--horizon", "--H", type=int, required=True)
    p.add_argument("--states", "--S", type=int, required=True)
    p.add_argument("--actions", "--A", type=int, required=True)
    p.add_argument("--epsilon", "--eps", type=float, required=True)
    p.add_argument("--failure-prob", "--p", type=float, required=True)
    p.add_argument("--alpha", type=float, default=const.DEFAULT_RENYI_ORDER)
    p.add_argument("--constant", "--c", type=float, default=1.0)

    p = sub.add_parser("report", parents=[common], help="summarize match CSV files")
    p.add_argument("matches", nargs="+")
    p.add_argument("--attacker-player", type=_player, default=const.P2)
    p.add_argument("--svg", nargs="?", const=True, default=False, help="also plot the summary [to FILE]")
    return parser


def _subparsers(parser: argparse.ArgumentParser) -> dict[str, argparse.ArgumentParser]:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return dict(action.choices)
    return {}


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    """Parse ``argv``; values of a ``--config`` file become flag defaults."""
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            values = load_key_value_file(known.config)
        except (OSError, ConfigError) as err:
            parser.error(f"cannot use --config {known.config}: {err}")
        used: set[str] = set()
        for sub in _subparsers(parser).values():
            dests = {a.dest for a in sub._actions}
            matching = {k: v for k, v in values.items() if k in dests}
            sub.set_defaults(**matching)
            used.update(matching)
        unknown = sorted(set(values) - used)
        if unknown:
            parser.error(f"unknown keys in {known.config}: {', '.join(unknown)}")
    return parser.parse_args(argv)


def setup_logging(args: argparse.Namespace) -> None:
    level = logging.INFO
    if getattr(args, "verbose", False):
        level = logging.DEBUG
    elif getattr(args, "quiet", False):
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(asctime)s | %(levelname)-8s | %(name)-20s | %(message)s",
        force=True,
    )


def game_config(args: argparse.Namespace) -> GameConfig:
    return game_from_preset(
        args.game,
        rows=args.rows,
        cols=args.cols,
        k=args.k,
        pawn_rows=args.pawn_rows,
        max_moves=args.max_moves,
    )


def _svg_name(args: argparse.Namespace, default: str) -> str | None:
    svg = args.svg
    if isinstance(svg, str):
        if svg.lower() in _FALSE_WORDS:
            return None
        return default if svg.lower() in _TRUE_WORDS else svg
    return default if svg else None


class _Run:
    """Output directory bookkeeping for one command."""

    def __init__(self, args: argparse.Namespace, game: GameConfig | None, settings: Any):
        self.args = args
        self.game = game
        self.out = Path(args.out)
        self.started_at = datetime.now(timezone.utc)
        recorded = {"game": game, "settings": settings, "seed": args.seed, "command": args.command}
        self.config_lines = as_key_values(recorded)
        self.digest = config_digest(recorded)
        self.outputs: list[Path] = []

    def svg_path(self, default: str) -> Path | None:
        """Where ``--svg`` asks for a plot: its FILE argument, else ``default``."""
        name = _svg_name(self.args, default)
        return None if name is None else self.path(name)

    def path(self, name: str) -> Path:
        path = self.out / name
        self.outputs.append(path)
        return path

    def finish(self, **extra: Any) -> None:
        # deferred so commands without file output need no matplotlib
        from reward_free_attack.storage import write_manifest

        write_manifest(
            self.out / MANIFEST_FILE,
            self.digest,
            self.args.seed,
            [p.name for p in self.outputs],
            self.started_at,
            {"command": self.args.command, **extra},
            config=self.config_lines,
        )


def _require_victim(args: argparse.Namespace) -> str:
    if not getattr(args, "victim_table", None):
        raise AgentError(f"{args.command} needs --victim-table", "missing-victim-table")
    return args.victim_table


def _train_config(args: argparse.Namespace, player: int, gamma: float, opening_moves: int = 0) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        gamma=args.gamma if args.gamma is not None else gamma,
        epsilon_start=args.epsilon_start,
        epsilon_end=args.epsilon_end,
        epsilon_decay_episodes=args.decay_episodes,
        episodes=args.episodes,
        seed=args.seed,
        player=player,
        checkpoint_every=args.checkpoint_every,
        opening_moves=opening_moves,
    ).validate()


def _write_curve(run: _Run, rows: list[tuple[int, float, float, float]], stem: str) -> None:
    from reward_free_attack.storage import write_curve_csv

    assert run.game is not None
    write_curve_csv(run.path(f"{stem}.curve.csv"), rows, run.game)
    svg = run.svg_path(f"{stem}.curve.svg")
    if svg is not None:
        from reward_free_attack.plotting import plot_curve

        plot_curve(svg, rows, title=f"{stem} on {run.game.name}")


def cmd_train_victim(args: argparse.Namespace) -> int:
    from reward_free_attack.storage import save_qtable

    game = game_config(args)
    cfg = _train_config(args, args.player, const.DEFAULT_GAMMA)
    run = _Run(args, game, cfg)
    curve: list[tuple[int, float, float, float]] = []

    def checkpoint(episode: int, q: QTable) -> None:
        rng = make_rng(args.seed, "curve", episode)
        policy = GreedyPolicy(q)
        if args.player == const.P1:
            records = [play_match(game, policy, uniform_random_policy, rng) for _ in range(args.eval_games)]
        else:
            records = [play_match(game, uniform_random_policy, policy, rng) for _ in range(args.eval_games)]
        s = summarize(records, args.player)
        curve.append((episode, s.win_rate, s.draw_rate, s.mean_moves))

    rng = make_rng(args.seed, "train")
    q = train_q_agent(game, uniform_random_policy, RewardSpec.game_reward(), cfg, rng, checkpoint)
    stem = Path(args.output or "victim.qtable").stem
    save_qtable(run.path(args.output or "victim.qtable"), q, game)
    _write_curve(run, curve, stem)
    run.finish()
    print(f"victim trained: {len(q)} entries, {len(curve)} curve points")
    return const.EXIT_OK


def _reward_spec(args: argparse.Namespace, victim: QTable, game: GameConfig) -> RewardSpec:
    from reward_free_attack.storage import load_counts

    kind = RewardKind(args.reward)
    if kind is RewardKind.GAME:
        return RewardSpec.game_reward()
    if kind is RewardKind.ANTAGONISTIC_VALUE:
        return RewardSpec.antagonistic_value(victim, args.victim_state)
    if kind is RewardKind.MOVE_MAXIMIZER:
        return RewardSpec.move_maximizer()
    if kind is RewardKind.VICTIM_ENTROPY:
        return RewardSpec.victim_entropy(victim, args.order, args.victim_state)
    if kind is RewardKind.EMPIRICAL_VICTIM_ENTROPY:
        if not args.counts:
            raise AgentError("empirical-victim-entropy needs --counts", "missing-victim-table")
        counts = load_counts(args.counts, game)
        return RewardSpec.empirical_victim_entropy(counts, args.order, args.penalty, args.victim_state)
    if kind is RewardKind.RANDOM:
        return RewardSpec.random_reward(args.seed)
    return RewardSpec.constant(args.constant)


def cmd_train_attacker(args: argparse.Namespace) -> int:
    from reward_free_attack.storage import load_qtable, save_qtable

    victim_path = _require_victim(args)
    game = game_config(args)
    victim = load_qtable(victim_path, game)
    spec = _reward_spec(args, victim, game).validate()
    attacker_player = opponent_of(args.victim_player)
    cfg = _train_config(args, attacker_player, spec.default_gamma, args.opening_moves)
    eval_cfg = EvalConfig(
        opening_moves=args.opening_moves,
        n_games=args.eval_games,
        seed=args.seed,
        victim_player=args.victim_player,
        jobs=args.jobs,
    ).validate()
    run = _Run(args, game, {"train": cfg, "reward": spec.kind.value, "eval": eval_cfg})
    curve: list[tuple[int, float, float, float]] = []

    def checkpoint(episode: int, q: QTable) -> None:
        records = evaluate_swap_in(game, victim, q, eval_cfg, make_rng(args.seed, "curve", episode))
        s = summarize(records, attacker_player)
        curve.append((episode, s.win_rate, s.draw_rate, s.mean_moves))

    opponent = behavior_policy(victim, args.victim_behavior)
    q = train_q_agent(game, opponent, spec, cfg, make_rng(args.seed, "train"), checkpoint)
    name = args.output or f"attacker-{spec.kind.value}.qtable"
    save_qtable(run.path(name), q, game)
    _write_curve(run, curve, Path(name).stem)
    run.finish(reward=spec.kind.value)
    print(f"attacker trained with {spec.kind.value} rewards: {len(q)} entries")
    return const.EXIT_OK


def _pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        explore_episodes=args.explore_episodes,
        rollout_transitions=args.rollout_transitions,
        victim_action_target=args.victim_actions,
        renyi_order=args.renyi_order,
        unobserved_penalty=args.penalty,
        plan_epochs=args.plan_epochs,
        plan_lr=args.plan_lr,
        plan_gamma=args.plan_gamma,
        convergence_epsilon=args.entropy_epsilon,
        seed=args.seed,
        rollout_epsilon=args.rollout_epsilon,
        victim_behavior=args.victim_behavior,
        attacker_player=opponent_of(args.victim_player),
        plan_reward=args.plan_reward,
        jobs=args.jobs,
    ).validate()


def cmd_pipeline(args: argparse.Namespace) -> int:
    from reward_free_attack import storage

    game = game_config(args)
    cfg = _pipeline_config(args)
    run = _Run(args, game, cfg)
    audited = RewardAuditGame(game)
    phases = ("explore", "rollout", "plan") if args.phase == "all" else (args.phase,)
    needs_victim = {"explore", "rollout", "entropy"}
    victim = storage.load_qtable(_require_victim(args), game) if needs_victim & set(phases) else None
    explorer_path = Path(args.explorer_table) if args.explorer_table else run.out / EXPLORER_FILE

    for phase in phases:
        rng = make_rng(args.seed, phase)
        if phase == "explore":
            explorer = explore_phase(audited, victim, cfg, rng)  # type: ignore[arg-type]
            storage.save_qtable(run.path(EXPLORER_FILE), explorer, game)
        elif phase == "rollout":
            explorer = storage.load_qtable(explorer_path, game)
            dataset, counts = rollout_phase(audited, explorer, victim, cfg, rng)  # type: ignore[arg-type]
            storage.save_dataset(run.path(DATASET_FILE), dataset, game)
            storage.save_counts(run.path(COUNTS_FILE), counts, game)
        elif phase == "plan":
            dataset = storage.load_dataset(run.out / DATASET_FILE, game)
            counts = storage.load_counts(run.out / COUNTS_FILE, game)
            attacker = plan_phase(dataset, counts, cfg, rng)
            storage.save_qtable(run.path(ATTACKER_FILE), attacker, game)
        else:
            explorer_policy = (
                EpsilonGreedyPolicy(storage.load_qtable(explorer_path, game), cfg.rollout_epsilon)
                if explorer_path.exists()
                else uniform_random_policy
            )
            table = learn_victim_entropy(
                audited,
                behavior_policy(victim, cfg.victim_behavior, cfg.victim_epsilon),  # type: ignore[arg-type]
                explorer_policy,
                cfg.convergence_epsilon,
                rng,
                kind=EntropyKind.of_order(cfg.renyi_order),
                attacker_player=cfg.attacker_player,
                min_episodes=args.entropy_min_episodes,
                max_episodes=args.entropy_max_episodes,
            )
            storage.save_entropy(run.path(ENTROPY_FILE), table, game)

    if audited.reward_reads:
        raise RewardFreeAttackError(f"Pipeline read environment rewards {audited.reward_reads} times", "reward-read")
    run.finish(phases=list(phases), game_steps=audited.steps, reward_reads=audited.reward_reads)
    print(f"pipeline phases {', '.join(phases)} done: {audited.steps} game steps, 0 reward reads")
    return const.EXIT_OK


def _summary_line(label: str, s: MetricsSummary) -> str:
    return (
        f"{label}: games={s.n_games} win_rate={s.win_rate:.3f} draw_rate={s.draw_rate:.3f} "
        f"moves={s.mean_moves:.2f}±{s.std_moves:.2f} retries={s.mean_retries:.2f} unswapped={s.unswapped_rate:.3f}"
    )


def cmd_evaluate(args: argparse.Namespace) -> int:
    from reward_free_attack import storage

    game = game_config(args)
    victim = storage.load_qtable(_require_victim(args), game)
    attacker = storage.load_qtable(args.attacker_table, game) if args.attacker_table else None
    cfg = EvalConfig(
        opening_moves=args.opening_moves,
        n_games=args.games,
        seed=args.seed,
        max_retries=args.max_retries,
        victim_player=args.victim_player,
        jobs=args.jobs,
    ).validate()
    run = _Run(args, game, cfg)
    records = evaluate_swap_in(game, victim, attacker, cfg, make_rng(args.seed, "evaluate"))
    storage.write_matches_csv(run.path(args.output), records, game)
    label = Path(args.attacker_table).stem if args.attacker_table else "random"
    summary = summarize(records, cfg.attacker_player)
    svg = run.svg_path(Path(args.output).with_suffix(".svg").name)
    if svg is not None:
        from reward_free_attack.plotting import plot_summaries

        plot_summaries(svg, {label: summary}, title=game.name)
    run.finish()
    print(_summary_line(label, summary))
    return const.EXIT_OK


def cmd_verify_theorem1(args: argparse.Namespace) -> int:
    from reward_free_attack.storage import write_theorem_csv

    game = game_config(args)
    gammas = args.gamma or [0.5, 0.9, 0.99]
    run = _Run(args, game, {"gammas": gammas, "player": args.player})
    failures = 0
    for gamma in gammas:
        checks = verify_theorem_one(game, gamma, player=args.player)
        write_theorem_csv(run.path(f"theorem1-gamma{gamma:g}.csv"), checks, game)
        failed = [c for c in checks if not c.passed]
        for check in failed:
            _LOG.error(
                "gamma=%g state %s: %d plies, log_gamma V=%r", gamma, check.key.hex(), check.steps, check.log_value
            )
        failures += len(failed)
        print(f"gamma={gamma:g}: {len(checks) - len(failed)}/{len(checks)} winning states pass")
    run.finish(failures=failures)
    return const.EXIT_OK if failures == 0 else const.EXIT_FAILURE


def cmd_sample_bound(args: argparse.Namespace) -> int:
    params = SampleBoundParams(
        horizon=args.horizon,
        n_states=args.states,
        n_actions=args.actions,
        epsilon=args.epsilon,
        failure_prob=args.failure_prob,
        renyi_alpha=args.alpha,
        constant=args.constant,
    )
    print(repr(sample_bound(params)))
    return const.EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    from reward_free_attack.storage import read_matches_csv

    summaries = {}
    for name in args.matches:
        summaries[Path(name).stem] = summarize(read_matches_csv(name), args.attacker_player)
    for label, summary in summaries.items():
        print(_summary_line(label, summary))
    svg = _svg_name(args, "report.svg")
    if svg is not None:
        from reward_free_attack.plotting import plot_summaries

        plot_summaries(Path(args.out) / svg, summaries)
    return const.EXIT_OK


COMMANDS = {
    "train-victim": cmd_train_victim,
    "train-attacker": cmd_train_attacker,
    "pipeline": cmd_pipeline,
    "evaluate": cmd_evaluate,
    "verify-theorem1": cmd_verify_theorem1,
    "sample-bound": cmd_sample_bound,
    "report": cmd_report,
}


def run(args: argparse.Namespace) -> int:
    """Dispatch a parsed command and map errors to exit codes."""
    try:
        return COMMANDS[args.command](args)
    except RewardFreeAttackError as err:
        if err.code in USAGE_CODES:
            _LOG.error("Usage error: %s", err)
            return const.EXIT_USAGE
        _LOG.error("%s failed: %s", args.command, err)
        return const.EXIT_FAILURE
    except Exception:
        _LOG.critical("Unexpected error in %s", args.command, exc_info=True)
        raise
