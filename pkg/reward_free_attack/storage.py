"""
Text persistence for tables, datasets and reports.

Every file starts with one header line::

    # reward-free-attack format=1 kind=<kind> digest=<game config digest>

followed by one record per line (or a CSV header row and rows). Loaders
refuse files written for another format version or game configuration.

:copyright: (c) 2026 by the reward-free-attack authors.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections.abc import Iterable, Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from reward_free_attack import const
from reward_free_attack.agents import QTable
from reward_free_attack.config import GameConfig, config_digest
from reward_free_attack.entropy import ActionCountTable, EntropyTable
from reward_free_attack.errors import RewardFreeAttackError
from reward_free_attack.evaluation import MatchRecord, TheoremCheck, Winner
from reward_free_attack.pipeline import Transition, TrajectoryDataset

_LOG = logging.getLogger(__name__)

MATCH_COLUMNS = ("game", "seed", "swap_ply", "winner", "moves", "retries", "swapped")
THEOREM_COLUMNS = ("state", "steps", "log_value", "passed")
CURVE_COLUMNS = ("episode", "win_rate", "draw_rate", "mean_moves")


class StorageError(RewardFreeAttackError):
    """Unreadable or mismatched file."""


def header_line(kind: str, game: GameConfig) -> str:
    """First line of every table and report file, binding it to ``game``."""
    return f"{const.FILE_HEADER_PREFIX} format={const.FILE_FORMAT_VERSION} kind={kind} digest={config_digest(game)}"


def parse_header(line: str) -> dict[str, str]:
    """Fields of a header line; raises ``format-mismatch`` if it is not one."""
    if not line.startswith(const.FILE_HEADER_PREFIX + " "):
        raise StorageError(f"Missing file header, got {line[:60]!r}", "format-mismatch")
    fields: dict[str, str] = {}
    for part in line[len(const.FILE_HEADER_PREFIX) :].split():
        name, _, value = part.partition("=")
        fields[name] = value
    return fields


def _check_header(path: Path, line: str, kind: str, game: GameConfig | None) -> None:
    fields = parse_header(line)
    if fields.get("format") != str(const.FILE_FORMAT_VERSION):
        found = fields.get("format")
        raise StorageError(f"{path}: format {found} is not {const.FILE_FORMAT_VERSION}", "format-mismatch")
    if fields.get("kind") != kind:
        raise StorageError(f"{path}: holds {fields.get('kind')}, expected {kind}", "format-mismatch")
    if game is not None and fields.get("digest") != config_digest(game):
        raise StorageError(f"{path}: written for another game configuration than {game.name}", "digest-mismatch")


def _write_lines(path: str | Path, kind: str, game: GameConfig, lines: Iterable[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(header_line(kind, game) + "\n")
        for line in lines:
            f.write(line + "\n")
    _LOG.debug("Wrote %s file %s", kind, path)
    return path


def _read_records(path: str | Path, kind: str, game: GameConfig | None) -> list[str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise StorageError(f"Cannot read {path}: {err}", "unreadable-file") from err
    lines = text.splitlines()
    if not lines:
        raise StorageError(f"{path} is empty", "format-mismatch")
    _check_header(path, lines[0], kind, game)
    return [line for line in lines[1:] if line.strip()]


def _bad_record(path: str | Path, line: str) -> StorageError:
    return StorageError(f"{path}: malformed record {line!r}", "format-mismatch")


def save_qtable(path: str | Path, q: QTable, game: GameConfig) -> Path:
    """One ``key action value`` line per entry, keys in hex, sorted; values use ``repr``."""
    return _write_lines(path, "qtable", game, (f"{key.hex()} {a} {v!r}" for key, a, v in q.items()))


def load_qtable(path: str | Path, game: GameConfig) -> QTable:
    """Read a table written by :func:`save_qtable` for the same game configuration."""
    q = QTable()
    for line in _read_records(path, "qtable", game):
        try:
            key, action, value = line.split()
            q.set(bytes.fromhex(key), int(action), float(value))
        except ValueError as err:
            raise _bad_record(path, line) from err
    return q


def save_counts(path: str | Path, counts: ActionCountTable, game: GameConfig) -> Path:
    """One ``key c0,c1,...`` line per state the victim was seen acting in."""
    return _write_lines(
        path, "counts", game, (f"{key.hex()} {','.join(str(c) for c in vector)}" for key, vector in counts.items())
    )


def load_counts(path: str | Path, game: GameConfig) -> ActionCountTable:
    """Read counts back; ``total_observations`` is recomputed from the vectors."""
    counts = ActionCountTable()
    for line in _read_records(path, "counts", game):
        try:
            key, vector_text = line.split()
            vector = [int(c) for c in vector_text.split(",")]
        except ValueError as err:
            raise _bad_record(path, line) from err
        counts.counts[bytes.fromhex(key)] = vector
        counts.total_observations += sum(vector)
    return counts


def save_entropy(path: str | Path, table: EntropyTable, game: GameConfig) -> Path:
    """One ``key entropy`` line per state, in nats."""
    return _write_lines(path, "entropy", game, (f"{key.hex()} {v!r}" for key, v in table.items()))


def load_entropy(path: str | Path, game: GameConfig) -> EntropyTable:
    """Read an entropy table back."""
    table = EntropyTable()
    for line in _read_records(path, "entropy", game):
        try:
            key, value = line.split()
            table[bytes.fromhex(key)] = float(value)
        except ValueError as err:
            raise _bad_record(path, line) from err
    return table


def save_dataset(path: str | Path, dataset: TrajectoryDataset, game: GameConfig) -> Path:
    """One transition per line: ``s a s_next terminal faced start``.

    ``faced`` is ``-`` when the attacker's move ended the game; ``start`` is
    1 on the first transition of each trajectory.
    """
    starts = set(dataset.boundaries)

    def records() -> Iterable[str]:
        for i, t in enumerate(dataset.transitions):
            faced = t.faced.hex() if t.faced is not None else "-"
            yield f"{t.s.hex()} {t.a} {t.s_next.hex()} {int(t.terminal)} {faced} {int(i in starts)}"

    return _write_lines(path, "dataset", game, records())


def load_dataset(path: str | Path, game: GameConfig) -> TrajectoryDataset:
    """Read transitions back; trajectories restart at records flagged ``start``."""
    dataset = TrajectoryDataset()
    for i, line in enumerate(_read_records(path, "dataset", game)):
        try:
            s, a, s_next, terminal, faced, start = line.split()
            transition = Transition(
                s=bytes.fromhex(s),
                a=int(a),
                s_next=bytes.fromhex(s_next),
                terminal=terminal == "1",
                faced=None if faced == "-" else bytes.fromhex(faced),
            )
        except ValueError as err:
            raise _bad_record(path, line) from err
        if start == "1":
            dataset.boundaries.append(i)
        dataset.transitions.append(transition)
    return dataset.validate()


def _write_csv(
    path: str | Path, kind: str, game: GameConfig, columns: Sequence[str], rows: Iterable[Sequence[Any]]
) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return _write_lines(path, kind, game, buffer.getvalue().splitlines())


def write_matches_csv(path: str | Path, records: Sequence[MatchRecord], game: GameConfig) -> Path:
    return _write_csv(
        path,
        "matches",
        game,
        MATCH_COLUMNS,
        ((i, r.seed, r.swap_ply, r.winner.value, r.moves, r.retries, int(r.swapped)) for i, r in enumerate(records)),
    )


def read_matches_csv(path: str | Path, game: GameConfig | None = None) -> list[MatchRecord]:
    """Match records of a matches CSV; ``game`` None skips the digest check."""
    rows = csv.DictReader(_read_records(path, "matches", game))
    records = []
    for row in rows:
        try:
            records.append(
                MatchRecord(
                    winner=Winner(row["winner"]),
                    moves=int(row["moves"]),
                    swap_ply=int(row["swap_ply"]),
                    retries=int(row["retries"]),
                    seed=int(row["seed"]),
                    swapped=row.get("swapped", "1") == "1",
                )
            )
        except (KeyError, ValueError) as err:
            raise StorageError(f"{path}: malformed match row {row}", "format-mismatch") from err
    return records


def write_theorem_csv(path: str | Path, checks: Sequence[TheoremCheck], game: GameConfig) -> Path:
    return _write_csv(
        path,
        "theorem1",
        game,
        THEOREM_COLUMNS,
        ((c.key.hex(), c.steps, repr(c.log_value), int(c.passed)) for c in checks),
    )


def write_curve_csv(path: str | Path, rows: Sequence[tuple[int, float, float, float]], game: GameConfig) -> Path:
    return _write_csv(path, "curve", game, CURVE_COLUMNS, ((e, repr(w), repr(d), repr(m)) for e, w, d, m in rows))


def write_manifest(
    path: str | Path,
    digest: str,
    seed: int,
    outputs: Sequence[str | Path],
    started_at: datetime,
    extra: dict[str, Any] | None = None,
    config: Sequence[str] | None = None,
) -> Path:
    """Write the JSON run manifest.

    ``config`` holds the ``key=value`` lines the digest was computed over, so
    the digest can be checked against the recorded settings.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": const.FILE_FORMAT_VERSION,
        "config_digest": digest,
        "seed": seed,
        "outputs": sorted(str(p) for p in outputs),
        "started_at": started_at.isoformat(),
        "finished_at": datetime.now(timezone.utc).isoformat(),
    }
    if config is not None:
        manifest["config"] = list(config)
    if extra:
        manifest.update(extra)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path
