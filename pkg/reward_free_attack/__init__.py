"""
Reward-free adversarial attacks on tabular game-playing agents.

:copyright: (c) 2026 by the reward-free-attack authors.
:license: MPL-2.0, see LICENSE for more details.
"""

from reward_free_attack.const import VERSION as __version__

__all__ = ["__version__", "main"]


def main(argv=None) -> int:
    """Main entry point."""
    import logging

    from reward_free_attack.cli import parse_args, run, setup_logging

    args = parse_args(argv)
    setup_logging(args)

    _LOG = logging.getLogger(__name__)
    _LOG.info("Starting reward-free-attack v%s: %s", __version__, args.command)
    return run(args)
