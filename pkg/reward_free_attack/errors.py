"""
Base error for the reward-free attack laboratory.

:copyright: (c) 2026 by the reward-free-attack authors.
:license: MPL-2.0, see LICENSE for more details.
"""


class RewardFreeAttackError(Exception):
    """Error raised by any laboratory module.

    ``code`` is the machine-readable error name (``illegal-action``,
    ``invalid-distribution``, ...) that the CLI reports.
    """

    def __init__(self, message: str, code: str = "error"):
        super().__init__(message)
        self.code = code

    def __str__(self) -> str:
        return f"{self.code}: {super().__str__()}"
