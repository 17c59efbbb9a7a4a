"""Exception hierarchy.

Every error carries a ``stage`` tag so the command line front-end can map
it to an exit code and report where a pipeline stopped.
"""

from __future__ import annotations


class RieszLabError(Exception):
    stage = "core"


class RepresentationCollision(RieszLabError):
    """Two distinct sign tuples produced the same lattice point."""

    stage = "freq-core"

    def __init__(self, frequency, first, second):
        self.frequency = frequency
        self.first = tuple(first)
        self.second = tuple(second)
        super().__init__(
            f"frequency {tuple(frequency)} has two representations {self.first} and {self.second}"
        )


class ResourceExceeded(RieszLabError):
    stage = "torus-metrics"


class ConstructionFailed(RieszLabError):
    stage = "ball-scheme"

    def __init__(self, condition: str, depth: int, detail: str = ""):
        self.condition = condition
        self.depth = depth
        msg = f"could not satisfy condition {condition} at depth {depth}"
        super().__init__(msg + (f": {detail}" if detail else ""))


class ScaleOverflow(RieszLabError):
    stage = "ball-scheme"


class BumpOverlap(RieszLabError):
    stage = "kernel-transfer"


class NoStabilization(RieszLabError):
    stage = "kernel-transfer"


class SampleOnSingularity(RieszLabError):
    stage = "multiplier-lab"


class BallAssignmentAmbiguous(RieszLabError):
    stage = "witness-engine"


class GapExceeded(RieszLabError):
    stage = "witness-engine"


class ConfigError(RieszLabError):
    stage = "config"
