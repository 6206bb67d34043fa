"""Exception types shared across the package."""


class SpecError(ValueError):
    """A measure, operator or sequence description is malformed or violates
    a construction invariant."""


class OutOfRangeError(ValueError):
    """A coefficient was requested outside the range a truncated oracle can
    evaluate exactly."""


class NotErgodicError(ValueError):
    """An operation that needs an ergodic (irreducible) operator got a
    reducible one."""


class InvariantBreach(RuntimeError):
    """Two independent computations that must agree did not.

    This always signals a bug; callers should never swallow it.
    """
