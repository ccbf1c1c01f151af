"""Semantic exceptions shared across the package.

Every error a caller can act on gets its own class; generic ValueError is
reserved for plain programming mistakes (wrong types, negative lengths).
"""


class MepfError(Exception):
    """Base class for all package-specific errors."""


# --- distributions ---------------------------------------------------------

class NegativeWeight(MepfError, ValueError):
    """A raw weight was negative."""


class EmptyOrDegenerate(MepfError, ValueError):
    """Fewer than two classes, or fewer than two classes with positive mass."""


class TiedMode(MepfError, ValueError):
    """The largest mass is attained by more than one class."""


class DegenerateGap(MepfError, ValueError):
    """Sandwich bounds requested for the mode itself or a tied class."""


# --- code trees ------------------------------------------------------------

class EmptyInput(MepfError, ValueError):
    """No counts supplied where at least one leaf is required."""


class NonPositiveCount(MepfError, ValueError):
    """Huffman construction needs strictly positive leaf counts."""


class UnknownClass(MepfError, KeyError):
    """The class index has no leaf in this tree."""


class AlreadyObserved(MepfError, ValueError):
    """insert_new_symbol called for a class whose count is already positive."""


class NotYetObserved(MepfError, ValueError):
    """vitter_increment called for a class still inside the unobserved subtree."""


class ZeroRootValue(MepfError, ValueError):
    """Balance check is undefined when the tree carries zero total mass."""


# --- oracle ----------------------------------------------------------------

class DegenerateSet(MepfError, ValueError):
    """Query set is empty or contains every class; the answer carries no bit."""


class ReplayExhausted(MepfError, IndexError):
    """A replay oracle was asked for a sample index beyond the recorded run."""


# --- estimators ------------------------------------------------------------

class NoData(MepfError, ValueError):
    """Mode requested from zero samples."""


# --- bench -----------------------------------------------------------------

class InvalidConfig(MepfError, ValueError):
    """Experiment configuration failed validation."""


class IoFailure(MepfError, OSError):
    """Reading or writing an artifact (config, CSV, replay, figure) failed."""


class MixedAxes(MepfError, ValueError):
    """Plot data needs at least two summaries sweeping the same axis."""
