"""Exception hierarchy.

The two mid-level families matter for the CLI exit-code contract:
``InputError`` subclasses map to exit code 2 (bad files / schemas / bad
world queries), ``BackendError`` subclasses map to exit code 3 (reasoning
or pointing backend failures, including transport problems).
"""


class HiernavError(Exception):
    """Base class for every error raised by this package."""


class InputError(HiernavError):
    """A problem with an input file or an out-of-contract query."""


class ParseError(InputError):
    """Input file failed to parse or failed schema validation."""


class InvariantError(InputError):
    """Parsed data violates a structural invariant; names the entity."""


class OutOfBoundsError(InputError):
    """A world point falls outside the occupancy grid."""


class NoFreeSpaceError(InputError):
    """A region contains no free cell to sample."""


class NoFreeCellError(InputError):
    """No free cell exists within the goal clamp radius."""


class UnreachableGoalError(InputError):
    """The grid planner found no path to the goal cell."""


class OccupiedPoseError(InputError):
    """An agent pose sits on an occupied cell."""


class PhraseError(HiernavError):
    """Base for target-phrase resolution failures."""


class PhraseGrammarError(PhraseError):
    """Phrase does not match the query template grammar."""


class NoMatchError(PhraseError):
    """No instance / free region satisfies the phrase."""


class AmbiguousMatchError(PhraseError):
    """More than one instance / free region satisfies the phrase."""


class BackendError(HiernavError):
    """Base for reasoning / pointing backend failures."""


class UnknownInstructionError(BackendError):
    """The oracle reasoning table has no entry for the instruction."""


class NoRegionMatchError(BackendError):
    """The scene view offers no region to decide over."""


class NoDepthError(BackendError):
    """A remote pointing reply cannot be assigned a depth."""


class RemoteTransportError(BackendError):
    """The remote endpoint could not be reached."""


class RemoteTimeoutError(BackendError):
    """The remote endpoint did not answer within the deadline."""


class MalformedReplyError(BackendError):
    """The remote endpoint answered, but the reply was unparseable."""
