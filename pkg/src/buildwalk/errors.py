"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` which the command line
front end copies into its JSON error object.
"""


class BuildwalkError(Exception):
    code = "error"


class InvalidInput(BuildwalkError, ValueError):
    code = "invalid-input"


class GroupTooLargeError(BuildwalkError):
    code = "group-too-large-or-infinite"


class InvalidWalk(BuildwalkError, ValueError):
    code = "invalid-walk"


class NotABuilding(BuildwalkError):
    code = "not-a-building"


class SingularPoint(BuildwalkError, ValueError):
    code = "singular-point"


class UnsupportedBoundary(BuildwalkError):
    code = "unsupported-boundary"


class RejectedByFeitHigman(BuildwalkError, ValueError):
    code = "rejected-by-feit-higman"
