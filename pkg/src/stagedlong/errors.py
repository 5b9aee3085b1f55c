"""Exception hierarchy. Each class carries the category reported by the CLI."""


class StagedTreeError(Exception):
    category = "error"


class ParseError(StagedTreeError, ValueError):
    category = "parse"


class ValidationError(StagedTreeError, ValueError):
    category = "validation"


class ArgumentError(StagedTreeError, ValueError):
    category = "argument"


class StateError(StagedTreeError, RuntimeError):
    category = "state"


class SizeError(StagedTreeError, ValueError):
    category = "size"
