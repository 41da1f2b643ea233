class NetEmbedError(ValueError):
    """Base class for input and contract violations raised by this package."""


class ParseError(NetEmbedError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SelfLoopError(ParseError):
    def __init__(self, line: int):
        super().__init__(line, "self-loop")


class IsolatedNodeError(NetEmbedError):
    def __init__(self, node: int):
        super().__init__(f"node {node} has no neighbours")
        self.node = node


class EmptyGraphError(NetEmbedError):
    pass


class DirectedGraphError(NetEmbedError):
    pass


class DimensionError(NetEmbedError):
    pass


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""
