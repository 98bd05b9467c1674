class KnowtrajError(Exception):
    """Base class for errors raised by this package."""


class DataError(KnowtrajError, ValueError):
    """Input data violates a documented contract."""


class UnknownNodeError(KnowtrajError, KeyError):
    """A requested author or topic is not present in the network."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown node"
