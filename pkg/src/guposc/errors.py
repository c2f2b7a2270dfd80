"""Exception types shared across the package."""


class DomainExceeded(ValueError):
    """A value left the compact range of the generalized momentum map.

    ``source`` names the module that raised, ``value`` the offending quantity
    and ``limit`` the bound it was checked against.
    """

    def __init__(self, message, *, source=None, value=None, limit=None):
        super().__init__(message)
        self.source = source
        self.value = value
        self.limit = limit
