"""Exception taxonomy shared across the package."""


class ConvrecError(Exception):
    """Base class for all convrec errors."""


class CatalogError(ConvrecError, ValueError):
    """Malformed or inconsistent catalogue document.

    ``location`` points at the offending part of the document
    (e.g. ``items[2].compatible_answers``) when known.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class CyclicPropertyGraphError(CatalogError):
    """The parent relation over properties contains a cycle."""


class ElicitationError(ConvrecError, ValueError):
    """A probability table cannot be elicited from the given inputs."""


class EnumerationCapError(ConvrecError, RuntimeError):
    """Joint property-state enumeration exceeded the configured cap."""


class InferenceError(ConvrecError, RuntimeError):
    """Posterior updating hit an undefined quantity (e.g. gating with
    zero posterior mass on the relevant items)."""


class ObservationError(ConvrecError, ValueError):
    """An observation log record is malformed or hits a forbidden cell."""


class AnswerSourceError(ConvrecError, RuntimeError):
    """The answer source failed mid-conversation.

    Carries the partial transcript collected so far in ``transcript``.
    """

    def __init__(self, message, transcript=None):
        super().__init__(message)
        self.transcript = transcript
