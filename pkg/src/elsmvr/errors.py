class ConfigurationError(ValueError):
    """Inputs are inconsistent with each other or with the catalog."""


class DomainError(ValueError):
    """A numeric argument lies outside the domain of a formula."""
