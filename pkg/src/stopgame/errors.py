class ContractViolation(ValueError):
    """An operation was called with inputs that break its preconditions."""


class InstanceError(ValueError):
    """An instance or strategy file could not be parsed or failed validation."""
