class DomainError(ValueError):
    """Input outside the documented domain of an operation."""


class ValidationError(DomainError):
    """A study design failed validation; ``violations`` lists every breach."""

    def __init__(self, violations):
        self.violations = list(violations)
        head = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"{len(self.violations)} design violation(s): {head}{more}")
