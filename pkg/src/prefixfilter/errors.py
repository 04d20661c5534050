"""Exception hierarchy shared by every solver."""


class FilterError(Exception):
    pass


class InputError(FilterError, ValueError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class InfeasibleError(FilterError):
    """No filter set within the budget satisfies the constraints.

    ``max_blockable`` carries the certificate for capacity problems: the most
    traffic any admissible filter set can remove.
    """

    def __init__(self, message, max_blockable=None, required=None):
        self.max_blockable = max_blockable
        self.required = required
        super().__init__(message)


class BudgetExceededError(FilterError):
    pass
