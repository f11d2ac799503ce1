class BackhaulRateSplitError(Exception):
    pass


class StructuralError(BackhaulRateSplitError):
    def __init__(self, what: str, message: str):
        self.what = what
        self.message = message
        super().__init__(str(self))

    def __str__(self):
        return f"invalid {self.what} ({self.message})"


class ConfigError(BackhaulRateSplitError):
    def __init__(self, source: str, message: str):
        self.source = source
        self.message = message
        super().__init__(f"[{source}] {message}")


class SolverError(BackhaulRateSplitError):
    pass


class DualEvaluationError(SolverError):
    def __str__(self):
        return f"failed to evaluate dual certificate ({self.args[0] if self.args else 'unknown'})"
