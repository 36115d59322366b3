class UsageError(ValueError):
    """Bad arguments: out-of-range ids, empty sets, k too large, malformed files."""


class MemoryViolation(RuntimeError):
    def __init__(self, round_index, machine, words, cap):
        self.round_index = round_index
        self.machine = machine
        self.words = words
        self.cap = cap
        super().__init__(
            f"round {round_index}: machine {machine} needs {words} words, cap is {cap}"
        )


class SamplingStalled(RuntimeError):
    pass
