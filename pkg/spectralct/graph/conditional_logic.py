# spectralct/graph/conditional_logic.py

from spectralct.error_diagnostics import MissingInputError
from .states import ReconState

DICTIONARY_METHODS = ("tdl", "l0tdl")
ITERATIVE_METHODS = ("ossqs", "tv", "tdl", "l0tdl")
METHODS = ("fbp",) + ITERATIVE_METHODS


class ConditionalLogic:
    """Decides which terms and stages a reconstruction run goes through."""

    def __init__(self, iterations: int = 200):
        """Initialize with configuration parameters."""
        self.iterations = iterations

    def should_continue(self, state: ReconState) -> bool:
        """Fixed iteration count, no tolerance-based exit."""
        return state["iteration"] < self.iterations

    def needs_dictionary(self, method: str) -> bool:
        return method in DICTIONARY_METHODS

    def check_inputs(self, method: str, has_dictionary: bool) -> None:
        if method not in METHODS:
            raise ValueError(f"unknown method '{method}', expected one of {list(METHODS)}")
        if self.needs_dictionary(method) and not has_dictionary:
            raise MissingInputError(f"method '{method}' needs a trained dictionary (run `sctl train-dict`)")

    def uses_dictionary_term(self, state: ReconState) -> bool:
        return state["codebook"] is not None and state["lam"] > 0

    def should_smooth(self, state: ReconState) -> bool:
        """The gradient-l0 split is active for l0tdl; with beta = 0 it no longer feeds back into X."""
        return state["method"] == "l0tdl"
