"""Exception taxonomy shared across the solver stack.

Model-evaluation errors (singular charts, depleted mass, degenerate
geometry) derive from :class:`ModelError`; they signal that a single
evaluation of the dynamics or a guidance quantity is invalid.  Solver
errors derive from :class:`SolverFailure` and carry diagnostics so a
caller (or the CLI) can report what was tried.
"""

from __future__ import annotations


class AscentError(Exception):
    """Base class for every error raised by this package."""


class ModelError(AscentError):
    """A single model evaluation is invalid at the given arguments."""


class SingularChart(ModelError):
    """cos(gamma) or cos(L) vanished; the Euler-angle chart broke down."""


class MassDepleted(ModelError):
    """Propellant consumption drove the vehicle mass to zero or below."""


class ZeroRange(ModelError):
    """Line-of-sight range is (numerically) zero; LOS angles undefined."""


class SingularGuess(ModelError):
    """The linear system recovering the position costates is singular."""


class ConcavityLost(ModelError):
    """The Hamiltonian is no longer concave in the lift command; the
    stationary point would be a minimum (p_w + 1 <= 0)."""


class InvalidHorizon(ModelError):
    """A shooting evaluation was requested with a non-positive horizon."""


class NonFiniteState(ModelError):
    """Integration produced a NaN or infinite state component."""

    def __init__(self, msg: str = "non-finite state", node: int = -1, t: float = float("nan")):
        super().__init__(f"{msg} at node {node}, t={t:g}")
        self.node = node
        self.t = t


class IntegrationFailed(ModelError):
    """The rate function raised while stepping; wraps the cause with the
    grid node index where it happened."""

    def __init__(self, node: int, t: float, cause: Exception):
        super().__init__(f"rate evaluation failed at node {node}, t={t:g}: {cause}")
        self.node = node
        self.t = t
        self.cause = cause


class SolverFailure(AscentError):
    """Base class for iterative-solver failures; carries diagnostics."""

    def __init__(self, msg: str, iterate=None, history=None):
        super().__init__(msg)
        self.iterate = iterate
        self.history = list(history) if history is not None else []


class JacobianSingular(SolverFailure):
    """The finite-difference Jacobian could not be factorized."""


class LineSearchStalled(SolverFailure):
    """Backtracking exhausted its halvings without reducing the residual."""


class MaxIterations(SolverFailure):
    """The Newton iteration hit its iteration cap before converging."""


class StepOneDiverged(SolverFailure):
    """The initial (guidance-seeded) shooting solve did not converge."""


class ContinuationStalled(SolverFailure):
    """The continuation step size shrank below its floor."""


class ScenarioError(AscentError):
    """Base class for scenario configuration problems."""


class ParseError(ScenarioError):
    """Scenario file could not be parsed at all."""


class ValidationError(ScenarioError):
    """Scenario content is invalid; names the offending field."""

    def __init__(self, field: str, msg: str):
        super().__init__(f"{field}: {msg}")
        self.field = field
