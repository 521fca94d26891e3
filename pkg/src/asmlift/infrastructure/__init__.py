from asmlift.infrastructure.artifact_store import ArtifactStore
from asmlift.infrastructure.solver_gateway import SolverAnswer, SolverGateway, SolverUnavailable

__all__ = ["ArtifactStore", "SolverAnswer", "SolverGateway", "SolverUnavailable"]
