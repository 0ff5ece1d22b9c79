"""Solver configuration and per-iteration diagnostics shared by the ADMM solvers."""
import dataclasses
from dataclasses import dataclass, field


@dataclass(frozen=True)
class AdmmConfig:
    """Parameters of an ADMM run.

    ``lambda_s`` weights spatial TV (first two modes), ``lambda_t`` weights
    spectral TV (third mode for denoising, endmember differences for NMF-TV).
    Tolerances are relative; each solver documents its own scaling.
    """

    rho: float = 10.0
    lambda_s: float = 0.0
    lambda_t: float = 0.0
    max_iters: int = 500
    tol_primal: float = 1e-4
    tol_dual: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if self.lambda_s < 0 or self.lambda_t < 0:
            raise ValueError("TV weights must be >= 0")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters}")
        if self.tol_primal < 0 or self.tol_dual < 0:
            raise ValueError("tolerances must be >= 0")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class SolveDiagnostics:
    """Objective and residual history of one solve."""

    objective: list = field(default_factory=list)
    primal_res: list = field(default_factory=list)
    dual_res: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def record(self, objective, primal, dual):
        self.objective.append(float(objective))
        self.primal_res.append(float(primal))
        self.dual_res.append(float(dual))
        self.iterations = len(self.objective)

    def to_records(self):
        """Rows ``{iteration, objective, primal_res, dual_res}`` for JSON output."""
        return [
            {"iteration": i + 1, "objective": f, "primal_res": p, "dual_res": d}
            for i, (f, p, d) in enumerate(zip(self.objective, self.primal_res, self.dual_res))
        ]
