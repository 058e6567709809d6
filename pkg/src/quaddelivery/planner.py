"""Instance -> model -> branch-and-bound -> validated route plan."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .bnb import MipSolution, branch_and_bound
from .milp import MilpModel, build_model
from .pdp import PdpInstance
from .routes import RoutePlan, ValidationReport, extract_routes, validate_plan
from .simplex import OPTIMAL, Tolerances


@dataclass
class PlanResult:
    status: str
    model: MilpModel
    mip: MipSolution
    plan: Optional[RoutePlan] = None
    report: Optional[ValidationReport] = None

    @property
    def makespan(self) -> Optional[float]:
        return None if self.plan is None else self.plan.makespan


class InvalidPlan(RuntimeError):
    def __init__(self, report: ValidationReport):
        super().__init__("; ".join(v.message for v in report.violations))
        self.report = report


def plan_instance(inst: PdpInstance, with_cuts: bool = True, tol: Tolerances = Tolerances(),
                  node_limit: Optional[int] = None) -> PlanResult:
    model = build_model(inst, with_cuts=with_cuts)
    mip = branch_and_bound(model, tol, node_limit=node_limit)
    if mip.status != OPTIMAL:
        return PlanResult(mip.status, model, mip)
    plan = extract_routes(inst, mip, model.layout)
    report = validate_plan(inst, plan)
    if not report.ok:
        raise InvalidPlan(report)
    return PlanResult(OPTIMAL, model, mip, plan, report)
