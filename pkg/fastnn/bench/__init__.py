from fastnn.bench.heatdata import export_theta_heatdata
from fastnn.bench.metrics import eval_mse, eval_r2_oos, r2_oos
from fastnn.bench.plans import ESTIMATORS, EXPERIMENTS, ExperimentPlan, desk_plan, full_plan
from fastnn.bench.runner import TrialRecord, records_frame, run_experiment, summarize

__all__ = [
    "ESTIMATORS",
    "EXPERIMENTS",
    "ExperimentPlan",
    "TrialRecord",
    "desk_plan",
    "eval_mse",
    "eval_r2_oos",
    "export_theta_heatdata",
    "full_plan",
    "r2_oos",
    "records_frame",
    "run_experiment",
    "summarize",
]
