"""Request/response models shared by the HTTP service and the CLI client."""
from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class BundleModel(BaseModel):
    domain_text: str
    seeker_text: str
    preventer_text: str
    candidate_lines: List[str]
    truth_index: Optional[int] = None
    name: str = "bundle"


class BudgetModel(BaseModel):
    max_nodes: int = 1_000_000
    max_seconds: float = 600.0


class GenerateRequest(BaseModel):
    domain: str = "police-control"
    seed: int = 0
    grid_side: int = 8
    obstacle_fraction: float = 0.25
    booths: int = 10
    candidate_goals: int = 3
    blocks: int = 8
    rooms: int = 5
    words: int = 5
    word_min: int = 3
    word_max: int = 6


class GenerateResponse(BaseModel):
    bundle: BundleModel


class EpisodeRequest(BaseModel):
    bundle: BundleModel
    algorithm: str = "adicp"
    strategy: str = "closest-to-seek"
    seed: int = 0
    budget: BudgetModel = Field(default_factory=BudgetModel)


class MetricsModel(BaseModel):
    E: float
    ratio_seek: Optional[float] = None
    len_prev: Optional[int] = None
    ratio_anticipatory: Optional[float] = None
    time_avg_s: float
    valid: Optional[bool] = None
    status: str


class EpisodeResponse(BaseModel):
    seeker_plan: List[str]
    prev_plan: List[str]
    anticipatory_prefix: List[str]
    counterplan: Optional[List[str]]
    stopped: bool
    metrics: MetricsModel
    trace_jsonl: str


class SuiteRequest(BaseModel):
    domains: List[str] = Field(default_factory=lambda: ["police-control"])
    algorithms: List[str] = Field(
        default_factory=lambda: ["dicp", "adicp", "random-adicp", "random-goal-adicp"])
    n_tasks: int = 50
    seed: int = 0
    strategy: str = "closest-to-seek"
    grid_side: int = 8
    obstacle_fraction: float = 0.25
    booths: int = 10
    candidate_goals: int = 3
    blocks: int = 8
    rooms: int = 5
    words: int = 5
    word_min: int = 3
    word_max: int = 6
    budget: BudgetModel = Field(default_factory=lambda: BudgetModel(max_nodes=300_000))
    workers: Optional[int] = None


class AggregateCell(BaseModel):
    mean: Optional[float]
    std: Optional[float]
    n: int


class SuiteResultRow(BaseModel):
    domain: str
    algorithm: str
    metrics: Dict[str, AggregateCell]


class SuiteResponse(BaseModel):
    results: List[SuiteResultRow]
    failures: Dict[str, int]
    episode_csv: str
    markdown: str


class ValidateRequest(BaseModel):
    bundle: BundleModel
    plan_text: str
    budget: BudgetModel = Field(default_factory=BudgetModel)
    # candidate indices the counterplan must block; None = all of them
    goals: Optional[List[int]] = None


class ValidateResponse(BaseModel):
    valid: Optional[bool]   # None = indeterminate (budget exhausted)
    detail: str


class HealthResponse(BaseModel):
    status: str
    version: str
