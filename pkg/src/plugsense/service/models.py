"""Request/response schemas for the service endpoints."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..features import DEFAULT_VIEWS

ViewName = Literal["mean_power", "mac", "mad", "mahd", "sd"]


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    preset: str = "user17"
    days: int = Field(default=30, ge=1)
    seed: int = 0
    out_dir: str
    sensors: bool = False
    sensor_noise: Literal["default", "clean"] = "default"


class SimulateResponse(BaseModel):
    trace_csv: str
    truth_csv: str
    manifest_json: str
    n_samples: int
    n_windows: int
    ultrasonic_csv: Optional[str] = None
    accel_csv: Optional[str] = None
    wifi_csv: Optional[str] = None


class ExtractRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    trace_csv: str
    out_csv: str
    window_seconds: int = Field(default=60, ge=2)
    stride_seconds: Optional[int] = Field(default=None, ge=1)
    views: list[ViewName] = Field(default_factory=lambda: list(DEFAULT_VIEWS))


class ExtractResponse(BaseModel):
    features_csv: str
    n_windows: int
    views: list[str]


class TrainRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    trace_csv: Optional[str] = None
    features_csv: Optional[str] = None
    out_dir: str
    user: str = ""
    schedule: str = "9-20"
    views: list[ViewName] = Field(default_factory=lambda: list(DEFAULT_VIEWS))
    window_seconds: int = Field(default=60, ge=2)
    alpha1: float = Field(default=0.5, ge=0.0, le=1.0)
    alpha2: float = Field(default=0.5, ge=0.0, le=1.0)
    max_iter: int = Field(default=30, ge=1)
    epsilon_grid_step: float = Field(default=0.005, gt=0.0, le=0.1)
    seed: int = 0
    rate_search: bool = False
    stop_on_negative_phi: bool = True
    sample_unlabeled: bool = True

    @model_validator(mode="after")
    def _one_source(self):
        if (self.trace_csv is None) == (self.features_csv is None):
            raise ValueError("provide exactly one of trace_csv or features_csv")
        return self


class TrainResponse(BaseModel):
    presence_csv: str
    diagnostics_csv: str
    manifest_json: str
    iterations: int
    best_iteration: int
    stop_reason: str
    final_alpha1: float
    final_alpha2: float


class BaselineRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    trace_csv: str
    truth_csv: str
    out_dir: str
    kind: Literal["absolute", "change", "percentage"] = "absolute"
    window_seconds: int = Field(default=60, ge=2)
    schedule: str = "9-20"  # sets the transition models' initial state
    grid_step: Optional[float] = Field(default=None, gt=0.0)
    grid_max: Optional[float] = Field(default=None, gt=0.0)


class BaselineResponse(BaseModel):
    presence_csv: str
    kind: str
    threshold: float
    train_accuracy: float
    absence: float
    presence: float
    overall: float


class SensorsRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    out_dir: str
    ultrasonic_csv: Optional[str] = None
    accel_csv: Optional[str] = None
    wifi_csv: Optional[str] = None
    absence_intervals: list[tuple[float, Optional[float]]] = Field(
        default_factory=lambda: [(2.0, None)]  # None = unbounded above
    )
    theta: float = Field(default=0.03, gt=0.0)
    delta: float = Field(default=3600.0, gt=0.0)
    accel_window_seconds: int = Field(default=60, ge=2)

    @model_validator(mode="after")
    def _any_source(self):
        if not (self.ultrasonic_csv or self.accel_csv or self.wifi_csv):
            raise ValueError("provide at least one sensor CSV")
        return self


class SensorsResponse(BaseModel):
    ultrasonic_presence_csv: Optional[str] = None
    accel_presence_csv: Optional[str] = None
    wifi_presence_csv: Optional[str] = None


class EvalRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    pred_csv: str
    truth_csv: str
    user: str = ""
    model: str = ""
    out_json: Optional[str] = None
    hourly: bool = False


class EvalResponse(BaseModel):
    user: str
    model: str
    absence: float
    presence: float
    overall: float
    absence_defined: bool
    presence_defined: bool
    metrics_json: Optional[str] = None
    hourly_absence: Optional[list[Optional[float]]] = None


class ErrorDetail(BaseModel):
    kind: Literal["usage", "data", "algorithm"]
    message: str
