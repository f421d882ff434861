"""
Strict request models for the command-line surface.

Unknown keys are rejected everywhere; "lambda" is accepted as the alias of
the `lam` field.
"""
from typing import Any, Dict, List, Literal, Optional, Type

from pydantic import BaseModel, ConfigDict, Field, model_validator


class StrictModel(BaseModel):
    model_config = ConfigDict(extra='forbid', populate_by_name=True)


class ClassifyParams(StrictModel):
    """Constant-coefficient equation x' = a0 x + b0 x(t0 + lam (t - t0)) + h0."""
    a0: float
    b0: float
    lam: float = Field(alias='lambda')
    y0: float
    t0: float = 0.0
    h0: float = 0.0
    N: int = Field(512, ge=8)
    series_order: int = Field(30, ge=1)
    tol_zero: float = Field(1e-8, gt=0)
    tol_nonzero: float = Field(1e-6, gt=0)
    decompose: bool = False


class KoenigsParams(StrictModel):
    """Conjugacy of the sine family t + (lam - 1) sin t at 0."""
    lam: float = Field(alias='lambda')
    N: int = Field(30, ge=1)
    method: Literal['series', 'zeta'] = 'series'
    iters: int = Field(60, ge=1)
    lam_floor: float = 10.0


class EigenParams(StrictModel):
    """Either a constant delay r0 or the sine delay (lam, m); rho is 1 or 1/r."""
    r0: Optional[float] = Field(None, gt=0)
    lam: Optional[float] = Field(None, alias='lambda')
    m: int = 2
    rho: Literal['one', 'reciprocal'] = 'one'
    G: int = 2048
    tol: float = Field(1e-10, gt=0)
    max_iter: int = Field(20000, ge=1)

    @model_validator(mode='after')
    def _one_delay(self) -> 'EigenParams':
        if (self.r0 is None) == (self.lam is None):
            raise ValueError("give exactly one of r0 and lambda")
        return self


class CoexistParams(StrictModel):
    lam: float = Field(alias='lambda')
    m: int = 2
    n: int = 1
    G: int = 2048
    N: int = Field(512, ge=8)
    eigen_tol: float = Field(1e-10, gt=0)
    eigen_max_iter: int = Field(20000, ge=1)
    fixed_point_grid: int = Field(4096, ge=16)
    control: bool = False


class StepsParams(StrictModel):
    """Constant-coefficient form y' = a0 y + b0 y(lam t) + gamma0 on [-tau, tau]."""
    a0: float
    b0: float
    lam: float = Field(alias='lambda')
    y0: float
    tau: float = Field(0.2, gt=0)
    gamma0: float = 0.0
    depth: int = Field(40, ge=1)
    steps_per_layer: int = Field(64, ge=4)
    n_max: int = Field(3, ge=0, le=5)


class RotationParams(StrictModel):
    """Rigid rotation t + c (period p) or the sine family t + (lam - 1) sin t + offset."""
    kind: Literal['rigid', 'sine'] = 'rigid'
    c: float = 0.0
    lam: float = Field(2.0, alias='lambda')
    offset: float = 0.0
    period: Optional[float] = Field(None, gt=0)
    t0: float = 0.0
    n_iter: int = Field(10000, ge=100)
    check_monotone: bool = True


class PnParams(StrictModel):
    n: int = Field(ge=0)
    style: Literal['ascii', 'zeta'] = 'ascii'
    cap: int = Field(8, ge=0)


COMMAND_MODELS: Dict[str, Type[StrictModel]] = {
    'classify': ClassifyParams,
    'koenigs': KoenigsParams,
    'eigen': EigenParams,
    'coexist': CoexistParams,
    'steps': StepsParams,
    'rotation': RotationParams,
    'pn': PnParams,
}

# numerics config key feeding each command field when neither file nor flag sets it
CONFIG_DEFAULTS: Dict[str, Dict[str, str]] = {
    'classify': {'N': 'w_order', 'series_order': 'koenigs_order',
                 'tol_zero': 'tol_zero', 'tol_nonzero': 'tol_nonzero'},
    'koenigs': {'N': 'koenigs_order', 'lam_floor': 'zeta_lambda_floor'},
    'eigen': {'G': 'eigen_grid', 'tol': 'eigen_tol', 'max_iter': 'eigen_max_iter'},
    'coexist': {'G': 'eigen_grid', 'N': 'w_order', 'eigen_tol': 'eigen_tol',
                'eigen_max_iter': 'eigen_max_iter', 'fixed_point_grid': 'fixed_point_grid'},
    'steps': {'depth': 'step_depth', 'steps_per_layer': 'steps_per_layer'},
    'rotation': {},
    'pn': {'cap': 'pn_cap'},
}


class RunConfig(StrictModel):
    """One command with its parameters; `params` is validated by the command's model."""
    command: Literal['classify', 'koenigs', 'eigen', 'coexist', 'steps', 'rotation', 'pn']
    params: Dict[str, Any] = Field(default_factory=dict)
    output_dir: Optional[str] = None

    def parsed(self, numerics: Optional[Dict[str, Any]] = None) -> StrictModel:
        return build_params(self.command, self.params, numerics)


class SweepFile(StrictModel):
    runs: List[RunConfig]


def build_params(command: str, params: Dict[str, Any],
                 numerics: Optional[Dict[str, Any]] = None) -> StrictModel:
    """Config numerics under `params`, validated by the command model."""
    model = COMMAND_MODELS[command]
    params = dict(params)
    if "lam" in params:
        params["lambda"] = params.pop("lam")
    merged: Dict[str, Any] = {}
    for field_name, key in CONFIG_DEFAULTS[command].items():
        if numerics and key in numerics:
            merged[field_name] = numerics[key]
    merged.update(params)
    return model.model_validate(merged)
