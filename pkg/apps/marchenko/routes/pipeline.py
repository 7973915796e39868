import logging
from typing import List

import pandas as pd
from fastapi import APIRouter, HTTPException, status
from fastapi.concurrency import run_in_threadpool

from apps.marchenko.config import RunConfig, load_run_config
from apps.marchenko.models import BoundState, PhaseShiftSample
from apps.marchenko.schemas import BoundStateRow, CommandResponse, PhaseShiftRow, ReconstructRequest, RunRequest
from apps.marchenko.services import pipeline
from apps.marchenko.services.scatdata import samples_from_frame
from common.exceptions import ConfigError, MarchenkoError

logger = logging.getLogger(__name__)

router = APIRouter()


def _resolve_config(request: RunRequest) -> RunConfig:
    try:
        return load_run_config(overrides=request.config)
    except ConfigError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=e.to_dict())


def _samples(rows: List[PhaseShiftRow], config: RunConfig) -> List[PhaseShiftSample]:
    frame = pd.DataFrame([row.model_dump(exclude_none=True) for row in rows])
    return samples_from_frame(frame, config.kinematics)


def _bound_states(rows: List[BoundStateRow]) -> List[BoundState]:
    return [BoundState(kappa=row.kappa_invfm, m2=row.M2_invfm) for row in rows]


async def _run(call, *args) -> CommandResponse:
    try:
        result = await run_in_threadpool(call, *args)
    except MarchenkoError as e:
        logger.warning("Request failed: %s", e)
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=e.to_dict())
    return CommandResponse(report=result.report.model_dump(mode="json", by_alias=True), artifacts=result.artifacts)


@router.post("/forward", response_model=CommandResponse)
async def forward(request: RunRequest):
    """
    Forward scan of an analytic potential

    - **config**: run keys such as potential_kind, v0_re, v0_im, a, width, q_min, q_max, q_step
    """
    config = _resolve_config(request)
    if config.potential_kind == "tabulated":
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail="tabulated potentials are read from files; use the command line",
        )
    return await _run(pipeline.cmd_forward, config)


@router.post("/reconstruct", response_model=CommandResponse)
async def reconstruct(request: ReconstructRequest):
    """
    Reconstruct a potential from an uploaded phase-shift table

    - **phase_shifts**: rows with q_invfm or Tlab_MeV, delta_deg and optional rho_deg
    - **bound_states**: optional rows with kappa_invfm and M2_invfm
    - **config**: run keys such as h, R, mode, tail_mode
    """
    config = _resolve_config(request)
    try:
        samples = _samples(request.phase_shifts, config)
        states = _bound_states(request.bound_states)
    except MarchenkoError as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=e.to_dict())
    return await _run(pipeline.cmd_reconstruct, config, samples, states, "upload")


@router.post("/roundtrip", response_model=CommandResponse)
async def roundtrip(request: RunRequest):
    """Forward scan, reconstruction and comparison for an analytic potential"""
    config = _resolve_config(request)
    if config.potential_kind == "tabulated":
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail="roundtrip needs an analytic potential")
    return await _run(pipeline.cmd_roundtrip, config)


@router.post("/fit-tail", response_model=CommandResponse)
async def fit_tail(request: ReconstructRequest):
    """Least-squares c1/q + c2/q^2 + c3/q^3 fit of the uploaded table"""
    config = _resolve_config(request)
    try:
        samples = _samples(request.phase_shifts, config)
    except MarchenkoError as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=e.to_dict())
    return await _run(pipeline.cmd_fit_tail, config, samples)
