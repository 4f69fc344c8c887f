"""
Copyright 2022 NOAA
All rights reserved.

Request handler registrations.  Each scenario name maps to the request
dataclass that validates its configuration and runs it through submit().

"""
from collections import namedtuple

from cmera_action_response import CmeraActionResponse
from flow_engine import FlowRequest
from ir_prep import IrPrepRequest
from kernel_analysis import KernelRequest
from laser_mapping import SchemeRequest
from repro_suite import ReproRequest
import run_config
from topology import ChernRequest


RequestHandler = namedtuple(
    'RequestHandler',
    [
        'description',
        'request',
        'result'
    ],
)

request_registry = {
    run_config.SCENARIO_FLOW: RequestHandler(
        'Integrate the flow and compare with the closed-form state',
        FlowRequest,
        CmeraActionResponse
    ),
    run_config.SCENARIO_CHERN: RequestHandler(
        'Chern number by radial integration and plaquette sums',
        ChernRequest,
        CmeraActionResponse
    ),
    run_config.SCENARIO_KERNEL: RequestHandler(
        'Real-space kernel profiles and decay-length fits',
        KernelRequest,
        CmeraActionResponse
    ),
    run_config.SCENARIO_SCHEME: RequestHandler(
        'Atomic scheme reduction, laser mapping and evolution checks',
        SchemeRequest,
        CmeraActionResponse
    ),
    run_config.SCENARIO_IRPREP: RequestHandler(
        'Momentum selection rule and near-IR state preparation',
        IrPrepRequest,
        CmeraActionResponse
    ),
    run_config.SCENARIO_REPRO: RequestHandler(
        'Run every scenario as one acceptance suite',
        ReproRequest,
        CmeraActionResponse
    ),
}
