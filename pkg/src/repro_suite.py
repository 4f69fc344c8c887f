"""
Copyright 2022 NOAA
All rights reserved.

Full acceptance suite: every scenario request run from one configuration
with the criteria gathered into a single table.

"""
from dataclasses import dataclass, field

from cmera_action_response import CriterionResult, build_response
from flow_engine import FlowRequest
from ir_prep import IrPrepRequest
from kernel_analysis import KernelRequest
from laser_mapping import SchemeRequest
from run_config import RunConfig
from run_config import SCENARIO_CHERN, SCENARIO_FLOW, SCENARIO_IRPREP
from run_config import SCENARIO_KERNEL, SCENARIO_SCHEME
from topology import ChernRequest

SUITE = [
    (SCENARIO_FLOW, FlowRequest),
    (SCENARIO_CHERN, ChernRequest),
    (SCENARIO_KERNEL, KernelRequest),
    (SCENARIO_SCHEME, SchemeRequest),
    (SCENARIO_IRPREP, IrPrepRequest)
]


def scenario_config(config_dict, scenario):
    ''' copy of the suite config addressed to one scenario '''
    values = dict(config_dict)
    values['cmera_request_name'] = scenario
    return values


@dataclass
class ReproRequest:
    """
    Run flow, chern, kernel, scheme and irprep in order.  Every member
    request is built up front so a bad section fails before any work starts.
    """
    config_dict: dict
    run_config: RunConfig = field(default=None, init=False)
    requests: list = field(default_factory=list, init=False)

    def __post_init__(self):
        self.run_config = RunConfig(self.config_dict)
        self.requests = [
            (scenario, request(scenario_config(self.config_dict, scenario)))
            for scenario, request in SUITE
        ]

    def evaluate(self):
        ''' run every member request, return (criteria, paths) '''
        criteria = []
        artifacts = []
        errors = []
        for scenario, request in self.requests:
            print(f'repro: running {scenario}')
            response = request.submit()
            criteria.extend(
                CriterionResult(f'{scenario}.{row["name"]}', row['value'],
                                row['threshold'], row['passed'])
                for row in response.details['criteria']
            )
            artifacts.extend(response.details['artifacts'])
            if response.errors is not None:
                errors.append(f'{scenario}: {response.errors}')
        return criteria, artifacts, errors

    def submit(self):
        criteria, artifacts, errors = self.evaluate()
        error_msg = '; '.join(errors) if errors else None
        response = build_response(self.config_dict, criteria, artifacts,
                                  error_msg)
        print(f'response: {response.message}')
        return response
