"""
Copyright 2022 NOAA
All rights reserved.

Response returned by every cmera request plus the per-criterion rows that
make up report.json

"""
from collections import namedtuple
from dataclasses import dataclass


CriterionResult = namedtuple(
    'CriterionResult',
    [
        'name',
        'value',
        'threshold',
        'passed'
    ],
)


def at_most(name, value, threshold):
    ''' criterion that passes when value <= threshold '''
    value = float(value)
    return CriterionResult(name, value, float(threshold), bool(value <= threshold))


def at_least(name, value, threshold):
    ''' criterion that passes when value >= threshold '''
    value = float(value)
    return CriterionResult(name, value, float(threshold), bool(value >= threshold))


@dataclass
class CmeraActionResponse:
    request: dict
    success: bool
    message: str
    details: dict
    errors: str


def build_response(request_dict, criteria, artifacts, error_msg=None):
    passed = [row.passed for row in criteria]
    failed = [row.name for row in criteria if not row.passed]
    if error_msg is None:
        message = f'{passed.count(True)} of {len(passed)} criteria passed'
        if failed:
            message += f', failed: {failed}'
    else:
        message = 'request did not complete'
    return CmeraActionResponse(
        request_dict,
        error_msg is None and not failed,
        message,
        {
            'criteria': [row._asdict() for row in criteria],
            'artifacts': sorted(artifacts)
        },
        error_msg
    )
