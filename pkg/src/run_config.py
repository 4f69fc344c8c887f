"""
Copyright 2022 NOAA
All rights reserved.

Run configuration shared by all cmera requests.  A request is a dict (or a
YAML/JSON file) carrying 'cmera_request_name', an optional
'schema_version', the model mass and one section per subcommand.  Missing
values fall back to module defaults; output_dir and seed fall back to the
CMERA_OUTPUT_DIR and CMERA_SEED environment variables (a local .env file is
honored).

"""
from dataclasses import dataclass, field
import os

from dotenv import load_dotenv
import numpy as np

from core_model import ModelParams

load_dotenv()

SCHEMA_VERSION = 1
DEFAULT_MASS = 3.0 / 16.0
DEFAULT_OUTPUT_DIR = 'cmera_output'
DEFAULT_SEED = 0
MAX_SEED = 2**64 - 1

SCENARIO_FLOW = 'flow'
SCENARIO_CHERN = 'chern'
SCENARIO_KERNEL = 'kernel'
SCENARIO_SCHEME = 'scheme'
SCENARIO_IRPREP = 'irprep'
SCENARIO_REPRO = 'repro'

VALID_SCENARIOS = [
    SCENARIO_FLOW,
    SCENARIO_CHERN,
    SCENARIO_KERNEL,
    SCENARIO_SCHEME,
    SCENARIO_IRPREP,
    SCENARIO_REPRO
]

VALID_SECTIONS = ['model', 'flow', 'chern', 'kernel', 'scheme', 'irprep']
VALID_TOP_LEVEL_KEYS = [
    'cmera_request_name',
    'schema_version',
    'tolerances',
    'output_dir',
    'seed'
] + VALID_SECTIONS

DEFAULT_TOLERANCES = {
    'flow_fidelity': 1e-8,
    'flow_norm_drift': 1e-9,
    'boundary_identity': 1e-8,
    'phi_endpoint': 1e-8,
    'partial_fraction': 1e-12,
    'chern_radial': 1e-6,
    'chern_plaquette': 1e-3,
    'chern_flow': 1e-4,
    'chern_ir': 1e-9,
    'weight_radius': 0.02,
    'kernel_scaling': 0.02,
    'hankel_match': 1e-6,
    'asymptotic_dominance': 1e-3,
    'selection_rule': 1e-12,
    'display_match': 1e-12,
    'infidelity_slope': 0.3,
    'mapped_coupling': 0.05,
    'effective_infidelity': 1e-2,
    'stark_residual': 1e-3,
    'assumption_margin': 10.0,
    'overlap': 1e-10,
    'preparation': 1e-4,
    'inner_preparation': 1e-10
}


class ConfigFieldError(ValueError):
    ''' invalid configuration value; field_name is the dotted key '''

    def __init__(self, field_name, message):
        super().__init__(message)
        self.field_name = field_name


def env_output_dir():
    return os.getenv('CMERA_OUTPUT_DIR', DEFAULT_OUTPUT_DIR)


def env_seed():
    value = os.getenv('CMERA_SEED')
    if value is None:
        return DEFAULT_SEED
    try:
        return int(value)
    except ValueError as err:
        msg = f'CMERA_SEED must be an integer, actually: {value}'
        raise ConfigFieldError('seed', msg) from err


def validate_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, int):
        msg = f'seed must be an integer, actually: {type(seed)}'
        raise ConfigFieldError('seed', msg)
    if not 0 <= seed <= MAX_SEED:
        msg = f'seed must be an unsigned 64 bit integer, actually: {seed}'
        raise ConfigFieldError('seed', msg)
    return seed


def validate_tolerances(tolerances):
    if tolerances is None:
        return dict(DEFAULT_TOLERANCES)
    if not isinstance(tolerances, dict):
        msg = f'tolerances must be a mapping, actually: {type(tolerances)}'
        raise ConfigFieldError('tolerances', msg)
    merged = dict(DEFAULT_TOLERANCES)
    for key, value in tolerances.items():
        if key not in DEFAULT_TOLERANCES:
            msg = f'unknown tolerance \'{key}\', valid: ' \
                f'{sorted(DEFAULT_TOLERANCES)}'
            raise ConfigFieldError(f'tolerances.{key}', msg)
        if isinstance(value, bool) or not isinstance(value, (int, float)) \
                or not np.isfinite(value) or value <= 0:
            msg = f'tolerance \'{key}\' must be a positive number, ' \
                f'actually: {value}'
            raise ConfigFieldError(f'tolerances.{key}', msg)
        merged[key] = float(value)
    return merged


@dataclass
class RunConfig:
    """
    Validated run configuration.

    Parameters
    ----------
    config_dict: dict - the parsed request, for example
        {
            'cmera_request_name': 'chern',
            'schema_version': 1,
            'model': {'m': 0.1875},
            'chern': {'scales': [0.0, -1.0]},
            'output_dir': 'results'
        }
    """
    config_dict: dict
    scenario: str = field(default_factory=str, init=False)
    params: ModelParams = field(default=None, init=False)
    tolerances: dict = field(default_factory=dict, init=False)
    output_dir: str = field(default_factory=str, init=False)
    seed: int = field(default=DEFAULT_SEED, init=False)

    def __post_init__(self):
        if not isinstance(self.config_dict, dict):
            msg = f'config must be a mapping, actually: ' \
                f'{type(self.config_dict)}'
            raise TypeError(msg)

        unknown = [
            key for key in self.config_dict if key not in VALID_TOP_LEVEL_KEYS
        ]
        if unknown:
            msg = f'unknown config keys: {unknown}, valid: ' \
                f'{VALID_TOP_LEVEL_KEYS}'
            raise ConfigFieldError(unknown[0], msg)

        version = self.config_dict.get('schema_version', SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            msg = f'unsupported schema_version: {version}, ' \
                f'expected: {SCHEMA_VERSION}'
            raise ConfigFieldError('schema_version', msg)

        self.scenario = self.config_dict.get('cmera_request_name')
        if self.scenario not in VALID_SCENARIOS:
            msg = f'cmera_request_name must be one of: {VALID_SCENARIOS}, ' \
                f'actually: {self.scenario}'
            raise ConfigFieldError('cmera_request_name', msg)

        model = self.section('model', {'m': DEFAULT_MASS})
        try:
            self.params = ModelParams(model['m'])
        except (TypeError, ValueError) as err:
            raise ConfigFieldError('model.m', str(err)) from err

        self.tolerances = validate_tolerances(
            self.config_dict.get('tolerances'))

        self.output_dir = self.config_dict.get('output_dir', env_output_dir())
        if not isinstance(self.output_dir, str) or not self.output_dir:
            msg = f'output_dir must be a non-empty string, actually: ' \
                f'{self.output_dir}'
            raise ConfigFieldError('output_dir', msg)

        seed = self.config_dict.get('seed')
        self.seed = validate_seed(env_seed() if seed is None else seed)

    def section(self, name, defaults):
        ''' section values merged over defaults; unknown keys rejected '''
        values = self.config_dict.get(name)
        if values is None:
            return dict(defaults)
        if not isinstance(values, dict):
            msg = f'section \'{name}\' must be a mapping, actually: ' \
                f'{type(values)}'
            raise ConfigFieldError(name, msg)
        merged = dict(defaults)
        for key, value in values.items():
            if key not in defaults:
                msg = f'unknown key \'{key}\' in section \'{name}\', ' \
                    f'valid: {sorted(defaults)}'
                raise ConfigFieldError(f'{name}.{key}', msg)
            merged[key] = value
        return merged

    def tolerance(self, name):
        return self.tolerances[name]

    def rng(self):
        return np.random.default_rng(self.seed)


def positive_number(section, key, value):
    ''' return value as float or raise ConfigFieldError naming section.key '''
    if isinstance(value, bool) or not isinstance(value, (int, float)) \
            or not np.isfinite(value) or value <= 0:
        msg = f'{section}.{key} must be a positive number, actually: {value}'
        raise ConfigFieldError(f'{section}.{key}', msg)
    return float(value)


def positive_int(section, key, value):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        msg = f'{section}.{key} must be a positive integer, actually: {value}'
        raise ConfigFieldError(f'{section}.{key}', msg)
    return value


def scale_list(section, key, value):
    ''' list of scales u <= 0 '''
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        msg = f'{section}.{key} must be a non-empty list, actually: {value}'
        raise ConfigFieldError(f'{section}.{key}', msg)
    scales = []
    for item in value:
        if isinstance(item, bool) or not isinstance(item, (int, float)) \
                or not np.isfinite(item) or item > 0:
            msg = f'{section}.{key} entries must be real and <= 0, ' \
                f'actually: {item}'
            raise ConfigFieldError(f'{section}.{key}', msg)
        scales.append(float(item))
    return scales


def positive_window(section, key, value):
    ''' [low, high] with 0 < low < high '''
    msg = f'{section}.{key} must be [low, high] with 0 < low < high, ' \
        f'actually: {value}'
    if not isinstance(value, (list, tuple)) or len(value) != 2 \
            or any(isinstance(item, bool)
                   or not isinstance(item, (int, float)) for item in value):
        raise ConfigFieldError(f'{section}.{key}', msg)
    if not 0.0 < float(value[0]) < float(value[1]) \
            or not np.isfinite(value[1]):
        raise ConfigFieldError(f'{section}.{key}', msg)
    return float(value[0]), float(value[1])
