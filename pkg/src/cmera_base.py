"""
Copyright 2022 NOAA
All rights reserved.

Collection of methods to dispatch cmera requests and the command line
entry point.  Exit status is 0 when every criterion passes, 1 when a
criterion fails or a run aborts, and 2 for an invalid configuration.

"""
import argparse
import sys

from yaml_utils import YamlLoader
import cmera_request_registry as crr
import file_utils
from run_config import ConfigFieldError, RunConfig

EXIT_SUCCESS = 0
EXIT_FAILED_CRITERIA = 1
EXIT_INVALID_CONFIG = 2

REPORT_FILE = 'report.json'


def load_request(request_info):
    ''' request dict from either a dict or a YAML/JSON file '''
    if isinstance(request_info, dict):
        return request_info
    file_utils.is_valid_readable_file(request_info)
    return YamlLoader(request_info).load()[0]


def build_request(request_dict):
    """
    Look up the handler named by 'cmera_request_name' and build (validate)
    its request without running it.
    """
    request_name = request_dict.get('cmera_request_name')
    print(f'cmera_request_name: {request_name}')
    handler = crr.request_registry.get(request_name)
    if handler is None:
        msg = f'unknown cmera_request_name: {request_name}, valid: ' \
            f'{sorted(crr.request_registry)}'
        raise ConfigFieldError('cmera_request_name', msg)
    print(f'request handler: {handler.description}')
    return handler.request(request_dict)


def handle_request(request_info):
    """
    Gets a cmera request as either a YAML/JSON file or dict and returns
    the response of the request

    Parameters
    ----------
    request_info: dict or str
        The dict or request file naming the scenario and its settings

    Returns
    -------
    response: CmeraActionResponse
    """
    request_dict = load_request(request_info)
    print(f'request_dict: {request_dict}')
    return build_request(request_dict).submit()


def error_payload(err):
    return {
        'error': str(err),
        'field': getattr(err, 'field_name', None),
        'type': type(err).__name__
    }


def failure_payload(response):
    ''' error JSON for a request that stopped during evaluation '''
    return {
        'error': response.errors,
        'field': None,
        'type': 'RequestError'
    }


def report_payload(response):
    return {
        'scenario': response.request.get('cmera_request_name'),
        'success': response.success,
        'message': response.message,
        'criteria': response.details['criteria'],
        'artifacts': response.details['artifacts'],
        'errors': response.errors
    }


def apply_overrides(request_dict, args):
    ''' command line flags take precedence over the request file '''
    values = dict(request_dict)
    if args.scenario is not None:
        values['cmera_request_name'] = args.scenario
    if args.out is not None:
        values['output_dir'] = args.out
    if args.seed is not None:
        values['seed'] = args.seed
    return values


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        prog='cmera-sim',
        description='cMERA Chern insulator simulations and checks.')
    parser.add_argument('--config', type=str, default=None,
                        help='YAML or JSON request file.')
    parser.add_argument('--out', type=str, default=None,
                        help='Output directory for CSV/JSON artifacts.')
    parser.add_argument('--seed', type=int, default=None,
                        help='Unsigned 64 bit seed for every random draw.')
    parser.add_argument('--scenario', type=str, default=None,
                        help=f'One of: {sorted(crr.request_registry)}.')
    return parser.parse_args(argv)


# --------------------------------------------------------------------------------------------------


def main(argv=None):
    """
    Command line entry point.

    Parameters
    ----------
    argv: list of str, defaults to sys.argv[1:]

    Returns
    -------
    exit status: 0 success, 1 failed criteria, 2 invalid configuration
    """
    args = parse_args(argv)
    try:
        request_dict = {} if args.config is None \
            else load_request(args.config)
        request_dict = apply_overrides(request_dict, args)
        request = build_request(request_dict)
        output_dir = RunConfig(request_dict).output_dir
    except (ValueError, TypeError, KeyError) as err:
        print(file_utils.to_json_text(error_payload(err)), end='')
        return EXIT_INVALID_CONFIG

    try:
        response = request.submit()
    except (ValueError, RuntimeError, ArithmeticError) as err:
        print(file_utils.to_json_text(error_payload(err)), end='')
        return EXIT_FAILED_CRITERIA
    file_utils.write_json(report_payload(response), output_dir, REPORT_FILE)
    if response.errors is not None:
        print(file_utils.to_json_text(failure_payload(response)), end='')
    if not response.success:
        return EXIT_FAILED_CRITERIA
    return EXIT_SUCCESS


# --------------------------------------------------------------------------------------------------


if __name__ == "__main__":
    sys.exit(main())
