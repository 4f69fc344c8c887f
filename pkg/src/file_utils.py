"""
Copyright 2022 NOAA
All rights reserved.

Collection of methods to facilitate file retrieval and artifact output.
CSV and JSON artifacts carry no timestamps so repeated runs with the same
config are byte-identical.

"""
import json
import os
from pathlib import Path
import re

import numpy as np

CSV_FLOAT_FORMAT = '%.12e'
JSON_INDENT = 2


def is_valid_readable_file(filepath):
    """
    Method to ensure that the filename/path is valid, exists, contains data,
    and the user has sufficient permissions to read it.
    """
    # look for invalid characters in filename/path
    m_search = re.search(r'[^A-Za-z0-9\._\-\/]', str(filepath))
    if m_search is not None:
        print('Only a-z A-Z 0-9 and - . / _ characters allowed in filepath')
        raise ValueError(f'Invalid characters found in file path: {filepath}')

    path = Path(filepath)
    if not path.is_file():
        raise ValueError(f'Invalid file path: {filepath} does not exist')

    status = os.stat(filepath, follow_symlinks=True)
    if status.st_size == 0:
        raise ValueError(f'Invalid file. File {filepath} is empty.')

    if not os.access(filepath, os.R_OK):
        permissions = oct(status.st_mode)[-3:]
        raise ValueError(
            f'Insufficient permissions on file "{filepath}" - {permissions}.'
        )


def ensure_output_dir(output_dir):
    try:
        Path(output_dir).mkdir(parents=True, exist_ok=True)
    except OSError as err:
        msg = f'cannot create output directory: {output_dir}, err: {err}'
        raise ValueError(msg) from err
    return Path(output_dir)


def write_csv(frame, output_dir, filename):
    ''' write a DataFrame with fixed float formatting, returns the path '''
    path = ensure_output_dir(output_dir) / filename
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT,
                 lineterminator='\n')
    print(f'wrote: {path}')
    return str(path)


def _to_builtin(value):
    if isinstance(value, dict):
        return {str(key): _to_builtin(val) for key, val in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(val) for val in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else str(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {'re': float(value.real), 'im': float(value.imag)}
    if isinstance(value, np.ndarray):
        return _to_builtin(value.tolist())
    return value


def to_json_text(payload):
    return json.dumps(_to_builtin(payload), sort_keys=True,
                      indent=JSON_INDENT) + '\n'


def write_json(payload, output_dir, filename):
    ''' write a JSON document with sorted keys, returns the path '''
    path = ensure_output_dir(output_dir) / filename
    with open(path, 'w', encoding='utf-8') as stream:
        stream.write(to_json_text(payload))
    print(f'wrote: {path}')
    return str(path)
