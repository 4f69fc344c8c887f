"""
Copyright 2022 NOAA
All rights reserved.

Loader for request files.  .yaml/.yml requests are parsed with a SafeLoader
that also reads exponent floats without a dot (1e-300), which YAML 1.1
leaves as strings; .json requests are parsed with the json module.

"""
from dataclasses import dataclass, field
import json
import pathlib
import re
import yaml


VALID_EXTENSIONS = ['.yml', '.yaml', '.json']
JSON_EXTENSION = '.json'


class RequestLoader(yaml.SafeLoader):
    ''' SafeLoader with YAML 1.2 style float resolution '''


RequestLoader.add_implicit_resolver(
    'tag:yaml.org,2002:float',
    re.compile(r'''^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                    |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                    |[-+]?\.(?:inf|Inf|INF)
                    |\.(?:nan|NaN|NAN))$''', re.X),
    list('-+0123456789.'))


def validate_request_file(value):
    ''' ensure the request file has a recognized extension '''
    try:
        ext = pathlib.Path(value).suffix
    except TypeError as err:
        raise ValueError(f'Invalid path: {value}, error: {err}') from err

    if ext not in VALID_EXTENSIONS:
        raise TypeError(f'Not a recognized request extension: \'{ext}\', '
                        f'valid: {VALID_EXTENSIONS}')


@dataclass
class YamlLoader:
    """
    class to help load and parse request files
    """

    yaml_file: str
    multiple_docs: bool = field(default=False)

    def __post_init__(self):
        validate_request_file(self.yaml_file)

    def _read_documents(self, stream):
        if pathlib.Path(self.yaml_file).suffix == JSON_EXTENSION:
            return [json.load(stream)]
        return list(yaml.load_all(stream, Loader=RequestLoader))

    def load(self):
        ''' load all documents; a single document unless multiple_docs '''
        print(f'loading request file: {self.yaml_file}')
        try:
            with open(self.yaml_file, 'r', encoding='utf-8') as yaml_stream:
                documents = self._read_documents(yaml_stream)
        except (yaml.YAMLError, json.JSONDecodeError) as err:
            msg = f'Cannot parse request file: {self.yaml_file}, {err}'
            raise ValueError(msg) from err
        except OSError as err:
            msg = f'Cannot read request file: {self.yaml_file}, {err}'
            raise ValueError(msg) from err

        documents = [doc for doc in documents if doc is not None]
        if len(documents) == 0:
            msg = f'No documents loaded from: {self.yaml_file}'
            raise ValueError(msg)
        if not self.multiple_docs and len(documents) > 1:
            msg = f'Expected one document, loaded document count: ' \
                  f'{len(documents)}'
            raise ValueError(msg)
        for document in documents:
            if not isinstance(document, dict):
                msg = f'Request documents must be mappings, found: ' \
                      f'{type(document)}'
                raise TypeError(msg)

        return documents
