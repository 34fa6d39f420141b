"""
Checkpoint files.

A checkpoint is a zip archive (format version 1) holding:
  meta.json                      specs, versions, optimizer scalars, metadata
  net/<name>/<k>.npy             parameter arrays of network <name>, in
                                 W0, b0, W1, b1, ... order (row-major float64)
  adam/<name>/{m,v}<k>.npy       Adam moments, same order
  array/<key>.npy                any extra arrays
Member timestamps are fixed so identical contents give identical files.
"""
import io
import json
import logging
import os
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mlp import MlpSpec, ParameterSet
from .optim import AdamState

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
_FIXED_DATE = (1980, 1, 1, 0, 0, 0)


class CheckpointError(ValueError):
    """Raised for unreadable, truncated or inconsistent checkpoint files"""


@dataclass
class Checkpoint:
    networks: dict = field(default_factory=dict)  # name -> (MlpSpec, ParameterSet)
    optimizers: dict = field(default_factory=dict)  # name -> AdamState
    arrays: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def params(self, name):
        return self.networks[name][1]

    def spec(self, name):
        return self.networks[name][0]


def _write_member(archive, name, data):
    info = zipfile.ZipInfo(name, date_time=_FIXED_DATE)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    archive.writestr(info, data)


def _npy_bytes(array):
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.ascontiguousarray(array), allow_pickle=False)
    return buf.getvalue()


def _read_npy(archive, name):
    with archive.open(name) as fh:
        return np.lib.format.read_array(io.BytesIO(fh.read()), allow_pickle=False)


def save_checkpoint(path, checkpoint):
    """Write atomically: the file appears complete or not at all"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        'format_version': FORMAT_VERSION,
        'networks': {},
        'optimizers': {},
        'arrays': sorted(checkpoint.arrays),
        'metadata': checkpoint.metadata,
    }
    tmp = path.with_name(path.name + '.tmp')
    with zipfile.ZipFile(tmp, 'w') as archive:
        for name in sorted(checkpoint.networks):
            spec, params = checkpoint.networks[name]
            meta['networks'][name] = {'spec': spec.to_dict(), 'version': params.version}
            for k, array in enumerate(params.arrays()):
                _write_member(archive, f'net/{name}/{k}.npy', _npy_bytes(array))
        for name in sorted(checkpoint.optimizers):
            adam = checkpoint.optimizers[name]
            meta['optimizers'][name] = {
                't': adam.t, 'beta1': adam.beta1, 'beta2': adam.beta2, 'eps': adam.eps, 'size': len(adam.m),
            }
            for k, (m, v) in enumerate(zip(adam.m, adam.v)):
                _write_member(archive, f'adam/{name}/m{k}.npy', _npy_bytes(m))
                _write_member(archive, f'adam/{name}/v{k}.npy', _npy_bytes(v))
        for key in sorted(checkpoint.arrays):
            _write_member(archive, f'array/{key}.npy', _npy_bytes(checkpoint.arrays[key]))
        _write_member(archive, 'meta.json', json.dumps(meta, sort_keys=True, indent=1).encode('utf-8'))
    os.replace(tmp, path)
    logger.debug('Wrote checkpoint %s (%d networks)', path, len(checkpoint.networks))
    return path


def load_checkpoint(path):
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f'Checkpoint not found: {path}')
    try:
        with zipfile.ZipFile(path) as archive:
            meta = json.loads(archive.read('meta.json'))
            if meta.get('format_version') != FORMAT_VERSION:
                raise CheckpointError(f'Unsupported checkpoint format {meta.get("format_version")!r}')
            checkpoint = Checkpoint(metadata=meta['metadata'])
            for name, entry in meta['networks'].items():
                spec = MlpSpec.from_dict(entry['spec'])
                arrays = [_read_npy(archive, f'net/{name}/{k}.npy') for k in range(2 * spec.n_layers)]
                params = ParameterSet(arrays[0::2], arrays[1::2], entry['version'])
                if not params.matches(spec):
                    raise CheckpointError(f'Network {name} does not match its spec')
                checkpoint.networks[name] = (spec, params)
            for name, entry in meta['optimizers'].items():
                size = entry['size']
                checkpoint.optimizers[name] = AdamState(
                    m=[_read_npy(archive, f'adam/{name}/m{k}.npy') for k in range(size)],
                    v=[_read_npy(archive, f'adam/{name}/v{k}.npy') for k in range(size)],
                    t=entry['t'], beta1=entry['beta1'], beta2=entry['beta2'], eps=entry['eps'],
                )
            for key in meta['arrays']:
                checkpoint.arrays[key] = _read_npy(archive, f'array/{key}.npy')
    except CheckpointError:
        raise
    except (zipfile.BadZipFile, KeyError, ValueError, OSError) as e:
        raise CheckpointError(f'Corrupt checkpoint {path}: {e}')
    return checkpoint
