"""
Result, model and dataset files.

CSV files hold one metric record per line, optionally preceded by a
``# {json}`` line echoing the scenario. Floats are written in positional
notation with the shortest digits that read back exactly, never with an
exponent; undefined metrics are written as ``nan``.

Models and datasets share one container: a zip archive of ``header.json``
plus one little-endian float64 ``.npy`` member per array, written with fixed
timestamps so equal content gives equal bytes.
"""
import csv
import io
import json
import logging
import zipfile
from pathlib import Path

import numpy as np

from .cnn_estimators import CnnDataset
from .exceptions import MissingModelError, ModelFileError
from .neuralnet import CnnModel, ConvLayer

logger = logging.getLogger(__name__)

CSV_COLUMNS = ('snr_db', 'estimator', 'user', 'mse_cfo', 'mse_channel', 'ber', 'packet_loss')
FORMAT_VERSION = 1
MODEL_FORMAT = 'linksim-cnn-model'
DATASET_FORMAT = 'linksim-cnn-dataset'
HEADER_MEMBER = 'header.json'

_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


def _format_float(value):
    # Positional digits only; the shortest ones that parse back to the same double.
    return np.format_float_positional(float(value), unique=True, trim='0')


def write_csv(records, path, config_echo=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as handle:
        if config_echo is not None:
            handle.write('# ' + json.dumps(config_echo, sort_keys=True, separators=(',', ':')) + '\n')
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([
                _format_float(r.snr_db), r.estimator, int(r.user),
                _format_float(r.mse_cfo), _format_float(r.mse_channel),
                _format_float(r.ber), _format_float(r.packet_loss),
            ])
    logger.info("Wrote %d records to %s", len(records), path)
    return path


def read_csv_header(path):
    """The scenario echo of a CSV file, or None when it has none."""
    with Path(path).open(encoding='utf-8') as handle:
        first = handle.readline()
    if not first.startswith('#'):
        return None
    try:
        return json.loads(first[1:])
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: malformed config echo line.") from exc


def read_csv(path):
    from .harness import MetricRecord

    with Path(path).open(newline='', encoding='utf-8') as handle:
        lines = [line for line in handle if not line.startswith('#')]
    reader = csv.reader(lines)
    header = next(reader, None)
    if tuple(header or ()) != CSV_COLUMNS:
        raise ModelFileError(f"{path}: unexpected CSV header {header}.")
    records = []
    for row in reader:
        if len(row) != len(CSV_COLUMNS):
            raise ModelFileError(f"{path}: row {len(records) + 1} has {len(row)} columns.")
        try:
            records.append(MetricRecord(
                snr_db=float(row[0]), estimator=row[1], user=int(row[2]),
                mse_cfo=float(row[3]), mse_channel=float(row[4]),
                ber=float(row[5]), packet_loss=float(row[6]),
            ))
        except ValueError as exc:
            raise ModelFileError(f"{path}: row {len(records) + 1} is malformed.") from exc
    return records


def _array_bytes(array):
    buffer = io.BytesIO()
    np.lib.format.write_array(buffer, np.ascontiguousarray(array, dtype='<f8'), allow_pickle=False)
    return buffer.getvalue()


def _write_member(archive, name, payload):
    info = zipfile.ZipInfo(name, date_time=_ZIP_EPOCH)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    archive.writestr(info, payload)


def _write_container(path, header, arrays):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(path, 'w') as archive:
        _write_member(archive, HEADER_MEMBER, json.dumps(header, sort_keys=True, indent=2).encode('utf-8'))
        for name, array in arrays:
            _write_member(archive, f'{name}.npy', _array_bytes(array))
    return path


def _read_container(path, expected_format):
    path = Path(path)
    if not path.exists():
        raise MissingModelError(f"{path} does not exist.")
    try:
        with zipfile.ZipFile(path) as archive:
            header = json.loads(archive.read(HEADER_MEMBER).decode('utf-8'))
            if header.get('format') != expected_format:
                raise ModelFileError(f"{path} is not a {expected_format} file.")
            if header.get('version') != FORMAT_VERSION:
                raise ModelFileError(
                    f"{path} has format version {header.get('version')}, expected {FORMAT_VERSION}."
                )
            arrays = {}
            for name in archive.namelist():
                if name.endswith('.npy'):
                    with archive.open(name) as member:
                        arrays[name[:-4]] = np.lib.format.read_array(
                            io.BytesIO(member.read()), allow_pickle=False
                        ).astype(np.float64, copy=False)
    except (zipfile.BadZipFile, KeyError, ValueError, EOFError, UnicodeDecodeError) as exc:
        raise ModelFileError(f"{path} is truncated or malformed: {exc}") from exc
    return header, arrays


def save_model(model, path, metadata=None):
    header = {
        'format': MODEL_FORMAT,
        'version': FORMAT_VERSION,
        'byte_order': 'little',
        'architecture': model.architecture(),
        'metadata': metadata or {},
    }
    arrays = []
    for index, layer in enumerate(model.layers):
        arrays.append((f'layer{index:02d}_weights', layer.weights))
        arrays.append((f'layer{index:02d}_bias', layer.bias))
    _write_container(path, header, arrays)
    logger.info("Saved model to %s", path)
    return Path(path)


def read_model_header(path):
    header, _ = _read_container(path, MODEL_FORMAT)
    return header


def load_model(path):
    """Model saved by ``save_model``; parameters come back bit for bit."""
    header, arrays = _read_container(path, MODEL_FORMAT)
    try:
        arch = header['architecture']
        layers = []
        for index, spec in enumerate(arch['layers']):
            layers.append(ConvLayer(
                arrays[f'layer{index:02d}_weights'],
                arrays[f'layer{index:02d}_bias'],
                int(spec['padding']),
                bool(spec['relu']),
            ))
        return CnnModel(layers, tuple(arch['input_shape']), bool(arch['residual']))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"{path}: model arrays do not match the stored architecture.") from exc


def save_dataset(dataset, path):
    header = {
        'format': DATASET_FORMAT,
        'version': FORMAT_VERSION,
        'byte_order': 'little',
        'kind': dataset.kind,
        'count': len(dataset),
        'input_shape': list(dataset.inputs.shape[1:]),
        'target_shape': list(dataset.targets.shape[1:]),
        'seed': int(dataset.seed),
        'scenario_digest': dataset.scenario_digest,
    }
    _write_container(path, header, [
        ('inputs', dataset.inputs),
        ('targets', dataset.targets),
        ('snr_db', dataset.snr_db),
    ])
    logger.info("Saved %d-sample %s dataset to %s", len(dataset), dataset.kind, path)
    return Path(path)


def load_dataset(path):
    header, arrays = _read_container(path, DATASET_FORMAT)
    try:
        dataset = CnnDataset(
            kind=header['kind'],
            inputs=arrays['inputs'],
            targets=arrays['targets'],
            snr_db=arrays['snr_db'],
            seed=int(header['seed']),
            scenario_digest=header.get('scenario_digest', ''),
        )
        count = header['count']
    except KeyError as exc:
        raise ModelFileError(f"{path} lacks the {exc} entry.") from exc
    if len(dataset.inputs) != count or len(dataset.targets) != count:
        raise ModelFileError(f"{path}: stored arrays do not hold {count} samples.")
    return dataset
