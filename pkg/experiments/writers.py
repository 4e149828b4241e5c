"""
Result files. Every file is written to a temporary sibling and renamed into
place, so a failed run never leaves a truncated result behind.
"""
import csv
import enum
import io
import json
import logging
import os
import tempfile
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


def format_value(value):
    """Shortest round-trip text for floats, empty cell for missing values"""
    if value is None:
        return ''
    if isinstance(value, str):
        return value
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return repr(float(value))
    try:
        return repr(float(value))
    except (TypeError, ValueError):
        return str(value)


def provenance_line(config_hash, seed):
    return f'# config_sha256={config_hash} seed={seed}\n'


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug('wrote %s (%d bytes)', path, len(text))
    return path


def render_csv(header, rows, config_hash, seed):
    buffer = io.StringIO()
    buffer.write(provenance_line(config_hash, seed))
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def write_csv(path, header, rows, config_hash, seed):
    return atomic_write(path, render_csv(header, rows, config_hash, seed))


def write_metadata(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True, default=format_value) + '\n'
    return atomic_write(path, text)
