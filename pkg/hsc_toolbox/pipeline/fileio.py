import csv
import io
import json
import os
import tempfile

from hsc_toolbox.retry import file_retry


"""
Crash safe file output. Every structured file is written to a temporary file
next to its destination and renamed into place, so readers never see a
partially written file. Transient OS errors are retried, see `file_retry`.
"""

@file_retry
def atomic_write(path, data, mode='w'):
    """Write `data` (str or bytes according to `mode`) to `path` through a
    temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(
        dir=directory, prefix='.' + os.path.basename(path) + '.')
    try:
        with os.fdopen(fd, mode) as f:
            f.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=1, sort_keys=True) + '\n')


def read_json(path):
    with open(path, 'r') as f:
        return json.load(f)


def _csv_value(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return value


def write_csv(path, header, rows):
    """Rows of plain values; floats keep their full repr precision."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_value(v) for v in row])
    atomic_write(path, buffer.getvalue())


def read_csv(path):
    """Header and rows (as lists of strings) of a file written by
    write_csv."""
    with open(path, 'r', newline='') as f:
        lines = list(csv.reader(f))
    return lines[0], lines[1:]
