"""Writing artifacts: JSON reports, CSV tables and PPM images."""

import csv
import json
import logging
from pathlib import Path

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["step", "re", "im", "F", "grad_norm", "delta_index", "gamma", "armijo_trials"]
FLOW_COLUMNS = ["t", "re", "im", "abs_f", "drift"]


def output_path(out_dir, name):
    """name inside out_dir unless it is absolute; parent directories are created."""
    path = Path(name)
    if not path.is_absolute():
        path = Path(out_dir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_json(path, data):
    with open(path, mode="w") as file:
        file.write(json.dumps(data, indent=2))
        file.write("\n")
    logger.debug("wrote %s", path)
    return path


def write_csv(path, rows, fieldnames):
    with open(path, mode="w", newline="") as file:
        writer = csv.DictWriter(file, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    logger.debug("wrote %d rows to %s", len(rows), path)
    return path


def write_bytes(path, data):
    with open(path, mode="wb") as file:
        file.write(data)
    logger.debug("wrote %d bytes to %s", len(data), path)
    return path