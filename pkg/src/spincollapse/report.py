"""CSV and JSON emission with a pinned, platform-stable format.

Numeric CSV cells carry 17 significant digits ('.' decimal separator,
newline-terminated rows), so identical runs produce byte-identical files.
Every file embeds the resolved simulation config and master seed; the
embedded "# config:" line is itself a valid config document (JSON is a
YAML subset), so any output can be replayed directly.
"""

from __future__ import annotations

import json
import os

import numpy as np

_FLOAT_FMT = "{:.17g}"


def fmt_number(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return _FLOAT_FMT.format(float(value))


def config_comment_lines(config) -> list[str]:
    blob = json.dumps(config.to_json_dict(), sort_keys=True, separators=(", ", ": "))
    return [f"# config: {blob}", f"# master_seed: {config.master_seed}"]


def write_csv(path, config, columns, rows) -> None:
    """Write rows of numbers under a header, preceded by config comments."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in config_comment_lines(config):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt_number(v) for v in row) + "\n")


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def ensure_out_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def read_embedded_config(path: str) -> str:
    """Extract the embedded config document from an output file's comments."""
    prefix = "# config: "
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith(prefix):
                return line[len(prefix):].strip()
            if not line.startswith("#"):
                break
    raise ValueError(f"no embedded config found in {path}")
