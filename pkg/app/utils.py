import json
import logging
import math

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np
import pandas as pd

from app.errors import ValidationError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def parse_range(text):
    """
    `a:b:n` -> n evenly spaced values from a to b inclusive; a bare number
    or a comma list is accepted too.
    """
    text = str(text).strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ValueError
            return tuple(float(v) for v in np.linspace(start, stop, count))
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ValidationError(f"malformed range '{text}'; expected a:b:n, a number or a comma list") from None


def _config_value(text):
    """A TOML literal when the text is one (numbers, booleans, quoted strings), else the bare text."""
    try:
        return tomllib.loads(f"value = {text}")["value"]
    except tomllib.TOMLDecodeError:
        return text


def load_config(path):
    """
    `key = value` lines named after the long flags; dashes and underscores
    are interchangeable and `#` starts a comment. Values may be TOML literals
    or bare words such as `objective = renyi:2`.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise ValidationError(f"cannot read config {path}: {e}") from e

    config = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            raise ValidationError(f"config {path}:{number}: tables are not supported")
        key, sep, text = line.partition("=")
        key, text = key.strip(), text.strip()
        if not sep or not key or not text:
            raise ValidationError(f"config {path}:{number}: expected 'key = value', got '{line}'")
        if not text.startswith(("'", '"')):
            text = text.split("#", 1)[0].strip()
        config[key.replace("-", "_")] = _config_value(text)
    logger.debug("Loaded %d setting(s) from %s", len(config), path)
    return config


def to_jsonable(value):
    """Numpy scalars/arrays to plain Python; NaN and inf to None."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def payload_text(payload):
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n"


def frame_text(frame):
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def payload_frame(payload):
    """One-row frame of the scalar fields of a payload, for --format csv."""
    flat = {k: v for k, v in to_jsonable(payload).items() if not isinstance(v, (dict, list))}
    return pd.DataFrame([flat])


def write_text(text, path=None, stream=None):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        logger.info("Wrote %s", path)
    else:
        stream.write(text)
