"""Python bindings for the advface core library.

Images are float arrays in [0, 1], laid out H x W x 3 (batches N x H x W x 3).
"""

import json

import torch  # noqa: F401  loads libtorch before the extension

from ._advface import (
    ConfigError,
    DegenerateTransformError,
    IngestionError,
    InputError,
    NumericError,
    aih,
    apply_transform,
    ati,
    project_linf,
    protect,
    read_face,
    run_cli,
    spectrum,
    swap,
    synth_faces,
    write_face_png,
)
from ._advface import default_config_json as _default_config_json


def default_config():
    """Default experiment configuration as a dict."""
    return json.loads(_default_config_json())


__all__ = [
    "ConfigError",
    "DegenerateTransformError",
    "IngestionError",
    "InputError",
    "NumericError",
    "aih",
    "apply_transform",
    "ati",
    "default_config",
    "project_linf",
    "protect",
    "read_face",
    "run_cli",
    "spectrum",
    "swap",
    "synth_faces",
    "write_face_png",
]
