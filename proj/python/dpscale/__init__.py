"""Metric scale recovery for reconstructions from dual-pixel defocus."""

import json

from ._dpscale import (
    Error,
    RandomSceneOptions,
    average_error,
    blur_to_pixel_radius,
    convolve,
    estimate_patch_blur,
    read_pfm,
    right_psf,
    round3,
    scale_ratio,
    thin_lens_blur,
    write_pfm,
)
from . import _dpscale

__all__ = [
    "Error",
    "RandomSceneOptions",
    "average_error",
    "blur_to_pixel_radius",
    "convolve",
    "estimate",
    "estimate_patch_blur",
    "read_pfm",
    "right_psf",
    "round3",
    "scale_ratio",
    "synth",
    "thin_lens_blur",
    "write_pfm",
]


def synth(out_dir, scene=None, **options):
    """Render a dataset into out_dir and return its ground truth scale.

    `scene` is a scene description (dict); otherwise a random scene is drawn
    from RandomSceneOptions fields given as keyword arguments.
    """
    opts = RandomSceneOptions()
    for key, value in options.items():
        if not hasattr(opts, key):
            raise TypeError(f"unknown option {key!r}")
        setattr(opts, key, value)
    return _dpscale._synth(str(out_dir), opts, json.dumps(scene) if scene is not None else "")


def estimate(manifest, parameters=None, threads=0, blur_observations=None):
    """Run the pipeline on a manifest and return the report as a dict."""
    text = _dpscale._estimate(
        str(manifest),
        json.dumps(parameters) if parameters else "",
        threads,
        str(blur_observations) if blur_observations else "",
    )
    return json.loads(text)
