"""Python bindings for the vstitch stitching core."""

from ._vstitch import (
    Error,
    default_config,
    estimate_homography,
    normalize_config,
    read_image,
    render_scene,
    render_scene_text,
    stitch_pair,
    write_image,
)

__all__ = [
    "Error",
    "default_config",
    "estimate_homography",
    "normalize_config",
    "read_image",
    "render_scene",
    "render_scene_text",
    "stitch_pair",
    "write_image",
]
