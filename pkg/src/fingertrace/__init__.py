"""Design toolkit for mirror-folded camera-based tactile fingers."""

__version__ = "0.1.0"

from importlib import resources


def reference_scene_path():
    """Filesystem path of the bundled reference scene config."""
    return resources.files("fingertrace").joinpath("data/reference_scene.json")
