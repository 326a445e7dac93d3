"""
Config Library Module
Finds the bundled experiment and sweep configs in the project's configs/ folder.
"""

from pathlib import Path
from typing import List, Optional, Union

from .config_manager import read_json


def get_configs_dir() -> Path:
    """Get the bundled configs directory path (relative to project root)."""
    project_root = Path(__file__).resolve().parent.parent
    return project_root / "configs"


class ConfigLibrary:
    """
    Bundled configs stored as .json files.

    Filename (without extension) = config name. Sweep files carry an "axis" key.
    """

    def __init__(self, directory: Optional[Path] = None):
        self._dir = Path(directory) if directory else get_configs_dir()

    def get_names(self) -> List[str]:
        """Get sorted list of config names (filenames without .json)."""
        return [f.stem for f in sorted(self._dir.glob("*.json"))]

    def get_path(self, name: str) -> Path:
        return self._dir / f"{name}.json"

    def exists(self, name: str) -> bool:
        return self.get_path(name).is_file()

    def is_sweep(self, name: str) -> bool:
        return "axis" in read_json(self.get_path(name))

    def description(self, name: str) -> str:
        return str(read_json(self.get_path(name)).get("description", ""))

    def resolve(self, ref: Union[str, Path], relative_to: Optional[Path] = None) -> Path:
        """
        Turn a config reference into a file path.

        A reference is a path to a file, or the name of a bundled config. Relative
        paths are tried against `relative_to` first.

        Raises:
            FileNotFoundError: if neither exists
        """
        path = Path(ref)
        if relative_to is not None and not path.is_absolute() and (relative_to / path).is_file():
            return relative_to / path
        if path.is_file():
            return path
        if self.exists(str(ref)):
            return self.get_path(str(ref))
        raise FileNotFoundError(f"no config file or bundled config named '{ref}'")
