#!/usr/bin/env python3
"""Project version; `./version.py` also refreshes the README badge."""
import re
from dataclasses import dataclass
from typing import Optional

_BADGE_PATTERN = re.compile(r"img\.shields\.io/badge/version-[^)]*-blue")


@dataclass(frozen=True, order=True)
class Version:
    major: int
    minor: int
    patch: int
    metadata: Optional[str] = None

    @classmethod
    def from_string(cls, value):
        """Parse 'X.Y.Z' or 'X.Y.Z (metadata)'."""
        match = re.fullmatch(r"(\d+)\.(\d+)\.(\d+)(?: \((.+)\))?", value.strip())
        if match is None:
            raise ValueError(f"Not a version string: {value!r}")
        major, minor, patch, metadata = match.groups()
        return cls(int(major), int(minor), int(patch), metadata)

    def to_string(self):
        core = f"{self.major}.{self.minor}.{self.patch}"
        return f"{core} ({self.metadata})" if self.metadata else core

    def __str__(self):
        return self.to_string()

    def badge(self):
        label = self.to_string().replace(" ", "%20")
        return f"img.shields.io/badge/version-{label}-blue"

    def update_readme(self, filename="README.md"):
        with open(filename, "r") as f:
            text = f.read()
        with open(filename, "w") as f:
            f.write(_BADGE_PATTERN.sub(self.badge(), text))


__version__ = Version(0, 3, 0)

if __name__ == "__main__":
    print(f"Model Cache Version: {__version__}")
    __version__.update_readme()
