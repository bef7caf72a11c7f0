"""fglab: Fefferman-Graham expansions, radial reconstruction and boundary constraint checks."""

__version__ = "0.1"
