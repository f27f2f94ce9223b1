"""Curve systems on closed oriented surfaces, dual cube complexes, and
sign-vector invariants.

The package is organized bottom-up:

* ``surface_map``  -- dart-based combinatorial maps and the basic surgeries
* ``position``     -- face classification, bigon/monogon removal, minimal position
* ``cubes``        -- cube dimensions, maximal cubes, the dual square complex
* ``families``     -- generators for the standard curve systems gamma(epsilon)
* ``invariants``   -- labeled polygons, reconstruction, orbit classification
* ``cli``          -- command-line front end
"""

from __future__ import annotations

__version__ = "0.1.0"
