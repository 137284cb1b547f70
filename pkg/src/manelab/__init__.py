"""Desk-scale laboratory for minimizing orbits of hyperbolic systems.

Subpackages: symbolic dynamics (sft), exact ergodic optimization (ergopt),
mechanical Lagrangians (lagrangian), discrete weak-KAM machinery (weakkam),
shadowing on the cat map (shadowing), the periodic-orbit cut-and-shadow
pipeline (orbitlab), and a command-line runner (cli).
"""

from . import sft, ergopt, lagrangian, weakkam, shadowing, orbitlab, cli

__all__ = ["sft", "ergopt", "lagrangian", "weakkam", "shadowing",
           "orbitlab", "cli"]
__version__ = "0.1.0"
