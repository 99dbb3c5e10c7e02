"""Desk-scale laboratory for local relighting.

Pipeline stages, in dependency order:

  lampworld  -> procedural scenes with analytically known lighting
  stylegen   -> toy style-based generator trained on lampworld images
  channelid  -> discovery of the style channel that controls lighting
  pairgen    -> paired relighting corpus built from the generator
  relightnet -> modulation-conditioned image-to-image translator
  evalkit    -> benchmark metrics and reports
  service    -> HTTP inference endpoint
  cli        -> `relightlab` entry point orchestrating all of the above
"""

__version__ = "0.1.0"
