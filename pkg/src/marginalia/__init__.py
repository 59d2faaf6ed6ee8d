"""marginalia: instance-level annotation toolkit for manuscript folio images.

Combines promptable zero-shot segmentation backends, reuse of legacy
image-level and box-only metadata, human validation workflows,
nearest-neighbor batch labeling, and COCO instance-segmentation export.
"""

__version__ = "0.1.0"
