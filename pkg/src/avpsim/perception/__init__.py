"""Infrastructure occupancy pipeline: detector model, overlap-based spot
classification, and the RSU service loop."""

from avpsim.perception.detector import DetectorModel, detect
from avpsim.perception.occupancy import OccupancyFrame, compute_occupancy

__all__ = ["DetectorModel", "OccupancyFrame", "compute_occupancy", "detect"]
