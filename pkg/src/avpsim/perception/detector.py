"""Ground-truth detector stand-in with a configurable miss model.

Each vehicle is dropped independently with a per-class miss probability and
surviving footprints get isotropic Gaussian center noise. Draws are a pure
function of (seed, frame_seq), so a fixed seed replays identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from avpsim.world.geometry import OrientedRect
from avpsim.world.sim import VehicleBody


@dataclass(frozen=True)
class DetectorModel:
    p_miss: dict[str, float] = field(default_factory=dict)
    pos_noise_sigma_m: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for cls, p in self.p_miss.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"p_miss[{cls!r}]={p} outside [0, 1]")
        if self.pos_noise_sigma_m < 0:
            raise ValueError("pos_noise_sigma_m must be >= 0")

    @classmethod
    def from_spec(cls, spec: str, sigma_m: float = 0.0, seed: int = 0) -> "DetectorModel":
        """Parse 'class=prob,class=prob' CLI syntax."""
        p_miss = {}
        if spec:
            for part in spec.split(","):
                name, _, val = part.partition("=")
                p_miss[name.strip()] = float(val)
        return cls(p_miss, sigma_m, seed)


def detect(
    bodies: list[VehicleBody], model: DetectorModel, frame_seq: int
) -> list[OrientedRect]:
    """Detected footprint rectangles for one frame."""
    rng = np.random.default_rng([model.seed, frame_seq])
    rects: list[OrientedRect] = []
    for body in sorted(bodies, key=lambda b: b.ns):
        miss = rng.uniform() < model.p_miss.get(body.cls, 0.0)
        noise = rng.normal(0.0, model.pos_noise_sigma_m or 0.0, size=2)
        if miss:
            continue
        fp = body.footprint
        if model.pos_noise_sigma_m > 0:
            fp = OrientedRect(fp.cx + noise[0], fp.cy + noise[1], fp.hx, fp.hy, fp.yaw)
        rects.append(fp)
    return rects
