"""Convergence of Strang splitting for e^{t(G_kappa - omega)} as the step count doubles."""

import argparse
import json
from dataclasses import asdict, dataclass, field

from halfline.absorption import evolve_absorbed, parse_potential
from halfline.kernel import KernelParams
from halfline.families import gaussian
from halfline.spaces import make_grid, sample, weighted_norm
from halfline.verify import fit_slope


@dataclass
class Config:
    kappa: float = 0.0
    m: float = 0.5
    t: float = 0.5
    potential: str = "linear:1"
    steps: list = field(default_factory=lambda: [2, 4, 8, 16, 32, 64])


def run(cfg: Config) -> dict:
    p = KernelParams(cfg.kappa)
    f = sample(lambda x: gaussian(x, 3.0, 0.7), make_grid(), cfg.m)
    om = parse_potential(cfg.potential)
    us = [evolve_absorbed(p, om, cfg.t, n, f, merge_commuting=False).values for n in cfg.steps]
    defects = [weighted_norm(f.with_values(a - b)).value for a, b in zip(us, us[1:])]
    return {"defects": defects, "order": -fit_slope(cfg.steps[:-1], defects)}


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--potential", default=Config.potential)
    ap.add_argument("--t", type=float, default=Config.t)
    args = ap.parse_args()
    cfg = Config(potential=args.potential, t=args.t)
    print(json.dumps({"config": asdict(cfg), **run(cfg)}, indent=2))
