"""Fit the Gaussian-bound constants (C, s) of the heat kernel over a grid of kappa and arg z."""

import argparse
import json
import math
from dataclasses import asdict, dataclass, field

from halfline.kernel import KernelParams, fit_gaussian_constants


@dataclass
class Config:
    kappas: list = field(default_factory=lambda: [-1.0, 0.0, 0.5, 0.9])
    phases: list = field(default_factory=lambda: [0.0, math.pi / 8, math.pi / 4])
    n_space: int = 50
    n_time: int = 20


def run(cfg: Config) -> list:
    rows = []
    for kap in cfg.kappas:
        for ph in cfg.phases:
            C, s = fit_gaussian_constants(KernelParams(kap), ph, n_space=cfg.n_space, n_time=cfg.n_time)
            rows.append({"kappa": kap, "phase": ph, "C": C, "s": s})
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-space", type=int, default=Config.n_space)
    ap.add_argument("--n-time", type=int, default=Config.n_time)
    args = ap.parse_args()
    cfg = Config(n_space=args.n_space, n_time=args.n_time)
    print(json.dumps({"config": asdict(cfg), "fits": run(cfg)}, indent=2))
