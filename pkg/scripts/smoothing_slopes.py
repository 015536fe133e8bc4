"""Empirical X_m -> X_{m-theta} norm decay of S(t) and the fitted log-log slopes."""

import argparse
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from halfline.kernel import KernelParams
from halfline.verify import smoothing_suite


@dataclass
class Config:
    kappa: float = 0.0
    m: float = 1.0
    thetas: list = field(default_factory=lambda: [0.25, 0.5, 1.0])
    t_min: float = 1e-3
    t_max: float = 1.0
    n_times: int = 7
    phase: float = 0.0


def run(cfg: Config) -> dict:
    ts = tuple(np.geomspace(cfg.t_min, cfg.t_max, cfg.n_times))
    rep = smoothing_suite(KernelParams(cfg.kappa), cfg.m, cfg.thetas, ts, cfg.phase)
    return rep.to_dict()


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kappa", type=float, default=Config.kappa)
    ap.add_argument("--m", type=float, default=Config.m)
    ap.add_argument("--phase", type=float, default=Config.phase)
    args = ap.parse_args()
    cfg = Config(kappa=args.kappa, m=args.m, phase=args.phase)
    print(json.dumps({"config": asdict(cfg), "report": run(cfg)}, indent=2, default=float))
