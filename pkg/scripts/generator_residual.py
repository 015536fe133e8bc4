"""Observed order of (e^{hA} f - f)/h -> A f for operators x^alpha (f'' + a f'/x + b f/x^2)."""

import argparse
import json
from dataclasses import asdict, dataclass, field

from halfline.reduce import OperatorSpec, classify
from halfline.verify import generator_residual


@dataclass
class Config:
    cases: list = field(default_factory=lambda: [
        [0.0, 0.0, -0.75, 0.5], [1.0, 1.0, -1.0, 0.0], [-1.0, 0.0, 0.0, 1.5]])
    hs: list = field(default_factory=lambda: [0.004, 0.002, 0.001, 0.0005])


def run(cfg: Config) -> list:
    rows = []
    for al, a, b, n in cfg.cases:
        spec = OperatorSpec(al, a, b)
        row = {"alpha": al, "a": a, "b": b, "n": n, "case": classify(spec, n)}
        if row["case"] == "c2":
            row["order"], row["defects"] = generator_residual(spec, n, hs=tuple(cfg.hs))
        rows.append(row)
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.parse_args()
    cfg = Config()
    print(json.dumps({"config": asdict(cfg), "results": run(cfg)}, indent=2, default=float))
