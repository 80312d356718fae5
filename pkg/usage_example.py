#!/usr/bin/env python3
"""
Usage example: the saddle a small hole creates in the torsion function of the unit disc
"""
import asyncio

import numpy as np

from src.asymptotics.predictors import local_data_from_field, offset_alignment_deg, predict
from src.cli.runner import ExperimentRunner
from src.critpoints.detector import find_critical_points
from src.critpoints.index import poincare_hopf_audit
from src.elliptic.solvers import EllipticSolver, solve_weak_limit
from src.geometry.grid import classify
from src.models.config import load_config
from src.models.domain import LevelSetDomain, PuncturedDomain
from src.models.problem import Nonlinearity
from src.models.results import CriticalClass
from src.utils.logging_config import setup_logging


def demonstrate_library():
    """Solve, detect and compare against the prediction for a few hole radii"""
    print("Holepoint - library walkthrough")
    print("=" * 40)

    disc = LevelSetDomain.disc(1.0)
    P = np.array([0.3, 0.0])
    torsion = Nonlinearity.torsion()

    for eps in (0.08, 0.04):
        h = eps / 4.0
        u0, _ = solve_weak_limit(classify(disc, h), torsion)
        ld = local_data_from_field(u0, P, torsion)
        prediction = predict(ld, eps)

        domain = PuncturedDomain(outer=disc, P=tuple(P), eps=eps)
        u_eps = EllipticSolver(classify(domain, h)).solve_semilinear(torsion)
        cs = find_critical_points(u_eps)
        audit = poincare_hopf_audit(cs, domain, u_eps, strict=False)

        print(f"\neps={eps:g}, h={h:g}: {cs.count} critical points, index sum {cs.index_sum} "
              f"({audit.verdict.value})")
        for p in cs.points:
            print(f"  {p.critical_class.value:<10} at ({p.x:+.5f}, {p.y:+.5f}), u={p.value:.6f}")

        saddles = cs.by_class(CriticalClass.SADDLE)
        if saddles:
            measured = saddles[0].location - P
            predicted = np.asarray(prediction.points[0]) - P
            print(f"  offset {np.linalg.norm(measured):.4f} vs predicted {np.linalg.norm(predicted):.4f}, "
                  f"angle {offset_alignment_deg(measured, predicted):.2f} deg")


async def run_config(path: str):
    """Same pipeline driven by a JSON config, as the holepoint command runs it"""
    print("\n" + "=" * 40)
    print(f"Config run: {path}")
    print("=" * 40)

    config = load_config(path)
    report = await ExperimentRunner(config, out_dir="reports/example").run()
    for prediction in report.summary.get("predictions", []):
        print(f"  {prediction['kind']}: points {prediction.get('points')}")
    for record in report.records:
        status = record.error.error_code if record.error else f"{record.crit_count} critical points"
        print(f"  eps={record.eps:g}: {status}")


if __name__ == "__main__":
    setup_logging("WARNING")
    demonstrate_library()
    asyncio.run(run_config("configs/predict_disc.json"))
