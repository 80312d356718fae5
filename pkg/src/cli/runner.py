"""Config-driven experiment orchestration.

Every command fans its per-eps jobs out with asyncio.gather over worker
threads; gather keeps input order, so reports come out in eps order no
matter how many workers run.
"""
import asyncio
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TypeVar

import numpy as np

from .reports import emit_csv, emit_json, environment_stamp
from ..asymptotics.expansion import expansion_ring_error
from ..asymptotics.predictors import local_data_from_field, offset_alignment_deg, predict, predict_radial
from ..asymptotics.rates import fit_exponent, fit_rate
from ..critpoints.detector import find_critical_points
from ..critpoints.index import poincare_hopf_audit
from ..critpoints.persistence import persistence_match
from ..elliptic.field import Field, save_field
from ..elliptic.solvers import EllipticSolver, solve_weak_limit
from ..errors import HolepointError, InsufficientData, IoError, PairingAmbiguous, TooCloseToBoundary, TooCloseToHole
from ..geometry.grid import classify
from ..green.verify import psi_eps_verify
from ..models.config import Command, ExperimentConfig
from ..models.problem import NonlinearityKind
from ..models.results import (
    CriticalClass,
    CritSet,
    ErrorRecord,
    Prediction,
    PredictionKind,
    PsiEpsRecord,
    RadialSweepEntry,
    ScalingLaw,
    SolveRecord,
    SweepRecord,
    SweepReport,
)
from ..radial.sweep import radial_entry, radial_weak_limit, write_radial_csv
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def error_record(error: Exception, params: Dict[str, Any]) -> ErrorRecord:
    """Failure as report data, with the stable code of holepoint errors"""
    code = error.code if isinstance(error, HolepointError) else "INTERNAL_ERROR"
    return ErrorRecord(error_message=str(error), error_code=code, request_params=params)


@dataclass
class WeakLimit:
    """u0 on the unpunctured domain at one grid spacing"""
    field: Optional[Field] = None
    eigenvalue: Optional[float] = None
    critset: Optional[CritSet] = None
    error: Optional[Exception] = None


class ExperimentRunner:
    """Runs one ExperimentConfig and writes its reports"""

    def __init__(self, config: ExperimentConfig, out_dir: Optional[Path] = None):
        self.config = config
        self.out_dir = Path(out_dir if out_dir is not None else config.output_dir)
        self.nl = config.nonlinearity.build()
        self._weak_limits: Dict[float, WeakLimit] = {}
        logger.info(f"Initializing ExperimentRunner: command={config.command.value}, out_dir={self.out_dir}")

    async def run(self) -> SweepReport:
        report = SweepReport(command=self.config.command.value, config_hash=self.config.config_hash(),
                             environment=environment_stamp())
        handlers = {
            Command.SOLVE: self._run_solve,
            Command.CRITPOINTS: self._run_critpoints,
            Command.SWEEP: self._run_sweep,
            Command.RADIAL_SWEEP: self._run_radial_sweep,
            Command.GREEN_VERIFY: self._run_green_verify,
            Command.PREDICT: self._run_predict,
        }
        await handlers[self.config.command](report)
        self._write(report)
        logger.info(f"{report.command} finished with {report.failures} failure(s)")
        return report

    async def _gather(self, func: Callable[[T], R], items: Iterable[T]) -> List[R]:
        semaphore = asyncio.Semaphore(self.config.workers)

        async def job(item: T) -> R:
            async with semaphore:
                return await asyncio.to_thread(func, item)

        return list(await asyncio.gather(*(job(item) for item in items)))

    # solve / critpoints

    def _targets(self) -> List[Optional[float]]:
        if self.config.domain.hole is not None and self.config.eps_list:
            return list(self.config.eps_list)
        return [None]

    def _spacing(self, eps: Optional[float]) -> float:
        """grid_spacing for error records, 0 when the config cannot provide one"""
        try:
            return self.config.grid_spacing(eps)
        except ValueError:
            return 0.0

    def _solve_field(self, eps: Optional[float]):
        h = self.config.grid_spacing(eps)
        domain = self.config.domain.punctured(eps) if eps is not None else self.config.domain.unpunctured()
        grid = classify(domain, h)
        solver = EllipticSolver(grid)
        eigenvalue = None
        if self.nl.kind == NonlinearityKind.LINEAR_EIGEN:
            eigenvalue, field = solver.solve_eigen()
        else:
            field = solver.solve_semilinear(self.nl)
        return domain, field, eigenvalue

    def _solve_record(self, field: Field, eps: Optional[float], eigenvalue: Optional[float]) -> SolveRecord:
        return SolveRecord(eps=eps, h=field.grid.h, unknowns=field.grid.n_unknowns,
                           newton_iterations=field.metadata.newton_iterations,
                           residual=field.metadata.residual, sup_norm=field.sup_norm, eigenvalue=eigenvalue)

    def _solve_entry(self, item) -> SolveRecord:
        k, eps = item
        try:
            _, field, eigenvalue = self._solve_field(eps)
            record = self._solve_record(field, eps, eigenvalue)
            if self.config.report.save_fields:
                relative = Path("fields") / f"u_{k}.field"
                (self.out_dir / "fields").mkdir(parents=True, exist_ok=True)
                save_field(field, self.out_dir / relative)
                record.field_file = relative.as_posix()
            return record
        except Exception as e:
            logger.error(f"Solve at eps={eps} failed: {e}", exc_info=True)
            h = self._spacing(eps)
            return SolveRecord(eps=eps, h=h, error=error_record(e, {"eps": eps, "h": h}))

    async def _run_solve(self, report: SweepReport) -> None:
        report.solves = await self._gather(self._solve_entry, list(enumerate(self._targets())))

    def _critpoints_entry(self, eps: Optional[float]):
        domain, field, eigenvalue = self._solve_field(eps)
        cs = find_critical_points(field)
        audit = poincare_hopf_audit(cs, domain, field, strict=self.config.report.strict_audit)
        return self._solve_record(field, eps, eigenvalue), cs, audit

    async def _run_critpoints(self, report: SweepReport) -> None:
        eps = self._targets()[0]
        try:
            record, cs, audit = await asyncio.to_thread(self._critpoints_entry, eps)
        except Exception as e:
            logger.error(f"Critical point search at eps={eps} failed: {e}", exc_info=True)
            h = self._spacing(eps)
            report.solves = [SolveRecord(eps=eps, h=h, error=error_record(e, {"eps": eps, "h": h}))]
            return
        report.solves = [record]
        report.critpoints = cs
        report.summary = {
            "count": cs.count,
            "index_sum": cs.index_sum,
            "audit": audit.model_dump(mode="json"),
            "by_class": {c.value: len(cs.by_class(c)) for c in CriticalClass},
        }

    # sweep

    def _compute_weak_limit(self, h: float) -> WeakLimit:
        try:
            grid = classify(self.config.domain.unpunctured(), h)
            field, eigenvalue = solve_weak_limit(grid, self.nl)
            return WeakLimit(field=field, eigenvalue=eigenvalue, critset=find_critical_points(field))
        except Exception as e:
            logger.error(f"Weak limit at h={h} failed: {e}", exc_info=True)
            return WeakLimit(error=e)

    def _hole_saddle(self, cs: CritSet, weak: WeakLimit, P: np.ndarray, prediction: Prediction):
        """The saddle created by the hole: an unpaired saddle, nearest to the predicted point."""
        saddles = cs.by_class(CriticalClass.SADDLE)
        target = P
        if prediction.kind == PredictionKind.NONDEG_SADDLE:
            target = np.asarray(prediction.points[0])
            base = weak.critset.points if weak.critset is not None else []
            separation = min((float(np.linalg.norm(b.location - P)) for b in base), default=0.0)
            if separation > 0.0:
                try:
                    extras = persistence_match(cs, weak.critset, 0.5 * separation).extras
                    extra_saddles = [p for p in extras if p.critical_class == CriticalClass.SADDLE]
                    if extra_saddles:
                        saddles = extra_saddles
                except (PairingAmbiguous, ValueError) as e:
                    logger.warning(f"Persistence matching skipped: {e}")
        if not saddles:
            return None
        return min(saddles, key=lambda p: float(np.linalg.norm(p.location - target)))

    def _measure(self, eps: float, h: float, weak: WeakLimit) -> SweepRecord:
        domain, u_eps, _ = self._solve_field(eps)
        P = np.asarray(domain.P, dtype=np.float64)
        cs = find_critical_points(u_eps)
        audit = poincare_hopf_audit(cs, domain, u_eps, strict=self.config.report.strict_audit)
        ld = local_data_from_field(weak.field, P, self.nl, weak.eigenvalue)
        prediction = predict(ld, eps)
        record = SweepRecord(eps=eps, h=h, crit_count=cs.count, points=cs.to_json(), index_sum=cs.index_sum,
                             audit=audit, prediction=prediction, ring=cs.ring)

        saddle = self._hole_saddle(cs, weak, P, prediction)
        if saddle is not None and prediction.points:
            x = saddle.location
            predicted = min((np.asarray(p) for p in prediction.points), key=lambda p: float(np.linalg.norm(p - x)))
            record.saddle = x.tolist()
            record.predicted_saddle = predicted.tolist()
            record.err_abs = float(np.linalg.norm(x - predicted))
            record.err_rel = record.err_abs / float(np.linalg.norm(predicted - P))
            record.align_deg = offset_alignment_deg(x - P, predicted - P)
            record.saddle_value = saddle.value
            record.saddle_value_gap = abs(saddle.value - ld.u0P) / ld.u0P

        if ld.HPP is not None:
            try:
                record.expansion_error = expansion_ring_error(u_eps, weak.field, P, eps, ld.HPP)
            except (TooCloseToBoundary, TooCloseToHole) as e:
                logger.debug(f"No expansion error at eps={eps}: {e.message}")
        return record

    def _sweep_entry(self, eps: float) -> SweepRecord:
        h = self.config.grid_spacing(eps)
        start = time.perf_counter()
        try:
            weak = self._weak_limits[h]
            if weak.error is not None:
                raise weak.error
            record = self._measure(eps, h, weak)
        except Exception as e:
            logger.error(f"Sweep entry eps={eps} failed: {e}", exc_info=True)
            record = SweepRecord(eps=eps, h=h, error=error_record(e, {"eps": eps, "h": h}))
        if self.config.report.record_runtime:
            record.runtime_s = time.perf_counter() - start
        logger.info(f"Sweep entry eps={eps} done")
        return record

    def _fits(self, records: Sequence[SweepRecord]) -> list:
        usable = [r for r in records if r.error is None and r.saddle is not None and r.prediction is not None
                  and r.prediction.kind == PredictionKind.NONDEG_SADDLE]
        if not usable:
            return []
        P = np.asarray(self.config.domain.hole.P, dtype=np.float64)
        data = [(r.eps, (np.asarray(r.saddle) - P).tolist()) for r in usable]
        law = usable[0].prediction.law
        try:
            fits = [fit_rate(data, law, usable[0].prediction.exponent)]
            if law == ScalingLaw.POWER:
                fits.append(fit_exponent(data))
        except InsufficientData as e:
            logger.info(f"No rate fit: {e.message}")
            return []
        return fits

    async def _run_sweep(self, report: SweepReport) -> None:
        for h in dict.fromkeys(self.config.grid_spacing(eps) for eps in self.config.eps_list):
            self._weak_limits[h] = await asyncio.to_thread(self._compute_weak_limit, h)
        report.records = await self._gather(self._sweep_entry, self.config.eps_list)
        report.fits = self._fits(report.records)
        ok = [r for r in report.records if r.error is None]
        report.summary = {
            "crit_counts": [r.crit_count for r in ok],
            "index_sums": [r.index_sum for r in ok],
            "audits": [r.audit.verdict.value for r in ok if r.audit is not None],
        }
        first = next((r for r in ok if r.prediction is not None), None)
        if first is not None:
            report.prediction = first.prediction

    # radial-sweep

    async def _run_radial_sweep(self, report: SweepReport) -> None:
        radial = self.config.radial
        eps_list = self.config.eps_list
        try:
            u0_at_0, f_at_u0_0 = await asyncio.to_thread(radial_weak_limit, radial.N, self.nl, radial.ball_n)
        except Exception as e:
            logger.error(f"Radial weak limit failed: {e}", exc_info=True)
            report.radial = [RadialSweepEntry(eps=eps, error=error_record(e, {"N": radial.N, "eps": eps}))
                             for eps in eps_list]
            return
        report.radial = await self._gather(
            lambda eps: radial_entry(radial.N, eps, self.nl, u0_at_0, f_at_u0_0, radial.n), eps_list)
        report.summary = {"N": radial.N, "u0_at_0": u0_at_0, "f_at_u0_0": f_at_u0_0}
        try:
            report.prediction = predict_radial(radial.N, eps_list[-1], u0_at_0, f_at_u0_0)
        except HolepointError as e:
            logger.warning(f"No radial prediction: {e.message}")

    # green-verify

    def _sample_phase(self) -> float:
        """Rotation of the sample circle, drawn from the config seed within one sample spacing"""
        rng = np.random.default_rng(self.config.seed)
        return float(rng.uniform(0.0, 2.0 * np.pi / self.config.report.probes))

    def _green_entry(self, eps: float) -> PsiEpsRecord:
        h = self.config.grid_spacing(eps)
        outer = self.config.domain.unpunctured()
        try:
            return psi_eps_verify(self.config.domain.hole.P, eps, h, R=outer.R, probes=self.config.report.probes,
                                  phase=self._sample_phase())
        except Exception as e:
            logger.error(f"psi verification at eps={eps} failed: {e}", exc_info=True)
            return PsiEpsRecord(eps=eps, h=h, error=error_record(e, {"eps": eps, "h": h}))

    async def _run_green_verify(self, report: SweepReport) -> None:
        report.green = await self._gather(self._green_entry, self.config.eps_list)
        deviations = [g.deviation for g in report.green if g.error is None]
        report.summary = {
            "deviations_decreasing": all(b < a for a, b in zip(deviations, deviations[1:])),
        }

    # predict

    async def _run_predict(self, report: SweepReport) -> None:
        ld = self.config.local_data
        predictions = [predict(ld, eps) for eps in self.config.eps_list]
        report.local_data = ld
        report.prediction = predictions[-1]
        report.summary = {"predictions": [p.to_json() for p in predictions]}

    def _write(self, report: SweepReport) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        options = self.config.report
        if options.json_report:
            emit_json(report, self.out_dir / "report.json")
        if options.csv and self.config.command == Command.SWEEP:
            emit_csv(report, self.out_dir / "sweep.csv")
        if options.csv and self.config.command == Command.RADIAL_SWEEP:
            write_radial_csv(report.radial, self.out_dir / "radial.csv")
        if self.config.command == Command.PREDICT:
            path = self.out_dir / "prediction.json"
            try:
                path.write_text(json.dumps(report.summary["predictions"], indent=2, sort_keys=True) + "\n",
                                encoding="utf-8")
            except OSError as e:
                raise IoError(f"cannot write {path}: {e}", context={"path": str(path)}) from e


def run(config: ExperimentConfig, out_dir: Optional[Path] = None) -> SweepReport:
    """Execute config, write its reports to out_dir (default config.output_dir) and return the report."""
    return asyncio.run(ExperimentRunner(config, out_dir).run())
