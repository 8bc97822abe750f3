"""
Core Self-Triggered Pipeline
Shared orchestration for the command-line entry point and the tests:
invariant set -> safe time interval -> schedule -> closed-loop simulation.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from control.invariant import InvariantResult, max_invariant
from control.safetime import SafeTimeResult, safe_time
from control.system import LinearSystem, aps_model, load_system
from errors import ConfigError, EmptySet, InvSchedError, MalformedSequence
from geometry.sampling import chebyshev_center
from lp.simplex import set_default_backend
from scheduling.scheduler import Schedule, load_schedule, max_sleep_schedule, periodic_schedule
from settings.run_config import RunConfig
from simulation.disturbances import DisturbanceGenerator, load_meals
from simulation.simulator import Trajectory, run

logger = logging.getLogger(__name__)


def _companion_variant(sys: LinearSystem) -> LinearSystem:
    """Zero the (3, 3) entry of A: bottom row (0, 1, 1) becomes (0, 1, 0)"""
    if sys.n < 3:
        raise ConfigError(f"--a32-zero needs a state dimension of at least 3, system has {sys.n}")
    A = sys.A.copy()
    A[2, 2] = 0.0
    return sys.with_matrix(A=A)


class SelfTriggeredPipeline:
    """
    Self-triggered control pipeline for one run configuration.
    Results are computed on first use and cached.
    """

    def __init__(self, config: RunConfig):
        """
        Initialize the pipeline.

        Args:
            config: Validated run configuration
        """
        self.config = config
        set_default_backend(config.lp_backend)
        self._system: Optional[LinearSystem] = None
        self._invariant: Optional[InvariantResult] = None
        self._safe_time: Optional[SafeTimeResult] = None
        self._alternate: Optional[Dict] = None
        logger.debug("pipeline ready for system '%s'", config.system)

    @property
    def system(self) -> LinearSystem:
        if self._system is None:
            self._system = self._load_system()
        return self._system

    def _load_system(self) -> LinearSystem:
        cfg = self.config
        if cfg.system == "aps":
            return aps_model(companion_form=cfg.a32_zero, sample_minutes=cfg.sample_minutes)

        try:
            sys = load_system(cfg.system)
        except EmptySet as e:
            raise ConfigError(f"system file {cfg.system}: {e}") from e
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
            raise ConfigError(f"cannot load system file {cfg.system}: {e}") from e
        return _companion_variant(sys) if cfg.a32_zero else sys

    @property
    def x0(self) -> np.ndarray:
        if self.config.x0 is None:
            return np.zeros(self.system.n)
        x0 = np.asarray(self.config.x0, dtype=float).reshape(-1)
        if len(x0) != self.system.n:
            raise ConfigError(f"x0 has length {len(x0)}, system has {self.system.n} states")
        return x0

    def compute_invariant(self) -> InvariantResult:
        """Maximal robust control invariant set (cached)"""
        if self._invariant is None:
            logger.info("computing invariant set (max_iter=%d)", self.config.max_iter)
            self._invariant = max_invariant(self.system, self.config.max_iter)
        return self._invariant

    def invariant_document(self) -> Dict:
        """c_inf.json contents: the set, iteration metadata and interior radius"""
        result = self.compute_invariant()
        center, radius = chebyshev_center(result.set)
        data = result.to_dict()
        data.update({
            "bounding_box": result.set.bounding_box(),
            "chebyshev_center": center,
            "interior_radius": radius,
        })
        return data

    def compute_safe_time(self) -> SafeTimeResult:
        """Safe time interval over the cached invariant set (cached)"""
        if self._safe_time is None:
            invariant = self.compute_invariant()
            logger.info("computing safe time (j_max=%d)", self.config.j_max)
            self._safe_time = safe_time(self.system, invariant.set, self.config.j_max)
        return self._safe_time

    def build_schedule(self, alpha: int) -> Schedule:
        """
        Transmission schedule from the configured mode.

        Args:
            alpha: Certified safe time interval

        Returns:
            Schedule feasible for alpha

        Raises:
            ConfigError: the schedule is unreadable, malformed or infeasible
        """
        cfg = self.config
        if cfg.schedule.startswith("@"):
            path = cfg.schedule[1:]
            try:
                schedule = load_schedule(path, alpha)
            except MalformedSequence:
                raise
            except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
                raise ConfigError(f"cannot load schedule file {path}: {e}") from e
            schedule = Schedule(schedule.instants, alpha)
        elif cfg.schedule == "max-sleep":
            schedule = max_sleep_schedule(alpha, cfg.horizon)
        else:
            period = cfg.period if cfg.period is not None else alpha
            if period > alpha:
                raise ConfigError(f"period {period} exceeds the safe time interval {alpha}")
            schedule = periodic_schedule(alpha, cfg.horizon, period)

        if not schedule.is_feasible():
            raise ConfigError(
                f"schedule is infeasible for alpha={alpha}: it must start at 0 with gaps of at most {alpha}"
            )
        return schedule

    def disturbance_generator(self) -> DisturbanceGenerator:
        cfg = self.config
        if cfg.disturbance.startswith("meals@"):
            path = cfg.disturbance[len("meals@"):]
            try:
                return load_meals(path)
            except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
                raise ConfigError(f"cannot load meal file {path}: {e}") from e
        return DisturbanceGenerator(kind=cfg.disturbance, seed=cfg.seed)

    def simulate(self, schedule: Schedule) -> Trajectory:
        """Closed-loop run over the configured horizon"""
        c_inf = self.compute_invariant().set
        gen = self.disturbance_generator()
        try:
            gen.bind(self.system, c_inf)
        except ValueError as e:
            raise ConfigError(f"disturbance '{self.config.disturbance}': {e}") from e
        logger.info("simulating %d steps with %s disturbances", self.config.horizon, gen.kind)
        return run(self.system, c_inf, schedule, gen, self.config.horizon, self.x0)

    def alternate_form(self) -> Optional[Dict]:
        """
        Safe time of the APS model under the other A matrix (companion form
        when running the printed one, printed when running the companion
        one). The two forms certify different alphas, so both are reported.
        None unless the system is the built-in APS model.
        """
        cfg = self.config
        if cfg.system != "aps":
            return None
        if self._alternate is None:
            form = "printed" if cfg.a32_zero else "companion"
            sys = aps_model(companion_form=not cfg.a32_zero, sample_minutes=cfg.sample_minutes)
            logger.info("computing safe time of the %s-form APS model", form)
            try:
                invariant = max_invariant(sys, cfg.max_iter)
                if not invariant.converged:
                    self._alternate = {"form": form, "alpha": None, "converged": False}
                    return self._alternate
                result = safe_time(sys, invariant.set, cfg.j_max)
            except InvSchedError as e:
                logger.warning("%s-form comparison failed: %s", form, e)
                self._alternate = {"form": form, "alpha": None, "error": str(e)}
                return self._alternate
            self._alternate = {"form": form, "alpha": result.alpha, "converged": True, "hit_cap": result.hit_cap}
        return self._alternate


# Cached instance for reuse
_pipeline_instance: Optional[SelfTriggeredPipeline] = None


def get_pipeline(config: RunConfig) -> SelfTriggeredPipeline:
    """
    Get or create the pipeline for a configuration.
    Reuses the instance (and its cached sets) while the configuration is unchanged.

    Args:
        config: Run configuration

    Returns:
        SelfTriggeredPipeline instance
    """
    global _pipeline_instance

    if _pipeline_instance is None or _pipeline_instance.config != config:
        _pipeline_instance = SelfTriggeredPipeline(config)

    return _pipeline_instance


def output_path(config: RunConfig, name: str) -> Path:
    return Path(config.output_dir) / name
