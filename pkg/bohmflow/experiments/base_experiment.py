"""
Base Experiment - foundation for the experiment pipelines
Provides settings resolution, state loading, output writing and the
optional process-pool fan-out every pipeline shares.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, ClassVar, Dict, Iterable, List, Optional

import numpy as np
from loguru import logger

from bohmflow.config.config_manager import config as runtime_config
from bohmflow.core.chaos import ScatteringSettings
from bohmflow.core.guidance import IntegratorSettings
from bohmflow.core.manifolds import ManifoldSettings
from bohmflow.core.wavefunction import Superposition, base_state, load_state_spec
from bohmflow.experiments.experiment_config import ExperimentConfig
from bohmflow.utils.output_helper import OutputWriter
from bohmflow.utils.svg_helper import SvgPlot


class BaseExperiment:
    """
    Base pipeline providing common functionality for all experiments.

    Subclasses set `name`, `plot` and `description` and implement
    `execute()`, which writes its files through `self.writer` and returns
    a JSON-ready summary for the run manifest.
    """

    name: ClassVar[str] = ""
    plot: ClassVar[str] = ""
    description: ClassVar[str] = ""

    def __init__(self, config: ExperimentConfig, writer: OutputWriter, workers: Optional[int] = None):
        """
        Initialize the experiment.

        Args:
            config: Resolved experiment configuration
            writer: Output writer bound to the run directory
            workers: Process-pool size; defaults to execution.workers
        """
        self.config = config
        self.writer = writer
        execution = config.section("execution")
        self.workers = int(workers or execution.get("workers") or runtime_config.workers)
        output = config.section("output")
        self.previews = bool(output.get("previews", runtime_config.previews))

    # ============= Settings =============

    @property
    def integrator_settings(self) -> IntegratorSettings:
        return IntegratorSettings.from_config(**self.config.section("integrator"))

    @property
    def manifold_settings(self) -> ManifoldSettings:
        overrides = self.config.section("manifold")
        overrides.update(self.config.section("hopf"))
        return ManifoldSettings.from_config(**overrides)

    @property
    def scattering_settings(self) -> ScatteringSettings:
        return ScatteringSettings.from_config(**self.config.section("scattering"))

    def load_state(self) -> Superposition:
        """State file from the config, or the base state."""
        path = self.config.state_path()
        if path is None:
            return base_state()
        logger.info(f"Using state file {path}")
        return load_state_spec(path)

    def param(self, key: str) -> Any:
        return self.config[key]

    def vector(self, key: str) -> np.ndarray:
        return np.asarray(self.config[key], dtype=float)

    # ============= Execution =============

    def map(self, fn: Callable[[Any], Any], items: Iterable[Any]) -> List[Any]:
        """
        Apply `fn` to every item, in a process pool when workers > 1.

        Results come back in submission order either way. `fn` must be a
        picklable module-level callable (or a partial of one).
        """
        items = list(items)
        if self.workers <= 1 or len(items) <= 1:
            return [fn(item) for item in items]
        logger.info(f"{self.name}: fanning {len(items)} tasks out to {self.workers} workers")
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, items))

    def preview(self, name: str, plot: SvgPlot) -> None:
        if self.previews:
            self.writer.write_text(name, plot.render())

    def execute(self) -> Dict[str, Any]:
        raise NotImplementedError

    def run(self) -> Dict[str, Any]:
        logger.info(f"Running experiment {self.name}")
        summary = self.execute()
        logger.info(f"Experiment {self.name} finished ({len(self.writer.files)} files)")
        return summary
