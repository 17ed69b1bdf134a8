"""
Experiment Runner - runs one configured experiment and writes its manifest
"""

import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from loguru import logger

from bohmflow import __version__
from bohmflow.config.config_manager import config as runtime_config
from bohmflow.core.errors import BohmflowError, ExperimentFailed, UnknownExperiment
from bohmflow.experiments.experiment_config import ExperimentConfig
from bohmflow.experiments.registry import ExperimentFactory
from bohmflow.utils.output_helper import OutputWriter, canonical_json, sha256_text


@dataclass
class RunManifest:
    """
    Provenance of one run. Every field except wall_time is a pure function
    of the resolved config, so identical configs give identical digests.
    """

    experiment: str
    config_digest: str
    tool_version: str
    wall_time: float
    files: List[Dict[str, str]] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)

    def digests(self) -> Dict[str, str]:
        return {entry["path"]: entry["sha256"] for entry in self.files}

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def config_digest(config: ExperimentConfig) -> str:
    return sha256_text(canonical_json(config.resolved()))


def run_experiment(config: ExperimentConfig, out_dir: Union[str, Path, None] = None,
                   workers: Optional[int] = None) -> RunManifest:
    """
    Dispatch `config` to its pipeline, write every output and manifest.json.

    The output directory is `out_dir`, else the config's output_directory,
    else <output.directory>/<experiment>.

    Raises:
        UnknownExperiment: If the experiment name is not registered
        ExperimentFailed: On any numerical failure inside the pipeline
    """
    pipeline = ExperimentFactory.get(config.experiment)
    directory = Path(out_dir or config.output_directory
                     or Path(runtime_config.output_directory) / config.experiment)
    writer = OutputWriter(directory)
    experiment = ExperimentFactory.create(config, writer, workers)

    start = time.perf_counter()
    try:
        summary = experiment.run()
    except UnknownExperiment:
        raise
    except BohmflowError as e:
        logger.error(f"Experiment {config.experiment} failed: {e}")
        failure = ExperimentFailed(f"{config.experiment}: {e}")
        failure.context = {"experiment": config.experiment, **e.context}
        raise failure from e
    wall_time = time.perf_counter() - start

    manifest = RunManifest(
        experiment=pipeline.name,
        config_digest=config_digest(config),
        tool_version=__version__,
        wall_time=wall_time,
        files=writer.digests(),
        config=config.resolved(),
        summary=summary or {},
    )
    (directory / "manifest.json").write_text(canonical_json(manifest.to_dict()), encoding="utf-8")
    logger.info(f"Wrote {directory / 'manifest.json'} ({len(manifest.files)} files, {wall_time:.2f}s)")
    return manifest
