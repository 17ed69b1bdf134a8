"""
Experiment Factory - name-to-pipeline dispatch
"""

from typing import Dict, List, Optional, Type

from loguru import logger

from bohmflow.core.errors import UnknownExperiment
from bohmflow.experiments.base_experiment import BaseExperiment
from bohmflow.experiments.experiment_config import ExperimentConfig
from bohmflow.experiments.nodal_experiments import (
    ComplexPortraitExperiment, FoliationExperiment, HopfTransitionExperiment,
    NodalKinematicsExperiment, NodalTrajectoryExperiment,
)
from bohmflow.experiments.perturbed_experiments import PerturbedDiffusionExperiment, PowerLawExperiment
from bohmflow.experiments.trajectory_experiments import (
    ScatteringExperiment, TrajectoryFamiliesExperiment, TrajectoryVsNodeExperiment,
)
from bohmflow.utils.output_helper import OutputWriter


class ExperimentFactory:
    """
    Factory class for creating experiment pipelines by name.
    """

    registry: Dict[str, Type[BaseExperiment]] = {
        cls.name: cls
        for cls in (
            NodalTrajectoryExperiment,
            NodalKinematicsExperiment,
            ComplexPortraitExperiment,
            HopfTransitionExperiment,
            TrajectoryVsNodeExperiment,
            TrajectoryFamiliesExperiment,
            ScatteringExperiment,
            FoliationExperiment,
            PerturbedDiffusionExperiment,
            PowerLawExperiment,
        )
    }

    @classmethod
    def names(cls) -> List[str]:
        return list(cls.registry)

    @classmethod
    def get(cls, name: str) -> Type[BaseExperiment]:
        """
        Raises:
            UnknownExperiment: If no pipeline is registered under `name`
        """
        if name not in cls.registry:
            raise UnknownExperiment(
                f"Unknown experiment: {name}. "
                f"Available experiments: {', '.join(cls.registry)}"
            )
        return cls.registry[name]

    @classmethod
    def create(cls, config: ExperimentConfig, writer: OutputWriter,
               workers: Optional[int] = None) -> BaseExperiment:
        experiment = cls.get(config.experiment)(config, writer, workers)
        logger.debug(f"Created {experiment.name} pipeline (workers={experiment.workers})")
        return experiment

    @classmethod
    def describe(cls) -> List[Dict[str, str]]:
        """One row per experiment for `bohmflow list`."""
        return [
            {"experiment": name, "reproduces": pipeline.plot, "description": pipeline.description}
            for name, pipeline in cls.registry.items()
        ]
