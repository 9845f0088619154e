from .settings import (
    AppConfig,
    EsDefaults,
    EstimatorSettings,
    CheckSettings,
    ExperimentSettings,
    RuntimeSettings,
    load_config,
    load_defaults
)

__all__ = [
    'AppConfig',
    'EsDefaults',
    'EstimatorSettings',
    'CheckSettings',
    'ExperimentSettings',
    'RuntimeSettings',
    'load_config',
    'load_defaults'
]
