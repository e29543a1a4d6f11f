"""Containers for injection."""

import sys
from typing import Any

import loguru
from dependency_injector import containers, providers
from loguru import logger

from src.logger.log import DevelopFormatter
from src.service.solvers import Reconstructor
from src.service.workflow import WorkflowService
from src.settings import Settings


class LoggerInitializer:
    """Configures the loguru sink used by every command."""

    def __init__(self, component_name: str = "slm-ghost", level: str = "INFO") -> None:
        """Initialize the logger initializer.

        Args:
            component_name (str): Name shown in every log line.
            level (str): Minimum level written to stderr.
        """
        self.develop_fmt = DevelopFormatter(component_name)
        self.level = level

    def init_logger(self) -> "loguru.Logger":
        """Initialize and configure the logger.

        Returns:
            loguru.Logger: The configured logger.
        """
        logger.remove()
        logger.add(sys.stderr, format=self.develop_fmt, level=self.level)  # type: ignore
        return logger


class AppContainer(containers.DeclarativeContainer):
    """Dependency injection container for managing application components.

    Args:
        containers.DeclarativeContainer: The base class for the dependency injection container.
    """

    # Get the configuration
    config = providers.Configuration()
    settings: providers.Singleton[Settings] = providers.Singleton(Settings)

    reconstructor: providers.Singleton[Reconstructor] = providers.Singleton(Reconstructor, settings=settings)

    workflow: providers.Factory[WorkflowService] = providers.Factory(
        WorkflowService,
        reconstructor=reconstructor,
        settings=settings,
    )

    # Singleton and Callable provider for the Logger resource.
    logger_initializer: providers.Singleton[LoggerInitializer] = providers.Singleton(
        LoggerInitializer,
        component_name=config.app_name,
        level=config.log_level,
    )
    logger = providers.Callable(lambda initializer: initializer.init_logger(), logger_initializer)


def init_app_container(modules_to_wire: list[Any], config: Settings) -> AppContainer:
    """Initialize the app container.

    Args:
        modules_to_wire (list[Any]): The modules to wire.
        config (Settings): The configuration.

    Returns:
        AppContainer: The container.
    """
    container = AppContainer()
    json_config = config.model_dump(mode="json")
    container.config.from_dict(json_config)
    container.settings.override(providers.Object(config))
    container.wire(modules_to_wire)
    container.logger()
    return container
