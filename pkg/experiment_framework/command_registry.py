"""
Command Registry
Maps CLI verbs to command classes
"""
import logging
from typing import Dict, List, Optional, Type
from experiment_framework.base_command import BaseCommand

logger = logging.getLogger(__name__)


class CommandRegistry:
    """
    Registry for managing experiment commands
    """

    def __init__(self):
        """Initialize command registry"""
        self._command_classes: Dict[str, Type[BaseCommand]] = {}

    def register_command_class(self, name: str, command_class: Type[BaseCommand]):
        """
        Register a command class

        Args:
            name: CLI verb (e.g., 'simulate-prior', 'invert', 'casestudy')
            command_class: Command class (must inherit from BaseCommand)
        """
        if not issubclass(command_class, BaseCommand):
            raise ValueError(f"Command class must inherit from BaseCommand: {command_class}")

        self._command_classes[name] = command_class
        logger.debug(f"Registered command class: {name} -> {command_class.__name__}")

    def get_command(self, name: str) -> Optional[BaseCommand]:
        """
        Create a fresh command instance

        Args:
            name: CLI verb

        Returns:
            Command instance or None if not found
        """
        if name not in self._command_classes:
            logger.warning(f"Command not found: {name}")
            return None
        return self._command_classes[name](name)

    def list_commands(self) -> List[str]:
        """
        Get list of registered verbs

        Returns:
            List of verb names
        """
        return list(self._command_classes.keys())

    def is_command_registered(self, name: str) -> bool:
        return name in self._command_classes


# Global registry instance
_registry = CommandRegistry()


def get_registry() -> CommandRegistry:
    """Get global command registry"""
    return _registry


def register_command(name: str, command_class: Type[BaseCommand]):
    """
    Register a command with global registry

    Args:
        name: CLI verb
        command_class: Command class
    """
    _registry.register_command_class(name, command_class)


def get_command(name: str) -> Optional[BaseCommand]:
    """
    Get command from global registry

    Args:
        name: CLI verb

    Returns:
        Command instance or None
    """
    return _registry.get_command(name)
