import importlib
import inspect
import logging
import pkgutil
from typing import Dict, List, Optional, Type

logger = logging.getLogger(__name__)


class Registry:
    """Registry for named classes (kernels, surfaces, level sets, checks)"""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(Registry, cls).__new__(cls)
            cls._instance._types = {}
            cls._instance._categories = {}
            cls._instance._discovered = set()
        return cls._instance

    def register(self, kind, cls):
        """Register a class under its ``name`` for the given kind"""
        name = getattr(cls, "name", cls.__name__)
        category = getattr(cls, "category", "Uncategorized")

        self._types.setdefault(kind, {})[name] = cls

        categories = self._categories.setdefault(kind, {})
        if category not in categories:
            categories[category] = []

        if cls not in categories[category]:
            categories[category].append(cls)

        return cls

    def discover(self, package_name, base_class):
        """Import every module of a package so that its classes register themselves"""
        if package_name in self._discovered:
            return

        package = importlib.import_module(package_name)
        logger.debug("Scanning for plug-ins in %s", package.__path__)

        for module_info in pkgutil.iter_modules(package.__path__):
            if module_info.name.startswith("_"):
                continue

            full_module_name = f"{package_name}.{module_info.name}"
            module = importlib.import_module(full_module_name)

            for _, obj in inspect.getmembers(module, inspect.isclass):
                if (obj.__module__ == module.__name__ and
                        issubclass(obj, base_class) and obj is not base_class):
                    logger.debug("Found plug-in %s in %s", getattr(obj, "name", obj), full_module_name)

        self._discovered.add(package_name)

    def get_types(self, kind) -> Dict[str, Type]:
        """Get all registered classes of a kind"""
        _ensure_discovered(kind)
        return dict(self._types.get(kind, {}))

    def get_categories(self, kind) -> Dict[str, List[Type]]:
        """Get registered classes of a kind organized by category"""
        _ensure_discovered(kind)
        return {k: list(v) for k, v in self._categories.get(kind, {}).items()}

    def get_class(self, kind, name) -> Optional[Type]:
        """Get a class by kind and name"""
        _ensure_discovered(kind)
        return self._types.get(kind, {}).get(name)


# Create a singleton instance
registry = Registry()


def _ensure_discovered(kind):
    # Checks live in a plug-in package; the other kinds register on import.
    if kind == "check":
        from simonslab.core.check import Check
        registry.discover("simonslab.checks", Check)


def register(kind):
    """Class decorator registering a class under ``kind``"""
    def decorator(cls):
        return registry.register(kind, cls)
    return decorator


# Helper function to get all classes of a kind
def get_all(kind):
    return registry.get_types(kind)


# Helper function to get all categories of a kind
def get_categories(kind):
    return registry.get_categories(kind)


# Helper function to get a class by kind and name
def get_class(kind, name):
    return registry.get_class(kind, name)
