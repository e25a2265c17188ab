import logging
from dataclasses import dataclass

from simonslab.core.config import resolve_properties
from simonslab.core.executor import CheckExecutor
from simonslab.core.registry import register

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckOutcome:
    """One PASS/FAIL line of a check"""
    check: str
    passed: bool
    detail: str

    def summary_line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.check} {self.detail}"


@dataclass(frozen=True)
class Table:
    """CSV table produced by a check"""
    header: tuple
    rows: tuple


class Check:
    """Base class for runnable checks (one per CLI command)"""
    name = "generic"              # Command name on the CLI
    category = "Uncategorized"    # Grouping in ``--list``
    properties = {}
    config_section = None         # YAML section merged into the check config

    @classmethod
    def register_check(cls):
        """Register this check class with the registry"""
        return register("check")(cls)

    def __init__(self, config=None, executor=None):
        self.config = resolve_properties(type(self), config)
        self.executor = executor or CheckExecutor(1)

        # Processing state
        self.output_cache = {}
        self.processing_error = None
        self.status = "Ready"

        self._init_properties()

    def _init_properties(self):
        """Expose resolved properties as attributes"""
        for name, value in self.config.items():
            setattr(self, name, value)

    def process(self):
        """Run ``execute`` and keep its outputs.

        Outputs are a dict with ``outcomes`` (list of CheckOutcome),
        ``records`` (JSON-serializable) and ``tables`` (name -> Table).
        """
        self.status = "Processing..."
        self.processing_error = None
        try:
            result = self.execute()
        except Exception as e:
            self.processing_error = str(e)
            self.status = f"Error: {str(e)[:40]}"
            logger.error("Check %s failed: %s", self.name, e)
            raise

        self.output_cache = result
        self.status = "Complete"
        return result

    def execute(self):
        """Override in subclasses; returns the outputs dict"""
        return {"outcomes": [], "records": {}, "tables": {}}
