import logging
from concurrent.futures import ThreadPoolExecutor

logger = logging.getLogger(__name__)


class CheckExecutor:
    """Runs independent evaluation cells and checks, keeping input order"""

    def __init__(self, workers=1):
        self.workers = max(1, int(workers))

    def map(self, fn, items):
        """Apply ``fn`` to every item; results come back in input order"""
        items = list(items)
        if self.workers == 1 or len(items) < 2:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, items))

    def execute_checks(self, checks):
        """Process every check and summarize.

        Returns ``(success, message)``; success is True only when every
        outcome of every check passed.
        """
        if not checks:
            return False, "No checks to run"

        outcomes = []
        for check in checks:
            logger.info("Running check %s", check.name)
            result = check.process()
            outcomes.extend(result.get("outcomes", []))
            logger.info("Check %s: %s", check.name, check.status)

        failed = [o for o in outcomes if not o.passed]
        if not outcomes:
            return False, "No outcomes produced"
        if failed:
            return False, f"{len(failed)} of {len(outcomes)} outcomes failed"
        return True, f"All {len(outcomes)} outcomes passed"
