import time
from typing import Any, Dict, Optional


class Profiler:
    """Wall-clock and process-time accounting around one solver call."""

    def __init__(self):
        self._start_time: Optional[float] = None
        self._start_cpu: Optional[float] = None
        self.metrics: Dict[str, Any] = {}

    def start(self) -> None:
        self._start_cpu = time.process_time()
        self._start_time = time.perf_counter()

    def stop(self) -> Dict[str, Any]:
        if self._start_time is None:
            raise RuntimeError("Profiler.stop() called before start().")
        time_elapsed = time.perf_counter() - self._start_time
        cpu_elapsed = time.process_time() - self._start_cpu
        self.metrics = {
            "time": time_elapsed,  # seconds
            "cpu_time": cpu_elapsed,  # seconds
        }
        return self.metrics
