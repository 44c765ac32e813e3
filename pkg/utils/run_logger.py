import json
import os

from utils.time_utils import timestamp


class RunLogger:
    """Appends timestamped run events to a JSON array file."""

    def __init__(self, file_path="run_log.json"):
        self.file_path = file_path
        if not os.path.exists(self.file_path):
            with open(self.file_path, "w") as f:
                json.dump([], f)  # Initialize empty list

    def _append(self, entry):
        entry["time"] = timestamp()
        with open(self.file_path, "r+") as f:
            data = json.load(f)
            data.append(entry)
            f.seek(0)
            json.dump(data, f, indent=2, default=_to_json)
            f.truncate()

    def log(self, event: str, details=None):
        self._append({"event": event, "details": details or {}})

    def log_run_start(self, command: str, settings=None):
        self._append({"event": "run_start", "command": command, "settings": settings or {}})

    def log_run_end(self, status: str = "ok", details=None):
        self._append({"event": "run_end", "status": status, "details": details or {}})

    def entries(self):
        with open(self.file_path, "r") as f:
            return json.load(f)


def _to_json(value):
    # numpy scalars and arrays show up in result summaries
    if hasattr(value, "tolist"):
        return value.tolist()
    return str(value)
