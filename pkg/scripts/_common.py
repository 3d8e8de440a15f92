import json
from pathlib import Path

from credal.cli import RunConfig

ROOT = Path(__file__).resolve().parents[1]


def load_config(name: str, **changes) -> RunConfig:
    d = json.loads((ROOT / "scripts" / "configs" / name).read_text())
    if "csv" in d:
        d["csv"] = str(ROOT / d["csv"])
    d["out"] = str(ROOT / d["out"])
    return RunConfig.from_dict({**d, **changes})
