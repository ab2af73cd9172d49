"""Synthetic traffic-sensor datasets shaped like per-lane flow and speed feeds."""
from __future__ import annotations

import json
import os
import random

DEFAULT_LANES = 1000
DEFAULT_STEPS = 68  # 1000 lanes x 68 minutes = 68,000 rows per file


def generate(lanes: int = DEFAULT_LANES, steps: int = DEFAULT_STEPS, seed: int = 7):
    """Yield ``(flow_record, speed_record)`` pairs sharing lane id and time."""
    rng = random.Random(seed)
    for step in range(steps):
        minute = 14 * 60 + step
        clock = f"{minute // 60 % 24:02d}:{minute % 60:02d}:00"
        for lane in range(lanes):
            lane_id = f"lane{lane + 1}"
            flow = {"id": lane_id, "flow": rng.randint(0, 3000), "time": clock}
            speed = {"id": lane_id, "speed": round(rng.uniform(20.0, 130.0), 1), "time": clock}
            yield flow, speed


def write_datasets(out_dir: str, lanes: int = DEFAULT_LANES, steps: int = DEFAULT_STEPS,
                   seed: int = 7) -> tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    flow_path = os.path.join(out_dir, "flow.ndjson")
    speed_path = os.path.join(out_dir, "speed.ndjson")
    with open(flow_path, "w", encoding="utf-8") as ff, open(speed_path, "w", encoding="utf-8") as sf:
        for flow, speed in generate(lanes, steps, seed):
            ff.write(json.dumps(flow) + "\n")
            sf.write(json.dumps(speed) + "\n")
    return flow_path, speed_path
