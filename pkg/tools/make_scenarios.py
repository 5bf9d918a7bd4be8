"""Regenerate the bundled scenario files under src/mpvideo/scenarios/."""

from pathlib import Path

import yaml

OUT = Path(__file__).resolve().parent.parent / "src" / "mpvideo" / "scenarios"
SCHEDULER_TAGS = {"mincost": "min_cost", "wrr": "wrr", "edcld": "edcld", "sfl": "sfl"}


def write(name: str, doc: dict) -> None:
    (OUT / f"{name}.yaml").write_text(yaml.safe_dump({"name": name, **doc}, sort_keys=False))


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for case in range(1, 10):
        for tag, cc in (("delaybbr", "delay_bbr"), ("baseline", "baseline_bbr")):
            write(f"t1c{case}_{tag}_x3", {
                "topology": {"table": 1, "case": case},
                "duration_s": 300,
                "seed": 1,
                "flows": [{"cc": cc, "path": "L1", "start_s": s} for s in (0, 40, 80)],
            })
    write("t1c2_delaybbr_aimd", {
        "topology": {"table": 1, "case": 2},
        "duration_s": 300,
        "seed": 1,
        "flows": [
            {"cc": "delay_bbr", "path": "L1", "start_s": 0},
            {"cc": "aimd", "path": "L1", "start_s": 50, "stop_s": 200},
        ],
    })
    for case in range(1, 11):
        for tag, sched in SCHEDULER_TAGS.items():
            write(f"t3c{case}_{tag}", {
                "topology": {"table": 3, "case": case},
                "duration_s": 300,
                "seed": 1,
                "flows": [{"cc": "delay_bbr", "path": p, "start_s": 0} for p in ("L1", "L1", "L2")],
                "session": {"scheduler": sched, "paths": ["L1", "L2"], "cc": "delay_bbr"},
            })


if __name__ == "__main__":
    main()
