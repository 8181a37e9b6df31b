"""Regenerate figures/sample_run: compact runs the figure tests render from.

Deterministic: fixed scenario dicts, no timestamps consumed downstream.
"""

import shutil
import sys
from pathlib import Path

from vortexsheet.runio import compare_runs, execute
from vortexsheet.scenarios import scenario_from_dict

ROOT = Path(__file__).resolve().parents[1] / "figures" / "sample_run"


def amplitude_dict(name, n, **integrator):
    base = {
        "t_end": 0.5,
        "dt_fixed": 2.0e-3,
        "snapshot_stride": 10,
        "store_stride": 5,
        "strip_floor": 0.0,
    }
    base.update(integrator)
    return {
        "name": name,
        "mode": "amplitude_only",
        "resolution": n,
        "amplitude": {
            "background": 0.0,
            "profile": {"kind": "modes", "modes": [{"k": 1, "amp": 1.0}]},
        },
        "integrator": base,
        "analyses": {"characteristics": {"n_seeds": 16, "radius": 0.9}},
    }


def main():
    if ROOT.exists():
        shutil.rmtree(ROOT)
    ROOT.mkdir(parents=True)

    execute(
        scenario_from_dict(
            {
                "name": "sheet_snapshots",
                "mode": "full_sheet",
                "resolution": 128,
                "amplitude": {
                    "background": 0.0,
                    "profile": {"kind": "modes", "modes": [{"k": 1, "amp": 1.0}]},
                },
                "curve": {"kind": "circle", "k": 1, "amp": 0.1},
                "integrator": {
                    "t_end": 0.5,
                    "dt_fixed": 2.0e-3,
                    "snapshot_stride": 10,
                    "store_stride": 5,
                },
            }
        ),
        ROOT,
    )

    execute(scenario_from_dict(amplitude_dict("amplitude_run", 256)), ROOT)

    execute(
        scenario_from_dict(
            {
                "name": "linear_rates",
                "mode": "linear_kh",
                "resolution": 128,
                "linear": {
                    "modes": [
                        {"k": k, "amp1": 1.0e-6, "amp2": -1.0e-6} for k in (1, 2, 3, 4)
                    ]
                },
                "integrator": {
                    "t_end": 2.0,
                    "dt_fixed": 1.0e-2,
                    "snapshot_stride": 4,
                    "store_stride": 2,
                },
                "analyses": {"growth_rates": {"field": "eps1", "modes": [1, 2, 3, 4]}},
            }
        ),
        ROOT,
    )

    family = []
    for n in (64, 128, 256):
        d = {
            "name": f"tail_n{n}",
            "mode": "amplitude_only",
            "resolution": n,
            "amplitude": {
                "background": 0.0,
                "profile": {"kind": "sobolev_tail", "s": 2.0, "seed": 11, "shift": 0.25},
            },
            "integrator": {
                "t_end": 0.05,
                "dt_fixed": 0.05 / max(8, n // 16),
                "strip_floor": 0.0,
                "sobolev_orders": [2.0, 2.5, 3.0],
            },
        }
        execute(scenario_from_dict(d), ROOT)
        family.append(ROOT / f"tail_n{n}" / "manifest.json")
    compare_runs(family, ROOT / "refinement")
    print(f"sample run written to {ROOT}")


if __name__ == "__main__":
    sys.exit(main())
