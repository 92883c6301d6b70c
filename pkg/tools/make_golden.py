"""Regenerate the golden trajectory CSVs under tests/golden/.

Each case is a ``morp sim`` invocation on a built-in scenario with a short
horizon.  The argument lists are stored in ``cases.json`` so the tests
replay exactly the same commands.
"""

import json
from pathlib import Path

from morp.cli import main

GOLDEN = Path(__file__).resolve().parents[1] / "tests" / "golden"

CASES = {
    "remark4": ["remark4", "--horizon", "2"],
    "remark8_phi_not_theta": ["remark8_phi_not_theta", "--horizon", "2"],
    "remark8_theta_not_phi": ["remark8_theta_not_phi", "--horizon", "2"],
    "remark8_intersection": ["remark8_intersection", "--horizon", "2"],
    "experiment1": ["experiment1", "--horizon", "1"],
    "example2": ["example2", "--horizon", "0.05"],
    "example3": ["example3", "--horizon", "2"],
}

if __name__ == "__main__":
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for name, argv in CASES.items():
        code = main(["sim", *argv, "--csv", str(GOLDEN / f"{name}.csv"),
                     "--summary", str(GOLDEN / f"{name}.summary.json")])
        assert code == 0, name
        print("wrote", name)
    (GOLDEN / "cases.json").write_text(json.dumps(CASES, indent=1) + "\n")
