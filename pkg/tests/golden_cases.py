"""Golden-file cases; regenerate with ``python3 tests/golden_cases.py``."""

import json
from pathlib import Path

from spencer_mirror.config import RunConfig
from spencer_mirror.report import cohomology, mirror_report, verify_algebra

GOLDEN = Path(__file__).parent / "golden"

CASES = {
    "verify_so3": (verify_algebra, {"algebra": "so3", "max_sym_degree": 3, "c_str_samples": 4096}),
    "verify_su3": (verify_algebra, {"algebra": "su3", "max_sym_degree": 3, "c_str_samples": 4096}),
    "verify_heisenberg3": (verify_algebra, {"algebra": "heisenberg3", "max_sym_degree": 3, "c_str_samples": 4096}),
    "mirror_ico1_p2": (mirror_report, {"mesh": {"subdivisions": 1}, "max_sym_degree": 2, "c_str_samples": 4096}),
    "mirror_ico1_band_curvature": (mirror_report, {
        "mesh": {"subdivisions": 1}, "lambda": {"kind": "radial", "profile": "band:1"},
        "metric": "curvature", "max_sym_degree": 2, "c_str_samples": 4096}),
    "cohomology_zero_lambda": (cohomology, {
        "mesh": {"subdivisions": 1}, "lambda": {"kind": "vector", "coeffs": [0, 0, 0]},
        "metric": "unweighted", "max_sym_degree": 3, "c_str_samples": 4096}),
}

# fields that legitimately differ between environments
VOLATILE = (("measurements", "backend"),)


def run_case(name):
    fn, cfg = CASES[name]
    data = fn(RunConfig.from_dict(cfg)).without_timings()
    for outer, inner in VOLATILE:
        data.get(outer, {}).pop(inner, None)
    return data


if __name__ == "__main__":
    GOLDEN.mkdir(exist_ok=True)
    for case in CASES:
        (GOLDEN / f"{case}.json").write_text(json.dumps(run_case(case), indent=2, sort_keys=True) + "\n")
        print("wrote", case)
