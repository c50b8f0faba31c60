"""Suites that turn a :class:`RunConfig` into a versioned JSON report."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from spencer_mirror import _kernels
from spencer_mirror.complex import (
    SpencerDifferential,
    _scaled_blocks,
    assemble_mirror_difference,
    assemble_spencer_differential,
    form_degree_hodge_numbers,
    harmonic_dimension,
    hodge_laplacian,
    mass_diagonal,
    max_abs,
    weight_field,
)
from spencer_mirror.config import RunConfig
from spencer_mirror.dec import betti_numbers, mass_matrices, metric_equivalence_constants
from spencer_mirror.lie_core import LieAlgebra, c_str, is_nilpotent
from spencer_mirror.spencer_op import (
    delta_generator_value,
    delta_generator_value_alt,
    delta_matrix,
    delta_on_generator,
    nilpotency_residual,
    operator_norm_bound_check,
)

SCHEMA_VERSION = 1
TIMING_KEYS = ("timings",)


@dataclass
class Report:
    """A run report; every field holds JSON-native data."""

    kind: str
    config: dict
    identities: list = field(default_factory=list)
    measurements: dict = field(default_factory=dict)
    bounds: list = field(default_factory=list)
    per_sign: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> Report:
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data.get('schema_version')!r}")
        return cls(**data)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def loads(cls, text: str) -> Report:
        return cls.from_json(json.loads(text))

    def passed(self) -> bool:
        return all(item["pass"] for item in self.identities if item.get("asserted", True))

    def failures(self) -> list[str]:
        return [i["name"] for i in self.identities if i.get("asserted", True) and not i["pass"]]

    def without_timings(self) -> dict:
        d = self.to_json()
        for k in TIMING_KEYS:
            d.pop(k, None)
        return d

    def h_table_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sign", "degree", "h"])
        for sign, data in self.per_sign.items():
            for n, h in enumerate(data["h"]):
                w.writerow([sign, n, h])
        return buf.getvalue()


def _identity(name, residual, tol, *, asserted=True, exact=False) -> dict:
    residual = float(residual)
    ok = residual == 0.0 if exact else residual < tol
    return {"name": name, "residual": residual, "tolerance": 0.0 if exact else tol,
            "pass": bool(ok), "asserted": asserted}


def _equality(name, a, b) -> dict:
    return {"name": name, "values": [a, b], "pass": a == b, "asserted": True}


def compare_reports(a: dict, b: dict, slack: float = 1e-9, path: str = "") -> list[str]:
    """Differences between two report dicts, ignoring timings, with numeric slack."""
    diffs = []
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b)):
            if k in TIMING_KEYS and path == "":
                continue
            if k not in a or k not in b:
                diffs.append(f"{path}/{k}: missing on one side")
            else:
                diffs += compare_reports(a[k], b[k], slack, f"{path}/{k}")
    elif isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            diffs.append(f"{path}: length {len(a)} != {len(b)}")
        else:
            for i, (x, y) in enumerate(zip(a, b)):
                diffs += compare_reports(x, y, slack, f"{path}[{i}]")
    elif isinstance(a, bool) or isinstance(b, bool) or isinstance(a, str) or a is None or b is None:
        if a != b:
            diffs.append(f"{path}: {a!r} != {b!r}")
    elif isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if isinstance(a, int) and isinstance(b, int):
            if a != b:
                diffs.append(f"{path}: {a} != {b}")
        elif abs(a - b) > slack * max(1.0, abs(a), abs(b)):
            diffs.append(f"{path}: {a!r} != {b!r}")
    elif a != b:
        diffs.append(f"{path}: {a!r} != {b!r}")
    return diffs


# --- random inputs --------------------------------------------------------------------


def random_unit_duals(dim: int, count: int, rng) -> np.ndarray:
    z = rng.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


# --- verify-algebra -----------------------------------------------------------------------


def verify_algebra(cfg: RunConfig, algebra: LieAlgebra | None = None) -> Report:
    t0 = time.perf_counter()
    a = cfg.build_algebra() if algebra is None else algebra
    tol = cfg.tolerances.identity
    rng = np.random.default_rng(cfg.seed)
    n, P = a.dim, cfg.max_sym_degree
    rep = Report("verify-algebra", cfg.to_dict())
    rep.measurements["algebra"] = {"name": a.name, "dim": n, "nilpotent": is_nilpotent(a)}
    rep.identities.append(_identity("antisymmetry", a.antisymmetry_residual(), tol))
    rep.identities.append(_identity("jacobi", a.jacobi_residual(), tol))

    worst = 0.0
    for _ in range(500):
        lam, v, w1, w2 = rng.standard_normal((4, n))
        worst = max(worst, abs(delta_generator_value(a, lam, v, w1, w2)
                               - delta_generator_value_alt(a, lam, v, w1, w2)))
    rep.identities.append(_identity("generator_forms_agree", worst, tol))

    lams = random_unit_duals(n, 20, rng)
    worst_p1 = 0.0
    for lam in lams[:5]:
        m = delta_matrix(a, lam, 1).matrix
        for j in range(n):
            worst_p1 = max(worst_p1, float(np.abs(m[:, j] - delta_on_generator(a, lam, np.eye(n)[j]).coeffs).max()))
    rep.identities.append(_identity("degree_one_matches_generator", worst_p1, tol))

    mirror, linear = 0.0, 0.0
    for p in range(1, P + 1):
        for lam in lams:
            plus, minus = delta_matrix(a, lam, p).matrix, delta_matrix(a, -lam, p).matrix
            mirror = max(mirror, max_abs(minus + plus))
        l1, l2 = lams[0], lams[1]
        combo = delta_matrix(a, 2.0 * l1 - 0.5 * l2, p).matrix
        ref = 2.0 * delta_matrix(a, l1, p).matrix - 0.5 * delta_matrix(a, l2, p).matrix
        linear = max(linear, max_abs(combo - ref))
    rep.identities.append(_identity("mirror_antisymmetry", mirror, 0.0, exact=True))
    rep.identities.append(_identity("linearity_in_lambda", linear, tol))

    nil = {}
    for p in range(1, max(P - 1, 1)):
        nil[str(p)] = max(nilpotency_residual(a, lam, p) for lam in lams[:5])
    rep.measurements["nilpotency_residuals"] = nil
    for p, r in nil.items():
        rep.identities.append(_identity(f"nilpotency_p{p}", r, 1e-10, asserted=is_nilpotent(a)))

    c_brute = c_str(a, "brute_force", samples=cfg.c_str_samples, seed=cfg.seed)
    ok = True
    for p in range(1, P + 1):
        checks = [operator_norm_bound_check(a, lam, p, c_value=c_brute) for lam in lams]
        worst_check = max(checks, key=lambda c: c.measured_norm - c.bound)
        all_ok = all(c.passed for c in checks)
        ok = ok and all_ok
        rep.bounds.append({**worst_check.to_json(), "samples": len(checks), "all_pass": all_ok})
    rep.identities.append({"name": "operator_norm_bound", "pass": ok, "asserted": True})
    rep.timings["total"] = time.perf_counter() - t0
    return rep


# --- constants ----------------------------------------------------------------------------

# values quoted for su(n) in a Frobenius-type normalization; recorded, never asserted
CLAIMED_C_STR = {"su2": math.sqrt(2.0), "su3": math.sqrt(2.0)}


def constants(cfg: RunConfig, algebra: LieAlgebra | None = None) -> Report:
    t0 = time.perf_counter()
    a = cfg.build_algebra() if algebra is None else algebra
    rep = Report("constants", cfg.to_dict())
    formula = c_str(a, "formula")
    brute = c_str(a, "brute_force", samples=cfg.c_str_samples, seed=cfg.seed)
    rep.measurements["c_str"] = {
        "formula": formula,
        "brute_force": brute,
        "samples": cfg.c_str_samples,
        "claimed": CLAIMED_C_STR.get(a.name),
        "claimed_asserted": False,
    }
    rng = np.random.default_rng(cfg.seed)
    lams = random_unit_duals(a.dim, 20, rng)
    ok = True
    for p in range(1, cfg.max_sym_degree + 1):
        checks = [operator_norm_bound_check(a, lam, p, c_value=brute) for lam in lams]
        worst = max(checks, key=lambda c: c.measured_norm - c.bound)
        ok = ok and all(c.passed for c in checks)
        rep.bounds.append({**worst.to_json(), "samples": len(checks),
                           "all_pass": all(c.passed for c in checks)})
    rep.identities.append({"name": "operator_norm_bound", "pass": ok, "asserted": True})

    try:
        mesh = cfg.mesh.build()
        field_ = cfg.lam.build(a)
        fib = (a.dim, cfg.max_sym_degree)
        masses = {s: np.concatenate(mass_matrices(mesh, weight_field(mesh, s, field_, cfg.mesh.sphere_radius()), *fib))
                  for s in ("constraint", "curvature", "unweighted")
                  if s != "curvature" or cfg.mesh.sphere_radius() is not None}
        eq = {}
        for s in masses:
            if s != "unweighted":
                c1, c2 = metric_equivalence_constants(masses["unweighted"], masses[s])
                eq[f"unweighted->{s}"] = [c1, c2]
        if "curvature" in masses:
            c1, c2 = metric_equivalence_constants(masses["constraint"], masses["curvature"])
            eq["constraint->curvature"] = [c1, c2]
        rep.measurements["metric_equivalence"] = eq
    except ValueError as exc:
        rep.flags.append(f"metric_equivalence_skipped: {exc}")
    rep.timings["total"] = time.perf_counter() - t0
    return rep


# --- complex runs ---------------------------------------------------------------------------


@dataclass
class _Inputs:
    cfg: RunConfig
    algebra: LieAlgebra
    mesh: object
    field: object


def _inputs(cfg: RunConfig) -> _Inputs:
    a = cfg.build_algebra()
    mesh = cfg.mesh.build()
    mesh.check_closed_oriented()
    return _Inputs(cfg, a, mesh, cfg.lam.build(a))


def _mass(inp: _Inputs, field_, index) -> np.ndarray:
    w = weight_field(inp.mesh, inp.cfg.metric, field_, inp.cfg.mesh.sphere_radius())
    return mass_diagonal(inp.mesh, index, w)


def _run_sign(inp: _Inputs, field_, tag: str):
    t0 = time.perf_counter()
    cfg = inp.cfg
    policy = cfg.tolerances.policy()
    diff = assemble_spencer_differential(inp.mesh, inp.algebra, field_, cfg.max_sym_degree)
    mass = _mass(inp, field_, diff.index)
    defect = max_abs(diff.matrix @ diff.matrix)
    counts = [harmonic_dimension(diff, mass, n, policy, complex_defect=defect)
              for n in range(diff.index.top_degree + 1)]
    h = [c.dim for c in counts]
    h_form = form_degree_hodge_numbers(diff, mass, policy)
    data = {
        "lambda_tag": tag,
        "lambda": field_.describe(),
        "h": h,
        "chi": int(sum((-1) ** n * x for n, x in enumerate(h))),
        "h_form": h_form,
        "chi_form": None if h_form is None else int(h_form[0] - h_form[1] + h_form[2]),
        "spectra": {str(c.degree): c.laplacian["head"][:10] for c in counts},
        "harmonic": [c.to_json() for c in counts],
        "truncated": bool(diff.truncated),
        "complex_defect": defect,
        "degree_dims": [diff.index.degree_dim(n) for n in range(diff.index.top_degree + 1)],
    }
    flags = sorted({f for c in counts for f in c.flags})
    return data, diff, mass, flags, time.perf_counter() - t0


def _spectral_norm(m) -> float:
    if m.nnz == 0:
        return 0.0
    if m.shape[0] <= 400:
        return float(np.linalg.norm(m.toarray(), 2))
    v0 = np.ones(m.shape[0]) / math.sqrt(m.shape[0])
    ev = spla.eigsh(m, k=1, which="LM", v0=v0, return_eigenvectors=False, tol=1e-10)
    return float(abs(ev[0]))


def _spectrum_delta(a, b, scale) -> float:
    """``max |a_i - b_i| / scale``: eigenvalue errors are bounded relative to the operator norm."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return math.inf
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)) / scale)


def _laplacian_identities(inp, diff_p, diff_m, r, mass, tol_spec) -> tuple[list, dict]:
    """Self-adjointness, PSD, K versus its R expansion, and ‖K‖ per degree."""
    idx = diff_p.index
    self_adj, k_exp, knorm = 0.0, 0.0, {}
    r_diff = SpencerDifferential(idx, r, False)
    for n in range(idx.top_degree + 1):
        lp = hodge_laplacian(diff_p, mass, n)
        lm = hodge_laplacian(diff_m, mass, n)
        md = sp.diags(lp.mass)
        ml = (md @ lp.laplacian).tocsr()
        self_adj = max(self_adj, max_abs(ml - ml.T) / max(max_abs(ml), 1e-300))
        k_direct = (lm.symmetric - lp.symmetric).tocsr()
        b_up, b_dn = _scaled_blocks(diff_p, mass, n)
        r_up, r_dn = _scaled_blocks(r_diff, mass, n)
        k_r = (b_up.T @ r_up + r_up.T @ b_up + r_up.T @ r_up
               + b_dn @ r_dn.T + r_dn @ b_dn.T + r_dn @ r_dn.T)
        k_r = ((k_r + k_r.T) * 0.5).tocsr()
        k_exp = max(k_exp, max_abs(k_direct - k_r) / max(max_abs(lp.symmetric), 1e-300))
        knorm[str(n)] = _spectral_norm(k_direct)
    items = [
        _identity("laplacian_self_adjoint", self_adj, 1e-10),
        _identity("perturbation_matches_difference_expansion", k_exp, tol_spec),
    ]
    return items, knorm


def _mirror_run(cfg: RunConfig, *, both: bool = True) -> Report:
    t0 = time.perf_counter()
    inp = _inputs(cfg)
    tol = cfg.tolerances.identity
    rep = Report("mirror-report" if both else "cohomology", cfg.to_dict())
    rep.measurements["backend"] = _kernels.backend_name()
    rep.measurements["betti"] = list(betti_numbers(inp.mesh))
    rep.measurements["mesh_counts"] = list(inp.mesh.counts)
    plus, diff_p, mass_p, flags_p, t_p = _run_sign(inp, inp.field, "plus")
    rep.per_sign["plus"] = plus
    rep.timings["plus"] = t_p
    rep.flags += [f"plus:{f}" for f in flags_p]
    if plus["truncated"]:
        rep.flags.append("truncation_dropped_mass")
    if both:
        minus_field = inp.field.negated()
        minus, diff_m, mass_m, flags_m, t_m = _run_sign(inp, minus_field, "minus")
        rep.per_sign["minus"] = minus
        rep.timings["minus"] = t_m
        rep.flags += [f"minus:{f}" for f in flags_m]
        r = assemble_mirror_difference(inp.mesh, inp.algebra, inp.field, cfg.max_sym_degree)
        j = sp.diags(diff_p.index.grading_involution())
        rep.identities += [
            _identity("mirror_difference", max_abs((diff_m.matrix - diff_p.matrix) - r), tol),
            _identity("mass_mirror_bit_exact", float(np.max(np.abs(mass_m - mass_p))), 0.0, exact=True),
            _identity("grading_involution", max_abs(j @ diff_p.matrix @ j - diff_m.matrix), tol),
            _equality("hodge_numbers_mirror", plus["h"], minus["h"]),
            _equality("euler_characteristic_mirror", plus["chi"], minus["chi"]),
        ]
        scales = {str(c["degree"]): max(c["laplacian"]["scale"], 1e-300) for c in plus["harmonic"]}
        iso = max(_spectrum_delta(plus["spectra"][k], minus["spectra"][k], scales[k]) for k in plus["spectra"])
        rep.identities.append(_identity("isospectral_heads", iso, cfg.tolerances.spectral_rtol))
        items, knorm = _laplacian_identities(inp, diff_p, diff_m, r, mass_p, cfg.tolerances.spectral_rtol)
        rep.identities += items
        rep.measurements["perturbation_norms"] = knorm
        rep.measurements["difference_max_norm"] = max_abs(r)
    rep.identities.append(
        _equality("chi_recomputed", plus["chi"], int(sum((-1) ** n * x for n, x in enumerate(plus["h"]))))
    )
    psd = min(min(v) if v else 0.0 for v in plus["spectra"].values())
    rep.identities.append(_identity("laplacian_psd", max(-psd, 0.0), 1e-10))
    bounds, extra = _lambda_measurements(inp)
    rep.bounds += bounds
    rep.measurements.update(extra)
    rep.timings["total"] = time.perf_counter() - t0
    return rep


def _lambda_measurements(inp: _Inputs) -> dict:
    """Bound and nilpotency records at the sample point of largest ‖λ‖."""
    cfg, a = inp.cfg, inp.algebra
    pts = np.concatenate([inp.mesh.barycenters(k) for k in range(3)])
    lam = np.asarray(inp.field.at(pts))
    lam_max = lam[int(np.argmax(np.linalg.norm(lam, axis=1)))]
    c_brute = c_str(a, "brute_force", samples=cfg.c_str_samples, seed=cfg.seed)
    bounds = [operator_norm_bound_check(a, lam_max, p, c_value=c_brute).to_json()
              for p in range(1, cfg.max_sym_degree)]
    nil = {str(p): nilpotency_residual(a, lam_max, p) for p in range(1, cfg.max_sym_degree - 1)}
    return bounds, {"nilpotency_residuals": nil, "c_str_brute_force": c_brute}


def mirror_report(cfg: RunConfig) -> Report:
    return _mirror_run(cfg, both=True)


def cohomology(cfg: RunConfig) -> Report:
    return _mirror_run(cfg, both=False)


def matrix_triplets(m) -> list:
    """``[row, col, value]`` triplets in row-major order."""
    c = sp.coo_matrix(m)
    order = np.lexsort((c.col, c.row))
    return [[int(c.row[i]), int(c.col[i]), float(c.data[i])] for i in order]

