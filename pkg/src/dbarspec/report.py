"""Pipeline orchestration and report emission (JSON, CSV, two-column data files)."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__
from . import criteria as cr
from . import decoupled as dc
from . import forms as fm
from .config import AnalysisConfig
from .eigensolve import SpectrumApprox, cluster_ids, eigenpairs_below, spectral_gap
from .schrodinger import Grid2D, assemble
from .weights import DecoupledWeight, Weight


@dataclass
class AnalysisReport:
    data: dict
    files: dict = field(default_factory=dict)  # relative path -> text

    def json(self) -> str:
        return json.dumps(jsonable(self.data), indent=2, sort_keys=True, allow_nan=False) + "\n"


def jsonable(x):
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, complex):
        return [jsonable(x.real), jsonable(x.imag)]
    return x


def _dat(pairs) -> str:
    return "".join(f"{a!r} {b!r}\n" for a, b in pairs)


class _Clock:
    def __init__(self):
        self.timings: dict[str, float] = {}

    def measure(self, key: str):
        clock = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                clock.timings[key] = time.perf_counter() - self.t0
                return False

        return _Ctx()


def _criteria(cfg: AnalysisConfig, w: Weight | DecoupledWeight, rep: AnalysisReport, warnings: list[str]) -> dict:
    settings = cfg.criteria.settings(cfg.quad)
    total = w.total if isinstance(w, DecoupledWeight) else w
    out: dict = {"verdicts": {}}
    qs = cfg.criteria.q or tuple(range(1, total.n + 1))
    for name in cfg.criteria.checks:
        fn = cr.CHECKS[name]
        for q in (qs if name in cr.NEEDS_Q else (None,)):
            key = name if q is None else f"{name}_q{q}"
            try:
                v = fn(total, q, settings) if q is not None else fn(total, settings)
            except cr.CriterionError as exc:
                warnings.append(f"criterion {key}: {exc}")
                continue
            d = v.to_dict()
            d["evidence_files"] = [f"criteria/{key}.csv", f"criteria/{key}.dat"]
            out["verdicts"][key] = d
            rep.files[f"criteria/{key}.csv"] = v.evidence.to_csv()
            rep.files[f"criteria/{key}.dat"] = _dat(v.evidence.rows())
    if cfg.criteria.doubling:
        comps = w.components if isinstance(w, DecoupledWeight) else ((w,) if w.n == 1 else ())
        out["doubling"] = [cr.doubling_estimate(c).to_dict() for c in comps]
    if cfg.criteria.bergman_k_max >= 0:
        degrees = cr.finite_monomials(total, cfg.criteria.bergman_k_max, 0)
        out["bergman"] = {"variable": 0, "k_max": cfg.criteria.bergman_k_max, "finite_degrees": degrees,
                          "count": len(degrees), "provenance": "criteria.bergman_dimension_evidence"}
    return out


def _spectrum_block(s: SpectrumApprox, meta: dict, key: str, rep: AnalysisReport) -> dict:
    rep.files[f"spectra/{key}.csv"] = s.to_csv()
    rep.files[f"spectra/{key}.dat"] = _dat(enumerate(s.values.tolist()))
    return {**s.summary(), "spectral_gap": spectral_gap(s), "operator": meta,
            "files": [f"spectra/{key}.csv", f"spectra/{key}.dat"], "provenance": "eigensolve.eigenpairs_below"}


def _spectrum(cfg: AnalysisConfig, w, rep: AnalysisReport, warnings: list[str]) -> dict:
    if not isinstance(w, Weight) or w.n != 1:
        warnings.append("spectrum analysis skipped: lattice operators need a one-variable weight")
        return {"skipped": "needs a one-variable weight"}
    grid = Grid2D(cfg.grid.L, cfg.grid.N)
    solved: dict[str, tuple[SpectrumApprox, dict]] = {}
    for degree in sorted(cfg.spectrum.degrees, key=lambda d: d != "top"):
        op = assemble(w, grid, degree, cfg.spectrum.cutoff)
        s = eigenpairs_below(op, cfg.spectrum.cutoff, tol=cfg.spectrum.tol, seed=cfg.seed)
        warnings.extend(f"spectrum[{degree}]: {m}" for m in op.metadata["warnings"])
        if not s.complete:
            warnings.append(f"spectrum[{degree}]: solver flags {s.flags}")
        if cfg.spectrum.export_operator:
            rep.files[f"operators/{degree}.triplets"] = op.triplets()
        solved[degree] = (s, op.metadata)
    if "top" in solved and solved["top"][0].values.size:
        ktol = 0.5 * float(solved["top"][0].values[0])
        for s, _ in solved.values():
            s.kernel_tol = ktol
    return {d: _spectrum_block(s, meta, d, rep) for d, (s, meta) in solved.items()}


def _decoupled(cfg: AnalysisConfig, w, rep: AnalysisReport, warnings: list[str]) -> dict:
    if not isinstance(w, DecoupledWeight):
        if isinstance(w, Weight) and w.name == "split_quartic":
            return {"verdicts": "out of calculus scope: non-singleton blocks"}
        warnings.append("decoupled analysis skipped: weight is not decoupled")
        return {"skipped": "weight is not decoupled"}
    settings = cfg.criteria.settings(cfg.quad)
    out = {"compactness": dc.compactness_report(w, settings).to_dict()}
    if not out["compactness"]["hypotheses_ok"]:
        warnings.append("decoupled: hypothesis check failed; verdicts withheld")
    if cfg.decoupled.spectra:
        gs = dc.ComponentGridSettings(cfg.decoupled.L, cfg.decoupled.h, cfg.decoupled.growth_factor,
                                      cfg.decoupled.cutoff, cfg.seed)
        comps = [dc.component_from_grids(c, gs, settings) for c in w.components]
        cs = dc.ComponentSpectra(comps)
        per_degree = {}
        for q in range(w.n + 1):
            spec = dc.compose_spectrum(cs, q)
            cut = min(cfg.decoupled.compose_cutoff, spec.cutoff)
            spec = dc.SpectrumList(tuple(p for p in spec.points if p[0] <= cut), cut)
            ess = dc.compose_essential_spectrum(cs, q)
            vals = spec.values
            rep.files[f"spectra/decoupled_q{q}.csv"] = "index,value,multiplicity_cluster_id\n" + "".join(
                f"{i},{v!r},{c}\n" for i, (v, c) in enumerate(zip(vals.tolist(), cluster_ids(vals).tolist())))
            rep.files[f"spectra/decoupled_q{q}.dat"] = _dat(enumerate(vals.tolist()))
            per_degree[str(q)] = {"spectrum": spec.to_dict(), "essential": ess.to_dict(),
                                  "kernel_dim": dc.kunneth_kernel_dim(cs, q),
                                  "provenance": "decoupled.compose_spectrum"}
        out["components"] = [{"name": c.name, "kernel": {str(k): v for k, v in c.kernel.items()},
                              "essential": {str(k): v.to_dict() for k, v in c.essential.items()},
                              "solves": c.solves} for c in comps]
        out["composition"] = per_degree
    return out


def _identity(cfg: AnalysisConfig, w, rep: AnalysisReport, warnings: list[str]) -> dict:
    out: dict = {}
    total = w.total if isinstance(w, DecoupledWeight) else w
    if total.n <= 2 and cfg.identity.kmh_forms > 0:
        rng = np.random.default_rng(cfg.seed)
        rows = []
        for i in range(cfg.identity.kmh_forms):
            q = 1 + i % total.n
            u = fm.TestForm.build(total.n, q, {J: fm.random_coefficient(total.n, rng)
                                               for J in combinations(range(total.n), q)})
            lhs, rhs = fm.kmh_sides(total, u)
            rows.append({"q": q, "lhs": lhs, "rhs": rhs, "relative_residual": abs(lhs - rhs) / (1 + lhs)})
        out["kmh"] = {"forms": rows, "max_relative_residual": max(r["relative_residual"] for r in rows),
                      "provenance": "forms.kmh_sides"}
    elif total.n > 2:
        warnings.append("identity: KMH check runs for n <= 2 only")
    if cfg.identity.polydisk and isinstance(w, DecoupledWeight):
        out["polydisk"] = {"max_relative_residual": dc.polydisk_identity_residual(w, rule=cfg.quad),
                           "provenance": "decoupled.polydisk_identity_residual"}
    return out


_STAGES = {"criteria": _criteria, "spectrum": _spectrum, "decoupled": _decoupled, "identity": _identity}


def run(cfg: AnalysisConfig) -> AnalysisReport:
    """Run the configured analyses in dependency order."""
    rep = AnalysisReport({})
    clock = _Clock()
    warnings: list[str] = []
    w = cfg.build_weight()
    total = w.total if isinstance(w, DecoupledWeight) else w
    rep.data.update({
        "tool": {"name": "dbarspec", "version": __version__},
        "label": cr.EVIDENCE_NOTE,
        "seed": cfg.seed,
        "config": cfg.echo,
        "weight": {"name": total.name, "n": total.n, "params": total.params, "singular": list(total.singular)},
    })
    for stage in ("criteria", "spectrum", "decoupled", "identity"):
        if stage in cfg.analyses:
            with clock.measure(stage):
                rep.data[stage] = _STAGES[stage](cfg, w, rep, warnings)
    rep.data["warnings"] = warnings
    rep.data["timings"] = ({k: 0.0 for k in clock.timings} if cfg.output.normalize_timings else clock.timings)
    rep.data["timings_normalized"] = cfg.output.normalize_timings
    return rep


def emit(rep: AnalysisReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "report.json"]
    written[0].write_text(rep.json())
    for rel, text in sorted(rep.files.items()):
        p = out / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        written.append(p)
    return written
