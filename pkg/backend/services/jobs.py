"""Job execution shared by the command line and the HTTP API.

A job reads a curve description, runs one command and writes its report
(and, for flows, a trajectory) to disk. Failures are turned into exit
codes: 2 for invalid input, 3 for numerical failures, 1 when the property
suite finds a violated property.
"""
from __future__ import annotations

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError

from config import settings
from models.errors import DeRhamError, InputError
from models.schemas import CurveInput, DifferentialInput, JobSpec
from services.curve import Curve, CurvePoint, Divisor, as_point, make_curve
from services.derham import (
    gram_matrix,
    pairing_matrix,
    reduce_modulo_exact,
    symplectic_basis,
)
from services.flow import PrincipalPartSpec, Trajectory, baker_akhiezer, integrate_flow
from services.funcfield import Differential, MeroFunction, classify
from services.verification import run_suite
from utils import serialization
from utils.serialization import pair, pairs, unpair

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_PROPERTY, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3


# input parsing
def load_input(path: str | Path) -> CurveInput:
    return CurveInput.model_validate(serialization.read_json(Path(path)))


def parse_curve(data: CurveInput) -> Curve:
    return make_curve([unpair(c) for c in data.P])


def parse_point(curve: Curve, row) -> CurvePoint:
    return as_point(curve, CurvePoint(complex(row[0], row[1]), complex(row[2], row[3])))


def parse_divisor(curve: Curve, rows) -> Divisor:
    return Divisor.of([parse_point(curve, row) for row in rows])


def parse_differential(item: DifferentialInput) -> Differential:
    poles = tuple((complex(r[0], r[1]), int(r[2])) for r in item.poles)
    return Differential.build([unpair(c) for c in item.a], [unpair(c) for c in item.b], poles)


# output encoding
def curve_json(curve: Curve) -> dict:
    return {"P": pairs(curve.pcoeffs), "genus": curve.genus}


def divisor_json(d: Divisor) -> list:
    """Input-schema point rows; a point of multiplicity m is repeated m times."""
    return [[*pair(p.x), *pair(p.y)] for p, m in d.points for _ in range(m)]


def differential_json(w: Differential) -> dict:
    return {
        "a": pairs(w.a),
        "b": pairs(w.b),
        "poles": [[*pair(root), m] for root, m in w.poles],
        "kind": w.kind,
    }


def function_json(f: MeroFunction) -> dict:
    return {"p": pairs(f.p), "q": pairs(f.q), "poles": [[*pair(root), m] for root, m in f.poles]}


def trajectory_header(traj: Trajectory) -> list[str]:
    g = traj.curve.genus
    cols = ["t"]
    for i in range(1, g + 1):
        cols += [f"x{i}_re", f"x{i}_im", f"y{i}_re", f"y{i}_im"]
    for k in range(1, g + 1):
        cols += [f"abel{k}_re", f"abel{k}_im"]
    for s in range(len(traj.samples)):
        cols += [f"logpsi{s}_re", f"logpsi{s}_im", f"psi{s}_re", f"psi{s}_im"]
    return cols


def trajectory_rows(traj: Trajectory) -> list[list[float]]:
    rows = []
    for state in traj.states:
        row = [state.t]
        for p in state.points:
            row += [*pair(p.x), *pair(p.y)]
        for a in state.abel:
            row += pair(a)
        for s in range(len(traj.samples)):
            row += [*pair(state.logpsi[s]), *pair(np.exp(state.logpsi[s]))]
        rows.append(row)
    return rows


def trajectory_manifest(traj: Trajectory, d_init: Divisor) -> dict:
    return {
        "curve": curve_json(traj.curve),
        "D": divisor_json(d_init),
        "D0": divisor_json(traj.d0),
        "pp": pairs(traj.pp.coeffs),
        "samples": [[*pair(z.x), *pair(z.y)] for z in traj.samples],
        "scheme": traj.scheme,
        "step": traj.step,
        "steps": len(traj.states) - 1,
        "normalization": "f(infinity) = 0",
        "thresholds": {
            "collision_tol": settings.collision_tol,
            "flow_defect_tol": settings.flow_defect_tol,
            "branch_tol": settings.branch_tol,
            "residue_tol": settings.residue_tol,
            "rank_tol": settings.rank_tol,
            "max_condition": settings.max_condition,
        },
    }


@contextmanager
def tolerance_override(tol: Optional[float]):
    """Temporarily replace the residue tolerance used by pairings and classification."""
    if tol is None:
        yield
        return
    saved = settings.residue_tol
    settings.residue_tol = tol
    try:
        yield
    finally:
        settings.residue_tol = saved


# commands
def run_basis(data: CurveInput) -> dict:
    curve = parse_curve(data)
    d = parse_divisor(curve, data.D)
    basis = symplectic_basis(curve, d)
    return {
        "curve": curve_json(curve),
        "D": divisor_json(d),
        "coord_note": basis.coord_note,
        "theta": [differential_json(w) for w in basis.theta],
        "tau": [differential_json(w) for w in basis.tau],
        "gram": serialization.matrix_pairs(gram_matrix(basis)),
    }


def run_pairing(data: CurveInput) -> dict:
    curve = parse_curve(data)
    ws = [parse_differential(item) for item in data.differentials]
    if not ws:
        raise InputError("pairing needs at least one entry in 'differentials'")
    return {
        "curve": curve_json(curve),
        "kinds": [classify(curve, w) for w in ws],
        "omega": serialization.matrix_pairs(pairing_matrix(curve, ws)),
    }


def run_reduce(data: CurveInput) -> dict:
    curve = parse_curve(data)
    d = parse_divisor(curve, data.D)
    if data.theta is not None:
        theta = parse_differential(data.theta)
    elif data.differentials:
        theta = parse_differential(data.differentials[0])
    else:
        raise InputError("reduce needs 'theta' (or one entry in 'differentials')")
    reduced, f = reduce_modulo_exact(curve, theta, d)
    return {"curve": curve_json(curve), "D": divisor_json(d), "reduced": differential_json(reduced), "f": function_json(f)}


def _flow_inputs(data: CurveInput):
    curve = parse_curve(data)
    d = parse_divisor(curve, data.D)
    d0 = parse_divisor(curve, data.D0)
    pp = PrincipalPartSpec.of([unpair(c) for c in data.pp])
    samples = [parse_point(curve, row) for row in data.samples]
    return curve, d, d0, pp, samples


def run_flow(data: CurveInput, spec: JobSpec, output: Optional[Path]) -> tuple[dict, list[Path]]:
    curve, d, d0, pp, samples = _flow_inputs(data)
    traj = integrate_flow(curve, d, d0, pp, spec.t_end, spec.steps, samples)
    manifest = trajectory_manifest(traj, d)
    files: list[Path] = []
    if output is not None:
        if spec.format == "csv":
            files.append(serialization.write_csv(output, trajectory_header(traj), trajectory_rows(traj)))
            files.append(serialization.write_json(Path(f"{output}.manifest.json"), manifest))
        else:
            files.append(serialization.write_json(output, {
                "manifest": manifest,
                "columns": trajectory_header(traj),
                "rows": trajectory_rows(traj),
            }))
    report = {"manifest": manifest, "final_D": divisor_json(traj.final_divisor), "rows": len(traj.states)}
    return report, files


def run_ba(data: CurveInput, spec: JobSpec) -> dict:
    curve, d, d0, pp, samples = _flow_inputs(data)
    if not samples:
        raise InputError("ba needs at least one entry in 'samples'")
    traj = integrate_flow(curve, d, d0, pp, spec.t_end, spec.steps, samples)
    return {
        "t_end": spec.t_end,
        "steps": spec.steps,
        "final_D": divisor_json(traj.final_divisor),
        "samples": [[*pair(z.x), *pair(z.y)] for z in samples],
        "psi": [pair(baker_akhiezer(traj, k)) for k in range(len(samples))],
    }


def run_verify(data: Optional[CurveInput], spec: JobSpec) -> tuple[dict, bool]:
    fixture = None
    if data is not None:
        curve = parse_curve(data)
        fixture = (curve, parse_divisor(curve, data.D))
    results = run_suite(spec.seed, steps=spec.steps, fixture=fixture)
    passed = all(r.passed for r in results)
    return {"seed": spec.seed, "rng": "numpy PCG64", "passed": passed,
            "properties": [r.model_dump() for r in results]}, passed


def execute(spec: JobSpec, data: Optional[CurveInput] = None) -> tuple[int, dict, list[Path]]:
    """Run one job; returns (exit code, report, files written)."""
    output = Path(spec.output) if spec.output else None
    files: list[Path] = []
    try:
        if data is None and spec.input:
            data = load_input(spec.input)
        if data is None and spec.command != "verify":
            raise InputError(f"command '{spec.command}' needs an input file")
        code = EXIT_OK
        with tolerance_override(spec.tol):
            if spec.command == "basis":
                report = run_basis(data)
            elif spec.command == "pairing":
                report = run_pairing(data)
            elif spec.command == "reduce":
                report = run_reduce(data)
            elif spec.command == "flow":
                report, files = run_flow(data, spec, output)
            elif spec.command == "ba":
                report = run_ba(data, spec)
            else:
                report, passed = run_verify(data, spec)
                code = EXIT_OK if passed else EXIT_PROPERTY
    except ValidationError as e:
        logger.error(f"invalid input: {e}")
        return EXIT_INPUT, {"error": "ValidationError", "message": str(e)}, files
    except DeRhamError as e:
        logger.error(f"{type(e).__name__}: {e}")
        report = {"error": type(e).__name__, "message": str(e)}
        partial = getattr(e, "trajectory", None)
        if partial is not None:
            report["rows"] = len(partial.states)
        return e.exit_code, report, files
    if output is not None and spec.command != "flow":
        files.append(serialization.write_json(output, report))
    logger.info(f"{spec.command} finished with exit code {code}")
    return code, report, files
