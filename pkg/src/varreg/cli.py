"""Command line: ``varreg validate|solve|cones|analyze|track|perturb``.

Exit codes: 0 ok, 2 unreadable or malformed input, 3 model invariant
violated, 4 precondition not met, 5 internal error.  ``VARREG_THREADS``
caps the worker threads used for sweeps over grids and reference points.
"""

from __future__ import annotations

import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import cones as cones_mod
from . import regularity, solver, trajectory
from .errors import DocumentError, VarregError
from .geneq import example_names, example_path, load_document


def _threads():
    try:
        return max(1, int(os.environ.get("VARREG_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    k = _threads()
    if k == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, items))


def _dump(obj) -> str:
    return json.dumps(regularity._jclean(obj), sort_keys=True, indent=2)


def _floats(text, what):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise DocumentError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _overrides(items):
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise DocumentError(f"--set expects name=value, got {item!r}")
        try:
            out[name] = float(value)
        except ValueError:
            out[name] = value
    return out


def _load(path, sets):
    src = path
    if not Path(path).exists() and path in example_names():
        src = example_path(path)
    elif not Path(path).exists():
        raise DocumentError(f"no such document or bundled example: {path}")
    return load_document(Path(src), _overrides(sets))


def _refpoints(doc, which):
    refs = doc.refpoints
    if not refs:
        raise DocumentError("the document has no reference points")
    if which == "all":
        return list(range(len(refs)))
    for i, r in enumerate(refs):
        if r.label == which:
            return [i]
    try:
        k = int(which)
    except ValueError:
        raise DocumentError(f"unknown reference point {which!r}") from None
    if not 0 <= k < len(refs):
        raise DocumentError(f"reference point index {k} out of range (0..{len(refs) - 1})")
    return [k]


doc_arg = click.argument("path")
set_opt = click.option("--set", "sets", multiple=True, metavar="NAME=VALUE", help="Override a document parameter.")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def cli():
    """Regularity analysis of generalized equations p ∈ f(z) + B F(Cz)."""


@cli.command()
@doc_arg
@set_opt
def validate(path, sets):
    """Parse a document and print its assumption audit."""
    doc = _load(path, sets)
    ge = doc.model
    click.echo(f"model {ge.name or '-'}: n = {ge.n}, m = {ge.m}")
    for k, v in ge.assumptions.items():
        click.echo(f"  {k}  {'holds' if v else 'fails'}")
    for r in doc.refpoints:
        ta = ge.tilde_a1(r)
        click.echo(f"  ~A1 at {r.label or list(r.z)}  {'holds' if ta['holds'] else 'fails'}")


@cli.command()
@doc_arg
@set_opt
@click.option("--p", "pvec", help="Input vector, comma separated.")
@click.option("--grid", help="lo:hi:count sweep of a scalar input.")
def solve(path, sets, pvec, grid):
    """Print S(p) as JSON records {z, state, residual}."""
    doc = _load(path, sets)
    ge = doc.model
    if (pvec is None) == (grid is None):
        raise click.UsageError("give exactly one of --p and --grid")
    if pvec is not None:
        p = np.array(_floats(pvec, "--p"))
        if p.size != ge.n:
            raise DocumentError(f"--p needs {ge.n} numbers")
        click.echo(_dump({"p": p.tolist(), "solutions": solver.solve(ge, p).to_records()}))
        return
    try:
        lo, hi, count = grid.split(":")
        ps = np.linspace(float(lo), float(hi), int(count))
    except ValueError:
        raise DocumentError(f"--grid expects lo:hi:count, got {grid!r}") from None
    if ge.n != 1:
        raise DocumentError("--grid sweeps scalar inputs only")
    rows = _pmap(lambda p: {"p": [float(p)], "solutions": solver.solve(ge, [p]).to_records()}, ps)
    click.echo(_dump(rows))


@cli.command()
@doc_arg
@set_opt
@click.option("--at", "at", required=True, help="Graph point u,v.")
@click.option("--coordinate", default=0, show_default=True, help="Component of F.")
def cones(path, sets, at, coordinate):
    """Print contingent, paratingent, Fréchet and limiting cones at a graph point."""
    doc = _load(path, sets)
    F = doc.model.F
    if not 0 <= coordinate < F.m:
        raise DocumentError(f"coordinate {coordinate} out of range (0..{F.m - 1})")
    pt = _floats(at, "--at")
    if len(pt) != 2:
        raise DocumentError("--at needs two numbers u,v")
    out = {}
    for kind in cones_mod.CONE_KINDS:
        K = cones_mod.cone_at(kind, F[coordinate], pt)
        out[kind] = {"pieces": K.to_records(), "text": K.describe()}
    click.echo(_dump({"at": pt, "coordinate": coordinate, "cones": out}))


@cli.command()
@doc_arg
@set_opt
@click.option("--refpoint", default="0", show_default=True, help="Index, label or 'all'.")
@click.option("--checks", default=None, help="Comma separated subset of aubin,ic,smr,calm,nonsmooth,shortcuts.")
@click.option("--seed", default=None, type=int, help="Seed for sampled probes.")
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Also write the JSON report here.")
def analyze(path, sets, refpoint, checks, seed, fmt, out):
    """Regularity verdicts and moduli at reference points."""
    doc = _load(path, sets)
    ge = doc.model
    analysis = doc.analysis or {}
    if checks is None:
        names = analysis.get("checks", list(regularity.CHECKS))
    else:
        names = [c.strip() for c in checks.split(",") if c.strip()]
        bad = sorted(set(names) - set(regularity.CHECKS))
        if bad:
            raise click.UsageError(f"unknown checks: {', '.join(bad)}")
    seed = analysis.get("seed", 0) if seed is None else seed
    idx = _refpoints(doc, refpoint)
    reports = _pmap(lambda i: regularity.analyze(ge, doc.refpoints[i], names, seed), idx)
    records = [r.to_record() for r in reports]
    text = _dump(records if len(records) > 1 else records[0])
    if out:
        Path(out).write_text(text + "\n")
    if fmt == "json":
        click.echo(text)
    else:
        click.echo("\n".join(r.table() for r in reports))


def _signal(doc, signal_text):
    if signal_text:
        return trajectory.Signal.parse(signal_text, doc.model.n)
    if doc.signal is None:
        raise DocumentError("no --signal given and the document has no signal section")
    return trajectory.Signal.from_record(doc.signal)


@cli.command()
@doc_arg
@set_opt
@click.option("--signal", "signal_text", help="sin:A,f,phase,offset or a CSV file t,p1..pn.")
@click.option("--out", type=click.Path(dir_okay=False), help="CSV file for the trajectory.")
@click.option("--max-step", default=trajectory.MAX_STEP, show_default=True, type=float)
@click.option("--radius", default=0.25, show_default=True, type=float, help="Localization radius.")
def track(path, sets, signal_text, out, max_step, radius):
    """Track the solution trajectory for p(t), t in [0, 1]."""
    doc = _load(path, sets)
    sig = _signal(doc, signal_text)
    traj = trajectory.track(doc.model, sig, max_step=max_step, radius=radius)
    if out:
        Path(out).write_text(traj.to_csv())
    click.echo(_dump({
        "steps": len(traj),
        "halvings": traj.halvings,
        "max_residual": float(np.max(traj.residuals)),
        "signal": sig.to_record(),
        "out": out,
    }))


@cli.command()
@doc_arg
@set_opt
@click.option("--signal", "signal_text", help="sin:A,f,phase,offset or a CSV file t,p1..pn.")
@click.option("--eps", required=True, type=float, help="Uniform offset added to every input coordinate.")
@click.option("--max-step", default=trajectory.MAX_STEP, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", type=click.Path(dir_okay=False), help="JSON file for the report.")
def perturb(path, sets, signal_text, eps, max_step, seed, out):
    """Shift p(t) by eps and compare perturbed and unperturbed trajectories."""
    doc = _load(path, sets)
    sig = _signal(doc, signal_text)
    traj = trajectory.track(doc.model, sig, max_step=max_step)
    consts = trajectory.estimate_uniform_constants(doc.model, sig, traj, seed=seed)
    delta = np.full(sig.n, eps / math.sqrt(sig.n))
    rep = trajectory.perturb_experiment(doc.model, sig, sig.shifted(delta), traj, consts)
    rep["constants_estimate"] = consts
    text = _dump(rep)
    if out:
        Path(out).write_text(text + "\n")
    click.echo(text)


def main(argv=None):
    """Entry point mapping library errors to exit codes."""
    try:
        cli.main(args=argv, prog_name="varreg", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 5
    except VarregError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the internal-error code
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return 5
    return 0
