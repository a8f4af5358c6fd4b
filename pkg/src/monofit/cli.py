"""Command line interface: run experiments, verify lemma suites, calibrate
constants, and emit single approximants."""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from .harness import ExperimentConfig, corpus_by_id, run, verify_all
from .monotone import ApproxConfig, approximate, calibrate
from .reports import fmt, rows_to_csv, rows_to_json


@click.group()
def main():
    """Monotone interpolatory polynomial approximation toolkit."""


@main.command("run")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True,
              help="JSON experiment config")
def run_cmd(config_path):
    """Run the experiment matrix from a JSON config."""
    cfg = ExperimentConfig.from_json(config_path)
    rows = run(cfg)
    for row in rows:
        click.echo(json.dumps(row, sort_keys=True, default=fmt))
    if any("skipped" in row for row in rows):
        click.echo("note: some jobs were skipped", err=True)


@main.command("verify")
@click.option("--n", "n_list", default="8,16", show_default=True,
              help="comma-separated partition orders")
@click.option("--profile", type=click.Choice(["practical", "theoretical"]),
              default="practical", show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="optional CSV output")
def verify_cmd(n_list, profile, seed, out):
    """Run the lemma verification suite; exit code 0 iff every row passes."""
    n_set = [int(s) for s in n_list.split(",") if s]
    rows = verify_all(n_set=n_set, profile=profile, seed=seed)
    ok = True
    for row in rows:
        status = "PASS" if row.passed else "FAIL"
        click.echo(f"{status}  {row.lemma:20s} fitted={fmt(row.fitted_constant)} "
                   f"stable={row.stable}")
        ok = ok and row.passed
    if out:
        rows_to_csv([r.to_json() for r in rows], out)
    sys.exit(0 if ok else 1)


@main.command("calibrate")
@click.option("--k", type=int, default=3, show_default=True)
@click.option("--n", type=int, default=24, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--lockfile", type=click.Path(), default=None,
              help="write the constants tuple to this JSON file")
def calibrate_cmd(k, n, seed, lockfile):
    """Estimate the projection constants from a seeded instance family."""
    consts = calibrate(k=k, n=n, seed=seed)
    payload = consts.to_json()
    click.echo(json.dumps(payload, sort_keys=True))
    if lockfile:
        with open(lockfile, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


@main.command("approx")
@click.option("--f", "fid", required=True, help="corpus function id (e.g. x3)")
@click.option("--r", type=int, default=None, help="derivative order (default: corpus value)")
@click.option("--n", type=int, default=24, show_default=True)
@click.option("--emit", type=click.Path(), default=None,
              help="write evaluation table + report JSON here")
@click.option("--grid", type=int, default=257, show_default=True,
              help="evaluation grid size for --emit")
def approx_cmd(fid, r, n, emit, grid):
    """Build one nondecreasing approximant and report its quality."""
    f = corpus_by_id(fid)
    r = f.r if r is None else r
    P, rep = approximate(f, r, n, ApproxConfig())
    click.echo(json.dumps(rep.to_json(), sort_keys=True, default=fmt))
    if emit:
        xs = np.linspace(-1.0, 1.0, grid)
        payload = {
            "report": rep.to_json(),
            "grid": [float(v) for v in xs],
            "values": [float(v) for v in np.atleast_1d(P.eval(xs))],
        }
        with open(emit, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


if __name__ == "__main__":
    main()
