"""Command-line entry point ``dacph``.

Exit codes: 0 success, 1 usage error, 2 computational failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import datagen, harness, io as dio, lakes
from .dac import ESTIMATORS, MERGE_METHODS, run_dac
from .geometry import GeometryError, pairwise_distances
from .metrics import bottleneck
from .persistence import PersistenceDiagram, compute_diagram
from .rips import FiltrationTooLarge

THREADS_ENV = "DACPH_THREADS"
log = logging.getLogger("dacph")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=int, default=_default_threads(),
                        help=f"worker threads for per-region work (env {THREADS_ENV})")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="dacph", description="Divide-and-conquer Vietoris-Rips persistent homology")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="sample a synthetic point cloud")
    g.add_argument("generator", choices=sorted(datagen.GENERATORS))
    g.add_argument("--n", type=int, help="sample size (circle, sphere)")
    g.add_argument("--radius", type=float)
    g.add_argument("--noise-sd", type=float)

    c = sub.add_parser("compute", parents=[common], help="full Rips persistence diagram")
    c.add_argument("--input", type=Path, required=True)
    c.add_argument("--maxdim", type=int, default=1, help="largest homology dimension")
    c.add_argument("--t-max", type=float)
    c.add_argument("--engine", choices=("sa", "ripser"), default="sa")

    d = sub.add_parser("dac", parents=[common], help="divide-and-conquer diagram")
    d.add_argument("--input", type=Path, required=True)
    d.add_argument("--k", type=int, default=1, help="target homology dimension")
    d.add_argument("--m", type=int, default=4, help="number of grid regions")
    d.add_argument("--grid", type=str, help="explicit per-axis counts, e.g. 16x16")
    d.add_argument("--merge", choices=MERGE_METHODS, default="rips")
    d.add_argument("--estimator", choices=ESTIMATORS, default="pointwise")
    d.add_argument("--eps-proj", type=float)
    d.add_argument("--exact-cap", type=int, default=20)
    d.add_argument("--t-max", type=float)
    d.add_argument("--report", type=Path, help="write the JSON run report here")
    d.add_argument("--diagram-out", type=Path, help="also write the plain dim,birth,death CSV")

    b = sub.add_parser("bottleneck", parents=[common], help="bottleneck distance of two diagram CSVs")
    b.add_argument("--a", type=Path, required=True)
    b.add_argument("--b", type=Path, required=True)
    b.add_argument("--dim", type=int, default=1)

    e = sub.add_parser("bench", parents=[common], help="run an experiment grid from a JSON config")
    e.add_argument("--config", type=Path, required=True)
    e.add_argument("--plot-data", type=Path, help="per-cell plot CSV (x = m or k_c)")

    lk = sub.add_parser("ingest-lakes", parents=[common], help="clean a raw lakes table")
    lk.add_argument("--input", type=Path, required=True)
    lk.add_argument("--audit", type=Path, help="write the audit JSON here")
    lk.add_argument("--dac-sample", type=int, default=0,
                    help="also run the lakes DaC on a random subsample of this size")
    lk.add_argument("--dac-report", type=Path)
    return p


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _cmd_generate(a) -> int:
    params = {}
    if a.n is not None:
        params["n"] = a.n
    if a.radius is not None:
        params["radius"] = a.radius
    if a.noise_sd is not None:
        params["noise_sd"] = a.noise_sd
    try:
        cloud = datagen.generate(a.generator, seed=a.seed, **params)
    except TypeError as exc:
        raise UsageError(f"generator {a.generator!r} does not accept these options: {exc}") from None
    if a.format == "json":
        _emit(dio.format_json({"points": cloud.points}), a.out)
    else:
        _emit(dio.format_point_cloud(cloud), a.out)
    return 0


def _emit_diagram(dgm: PersistenceDiagram, a) -> None:
    if a.format == "json":
        _emit(dio.format_json(dgm.to_records()), a.out)
    else:
        _emit(dgm.to_csv(), a.out)


def _cmd_compute(a) -> int:
    cloud = dio.read_point_cloud(a.input)
    dgm = compute_diagram(pairwise_distances(cloud.points), a.maxdim, a.t_max, engine=a.engine)
    _emit_diagram(dgm, a)
    return 0


def _cmd_dac(a) -> int:
    cloud = dio.read_point_cloud(a.input)
    kwargs = dict(merge_method=a.merge, estimator=a.estimator, eps_proj=a.eps_proj,
                  exact_cap=a.exact_cap, t_max=a.t_max, threads=a.threads)
    if a.grid:
        from .geometry import bounding_box, make_grid_partition

        try:
            counts = [int(x) for x in a.grid.lower().split("x")]
        except ValueError:
            raise UsageError(f"bad --grid {a.grid!r}") from None
        if len(counts) != cloud.dim:
            raise UsageError(f"--grid needs {cloud.dim} counts")
        res = run_dac(cloud, a.k, scheme=make_grid_partition(bounding_box(cloud), counts), **kwargs)
    else:
        res = run_dac(cloud, a.k, a.m, **kwargs)
    if a.format == "json":
        _emit(dio.format_json({"features": dio.dac_records(res), "report": res.report}), a.out)
    else:
        _emit(dio.format_dac_csv(res), a.out)
    if a.diagram_out:
        a.diagram_out.write_text(res.to_diagram().to_csv())
    if a.report:
        a.report.write_text(dio.format_json(res.report))
    return 0


def _cmd_bottleneck(a) -> int:
    d1 = dio.read_diagram(a.a)
    d2 = dio.read_diagram(a.b)
    val = bottleneck(d1, d2, a.dim)
    if a.format == "json":
        _emit(json.dumps({"dim": a.dim, "bottleneck": None if np.isinf(val) else val}) + "\n", a.out)
    else:
        _emit(f"{val!r}\n", a.out)
    return 0


def _cmd_bench(a) -> int:
    try:
        cfg = harness.ExperimentConfig.from_json(a.config)
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad config: {exc}") from None
    if a.threads and cfg.threads == 1:
        cfg.threads = a.threads
    table = harness.run_experiment(cfg)
    if a.format == "json":
        _emit(table.to_json(), a.out)
    else:
        _emit(table.to_csv(), a.out)
        if a.out is not None:
            table.to_json(a.out.with_suffix(".json"))
    if a.plot_data:
        table.plot_data(a.plot_data)
    return 0


def _cmd_ingest(a) -> int:
    try:
        cloud, audit = lakes.ingest_lakes(a.input)
    except lakes.LakesInputError as exc:
        raise UsageError(str(exc)) from None
    if a.format == "json":
        _emit(dio.format_json({"points": cloud.points, "audit": audit.to_dict()}), a.out)
    else:
        _emit(lakes.format_cleaned(cloud), a.out)
    if a.audit:
        a.audit.write_text(dio.format_json(audit.to_dict()))
    if a.dac_sample:
        rng = np.random.default_rng(a.seed)
        size = min(a.dac_sample, cloud.n)
        sub = cloud.subset(np.sort(rng.choice(cloud.n, size=size, replace=False)))
        res, summary = lakes.lakes_pipeline(sub, threads=a.threads)
        doc = {"sample": size, "h1_total": summary.h1_total, "merged": summary.merged, "report": res.report}
        if a.dac_report:
            a.dac_report.write_text(dio.format_json(doc))
        else:
            sys.stderr.write(f"H1 features: {summary.h1_total} ({summary.merged} merged)\n")
    return 0


COMMANDS = {
    "generate": _cmd_generate,
    "compute": _cmd_compute,
    "dac": _cmd_dac,
    "bottleneck": _cmd_bottleneck,
    "bench": _cmd_bench,
    "ingest-lakes": _cmd_ingest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
        if a.command is None:
            parser.print_help(sys.stderr)
            return 1
        logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING)
        if a.threads < 1:
            raise UsageError("--threads must be >= 1")
        return COMMANDS[a.command](a)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except (FileNotFoundError, IsADirectoryError) as exc:
        sys.stderr.write(f"dacph: {exc}\n")
        return 1
    except (FiltrationTooLarge, GeometryError, MemoryError, ArithmeticError, RuntimeError, ValueError) as exc:
        sys.stderr.write(f"dacph: computation failed: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
