"""``reeb-branch`` command-line entry point."""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .suites import SUITES

SCHEMA = 1
ALL = "all"


class UsageError(Exception):
    pass


@dataclass
class SuiteConfig:
    suite: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: Path | None = None
    parallel: bool = False

    def __post_init__(self):
        if self.suite != ALL and self.suite not in SUITES:
            raise UsageError(f"unknown suite {self.suite!r}; choose from "
                             f"{', '.join([*SUITES, ALL])}")
        for key in ("germ", "congruence"):
            ref = self.params.get(key)
            if isinstance(ref, str) and not Path(ref).is_file():
                raise UsageError(f"{key} file not found: {ref}")
        for key, val in self.params.items():
            if key.startswith("tol") and not (isinstance(val, (int, float)) and val > 0):
                raise UsageError(f"tolerance {key} must be positive")

    @classmethod
    def load(cls, suite, path=None, **kw):
        params = {}
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise UsageError(f"config file not found: {p}")
            try:
                params = json.loads(p.read_text())
            except json.JSONDecodeError as exc:
                raise UsageError(f"config is not valid JSON: {exc}") from None
            # relative file references resolve against the config's directory
            for key in ("germ", "congruence"):
                ref = params.get(key)
                if isinstance(ref, str) and not Path(ref).is_absolute():
                    params[key] = str(p.parent / ref)
            if "germ" not in params and "rho" in params and "n" in params:
                params = {"germ": params}
            if "center" in params and "congruence" not in params:
                params = {"congruence": params}
        return cls(suite, params, **kw)


def environment_stamp() -> dict:
    return {
        "package": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
        "threads": os.environ.get("REEB_BRANCH_THREADS", "1"),
    }


def _section_params(params: dict, name: str) -> dict:
    sub = params.get(name)
    merged = {k: v for k, v in params.items() if k not in SUITES}
    if isinstance(sub, dict):
        merged.update(sub)
    return merged


def _run_one(name, params, seed, out):
    t0 = time.perf_counter()
    checks = SUITES[name](_section_params(params, name), seed, out)
    return {
        "passed": all(c.passed for c in checks),
        "runtime": time.perf_counter() - t0,
        "checks": [c.as_dict() for c in checks],
    }


def run_suite(config: SuiteConfig) -> dict:
    """Run one suite (or all of them) and return the JSON-ready report."""
    names = list(SUITES) if config.suite == ALL else [config.suite]
    out = None
    if config.out is not None:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
    sections = {}
    workers = max(1, int(os.environ.get("REEB_BRANCH_THREADS", "1") or 1))
    if config.parallel and len(names) > 1 and workers > 1:
        with ProcessPoolExecutor(min(workers, len(names))) as ex:
            futs = {n: ex.submit(_run_one, n, config.params, config.seed, out) for n in names}
            sections = {n: futs[n].result() for n in names}
    else:
        for n in names:
            sections[n] = _run_one(n, config.params, config.seed, out)
    report = {
        "schema": SCHEMA,
        "suite": config.suite,
        "seed": config.seed,
        "environment": environment_stamp(),
        "sections": sections,
        "passed": all(s["passed"] for s in sections.values()),
    }
    if out is not None:
        write_atomic(out / "report.json", json.dumps(report, indent=2))
    return report


def write_atomic(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".report-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parser():
    p = argparse.ArgumentParser(
        prog="reeb-branch",
        description="Run numerical verification suites for branched finite-energy curves.",
    )
    p.add_argument("suite", help=f"one of: {', '.join([*SUITES, ALL])}")
    p.add_argument("--config", help="JSON config (germ, congruence or suite parameters)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="directory for report.json and CSV artifacts")
    p.add_argument("--parallel", action="store_true",
                   help="run suites in parallel (worker cap: REEB_BRANCH_THREADS)")
    return p


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        cfg = SuiteConfig.load(args.suite, args.config, seed=args.seed,
                               out=Path(args.out) if args.out else None,
                               parallel=args.parallel)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"reeb-branch: error: {exc}", file=sys.stderr)
        return 2
    report = run_suite(cfg)
    for name, sec in report["sections"].items():
        for c in sec["checks"]:
            mark = "PASS" if c["passed"] else "FAIL"
            print(f"[{mark}] {name}/{c['name']}: value={c['value']} tol={c['tolerance']}")
    print("overall:", "PASS" if report["passed"] else "FAIL")
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
