"""Batch front-end: flags or scenario files in, tables or JSON reports out.

Exit codes: 0 success, 1 usage or IO error (including CapExceeded), 2 when a
structurally guaranteed expectation fails to hold.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

from . import galois_model as gm
from . import mumford as mf
from .modring import MatrixMod, ResidueRing, is_prime
from .symplectic import m1, standard_form
from .torsion import parse_generator_rows, subgroup_from_generators

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_EXPECTATION = 2


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage to 1
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    ell_list: tuple[int, ...] = ()
    level: int = 1
    g: int = 1
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    format: str = "table"
    cap: int = gm.DEFAULT_CAP
    threads: int = 1
    scenario: Optional[str] = None
    h_rows: Optional[str] = None

    def __post_init__(self):
        if self.cap < 1:
            raise UsageError("--cap must be >= 1")
        if self.format not in ("table", "json"):
            raise UsageError("--format must be table or json")
        for ell in self.ell_list:
            if not is_prime(ell):
                raise UsageError(f"--ell entries must be prime, got {ell}")


def _parse_ells(text: Optional[str]) -> tuple[int, ...]:
    # report order is deterministic by (scenario, ell): sorted, deduped
    if not text:
        return ()
    try:
        return tuple(sorted({int(t) for t in text.split(",") if t.strip()}))
    except ValueError:
        raise UsageError(f"bad --ell list: {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ell", help="comma-separated primes")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--g", type=int, default=1)
    p.add_argument("--H", dest="h_rows", help="generator rows, e.g. [[1,0],[0,1]]")
    p.add_argument("--scenario-file", dest="input_path")
    p.add_argument("--format", default="table", choices=("table", "json"))
    p.add_argument("--out", dest="output_path")
    p.add_argument("--cap", type=int, default=gm.DEFAULT_CAP)
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> _Parser:
    parser = _Parser(prog="gspimage", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("m1", "verify-mumford"):
        _add_common(sub.add_parser(name))
    for name in ("stabilizer", "degrees"):
        p = sub.add_parser(name)
        p.add_argument("name", nargs="?", choices=("cm", "selfproduct", "mumford"))
        _add_common(p)
    for name in ("scenario", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("name", choices=("cm", "selfproduct", "mumford"))
        _add_common(p)
    return parser


def parse_config(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(argv)
    return RunConfig(
        command=ns.command,
        ell_list=_parse_ells(getattr(ns, "ell", None)),
        level=ns.level,
        g=ns.g,
        input_path=ns.input_path,
        output_path=ns.output_path,
        format=ns.format,
        cap=ns.cap,
        threads=ns.threads,
        scenario=getattr(ns, "name", None),
        h_rows=ns.h_rows,
    )


# -- scenario resolution -----------------------------------------------------


def _load_scenario_file(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return gm.parse_scenario_text(fh.read())


def _build_custom(data: dict, cap: int):
    for key in ("ell", "g", "generators", "H"):
        if key not in data:
            raise UsageError(f"custom scenario needs {key!r}")
    ring = ResidueRing(data["ell"], data.get("level", 1))
    space = standard_form(data["g"], ring)
    gens = [MatrixMod(ring, rows) for rows in data["generators"]]
    G = gm.close(space, gens, cap)
    H = subgroup_from_generators(
        [tuple(r) for r in data["H"]], ring, ambient_dim=2 * data["g"]
    )
    return G, H


def _scenario_instance(name: str, ell: int, config: RunConfig):
    if name == "cm":
        return gm.scenario_cm(config.g, ell, config.level, config.cap)
    if name == "selfproduct":
        return gm.scenario_selfproduct(ell, config.level, config.cap)
    raise UsageError(f"scenario {name!r} has no group model")


def _resolve(config: RunConfig) -> tuple[str, dict]:
    """Figure out the scenario name and parameters from flags plus file."""
    data: dict = {}
    if config.input_path:
        data = _load_scenario_file(config.input_path)
    name = config.scenario or data.get("scenario")
    if name is None:
        raise UsageError("no scenario given (positional name or --scenario-file)")
    ells = config.ell_list or ((data["ell"],) if "ell" in data else ())
    if not ells:
        raise UsageError("no --ell given")
    for ell in ells:
        if not is_prime(ell):
            raise UsageError(f"ell must be prime, got {ell}")
    merged = dict(data)
    merged.setdefault("level", config.level)
    merged.setdefault("g", config.g)
    return name, {"ells": ells, "data": merged}


def _degree_reports(name: str, ells, config: RunConfig, data: dict) -> list[gm.DegreeReport]:
    reports: list[gm.DegreeReport] = []
    for ell in ells:
        if name == "mumford":
            if data.get("level", 1) != 1:
                raise UsageError("the mumford scenario runs at level 1")
            reports.extend(
                mf.verify_mu_s_failure([ell], cap=config.cap, threads=config.threads)
            )
        elif name == "custom":
            d = dict(data)
            d["ell"] = ell
            G, H = _build_custom(d, config.cap)
            reports.append(gm.build_degree_report(G, H))
        else:
            cfg = RunConfig(
                command=config.command,
                level=data.get("level", config.level),
                g=data.get("g", config.g),
                cap=config.cap,
                threads=config.threads,
            )
            G, H = _scenario_instance(name, ell, cfg)
            reports.append(gm.build_degree_report(G, H))
    return reports


# -- output ------------------------------------------------------------------


def _table_line(d: dict) -> str:
    return " ".join(f"{k}={v}" for k, v in d.items() if k != "stabilizer_elements")


def _emit(config: RunConfig, doc: dict, table_lines: list[str]) -> None:
    if config.format == "json":
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = "\n".join(table_lines) + "\n"
    if config.output_path:
        with open(config.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _summary(reports: Sequence[gm.DegreeReport]) -> dict:
    ratios = [r.ratio for r in reports]
    monotone = all(a < b for a, b in zip(ratios, ratios[1:]))
    return {
        "max_ratio": str(max(ratios)),
        "min_ratio": str(min(ratios)),
        "monotone": monotone,
    }


# -- command handlers ---------------------------------------------------------


def _cmd_m1(config: RunConfig) -> tuple[dict, list[str]]:
    if not config.ell_list:
        raise UsageError("m1 needs --ell")
    if not config.h_rows:
        raise UsageError("m1 needs --H")
    rows = parse_generator_rows(config.h_rows)
    reports = []
    for ell in config.ell_list:
        ring = ResidueRing(ell, config.level)
        space = standard_form(config.g, ring)
        if any(len(r) != 2 * config.g for r in rows):
            raise UsageError("--H rows must have length 2g")
        H = subgroup_from_generators(rows, ring, ambient_dim=2 * config.g)
        reports.append({"ell": ell, "level": config.level, "m1": m1(H, space)})
    doc = {"reports": reports}
    if len(reports) == 1:
        lines = [f"m1 = {reports[0]['m1']}"]
    else:
        lines = [f"ell={r['ell']}: m1 = {r['m1']}" for r in reports]
    return doc, lines


_MUMFORD_NOTE = "note: stabilizer within the enumerated image"


def _report_lines(name: str, reports) -> list[str]:
    lines = []
    for r in reports:
        line = _table_line(r.to_json_dict())
        if getattr(r, "ramified_type", False):
            line += " ramified-type"
        lines.append(line)
    if name == "mumford":
        lines.append(_MUMFORD_NOTE)
    return lines


def _cmd_degrees(config: RunConfig) -> tuple[dict, list[str]]:
    name, resolved = _resolve(config)
    reports = _degree_reports(name, resolved["ells"], config, resolved["data"])
    dicts = [r.to_json_dict() for r in reports]
    return {"reports": dicts}, _report_lines(name, reports)


def _cmd_sweep(config: RunConfig) -> tuple[dict, list[str]]:
    name, resolved = _resolve(config)
    reports = _degree_reports(name, resolved["ells"], config, resolved["data"])
    dicts = [r.to_json_dict() for r in reports]
    summary = _summary(reports)
    lines = _report_lines(name, reports)
    lines.append(
        "summary: max_ratio={max_ratio} min_ratio={min_ratio} monotone={monotone}".format(
            **summary
        )
    )
    return {"reports": dicts, "summary": summary}, lines


def _cmd_stabilizer(config: RunConfig) -> tuple[dict, list[str]]:
    name, resolved = _resolve(config)
    out = []
    for ell in resolved["ells"]:
        if name == "mumford":
            stab = mf.pointwise_stabilizer_in_image(ell, cap=config.cap, threads=config.threads)
            level = 1
        else:
            if name == "custom":
                d = dict(resolved["data"])
                d["ell"] = ell
                G, H = _build_custom(d, config.cap)
            else:
                G, H = _scenario_instance(name, ell, config)
            if config.h_rows:
                rows = parse_generator_rows(config.h_rows)
                H = subgroup_from_generators(rows, G.ring, ambient_dim=G.dim)
            stab = list(gm.stabilizer(G, H))
            level = config.level
        out.append(
            {
                "ell": ell,
                "level": level,
                "stabilizer_size": len(stab),
                "stabilizer_elements": [list(M.flat()) for M in stab],
            }
        )
    lines = [_table_line(d) for d in out]
    if name == "mumford":
        lines.append(_MUMFORD_NOTE)
    return {"reports": out}, lines


def _cmd_verify_mumford(config: RunConfig) -> tuple[dict, list[str]]:
    if not config.ell_list:
        raise UsageError("verify-mumford needs --ell")
    reports = mf.verify_mu_s_failure(
        config.ell_list, cap=config.cap, threads=config.threads
    )
    dicts = [r.to_json_dict() for r in reports]
    return {"reports": dicts}, _report_lines("mumford", reports)


_HANDLERS = {
    "m1": _cmd_m1,
    "degrees": _cmd_degrees,
    "scenario": _cmd_degrees,
    "sweep": _cmd_sweep,
    "stabilizer": _cmd_stabilizer,
    "verify-mumford": _cmd_verify_mumford,
}


def run(config: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    try:
        doc, lines = _HANDLERS[config.command](config)
        _emit(config, doc, lines)
        return EXIT_OK
    except mf.ExpectationFailed as exc:
        print(f"expectation failed: {exc}", file=sys.stderr)
        return EXIT_EXPECTATION
    except (UsageError, gm.CapExceeded, gm.ChainNotIncreasing, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = parse_config(list(sys.argv[1:] if argv is None else argv))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
