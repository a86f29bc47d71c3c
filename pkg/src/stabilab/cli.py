"""Command-line entry point.

Commands::

    stabilab check    --protocol token --ring 6
    stabilab lasso    --protocol token --ring 6 --script "0;3" --two-token-init
    stabilab simulate --protocol leader --tree "0-1,1-2,2-3" --transform --scheduler synchronous
    stabilab estimate --protocol two-flag --transform --scheduler synchronous --trials 10000 --seed 42

Exit codes: 0 expected verdicts, 1 property violated, 2 usage or resource error.
The report (JSON, sections ``spec``, ``verdicts``, ``witnesses``, ``stats``)
goes to ``--out`` or, without it, to stdout after the progress lines.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import analysis, montecarlo
from .core import validate
from .errors import InvalidInput, InvalidTopology, ResourceLimit, ScriptStall, StabilabError
from .protocols import (
    PROTOCOL_NAMES, builtin, configuration_with_holders, par_from_identities,
)
from .schedulers import FAIRNESS_KINDS, POLICY_KINDS, SchedulerPolicy, parse_script, read_script
from .topology import Topology, build_ring, parse_edges, topology_from_document
from .transformer import (
    DEFAULT_BIAS, guard_preservation_violations, lift, lift_observable, lift_predicate, transform,
)

COMMANDS = ("check", "lasso", "simulate", "estimate")


class UsageError(StabilabError):
    pass


@dataclass
class RunSpec:
    command: str
    protocol: str
    topology: dict
    scheduler: str = "randomized-distributed"
    scheduler_class: str = "distributed"
    script: Optional[list] = None
    transform: bool = False
    bias: float = DEFAULT_BIAS
    seed: int = 0
    trials: Optional[int] = None
    cap: int = montecarlo.DEFAULT_STEP_CAP
    edge_cap: int = analysis.DEFAULT_EDGE_CAP
    init: Optional[str] = None
    two_token_init: bool = False
    fairness: str = "strong"
    out: Optional[str] = None
    csv: Optional[str] = None

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("csv")
        return d


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stabilab", description="Weak-stabilization laboratory")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--protocol", required=True, choices=PROTOCOL_NAMES)
    topo = p.add_mutually_exclusive_group()
    topo.add_argument("--ring", type=int, help="oriented ring of N processes")
    topo.add_argument("--tree", help='tree edges, e.g. "0-1,1-2,2-3"')
    topo.add_argument("--topology-file", help="JSON document with type/n/edges")
    p.add_argument("--scheduler", default="randomized-distributed", choices=POLICY_KINDS)
    p.add_argument("--class", dest="scheduler_class", default="distributed",
                   choices=("central", "distributed", "synchronous"))
    scr = p.add_mutually_exclusive_group()
    scr.add_argument("--script", help='steps separated by ";", processes by ","')
    scr.add_argument("--script-file")
    p.add_argument("--transform", action="store_true")
    p.add_argument("--bias", type=float, default=DEFAULT_BIAS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int)
    p.add_argument("--cap", type=int, default=montecarlo.DEFAULT_STEP_CAP)
    p.add_argument("--edge-cap", type=int, default=analysis.DEFAULT_EDGE_CAP)
    p.add_argument("--init", help='e.g. "dt=[0,1,2,3,0,1]", "par=[-1,0,1,2]", "b=[false,false]"')
    p.add_argument("--two-token-init", action="store_true")
    p.add_argument("--fairness", default="strong", choices=FAIRNESS_KINDS)
    p.add_argument("--out")
    p.add_argument("--csv")
    return p


def parse_args(argv) -> RunSpec:
    ns = _parser().parse_args(argv)
    if ns.ring is not None:
        doc = {"type": "ring", "n": ns.ring}
        try:
            build_ring(ns.ring)
        except InvalidTopology as exc:
            raise UsageError(f"--ring: {exc}") from None
    elif ns.tree is not None:
        try:
            doc = {"type": "tree", "edges": [list(e) for e in parse_edges(ns.tree)]}
            topology_from_document(doc)
        except InvalidTopology as exc:
            raise UsageError(f"--tree: {exc}") from None
    elif ns.topology_file is not None:
        try:
            with open(ns.topology_file) as fh:
                doc = json.load(fh)
            topology_from_document(doc)
        except (OSError, ValueError, KeyError, InvalidTopology) as exc:
            raise UsageError(f"--topology-file: {exc}") from None
    elif ns.protocol == "two-flag":
        doc = {"type": "tree", "edges": [[0, 1]]}
    else:
        raise UsageError("one of --ring, --tree, --topology-file is required")

    script = None
    try:
        if ns.script is not None:
            script = [sorted(s) for s in parse_script(ns.script)]
        elif ns.script_file is not None:
            script = [sorted(s) for s in read_script(ns.script_file)]
    except (OSError, InvalidInput) as exc:
        raise UsageError(f"--script: {exc}") from None

    if ns.command == "estimate" and ns.trials is None:
        raise UsageError("--trials is required for estimate")
    if ns.trials is not None and ns.trials < 1:
        raise UsageError("--trials must be positive")
    if ns.cap < 1:
        raise UsageError("--cap must be positive")
    if ns.scheduler == "scripted" and script is None and ns.command in ("simulate", "estimate"):
        raise UsageError("--scheduler scripted needs --script or --script-file")
    if ns.two_token_init and (ns.protocol != "token" or script is None):
        raise UsageError("--two-token-init needs --protocol token and --script")
    if not 0 < ns.bias < 1:
        raise UsageError("--bias must lie strictly between 0 and 1")

    return RunSpec(
        command=ns.command, protocol=ns.protocol, topology=doc, scheduler=ns.scheduler,
        scheduler_class=ns.scheduler_class, script=script, transform=ns.transform,
        bias=ns.bias, seed=ns.seed, trials=ns.trials, cap=ns.cap, edge_cap=ns.edge_cap,
        init=ns.init, two_token_init=ns.two_token_init, fairness=ns.fairness,
        out=ns.out, csv=ns.csv,
    )


def parse_configuration(text: str, protocol: str, topo: Topology) -> tuple:
    """Parse ``dt=[...]``, ``par=[...]`` (neighbour identities, -1 for none) or ``b=[...]``."""
    try:
        key, value = text.split("=", 1)
        values = json.loads(value)
    except ValueError:
        raise UsageError(f"--init: cannot parse {text!r}") from None
    key = key.strip()
    expected = {"token": "dt", "leader": "par", "two-flag": "b"}[protocol]
    if key != expected:
        raise UsageError(f"--init: protocol {protocol} expects {expected}=[...]")
    if key == "par":
        try:
            return par_from_identities(topo, values)
        except InvalidInput as exc:
            raise UsageError(f"--init: {exc}") from None
    if key == "b":
        return tuple(bool(v) for v in values)
    return tuple(int(v) for v in values)


def _encode(value):
    return analysis.jsonable(value)


class _Run:
    def __init__(self, spec: RunSpec, stream):
        self.spec = spec
        self.stream = stream
        self.topo = topology_from_document(spec.topology)
        if spec.protocol == "two-flag" and self.topo.node_count != 2:
            raise UsageError("two-flag runs on the 2-node topology only")
        self.base, self.base_legit, self.base_observable = builtin(spec.protocol, self.topo)
        if spec.transform:
            self.protocol = transform(self.base, spec.bias)
            self.legit = lift_predicate(self.base_legit)
        else:
            self.protocol, self.legit = self.base, self.base_legit
        self.report = {"spec": spec.echo(), "verdicts": {}, "witnesses": {}, "stats": {}}

    def say(self, line: str) -> None:
        print(line, file=self.stream, flush=True)

    def initial(self):
        if self.spec.init is not None:
            cfg = parse_configuration(self.spec.init, self.spec.protocol, self.topo)
            try:
                validate(self.base, self.topo, cfg)
            except InvalidInput as exc:
                raise UsageError(f"--init: {exc}") from None
            return lift(cfg) if self.spec.transform else cfg
        return None

    # -- commands -----------------------------------------------------------

    def check(self) -> int:
        if self.spec.transform:
            return self._check_transformed()
        ws = analysis.check_weak_stabilization(self.base, self.topo, self.base_legit,
                                               self.base_observable, self.spec.edge_cap)
        conv, clos = ws["possible_convergence"], ws["closure"]
        self.say(f"configurations: {conv.configuration_count}")
        self.say(f"possible convergence: {str(conv.verdict).lower()} (stuck: {conv.stuck_count})")
        self.say(f"closure: {str(clos.verdict).lower()}")
        self.say(f"weak-stabilizing: {str(ws['weak_stabilizing']).lower()}")
        lasso = analysis.find_synchronous_lasso(self.base, self.topo, self.base_legit)
        self.say(f"synchronous lasso: {'found' if lasso else 'none'}")
        self.report["verdicts"] = {
            "possible_convergence": conv.verdict,
            "closure": clos.verdict,
            "weak_stabilizing": ws["weak_stabilizing"],
            "synchronous_lasso": lasso is not None,
        }
        self.report["stats"] = {
            "configurations": conv.configuration_count,
            "edges": ws["system"].edge_count,
            "legitimate": conv.legitimate_count,
            "terminal": conv.terminal_count,
            "stuck": conv.stuck_count,
        }
        self.report["witnesses"] = {
            "stuck": _encode(conv.stuck),
            "closure_violation": _encode(clos.violation),
            "synchronous_lasso": lasso.to_dict(_encode) if lasso else None,
        }
        return 0 if ws["weak_stabilizing"] else 1

    def _check_transformed(self) -> int:
        count, first = guard_preservation_violations(self.base, self.topo)
        clos = analysis.check_closure_streaming(
            self.protocol, self.topo, self.legit, lift_observable(self.base_observable),
            self.spec.scheduler_class,
        )
        self.say(f"guard preservation violations: {count}")
        self.say(f"lifted closure: {str(clos.verdict).lower()}")
        self.report["verdicts"] = {"guard_preservation": count == 0, "closure": clos.verdict}
        self.report["stats"] = {"configurations": clos.configuration_count,
                                "legitimate": clos.legitimate_count}
        self.report["witnesses"] = {"guard_violations": _encode(first),
                                    "closure_violation": _encode(clos.violation)}
        return 0 if count == 0 and clos.verdict else 1

    def lasso(self) -> int:
        if self.spec.transform:
            raise UsageError("lasso works on deterministic protocols; drop --transform")
        init = self.initial()
        script = self.spec.script
        if self.spec.two_token_init:
            order = []
            for entry in script:
                for p in entry:
                    if p not in order:
                        order.append(p)
            init = configuration_with_holders(self.topo, order)
            self.say(f"initial configuration with tokens at {order}: {list(init)}")
            lasso = analysis.token_following_run(self.base, self.topo, init, order)
        elif script is not None:
            if init is None:
                raise UsageError("--script needs --init (or --two-token-init)")
            lasso = analysis.scripted_lasso(self.base, self.topo, init, script)
        else:
            lasso = analysis.find_synchronous_lasso(self.base, self.topo, self.base_legit, start=init)
        if lasso is None:
            self.say("no lasso found")
            self.report["verdicts"] = {"lasso_found": False}
            return 1
        rep = analysis.verify_lasso(lasso, self.base, self.topo, self.base_legit, self.spec.fairness)
        d = rep.details
        self.say(f"lasso: prefix {d['prefix_length']} steps, cycle {d['cycle_length']} steps")
        self.say(f"avoids legitimate set: {str(d['avoids_legitimate']).lower()}")
        for k in FAIRNESS_KINDS:
            self.say(f"{k} fair: {str(d['fairness'][k]).lower()}")
        self.say(f"non-convergence witness under {self.spec.fairness} fairness: {str(rep.verdict).lower()}")
        self.report["verdicts"] = {
            "lasso_found": True,
            "avoids_legitimate": d["avoids_legitimate"],
            "fairness": d["fairness"],
            "witness": rep.verdict,
        }
        self.report["witnesses"] = {"lasso": lasso.to_dict(_encode)}
        self.report["stats"] = {"prefix_length": d["prefix_length"], "cycle_length": d["cycle_length"]}
        return 0 if rep.verdict else 1

    def _policy(self) -> SchedulerPolicy:
        return SchedulerPolicy(self.spec.scheduler, tuple(self.spec.script or ()))

    def simulate(self) -> int:
        policy = self._policy()
        init = self.initial()
        if self.spec.two_token_init:
            init = configuration_with_holders(self.topo, sorted({p for e in self.spec.script for p in e}))
        if init is None:
            init = montecarlo.random_configuration(
                self.protocol, self.topo, np.random.default_rng((self.spec.seed, 1)))
        out = montecarlo.run_trial(self.protocol, self.topo, policy, init, self.legit,
                                   self.spec.seed, self.spec.cap)
        self.say(f"initial: {_encode(list(init))}")
        self.say(f"converged: {str(out.converged).lower()} steps: {out.steps_to_legitimate}")
        self.report["verdicts"] = {"converged": out.converged, "terminal_stuck": out.terminal_stuck}
        self.report["stats"] = asdict(out)
        self.report["witnesses"] = {"initial": _encode(list(init))}
        return 0 if out.converged else 1

    def estimate(self) -> int:
        policy = self._policy()
        init = self.initial()
        mode = "uniform-random" if init is None else "fixed"
        outcomes = montecarlo.run_trials(
            self.protocol, self.topo, policy, mode, self.legit, self.spec.trials,
            self.spec.seed, self.spec.cap, init, montecarlo.default_workers(),
        )
        stats = montecarlo.summarize(outcomes)
        self.say(f"trials: {stats.trials} converged: {stats.converged} rate: {stats.convergence_rate}")
        if stats.mean is not None:
            self.say(f"mean: {stats.mean:.4f} ± {stats.ci95_halfwidth:.4f} median: {stats.median} p95: {stats.p95}")
        if self.spec.csv:
            montecarlo.write_csv(self.spec.csv, outcomes)
        self.report["verdicts"] = {
            "all_converged": stats.convergence_rate == 1.0,
            "terminal_stuck": stats.terminal_stuck,
        }
        self.report["stats"] = stats.to_dict()
        return 0 if stats.convergence_rate == 1.0 else 1


def render_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def execute(spec: RunSpec, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        run = _Run(spec, stream)
        code = getattr(run, spec.command)()
    except (UsageError, InvalidInput, InvalidTopology, ScriptStall) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimit as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 2
    run.report["exit_code"] = code
    text = render_report(run.report)
    if spec.out:
        with open(spec.out, "w") as fh:
            fh.write(text)
    else:
        stream.write(text)
    return code


def main(argv=None) -> int:
    try:
        spec = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    return execute(spec)


if __name__ == "__main__":
    sys.exit(main())
