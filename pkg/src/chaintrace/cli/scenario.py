"""Scenario scripts: line-oriented supply-chain scripts with expectations.

Format (version header required):

    #chaintrace-scenario v1
    genesis salmon                     # or: genesis file=deploy.json
    actor farm user=farm.clerk secret=farm-secret
    step farm produce batch=SAL-1 qty=1000 expect=ok
    step farm outbound batch=SAL-1 to=exporter qty=1000 expect=ok save=T1
    step exporter inbound_scan token=$T1 cert=C-88 expect=ok
    assert hops batch=SAL-1 count=1
    assert verify

Every step carries an expectation: ``expect=ok`` or ``expect=<ErrorCode>``.
``save=<VAR>`` on an outbound binds the receipt token to ``$VAR``. The
reserved actor ``anonymous`` runs without a session.
"""

from __future__ import annotations

import json
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from chaintrace.cli import oracle
from chaintrace.domains.system import TraceSystem
from chaintrace.errors import ChainTraceError
from chaintrace.gateway.flows import FlowStepError, run_flow
from chaintrace.ledger.genesis import GenesisConfig, salmon_genesis
from chaintrace.ledger.types import ChainId

HEADER = "#chaintrace-scenario v1"

_STEP_ARGS = {
    "certify": {"cert", "issuer", "batches"},
    "produce": {"batch", "qty"},
    "outbound": {"batch", "to", "qty"},
    "inbound": {"batch", "from", "qty", "cert"},
    "inbound_scan": {"token", "cert"},
    "consume": {"batch", "qty"},
    "submit_qual": {"qual"},
    "decide": {"qual", "decision"},
    "link": {"a", "b"},
    "register_enterprise": {"org"},
    "anchor": {"chain"},
    "trace": set(),  # token=... or batch=...
}

_ASSERT_KINDS = {"hops", "stock", "conservation", "audit", "verify", "locate"}


class ScenarioParseError(ChainTraceError):
    def __init__(self, line_no: int, message: str):
        super().__init__("ParseError", f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class ScenarioStep:
    line_no: int
    actor: str
    actor_user: str
    actor_org: str
    action: str
    args: dict
    expect: str
    save: Optional[str] = None


@dataclass
class ScenarioAssert:
    line_no: int
    kind: str
    args: dict


@dataclass
class ParsedScenario:
    genesis: dict
    actors: dict  # name -> {"user", "secret", "org"}
    steps: list[ScenarioStep] = field(default_factory=list)
    asserts: list[ScenarioAssert] = field(default_factory=list)

    def expected(self) -> oracle.ExpectedState:
        return oracle.replay(self.genesis, self.steps)


def _kv(parts: list[str], line_no: int) -> dict:
    out = {}
    for part in parts:
        if "=" not in part:
            raise ScenarioParseError(line_no, f"expected key=value, got {part!r}")
        key, value = part.split("=", 1)
        out[key] = value
    return out


def parse(text: str, base_dir: Optional[Path] = None) -> ParsedScenario:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise ScenarioParseError(1, f"first line must be {HEADER!r}")
    genesis: Optional[dict] = None
    actors: dict = {}
    steps: list[ScenarioStep] = []
    asserts: list[ScenarioAssert] = []
    token_vars: dict[str, ScenarioStep] = {}

    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            parts = shlex.split(line)
        except ValueError as exc:
            raise ScenarioParseError(line_no, str(exc)) from None
        kind, rest = parts[0], parts[1:]

        if kind == "genesis":
            if not rest:
                raise ScenarioParseError(line_no, "genesis needs an argument")
            if rest[0] == "salmon":
                genesis = salmon_genesis().to_dict()
            elif rest[0].startswith("file="):
                path = Path(rest[0][5:])
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                genesis = json.loads(path.read_text())
            else:
                raise ScenarioParseError(line_no,
                                         f"unknown genesis {rest[0]!r}")
        elif kind == "actor":
            if genesis is None:
                raise ScenarioParseError(line_no, "genesis must come first")
            if len(rest) < 2:
                raise ScenarioParseError(line_no,
                                         "actor needs a name and user=/secret=")
            name = rest[0]
            kv = _kv(rest[1:], line_no)
            if "user" not in kv or "secret" not in kv:
                raise ScenarioParseError(line_no,
                                         "actor needs user= and secret=")
            user_orgs = {u["user"]: u["org"] for u in genesis.get("users", [])}
            if kv["user"] not in user_orgs:
                raise ScenarioParseError(
                    line_no, f"user {kv['user']!r} is not in the genesis config")
            actors[name] = {"user": kv["user"], "secret": kv["secret"],
                            "org": user_orgs[kv["user"]]}
        elif kind == "step":
            if len(rest) < 2:
                raise ScenarioParseError(line_no, "step needs actor and action")
            actor, action = rest[0], rest[1]
            if actor != "anonymous" and actor not in actors:
                raise ScenarioParseError(line_no, f"undeclared actor {actor!r}")
            if action not in _STEP_ARGS:
                raise ScenarioParseError(line_no, f"unknown action {action!r}")
            kv = _kv(rest[2:], line_no)
            expect = kv.pop("expect", None)
            if expect is None:
                raise ScenarioParseError(line_no, "every step needs expect=")
            save = kv.pop("save", None)
            missing = _STEP_ARGS[action] - kv.keys()
            if missing:
                raise ScenarioParseError(
                    line_no, f"{action} missing args: {sorted(missing)}")
            if actor == "anonymous" and action != "trace":
                raise ScenarioParseError(
                    line_no, "anonymous may only run trace steps")
            step = ScenarioStep(
                line_no=line_no, actor=actor,
                actor_user="" if actor == "anonymous" else actors[actor]["user"],
                actor_org="" if actor == "anonymous" else actors[actor]["org"],
                action=action, args=kv, expect=expect, save=save)
            if save is not None:
                if action != "outbound":
                    raise ScenarioParseError(line_no,
                                             "save= is only valid on outbound")
                if save in token_vars:
                    raise ScenarioParseError(line_no,
                                             f"variable {save!r} reused")
                token_vars[save] = step
            token_ref = kv.get("token", "")
            if token_ref.startswith("$"):
                source = token_vars.get(token_ref[1:])
                if source is None:
                    raise ScenarioParseError(
                        line_no, f"unknown token variable {token_ref!r}")
                # annotate for the oracle: which batch this scan refers to
                kv["batch"] = source.args["batch"]
            steps.append(step)
        elif kind == "assert":
            if not rest or rest[0] not in _ASSERT_KINDS:
                raise ScenarioParseError(line_no, "unknown assert kind")
            asserts.append(ScenarioAssert(line_no, rest[0],
                                          _kv(rest[1:], line_no)))
        else:
            raise ScenarioParseError(line_no, f"unknown directive {kind!r}")

    if genesis is None:
        raise ScenarioParseError(1, "script declares no genesis")
    return ParsedScenario(genesis=genesis, actors=actors, steps=steps,
                          asserts=asserts)


def parse_file(path: Path) -> ParsedScenario:
    path = Path(path)
    return parse(path.read_text(), base_dir=path.parent)


@dataclass
class StepResult:
    step: ScenarioStep
    outcome: str  # "ok" or error code
    passed: bool
    detail: str = ""


@dataclass
class AssertResult:
    check: ScenarioAssert
    passed: bool
    detail: str = ""


@dataclass
class ScenarioReport:
    passed: bool
    steps: list[StepResult]
    asserts: list[AssertResult]
    state_digests: dict[str, str]
    audit_count: int

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "steps": [
                {"line": r.step.line_no, "actor": r.step.actor,
                 "action": r.step.action, "expect": r.step.expect,
                 "outcome": r.outcome, "passed": r.passed, "detail": r.detail}
                for r in self.steps
            ],
            "asserts": [
                {"line": r.check.line_no, "kind": r.check.kind,
                 "passed": r.passed, "detail": r.detail}
                for r in self.asserts
            ],
            "state_digests": self.state_digests,
            "audit_count": self.audit_count,
        }


class ScenarioRunner:
    def __init__(self, scenario: ParsedScenario,
                 data_dir: Optional[Path] = None,
                 system: Optional[TraceSystem] = None):
        self.scenario = scenario
        self.expected = scenario.expected()
        self.system = system or TraceSystem(
            GenesisConfig.from_dict(scenario.genesis), data_dir=data_dir)
        self._owns_system = system is None
        self.principals: dict = {}
        self.vars: dict[str, str] = {}

    def _login_all(self) -> None:
        for name, spec in self.scenario.actors.items():
            self.principals[name] = self.system.login(spec["user"],
                                                      spec["secret"])

    def _resolve(self, value: str) -> str:
        if value.startswith("$"):
            try:
                return self.vars[value[1:]]
            except KeyError:
                raise ChainTraceError(
                    "StepMismatch",
                    f"variable {value!r} was never saved") from None
        return value

    # -- step dispatch ----------------------------------------------------
    def _execute(self, step: ScenarioStep) -> None:
        s = self.system
        principal = self.principals.get(step.actor)
        a = {k: self._resolve(v) for k, v in step.args.items()}
        if step.action == "certify":
            blob = s.blobs.put(
                f"certification document {a['cert']}".encode("utf-8"))
            s.warehousing.register_certification(
                principal, a["cert"], a["issuer"],
                a["batches"].split(","), blob.hex())
        elif step.action == "produce":
            s.warehousing.produce(principal, a["batch"], int(a["qty"]))
        elif step.action == "outbound":
            receipt = s.warehousing.record_outbound(
                principal, a["batch"], a["to"], int(a["qty"]))
            if step.save is not None:
                self.vars[step.save] = receipt.token
        elif step.action == "inbound":
            s.warehousing.record_inbound(principal, a["batch"], a["from"],
                                         int(a["qty"]), a["cert"])
        elif step.action == "inbound_scan":
            run_flow(s, "inbound_by_scan", principal,
                     {"token": a["token"], "cert": a["cert"]})
        elif step.action == "consume":
            s.warehousing.consume(principal, a["batch"], int(a["qty"]))
        elif step.action == "submit_qual":
            file_text = a.get("file_text",
                              f"qualification proof {a['qual']}")
            run_flow(s, "submit_qualification_with_file", principal,
                     {"qual": a["qual"], "file": file_text.encode("utf-8")})
        elif step.action == "decide":
            s.supervision.decide_qualification(principal, a["qual"],
                                               a["decision"])
        elif step.action == "link":
            s.enterprise.link_partner(principal, a["a"], a["b"])
        elif step.action == "register_enterprise":
            s.enterprise.register_enterprise(principal, a["org"])
        elif step.action == "anchor":
            handle = s.engine.anchor(ChainId.from_label(a["chain"]))
            s.engine.chains[ChainId.MAIN].flush()
            handle.wait(10.0).outcome()
        elif step.action == "trace":
            if "token" in a:
                s.traceability.trace(a["token"], principal)
            else:
                s.traceability.trace_batch(a["batch"], principal)
        else:  # pragma: no cover - parser rejects unknown actions
            raise AssertionError(step.action)

    def _run_step(self, step: ScenarioStep) -> StepResult:
        try:
            self._execute(step)
            outcome = "ok"
        except FlowStepError as exc:
            outcome = exc.error.code
        except ChainTraceError as exc:
            outcome = exc.code
        self.system.settle()
        passed = outcome == step.expect
        detail = "" if passed else f"expected {step.expect}, got {outcome}"
        return StepResult(step, outcome, passed, detail)

    # -- asserts ------------------------------------------------------------
    def _check(self, check: ScenarioAssert) -> AssertResult:
        s = self.system
        exp = self.expected
        a = check.args
        try:
            if check.kind == "hops":
                batch = a["batch"]
                want = exp.hops.get(batch, [])
                hops = s.traceability.trace_batch(batch, None)
                got = [(h["from"], h["to"], h["qty"]) for h in hops]
                seqs = [h["seq"] for h in hops]
                okc = ("count" not in a) or (len(hops) == int(a["count"]))
                if got != want or seqs != list(range(len(hops))) or not okc:
                    return AssertResult(check, False,
                                        f"got {got}, oracle says {want}")
            elif check.kind == "stock":
                batch, org, status = a["batch"], a["org"], a["status"]
                from chaintrace.contracts.base import kpath
                raw = s.inventory.repo.read(
                    f"inventory/{kpath('stock', batch, org, status)}")
                got = json.loads(raw)["qty"] if raw else 0
                want = int(a.get("qty", exp.stock[(batch, org, status)]))
                oracle_want = exp.stock[(batch, org, status)]
                if got != want or got != oracle_want:
                    return AssertResult(
                        check, False,
                        f"cell ({batch},{org},{status}) = {got}, "
                        f"script wants {want}, oracle wants {oracle_want}")
            elif check.kind == "conservation":
                batch = a["batch"]
                cells = [json.loads(raw) for _, raw in
                         s.inventory.repo.scan("inventory/stock:")]
                total = sum(c["qty"] for c in cells
                            if c["batch"] == batch
                            and c["status"] in ("InStock", "InTransit"))
                want = exp.produced[batch] - exp.consumed[batch]
                neg = [c for c in cells if c["qty"] < 0]
                if total != want or neg or not exp.conserved(batch):
                    return AssertResult(
                        check, False,
                        f"sum {total} != produced-consumed {want} "
                        f"(negatives: {neg})")
            elif check.kind == "audit":
                got = s.supervision.audit_count(
                    _any_supervisor(self))
                if got != exp.audit_events:
                    return AssertResult(
                        check, False,
                        f"audit count {got}, oracle wants {exp.audit_events}")
            elif check.kind == "verify":
                for report in s.engine.verify_all():
                    if not report.ok:
                        return AssertResult(
                            check, False,
                            f"{report.chain_id.label} bad at "
                            f"{report.first_bad_height}: {report.detail}")
            elif check.kind == "locate":
                records = s.engine.locate(a["key"])
                if len(records) < int(a.get("min", "1")):
                    return AssertResult(check, False,
                                        f"only {len(records)} index records")
        except ChainTraceError as exc:
            return AssertResult(check, False, f"{exc.code}: {exc.message}")
        return AssertResult(check, True)

    def run(self) -> ScenarioReport:
        try:
            self._login_all()
            step_results = [self._run_step(step)
                            for step in self.scenario.steps]
            self.system.settle()
            assert_results = [self._check(c) for c in self.scenario.asserts]
            digests = {c.label: self.system.engine.chains[c].state_digest.hex()
                       for c in ChainId}
            audit = self.system.supervision.audit_count(_any_supervisor(self))
            passed = (all(r.passed for r in step_results)
                      and all(r.passed for r in assert_results))
            return ScenarioReport(passed, step_results, assert_results,
                                  digests, audit)
        finally:
            if self._owns_system:
                self.system.close()


def _any_supervisor(runner: ScenarioRunner):
    from chaintrace.domains.services import Principal, SVC_SUPERVISION
    from chaintrace.ledger.types import Role
    for principal in runner.principals.values():
        if principal.is_supervisor:
            return principal
    return Principal("system", SVC_SUPERVISION, Role.MEMBER)
