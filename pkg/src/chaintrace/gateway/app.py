"""HTTP API gateway.

Thin by design: authentication, argument shape, routing to the owning
context service, and the JSON envelope {ok, data | error{code, message}}.
Every domain error originates below this layer and is passed through with
its stable code.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Form, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from chaintrace.domains.services import Principal
from chaintrace.domains.system import TraceSystem
from chaintrace.errors import ChainTraceError
from chaintrace.gateway.flows import FlowStepError, run_flow
from chaintrace.gateway.sessions import SessionStore
from chaintrace.ledger.types import ChainId, Role

_STATUS = {
    "Unauthenticated": 401,
    "UnknownUser": 401,
    "BadCredential": 401,
    "AccessDenied": 403,
    "NotSupervisor": 403,
    "NotFound": 404,
    "UnknownBatch": 404,
    "UnknownReceipt": 404,
    "UnknownFlow": 404,
    "UnknownChain": 404,
    "UnknownService": 404,
}


def _ok(data) -> JSONResponse:
    return JSONResponse({"ok": True, "data": data})


def _err(code: str, message: str, step: Optional[str] = None) -> JSONResponse:
    error = {"code": code, "message": message}
    if step is not None:
        error["step"] = step
    return JSONResponse({"ok": False, "error": error},
                        status_code=_STATUS.get(code, 400))


def create_app(system: TraceSystem, sessions: SessionStore,
               console_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="chaintrace gateway", docs_url=None, redoc_url=None)

    @app.exception_handler(ChainTraceError)
    async def _domain_error(_request: Request, exc: ChainTraceError):
        return _err(exc.code, exc.message)

    @app.exception_handler(FlowStepError)
    async def _flow_error(_request: Request, exc: FlowStepError):
        return _err(exc.error.code, exc.error.message, step=exc.step)

    @app.exception_handler(RequestValidationError)
    async def _shape_error(_request: Request, exc: RequestValidationError):
        return _err("BadRequest", str(exc.errors()[:1]))

    def chain_of(label: str) -> ChainId:
        try:
            return ChainId.from_label(label)
        except ValueError:
            raise ChainTraceError("UnknownChain",
                                  f"no chain named {label!r}") from None

    def principal_of(request: Request) -> Principal:
        header = request.headers.get("authorization", "")
        if not header.startswith("Bearer "):
            raise ChainTraceError("Unauthenticated",
                                  "missing bearer session token")
        return sessions.lookup(header[len("Bearer "):])

    def maybe_principal(request: Request) -> Optional[Principal]:
        header = request.headers.get("authorization", "")
        if not header.startswith("Bearer "):
            return None
        return sessions.lookup(header[len("Bearer "):])

    def supervisor_of(request: Request) -> Principal:
        principal = principal_of(request)
        if not principal.is_supervisor:
            raise ChainTraceError("AccessDenied",
                                  "supervisor session required")
        return principal

    async def body_of(request: Request) -> dict:
        try:
            data = await request.json()
        except Exception:
            raise ChainTraceError("BadRequest", "request body must be JSON")
        if not isinstance(data, dict):
            raise ChainTraceError("BadRequest", "request body must be an object")
        return data

    def field(data: dict, name: str, kind=str):
        if name not in data:
            raise ChainTraceError("BadRequest", f"missing field {name!r}")
        value = data[name]
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ChainTraceError("BadRequest",
                                      f"field {name!r} must be an integer")
            return value
        if not isinstance(value, kind):
            raise ChainTraceError("BadRequest",
                                  f"field {name!r} has the wrong type")
        return value

    # -- auth --------------------------------------------------------------
    @app.post("/login")
    async def login(request: Request):
        data = await body_of(request)
        principal = system.login(field(data, "user"), field(data, "credential"))
        token = sessions.issue(principal)
        return _ok({"token": token, "user": principal.user,
                    "org": principal.org, "role": principal.role.label})

    # -- administration ------------------------------------------------------
    @app.post("/orgs")
    async def register_org(request: Request):
        admin = supervisor_of(request)
        data = await body_of(request)
        org_id = field(data, "id")
        try:
            role = Role.from_label(field(data, "role"))
            labels = data.get("chains", [])
            chains = ([ChainId.MAIN] if role is Role.SUPERVISOR
                      else [ChainId.from_label(c) for c in labels])
        except ValueError as exc:
            raise ChainTraceError("BadRequest", str(exc)) from None
        cert = field(data, "cert").encode("utf-8")
        receipts = []
        for chain in chains:
            receipt = system.engine.register_org(chain, org_id, role, cert)
            receipts.append({"chain": chain.label,
                             "fingerprint": receipt.cert_fingerprint.hex()})
        if any(c is ChainId.ENTERPRISE for c in chains):
            system.enterprise.register_enterprise(admin, org_id,
                                                  data.get("name", org_id))
        return _ok({"id": org_id, "registered": receipts})

    @app.post("/users")
    async def register_user(request: Request):
        supervisor_of(request)
        data = await body_of(request)
        org_id = field(data, "org")
        org = system.engine.org(org_id)
        if org is None:
            raise ChainTraceError("BadRequest",
                                  f"org {org_id!r} is not registered")
        result = system.user_authority.register_user(
            field(data, "user"), org_id, org.role, field(data, "credential"))
        return _ok(result)

    @app.post("/partners")
    async def link_partner(request: Request):
        principal = principal_of(request)
        data = await body_of(request)
        result = system.enterprise.link_partner(
            principal, field(data, "a"), field(data, "b"))
        return _ok(result)

    # -- warehousing -----------------------------------------------------------
    @app.post("/certifications")
    async def register_certification(request: Request):
        principal = principal_of(request)
        data = await body_of(request)
        batches = field(data, "batches", list)
        result = system.warehousing.register_certification(
            principal, field(data, "cert"), field(data, "issuer"),
            batches, field(data, "blob_digest"))
        return _ok(result)

    @app.post("/warehousing/produce")
    async def produce(request: Request):
        principal = principal_of(request)
        data = await body_of(request)
        result = system.warehousing.produce(
            principal, field(data, "batch"), field(data, "qty", int))
        return _ok(result)

    @app.post("/warehousing/outbound")
    async def outbound(request: Request):
        principal = principal_of(request)
        data = await body_of(request)
        receipt = system.warehousing.record_outbound(
            principal, field(data, "batch"), field(data, "to"),
            field(data, "qty", int))
        return _ok(receipt.to_dict())

    @app.post("/warehousing/inbound")
    async def inbound(request: Request):
        principal = principal_of(request)
        data = await body_of(request)
        result = system.warehousing.record_inbound(
            principal, field(data, "batch"), field(data, "from"),
            field(data, "qty", int), field(data, "cert"))
        return _ok(result)

    @app.post("/warehousing/inbound-by-scan")
    async def inbound_by_scan(request: Request):
        principal = principal_of(request)
        data = await body_of(request)
        result = run_flow(system, "inbound_by_scan", principal, {
            "token": field(data, "token"), "cert": data.get("cert", ""),
        })
        return _ok(result)

    @app.post("/warehousing/consume")
    async def consume(request: Request):
        principal = principal_of(request)
        data = await body_of(request)
        result = system.warehousing.consume(
            principal, field(data, "batch"), field(data, "qty", int))
        return _ok(result)

    @app.get("/receipts/{outbound_tx}")
    async def receipt(outbound_tx: str, request: Request):
        principal = principal_of(request)
        return _ok(system.warehousing.receipt(outbound_tx, principal).to_dict())

    # -- inventory ----------------------------------------------------------------
    @app.post("/qualifications")
    async def submit_qualification(request: Request, file: UploadFile,
                                   qual: str = Form(...)):
        principal = principal_of(request)
        content = await file.read()
        result = run_flow(system, "submit_qualification_with_file", principal,
                          {"qual": qual, "file": content})
        return _ok(result)

    @app.get("/qualifications")
    async def pending_qualifications(request: Request):
        principal = supervisor_of(request)
        return _ok(system.supervision.pending_qualifications(principal))

    @app.get("/qualifications/{qual_id}")
    async def qualification(qual_id: str, request: Request):
        principal = principal_of(request)
        return _ok(system.inventory.qualification_view(qual_id, principal))

    @app.post("/qualifications/{qual_id}/decision")
    async def decide_qualification(qual_id: str, request: Request):
        principal = principal_of(request)
        data = await body_of(request)
        result = system.supervision.decide_qualification(
            principal, qual_id, field(data, "decision"))
        return _ok(result)

    @app.get("/inventory/{org}/stock")
    async def stock(org: str, request: Request):
        principal = principal_of(request)
        return _ok(system.inventory.query_stock(org, principal))

    # -- traceability ----------------------------------------------------------------
    @app.get("/trace/{token}")
    async def trace(token: str, request: Request):
        principal = maybe_principal(request)
        hops = system.traceability.trace(token, principal)
        return _ok({"hops": hops})

    @app.post("/tokens/reissue")
    async def reissue(request: Request):
        principal_of(request)
        data = await body_of(request)
        return _ok({"token": system.warehousing.reissue_token(
            field(data, "batch"))})

    # -- supervision -------------------------------------------------------------------
    @app.get("/audit")
    async def audit(request: Request):
        principal = supervisor_of(request)
        return _ok({"count": system.supervision.audit_count(principal),
                    "entries": system.supervision.audit_entries(principal),
                    "skipped": system.supervision.skipped_events})

    # -- chain operations ----------------------------------------------------------------
    @app.get("/chains/{label}/verify")
    async def verify(label: str, request: Request):
        principal_of(request)
        report = system.engine.verify_chain(chain_of(label))
        return _ok({"chain": label, "ok": report.ok,
                    "first_bad_height": report.first_bad_height,
                    "detail": report.detail})

    @app.post("/chains/{label}/anchor")
    async def anchor(label: str, request: Request):
        principal_of(request)
        handle = system.engine.anchor(chain_of(label))
        if system.drive == "manual":
            system.engine.chains[ChainId.MAIN].flush()
        result = handle.wait(10.0).outcome()
        result["tx_id"] = handle.tx_id.hex()
        return _ok(result)

    @app.get("/locate/{key}")
    async def locate(key: str, request: Request):
        principal_of(request)
        records = system.engine.locate(key)
        return _ok([{"key": r.key, "sub_chain": r.sub_chain.label,
                     "tx_id": r.tx_id.hex(), "height": r.height}
                    for r in records])

    @app.get("/services")
    async def services(request: Request):
        principal_of(request)
        return _ok({name: system.registry.healthy(name)
                    for name in system.registry.names()})

    if console_dir is not None and Path(console_dir).is_dir():
        app.mount("/console", StaticFiles(directory=str(console_dir),
                                          html=True), name="console")

    return app
