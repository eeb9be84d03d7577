"""Task scheduling: named multi-step flows over the context services.

The gateway owns zero business rules; a flow only sequences service calls
and reports which step failed. Blobs written by an earlier step are
immutable and retained even when a later step fails.
"""

from __future__ import annotations

from typing import Callable

from chaintrace.domains import tokens
from chaintrace.domains.services import Principal
from chaintrace.errors import ChainTraceError


class FlowStepError(Exception):
    def __init__(self, flow: str, step: str, error: ChainTraceError):
        super().__init__(f"{flow}/{step}: {error.code}")
        self.flow = flow
        self.step = step
        self.error = error


class _Flow:
    """Runs steps in order; failures carry the failing step's name."""

    def __init__(self, name: str):
        self.name = name
        self._out: dict = {}

    def step(self, step_name: str, fn: Callable, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ChainTraceError as err:
            raise FlowStepError(self.name, step_name, err) from err


def inbound_by_scan(system, principal: Principal, args: dict) -> dict:
    flow = _Flow("inbound_by_scan")
    batch = flow.step("decode_token", tokens.decode, args["token"])
    result = flow.step("record_inbound", system.warehousing.inbound_by_scan,
                       principal, args["token"], args.get("cert", ""))
    result["batch"] = batch
    return result


def submit_qualification_with_file(system, principal: Principal,
                                   args: dict) -> dict:
    flow = _Flow("submit_qualification_with_file")
    digest = flow.step("store_blob", system.blobs.put, args["file"])
    result = flow.step("submit_qualification",
                       system.inventory.submit_qualification,
                       principal, args["qual"], digest.hex())
    result["blob_digest"] = digest.hex()
    return result


FLOWS = {
    "inbound_by_scan": inbound_by_scan,
    "submit_qualification_with_file": submit_qualification_with_file,
}


def run_flow(system, name: str, principal: Principal, args: dict) -> dict:
    try:
        flow_fn = FLOWS[name]
    except KeyError:
        raise ChainTraceError("UnknownFlow", f"no flow named {name!r}") from None
    return flow_fn(system, principal, args)
