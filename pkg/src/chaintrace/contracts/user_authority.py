"""User authority contract: identities and credential fingerprints."""

from __future__ import annotations

from chaintrace.contracts.base import Contract, kpath
from chaintrace.errors import ContractError
from chaintrace.ledger.chain import TxContext

TOPIC_USER_REGISTERED = "user_authority.user_registered"


class UserAuthorityContract(Contract):
    name = "user_authority"
    DIGEST_ARGS = {"register_user": frozenset({"cred_digest"})}

    def op_register_user(self, ctx: TxContext) -> None:
        user = ctx.arg_str("user")
        if not user:
            raise ContractError("MalformedArgs", "user id must be nonempty")
        if ctx.get(kpath("user", user)) is not None:
            raise ContractError("DuplicateUser",
                                f"user {user!r} already registered")
        org = ctx.arg_str("org")
        role = ctx.arg_str("role")
        if role not in ("Member", "Supervisor"):
            raise ContractError("MalformedArgs", f"unknown role {role!r}")
        self._put(ctx, kpath("user", user), {
            "org": org, "role": role, "cred": ctx.arg_str("cred_digest"),
        })
        ctx.emit(TOPIC_USER_REGISTERED, user, {
            "user": user, "org": org, "time": str(ctx.commit_time),
        })
