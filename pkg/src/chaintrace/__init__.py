"""chaintrace: a master-slave multi-chain ledger platform for supply-chain
traceability.

One main chain holds metadata and index records; six domain sub-chains
(user authority, enterprise, warehousing, inventory, supervision,
traceability) hold business state. Bounded-context services communicate
through a durable event bus, documents live in a content-addressed blob
store, and an HTTP gateway plus CLI expose the whole thing.
"""

__version__ = "0.1.0"
