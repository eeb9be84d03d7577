# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend: canonical encoding and SHA-256 chains in C.

Bit-identical to chaintrace.kernel.pure. Digests go straight to OpenSSL's
EVP interface and the encode/verify loops run without the GIL where they
can, so per-chain commit loops overlap on multicore hosts.
"""

from libc.stdint cimport uint8_t, uint32_t, uint64_t
from libc.string cimport memcpy
from libc.stdlib cimport malloc, free
from cpython.bytes cimport PyBytes_FromStringAndSize, PyBytes_AS_STRING, PyBytes_GET_SIZE

BACKEND = "c"

cdef extern from "openssl/evp.h" nogil:
    ctypedef struct EVP_MD:
        pass
    ctypedef struct EVP_MD_CTX:
        pass
    const EVP_MD* EVP_sha256()
    EVP_MD_CTX* EVP_MD_CTX_new()
    void EVP_MD_CTX_free(EVP_MD_CTX* ctx)
    int EVP_DigestInit_ex(EVP_MD_CTX* ctx, const EVP_MD* md, void* engine)
    int EVP_DigestUpdate(EVP_MD_CTX* ctx, const void* d, size_t cnt)
    int EVP_DigestFinal_ex(EVP_MD_CTX* ctx, unsigned char* md, unsigned int* s)
    int EVP_Digest(const void* data, size_t count, unsigned char* md,
                   unsigned int* size, const EVP_MD* type, void* engine)


cdef inline void _sha_oneshot(const uint8_t* data, size_t n, uint8_t* out) noexcept nogil:
    EVP_Digest(data, n, out, NULL, EVP_sha256(), NULL)


def sha256(bytes data) -> bytes:
    cdef const uint8_t* p = <const uint8_t*> PyBytes_AS_STRING(data)
    cdef size_t n = <size_t> PyBytes_GET_SIZE(data)
    out = PyBytes_FromStringAndSize(NULL, 32)
    cdef uint8_t* o = <uint8_t*> PyBytes_AS_STRING(out)
    with nogil:
        _sha_oneshot(p, n, o)
    return out


# ------------------------------------------------------- growable buffer

cdef struct Buf:
    uint8_t* p
    size_t len
    size_t cap


cdef int _buf_reserve(Buf* b, size_t extra) except -1:
    cdef size_t need = b.len + extra
    cdef size_t cap
    cdef uint8_t* np
    if need <= b.cap:
        return 0
    cap = b.cap * 2 if b.cap else 256
    while cap < need:
        cap *= 2
    np = <uint8_t*> malloc(cap)
    if np == NULL:
        raise MemoryError()
    if b.p != NULL:
        memcpy(np, b.p, b.len)
        free(b.p)
    b.p = np
    b.cap = cap
    return 0


cdef inline int _buf_u8(Buf* b, uint8_t v) except -1:
    _buf_reserve(b, 1)
    b.p[b.len] = v
    b.len += 1
    return 0


cdef int _buf_u32(Buf* b, uint32_t v) except -1:
    _buf_reserve(b, 4)
    b.p[b.len] = <uint8_t> (v >> 24)
    b.p[b.len + 1] = <uint8_t> (v >> 16)
    b.p[b.len + 2] = <uint8_t> (v >> 8)
    b.p[b.len + 3] = <uint8_t> v
    b.len += 4
    return 0


cdef int _buf_u64(Buf* b, uint64_t v) except -1:
    cdef int i
    _buf_reserve(b, 8)
    for i in range(8):
        b.p[b.len + i] = <uint8_t> (v >> (56 - 8 * i))
    b.len += 8
    return 0


cdef int _buf_raw(Buf* b, const uint8_t* p, size_t n) except -1:
    _buf_reserve(b, n)
    memcpy(b.p + b.len, p, n)
    b.len += n
    return 0


cdef int _buf_bytes(Buf* b, bytes raw) except -1:
    cdef size_t n = <size_t> PyBytes_GET_SIZE(raw)
    _buf_u32(b, <uint32_t> n)
    _buf_raw(b, <const uint8_t*> PyBytes_AS_STRING(raw), n)
    return 0


cdef bytes _buf_take(Buf* b):
    out = PyBytes_FromStringAndSize(<char*> b.p, b.len)
    if b.p != NULL:
        free(b.p)
    b.p = NULL
    b.len = 0
    b.cap = 0
    return out


# ------------------------------------------------------ canonical encoders

def tx_canonical(int chain, str contract, str operation, args, str submitter,
                 nonce) -> bytes:
    cdef Buf b
    b.p = NULL; b.len = 0; b.cap = 0
    _buf_u8(&b, <uint8_t> chain)
    _buf_bytes(&b, contract.encode("utf-8"))
    _buf_bytes(&b, operation.encode("utf-8"))
    _buf_u32(&b, <uint32_t> len(args))
    for key, value in args:
        _buf_bytes(&b, (<str> key).encode("utf-8"))
        _buf_bytes(&b, <bytes> value)
    _buf_bytes(&b, submitter.encode("utf-8"))
    _buf_u64(&b, <uint64_t> nonce)
    return _buf_take(&b)


def committed_record(bytes canonical, commit_time, int role, int status,
                     str error) -> bytes:
    cdef Buf b
    b.p = NULL; b.len = 0; b.cap = 0
    _buf_bytes(&b, canonical)
    _buf_u64(&b, <uint64_t> commit_time)
    _buf_u8(&b, <uint8_t> role)
    _buf_u8(&b, <uint8_t> status)
    _buf_bytes(&b, error.encode("utf-8"))
    return _buf_take(&b)


def tx_root(tx_ids) -> bytes:
    cdef EVP_MD_CTX* ctx = EVP_MD_CTX_new()
    cdef const uint8_t* p
    EVP_DigestInit_ex(ctx, EVP_sha256(), NULL)
    for tid in tx_ids:
        p = <const uint8_t*> PyBytes_AS_STRING(<bytes> tid)
        with nogil:
            EVP_DigestUpdate(ctx, p, 32)
    out = PyBytes_FromStringAndSize(NULL, 32)
    EVP_DigestFinal_ex(ctx, <uint8_t*> PyBytes_AS_STRING(out), NULL)
    EVP_MD_CTX_free(ctx)
    return out


def seal_batch(canonicals):
    """tx_ids plus their root for a batch of canonical tx encodings.

    One GIL-free pass over the whole batch; the borrowed buffer pointers
    stay valid because the input list keeps the bytes objects alive.
    """
    cdef Py_ssize_t m = len(canonicals)
    cdef const uint8_t** ptrs = <const uint8_t**> malloc((m or 1) * sizeof(uint8_t*))
    cdef size_t* lens = <size_t*> malloc((m or 1) * sizeof(size_t))
    cdef uint8_t* ids_buf = <uint8_t*> malloc((m or 1) * 32)
    cdef Py_ssize_t i
    cdef EVP_MD_CTX* ctx
    cdef uint8_t* o
    if ptrs == NULL or lens == NULL or ids_buf == NULL:
        free(ptrs); free(lens); free(ids_buf)
        raise MemoryError()
    try:
        for i in range(m):
            canon = <bytes> canonicals[i]
            ptrs[i] = <const uint8_t*> PyBytes_AS_STRING(canon)
            lens[i] = <size_t> PyBytes_GET_SIZE(canon)
        out = PyBytes_FromStringAndSize(NULL, 32)
        o = <uint8_t*> PyBytes_AS_STRING(out)
        with nogil:
            ctx = EVP_MD_CTX_new()
            EVP_DigestInit_ex(ctx, EVP_sha256(), NULL)
            for i in range(m):
                _sha_oneshot(ptrs[i], lens[i], ids_buf + 32 * i)
                EVP_DigestUpdate(ctx, ids_buf + 32 * i, 32)
            EVP_DigestFinal_ex(ctx, <uint8_t*> o, NULL)
            EVP_MD_CTX_free(ctx)
        ids = [PyBytes_FromStringAndSize(<char*> (ids_buf + 32 * i), 32)
               for i in range(m)]
        return ids, out
    finally:
        free(ptrs); free(lens); free(ids_buf)


def state_digest_update(bytes prev, writes) -> bytes:
    cdef EVP_MD_CTX* ctx = EVP_MD_CTX_new()
    cdef uint8_t vdig[32]
    cdef uint8_t lenbuf[4]
    cdef const uint8_t* p
    cdef size_t n
    EVP_DigestInit_ex(ctx, EVP_sha256(), NULL)
    EVP_DigestUpdate(ctx, PyBytes_AS_STRING(prev), 32)
    for key, value in sorted(writes, key=_first):
        kb = (<str> key).encode("utf-8")
        p = <const uint8_t*> PyBytes_AS_STRING(<bytes> kb)
        n = <size_t> PyBytes_GET_SIZE(<bytes> kb)
        lenbuf[0] = <uint8_t> (n >> 24); lenbuf[1] = <uint8_t> (n >> 16)
        lenbuf[2] = <uint8_t> (n >> 8); lenbuf[3] = <uint8_t> n
        with nogil:
            EVP_DigestUpdate(ctx, lenbuf, 4)
            EVP_DigestUpdate(ctx, p, n)
        p = <const uint8_t*> PyBytes_AS_STRING(<bytes> value)
        n = <size_t> PyBytes_GET_SIZE(<bytes> value)
        with nogil:
            _sha_oneshot(p, n, vdig)
            EVP_DigestUpdate(ctx, vdig, 32)
    out = PyBytes_FromStringAndSize(NULL, 32)
    EVP_DigestFinal_ex(ctx, <uint8_t*> PyBytes_AS_STRING(out), NULL)
    EVP_MD_CTX_free(ctx)
    return out


def _first(kv):
    return kv[0]


def block_body(int chain, height, bytes prev_hash, bytes txroot,
               bytes state_digest, timestamp, records) -> bytes:
    cdef Buf b
    b.p = NULL; b.len = 0; b.cap = 0
    _buf_u8(&b, <uint8_t> chain)
    _buf_u64(&b, <uint64_t> height)
    _buf_raw(&b, <const uint8_t*> PyBytes_AS_STRING(prev_hash), 32)
    _buf_raw(&b, <const uint8_t*> PyBytes_AS_STRING(txroot), 32)
    _buf_raw(&b, <const uint8_t*> PyBytes_AS_STRING(state_digest), 32)
    _buf_u64(&b, <uint64_t> timestamp)
    _buf_u32(&b, <uint32_t> len(records))
    for rec in records:
        _buf_raw(&b, <const uint8_t*> PyBytes_AS_STRING(<bytes> rec),
                 <size_t> PyBytes_GET_SIZE(<bytes> rec))
    return _buf_take(&b)


def event_canonical(str topic, str key, int source_chain, bytes source_tx,
                    payload) -> bytes:
    cdef Buf b
    b.p = NULL; b.len = 0; b.cap = 0
    _buf_bytes(&b, topic.encode("utf-8"))
    _buf_bytes(&b, key.encode("utf-8"))
    _buf_u8(&b, <uint8_t> source_chain)
    _buf_raw(&b, <const uint8_t*> PyBytes_AS_STRING(source_tx), 32)
    items = sorted(payload, key=_first)
    _buf_u32(&b, <uint32_t> len(items))
    for k, v in items:
        _buf_bytes(&b, (<str> k).encode("utf-8"))
        _buf_bytes(&b, <bytes> v)
    return _buf_take(&b)


# --------------------------------------------------------- verification

cdef enum:
    _OK = 0
    _MALFORMED = 1
    _TXROOT_MISMATCH = 2
    _HASH_MISMATCH = 3

OK = _OK
MALFORMED = _MALFORMED
TXROOT_MISMATCH = _TXROOT_MISMATCH
HASH_MISMATCH = _HASH_MISMATCH


cdef inline uint32_t _rd_u32(const uint8_t* p) noexcept nogil:
    return ((<uint32_t> p[0]) << 24) | ((<uint32_t> p[1]) << 16) \
         | ((<uint32_t> p[2]) << 8) | (<uint32_t> p[3])


cdef int _struct_verify(const uint8_t* body, size_t n,
                        const uint8_t* stored) noexcept nogil:
    cdef EVP_MD_CTX* root
    cdef uint8_t tid[32]
    cdef uint8_t dig[32]
    cdef size_t pos, clen, elen
    cdef uint32_t ntx
    cdef uint32_t i
    cdef int j
    cdef int rc = _OK
    if n < 117:
        return _MALFORMED
    ntx = _rd_u32(body + 113)
    pos = 117
    root = EVP_MD_CTX_new()
    EVP_DigestInit_ex(root, EVP_sha256(), NULL)
    for i in range(ntx):
        if pos + 4 > n:
            rc = _MALFORMED
            break
        clen = <size_t> _rd_u32(body + pos)
        pos += 4
        if clen > n or pos + clen + 10 + 4 > n:
            rc = _MALFORMED
            break
        _sha_oneshot(body + pos, clen, tid)
        EVP_DigestUpdate(root, tid, 32)
        pos += clen + 10
        elen = <size_t> _rd_u32(body + pos)
        pos += 4
        if elen > n or pos + elen > n:
            rc = _MALFORMED
            break
        pos += elen
    if rc == _OK and pos != n:
        rc = _MALFORMED
    EVP_DigestFinal_ex(root, tid, NULL)
    EVP_MD_CTX_free(root)
    if rc != _OK:
        return rc
    for j in range(32):
        if tid[j] != body[41 + j]:
            return _TXROOT_MISMATCH
    _sha_oneshot(body, n, dig)
    for j in range(32):
        if dig[j] != stored[j]:
            return _HASH_MISMATCH
    return _OK


def block_struct_verify(bytes body, bytes stored_hash) -> int:
    cdef const uint8_t* p = <const uint8_t*> PyBytes_AS_STRING(body)
    cdef size_t n = <size_t> PyBytes_GET_SIZE(body)
    cdef const uint8_t* s = <const uint8_t*> PyBytes_AS_STRING(stored_hash)
    cdef int rc
    if PyBytes_GET_SIZE(stored_hash) != 32:
        return _MALFORMED
    with nogil:
        rc = _struct_verify(p, n, s)
    return rc
