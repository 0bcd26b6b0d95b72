"""Batched gate-bootstrapping engine over the 32-bit discretized torus.

Everything works on arrays of LWE ciphertexts shaped (batch, n+1), stored
as int64 holding values mod 2^32. Bits encode as +-1/8 on the torus; every
binary gate is a small linear combination followed by one bootstrap, so
noise never accumulates across circuit depth.

Performance notes baked into the implementation:
- negacyclic polynomial products run as length-2N real FFTs (scipy pocketfft,
  multithreaded); decomposed digits are small enough that all float64
  arithmetic stays exact except for torus-noise-level FFT rounding;
- the per-gate hot path is vectorized across the whole batch, so circuits
  should batch as many independent gates per call as they can;
- the key switch is a single float64 matmul (exact: products stay < 2^53).
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from ..errors import EntropyError
from .params import Profile

MASK = np.int64(0xFFFFFFFF)
MU = np.int64(1 << 29)        # 1/8 of the torus
_QUARTER = np.int64(1 << 30)
_FFT_WORKERS = -1             # pocketfft: use all cores
# Bootstraps run in bounded chunks: caps the working set independently of
# circuit width and keeps per-gate cost flat across batch sizes.
_CHUNK_ROWS = 256


def _rng_from_seed(seed: int | None) -> np.random.Generator:
    if seed is None:
        try:
            seed = secrets.randbits(128)
        except Exception as exc:  # pragma: no cover
            raise EntropyError("OS entropy source unavailable") from exc
    return np.random.default_rng(seed)


def _uniform(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(0, 1 << 32, size=shape, dtype=np.uint64).astype(np.int64)


def _noise(rng: np.random.Generator, shape, std: float) -> np.ndarray:
    return np.rint(rng.normal(0.0, std * 2.0 ** 32, shape)).astype(np.int64) & MASK


def _negacyclic_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact product of integer polynomials mod X^N + 1, reduced mod 2^32."""
    n = a.shape[-1]
    fa = scipy.fft.rfft(a.astype(np.float64), 2 * n, axis=-1, workers=_FFT_WORKERS)
    fb = scipy.fft.rfft(b.astype(np.float64), 2 * n, axis=-1, workers=_FFT_WORKERS)
    c = scipy.fft.irfft(fa * fb, 2 * n, axis=-1, workers=_FFT_WORKERS)
    return np.rint(c[..., :n] - c[..., n:]).astype(np.int64) & MASK


@dataclass
class SecretKey:
    """LWE secret: the patient-held decryption key."""
    profile: Profile
    s: np.ndarray  # (n,) in {0,1}


@dataclass
class PublicKey:
    """Subset-sum (Regev) encryption key: LWE samples of zero."""
    profile: Profile
    samples: np.ndarray  # (pk_rows, n+1) int64 mod 2^32


@dataclass
class BootstrapKey:
    """Per-secret-bit GGSW material plus the key-switch table."""
    profile: Profile
    bsk: np.ndarray        # (n, decomp_rows, k+1, N) int64 mod 2^32
    ksk: np.ndarray        # (k*N*ks_levels, n+1) int64 mod 2^32
    _bsk_fft: np.ndarray | None = field(default=None, repr=False)
    _ksk_f64: np.ndarray | None = field(default=None, repr=False)

    def fft_cache(self) -> tuple[np.ndarray, np.ndarray]:
        if self._bsk_fft is None:
            self._bsk_fft = np.ascontiguousarray(scipy.fft.rfft(
                self.bsk.astype(np.float64), 2 * self.profile.glwe_N,
                axis=-1, workers=_FFT_WORKERS))
            self._ksk_f64 = self.ksk.astype(np.float64)
        return self._bsk_fft, self._ksk_f64


def generate_secret_key(profile: Profile, rng: np.random.Generator) -> SecretKey:
    return SecretKey(profile, rng.integers(0, 2, size=profile.lwe_n, dtype=np.int64))


def generate_public_key(sk: SecretKey, rng: np.random.Generator) -> PublicKey:
    p = sk.profile
    a = _uniform(rng, (p.pk_rows, p.lwe_n))
    e = _noise(rng, (p.pk_rows,), p.lwe_std)
    b = ((a @ sk.s) + e) & MASK
    return PublicKey(p, np.concatenate([a, b[:, None]], axis=1))


def generate_bootstrap_key(sk: SecretKey, rng: np.random.Generator) -> BootstrapKey:
    p = sk.profile
    glwe_s = rng.integers(0, 2, size=(p.glwe_k, p.glwe_N), dtype=np.int64)

    # GGSW encryptions of each LWE secret bit, all rows batched.
    rows = p.lwe_n * p.decomp_rows
    a = _uniform(rng, (rows, p.glwe_k, p.glwe_N))
    body = np.zeros((rows, p.glwe_N), dtype=np.int64)
    for j in range(p.glwe_k):
        body = (body + _negacyclic_mul(a[:, j, :], glwe_s[j][None, :])) & MASK
    body = (body + _noise(rng, (rows, p.glwe_N), p.glwe_std)) & MASK
    z = np.concatenate([a, body[:, None, :]], axis=1).reshape(
        p.lwe_n, p.decomp_rows, p.glwe_k + 1, p.glwe_N)
    for level in range(p.levels):
        scale = np.int64(1) << (32 - (level + 1) * p.bg_bit)
        for j in range(p.glwe_k + 1):
            row = j * p.levels + level
            z[:, row, j, 0] = (z[:, row, j, 0] + sk.s * scale) & MASK

    # Key switch: extracted GLWE coefficients -> LWE secret s.
    s_ext = glwe_s.reshape(-1)
    ks_rows = p.extracted_n * p.ks_levels
    ka = _uniform(rng, (ks_rows, p.lwe_n))
    ke = _noise(rng, (ks_rows,), p.lwe_std)
    scales = np.array([np.int64(1) << (32 - (t + 1) * p.ks_base_bit)
                       for t in range(p.ks_levels)], dtype=np.int64)
    msg = np.repeat(s_ext, p.ks_levels) * np.tile(scales, p.extracted_n)
    kb = ((ka @ sk.s) + msg + ke) & MASK
    ksk = np.concatenate([ka, kb[:, None]], axis=1)
    return BootstrapKey(p, z, ksk)


# ---------------------------------------------------------------- encryption

def encrypt_bits_secret(bits: np.ndarray, sk: SecretKey,
                        rng: np.random.Generator) -> np.ndarray:
    """Fresh LWE encryptions under the secret key (patient-side)."""
    p = sk.profile
    bits = np.asarray(bits, dtype=np.int64)
    a = _uniform(rng, (bits.shape[0], p.lwe_n))
    e = _noise(rng, (bits.shape[0],), p.lwe_std)
    mu = np.where(bits > 0, MU, (-MU) & MASK)
    b = ((a @ sk.s) + mu + e) & MASK
    return np.concatenate([a, b[:, None]], axis=1)


def encrypt_bits_public(bits: np.ndarray, pk: PublicKey,
                        rng: np.random.Generator) -> np.ndarray:
    """Subset-sum encryptions under the public key (practitioner/proxy-side)."""
    p = pk.profile
    bits = np.asarray(bits, dtype=np.int64)
    m = bits.shape[0]
    sel = rng.integers(0, 2, size=(m, p.pk_rows), dtype=np.int64)
    # exact in float64: |entries| < 2^32, pk_rows <= 2^15 -> sums < 2^48
    ct = np.rint(sel.astype(np.float64) @ pk.samples.astype(np.float64)).astype(np.int64) & MASK
    mu = np.where(bits > 0, MU, (-MU) & MASK)
    ct[:, -1] = (ct[:, -1] + mu + _noise(rng, (m,), p.lwe_std)) & MASK
    return ct


def decrypt_bits(ct: np.ndarray, sk: SecretKey) -> np.ndarray:
    """Phase sign decides the bit; garbage in, garbage out on key mismatch."""
    phase = (ct[:, -1] - ct[:, :-1] @ sk.s) & MASK
    return (phase < (np.int64(1) << 31)).astype(np.int8)


def decrypt_phases(ct: np.ndarray, sk: SecretKey) -> np.ndarray:
    """Signed phases, for noise-margin diagnostics in tests."""
    phase = (ct[:, -1] - ct[:, :-1] @ sk.s) & MASK
    return phase - np.where(phase >= (np.int64(1) << 31), np.int64(1) << 32, 0)


def trivial_bits(bits: np.ndarray, profile: Profile) -> np.ndarray:
    """Noiseless placeholder ciphertexts (decrypt to `bits` under ANY key).

    Only sound as operands of a subsequent bootstrapped gate; never use as
    an output that a key-mismatch check is supposed to catch.
    """
    bits = np.asarray(bits, dtype=np.int64)
    ct = np.zeros((bits.shape[0], profile.lwe_n + 1), dtype=np.int64)
    ct[:, -1] = np.where(bits > 0, MU, (-MU) & MASK)
    return ct


# ---------------------------------------------------------------- bootstrap

class Evaluator:
    """Gate evaluator bound to one bootstrap key.

    Counts bootstrapped gates by kind; the gate *sequence* issued for a
    given circuit shape is data-independent, which tests assert directly.
    """

    def __init__(self, bk: BootstrapKey):
        self.profile = bk.profile
        self._bk = bk
        self.gate_counts: dict[str, int] = {}
        self.gate_log: list[tuple[str, int]] = []

    def _record(self, op: str, n: int) -> None:
        self.gate_counts[op] = self.gate_counts.get(op, 0) + n
        self.gate_log.append((op, n))

    # -- linear ops (no bootstrap, no noise refresh)

    def lnot(self, ct: np.ndarray) -> np.ndarray:
        self._record("not", ct.shape[0])
        return (-ct) & MASK

    # -- bootstrapped binary gates

    def land(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        t = (a + b) & MASK
        t[:, -1] = (t[:, -1] - MU) & MASK
        self._record("and", a.shape[0])
        return self._bootstrap(t)

    def lor(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        t = (a + b) & MASK
        t[:, -1] = (t[:, -1] + MU) & MASK
        self._record("or", a.shape[0])
        return self._bootstrap(t)

    def lxor(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        t = (2 * (a + b)) & MASK
        t[:, -1] = (t[:, -1] + _QUARTER) & MASK
        self._record("xor", a.shape[0])
        return self._bootstrap(t)

    def lxnor(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        t = (-2 * (a + b)) & MASK
        t[:, -1] = (t[:, -1] - _QUARTER) & MASK
        self._record("xnor", a.shape[0])
        return self._bootstrap(t)

    def refresh(self, ct: np.ndarray) -> np.ndarray:
        """Bootstrap without changing the message (noise reset)."""
        self._record("refresh", ct.shape[0])
        return self._bootstrap(ct.copy())

    def _bootstrap(self, ct: np.ndarray) -> np.ndarray:
        if ct.shape[0] > _CHUNK_ROWS:
            return np.concatenate([
                self._bootstrap_chunk(ct[i:i + _CHUNK_ROWS])
                for i in range(0, ct.shape[0], _CHUNK_ROWS)])
        return self._bootstrap_chunk(ct)

    def _bootstrap_chunk(self, ct: np.ndarray) -> np.ndarray:
        p = self.profile
        bsk_fft, ksk_f64 = self._bk.fft_cache()
        m = ct.shape[0]
        if m == 0:
            return ct
        big_n = p.glwe_N
        n2 = 2 * big_n
        kp1 = p.glwe_k + 1

        # mod switch to Z_{2N}
        bar = (((ct & MASK) * n2 + (np.int64(1) << 31)) >> 32) % n2
        bara, barb = bar[:, :-1], bar[:, -1]

        # acc body starts as X^{-barb} * v, v the all-MU test polynomial
        j = np.arange(big_n)[None, :]
        src = (j + barb[:, None]) % n2
        sign = np.where(src >= big_n, np.int64(-1), np.int64(1))
        acc = np.zeros((m, kp1, big_n), dtype=np.int64)
        acc[:, p.glwe_k, :] = (MU * sign) & MASK

        bg = np.int64(1) << p.bg_bit
        half = bg >> 1
        offset = sum(int(half) << (32 - (i + 1) * p.bg_bit) for i in range(p.levels))
        shifts = [32 - (i + 1) * p.bg_bit for i in range(p.levels)]

        for i in range(p.lwe_n):
            ri = bara[:, i]
            src = (j - ri[:, None]) % n2
            sign = np.where(src >= big_n, np.int64(-1), np.int64(1))
            rot = np.take_along_axis(acc, np.broadcast_to((src % big_n)[:, None, :], acc.shape), axis=2)
            diff = (rot * sign[:, None, :] - acc) & MASK

            u = diff + offset
            dig = np.empty((m, kp1, p.levels, big_n), dtype=np.float64)
            for lev in range(p.levels):
                dig[:, :, lev, :] = ((u >> shifts[lev]) & (bg - 1)) - half
            f = scipy.fft.rfft(dig.reshape(m, p.decomp_rows, big_n), n2,
                               axis=-1, workers=_FFT_WORKERS)
            prod = np.einsum("mdx,dox->mox", f, bsk_fft[i], optimize=True)
            upd = scipy.fft.irfft(prod, n2, axis=-1, workers=_FFT_WORKERS)
            acc = (acc + np.rint(upd[..., :big_n] - upd[..., big_n:]).astype(np.int64)) & MASK

        # sample-extract coefficient 0 of the accumulator
        a_ext = np.empty((m, p.extracted_n), dtype=np.int64)
        for jj in range(p.glwe_k):
            col = acc[:, jj, :]
            a_ext[:, jj * big_n] = col[:, 0]
            a_ext[:, jj * big_n + 1:(jj + 1) * big_n] = (-col[:, :0:-1]) & MASK
        b_ext = acc[:, p.glwe_k, 0]

        # key switch back to the n-dimensional key (float64 matmul, exact)
        base = np.int64(1) << p.ks_base_bit
        u = a_ext + (np.int64(1) << (32 - p.ks_levels * p.ks_base_bit - 1))
        digs = np.empty((m, p.extracted_n, p.ks_levels), dtype=np.float64)
        for t in range(p.ks_levels):
            digs[:, :, t] = (u >> (32 - (t + 1) * p.ks_base_bit)) & (base - 1)
        contrib = digs.reshape(m, -1) @ ksk_f64
        out = (-np.rint(contrib).astype(np.int64))
        out[:, -1] += b_ext
        return out & MASK

