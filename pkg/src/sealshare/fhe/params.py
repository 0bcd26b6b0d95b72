"""Parameter profiles for the boolean homomorphic engine.

`standard-128` is the classic gate-bootstrapping parameter set from the
CGGI line of work (LWE n=630 at stddev 2^-15, GLWE N=1024/k=1 at 2^-25,
decomposition 2^7 x 3, key switch 2^2 x 8), targeting >= 128-bit security.

`test-fast` is INSECURE BY DESIGN: the LWE dimension is tiny so that CI can
push hundreds of thousands of gates through the engine. Noise levels are
chosen so correctness margins stay above 10 sigma; it must never be used
outside tests and benchmarks, and key containers carry its profile id so a
misconfigured deployment is detectable.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import MalformedInput


@dataclass(frozen=True)
class Profile:
    name: str
    profile_id: int
    secure: bool
    lwe_n: int            # LWE mask dimension
    glwe_N: int           # polynomial degree (power of two)
    glwe_k: int           # GLWE mask size
    bg_bit: int           # blind-rotate decomposition base, log2
    levels: int           # blind-rotate decomposition depth
    ks_base_bit: int      # key-switch decomposition base, log2
    ks_levels: int        # key-switch decomposition depth
    lwe_std: float        # fresh LWE noise, fraction of the torus
    glwe_std: float       # GLWE noise, fraction of the torus
    pk_rows: int          # public-key (subset-sum) sample count

    @property
    def decomp_rows(self) -> int:
        return (self.glwe_k + 1) * self.levels

    @property
    def extracted_n(self) -> int:
        return self.glwe_k * self.glwe_N


STANDARD_128 = Profile(
    name="standard-128",
    profile_id=1,
    secure=True,
    lwe_n=630,
    glwe_N=1024,
    glwe_k=1,
    bg_bit=7,
    levels=3,
    ks_base_bit=2,
    ks_levels=8,
    lwe_std=2.0 ** -15,
    glwe_std=2.0 ** -25,
    # leftover-hash-lemma sizing: (n+1)*log2(q) + 256 slack
    pk_rows=20480,
)

TEST_FAST = Profile(
    name="test-fast",
    profile_id=2,
    secure=False,
    lwe_n=16,
    glwe_N=128,
    glwe_k=1,
    bg_bit=8,
    levels=2,
    ks_base_bit=4,
    ks_levels=4,
    lwe_std=2.0 ** -22,
    glwe_std=2.0 ** -30,
    pk_rows=1024,
)

_PROFILES = {p.name: p for p in (STANDARD_128, TEST_FAST)}
_BY_ID = {p.profile_id: p for p in (STANDARD_128, TEST_FAST)}


def get_profile(name: str) -> Profile:
    try:
        return _PROFILES[name]
    except KeyError:
        raise MalformedInput(
            f"unknown profile {name!r}; expected one of {sorted(_PROFILES)}") from None


def profile_by_id(profile_id: int) -> Profile:
    try:
        return _BY_ID[profile_id]
    except KeyError:
        raise MalformedInput(f"unknown profile id {profile_id}") from None
