"""Exact scalar arithmetic helpers built on gmpy2.

Every quantity in this package is an exact rational (gmpy2.mpq) or a big
integer (gmpy2.mpz).  No floating point is used anywhere in the core; the
only logarithms that appear are base-2 logarithms of integers, and those are
handled by rational bracketing (see log2_bracket).
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpq, mpz

Q = mpq  # constructor alias: Q(3, 4) is exactly 3/4

ZERO = mpq(0)
ONE = mpq(1)
# The two constants the constructions are calibrated against.
C_099 = mpq(99, 100)
C_0995 = mpq(199, 200)


def qfloor(q) -> mpz:
    q = mpq(q)
    return q.numerator // q.denominator  # mpz floordiv rounds toward -inf


def qceil(q) -> mpz:
    q = mpq(q)
    return -((-q.numerator) // q.denominator)


def pow2(e) -> mpq:
    """2**e as an exact rational; e may be negative and arbitrarily large."""
    e = int(e)
    if e >= 0:
        return mpq(mpz(1) << e)
    return mpq(1, mpz(1) << (-e))


def ipow2(e) -> mpz:
    """2**e as an integer; e must be >= 0."""
    e = int(e)
    if e < 0:
        raise ValueError("negative exponent for integer power of two")
    return mpz(1) << e


def pow2_exponent(q):
    """Return integer e with q == 2**e, or None if q is not a power of two."""
    q = mpq(q)
    num, den = q.numerator, q.denominator
    if num <= 0:
        return None
    if den == 1:
        e = num.bit_length() - 1
        return e if (mpz(1) << e) == num else None
    if num != 1:
        return None
    e = den.bit_length() - 1
    return -e if (mpz(1) << e) == den else None


def is_dyadic(q) -> bool:
    den = mpq(q).denominator
    return den == (mpz(1) << (den.bit_length() - 1))


@dataclass(frozen=True)
class Dyadic:
    """Canonical dyadic rational m * 2**e with m odd, or zero as (0, 0).

    This is the wire form for grid endpoints and periods; internally most
    code just carries mpq and converts at the serialization boundary.
    """

    m: mpz
    e: int

    def __post_init__(self):
        object.__setattr__(self, "m", mpz(self.m))
        object.__setattr__(self, "e", int(self.e))
        if self.m == 0:
            if self.e != 0:
                raise ValueError("canonical zero is (0, 0)")
        elif self.m % 2 == 0:
            raise ValueError("mantissa must be odd in canonical form")

    @staticmethod
    def from_q(q) -> "Dyadic":
        q = mpq(q)
        if q == 0:
            return Dyadic(mpz(0), 0)
        if not is_dyadic(q):
            raise ValueError("not a dyadic rational: %s" % q)
        num, den = q.numerator, q.denominator
        e = -(den.bit_length() - 1)
        # strip factors of two from the numerator
        tz = trailing_zeros(num)
        return Dyadic(num >> tz, e + tz)

    def to_q(self) -> mpq:
        return self.m * pow2(self.e)


def trailing_zeros(n) -> int:
    n = mpz(n)
    if n == 0:
        return 0
    return int((n & -n).bit_length() - 1)


def q_str(q) -> str:
    """Canonical "num/den" form, denominator always spelled out."""
    q = mpq(q)
    return "%s/%s" % (q.numerator, q.denominator)


def q_parse(s) -> mpq:
    if not isinstance(s, str):
        raise TypeError("rational fields must be strings, got %r" % type(s))
    # reports fall back to hex for huge components; accept both spellings
    if "0x" in s or "0X" in s:
        num, _, den = s.partition("/")
        return mpq(int(num, 0), int(den, 0) if den else 1)
    return mpq(s)


def log2_bracket(p, bits=32):
    """Rational bracket [lo, hi] with lo <= log2(p) <= hi and hi-lo = 2**-bits.

    Uses the bit length of p**(2**bits): if that is a+1 then
    a <= 2**bits * log2(p) < a+1.  Exact powers of two short-circuit to a
    zero-width bracket.
    """
    p = mpz(p)
    if p <= 0:
        raise ValueError("log2 of a nonpositive integer")
    e = p.bit_length() - 1
    if (mpz(1) << e) == p:
        q = mpq(e)
        return q, q
    a = mpz(p ** (mpz(1) << bits)).bit_length() - 1
    scale = mpz(1) << bits
    return mpq(a, scale), mpq(a + 1, scale)


def log2sq_bracket(p, bits=32):
    """Bracket for (log2 p)**2, conservative on both ends."""
    lo, hi = log2_bracket(p, bits)
    return lo * lo, hi * hi


def _log2_frac(m, bits, prec, up):
    """One-sided dyadic estimate of log2(m) for m in (1, 2).

    Classic digit-by-digit squaring, with every intermediate rounded
    outward (down for a lower estimate, up for an upper one) to prec
    fractional bits so the numbers never grow.  Monotonicity of rounding
    makes each side a genuine bound; prec >> bits keeps the slop below
    the last digit.
    """
    scale = mpz(1) << prec
    if up:
        y = mpq(qceil(m * scale), scale)
    else:
        y = mpq(qfloor(m * scale), scale)
    acc = mpz(0)
    for _ in range(bits):
        y = y * y
        if up:
            y = mpq(qceil(y * scale), scale)
        else:
            y = mpq(qfloor(y * scale), scale)
        acc <<= 1
        if y >= 2:
            acc |= 1
            y = y / 2
    if up:
        # the digit expansion itself truncates; one ulp restores the bound
        acc += 1
    return mpq(acc, mpz(1) << bits)


def log2_bracket_rational(x, bits=16):
    """Rational bracket [lo, hi] around log2(x) for any positive rational x.

    Unlike log2_bracket this never forms x**(2**bits), so it stays cheap
    for rational x and for large bits.  Exact powers of two collapse to a
    zero-width bracket.
    """
    x = mpq(x)
    if x <= 0:
        raise ValueError("log2 of a nonpositive rational")
    e = x.numerator.bit_length() - x.denominator.bit_length()
    m = x / pow2(e)
    if m < 1:
        e -= 1
        m = m * 2
    elif m >= 2:
        e += 1
        m = m / 2
    if m == 1:
        return mpq(e), mpq(e)
    prec = bits + 32
    lo = e + _log2_frac(m, bits, prec, up=False)
    hi = e + _log2_frac(m, bits, prec, up=True)
    return lo, hi


def bracketed_floor(exact_part, brackets, bits=16, max_bits=4096):
    """floor(exact_part + sum of bracketed log terms), refined until pinned.

    brackets: list of callables bits -> (lo, hi).  Raises if the bracket
    still straddles an integer at max_bits (never happens for the inputs
    this package evaluates, but a silent wrong floor would be worse than a
    loud failure).
    """
    exact_part = mpq(exact_part)
    while bits <= max_bits:
        lo = exact_part
        hi = exact_part
        for br in brackets:
            blo, bhi = br(bits)
            lo += blo
            hi += bhi
        flo, fhi = qfloor(lo), qfloor(hi)
        if flo == fhi:
            return int(flo)
        bits *= 2
    raise ArithmeticError("floor not pinned at %d bracket bits" % max_bits)
