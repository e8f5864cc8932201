"""Counter-based random streams.

Every random number used by a walk is a pure function of
``(seed, point_index, walker_index, step)``.  The Philox4x64-10 block cipher
is keyed with ``(seed, point_index)`` and fed the counter
``(step, walker_index, 0, 0)``; the four output words of one block drive
one Euler-Maruyama step:

* words 0..2 -> three standard normals (256-layer ziggurat, one word each),
* word 3     -> the uniform used by the Brownian-bridge test.

The ziggurat rejects about 0.7% of words.  Replacement words come from the
side blocks ``(step, walker_index, j, 0)`` with ``j = 1, 2, ...``, so a
rejection never shifts the main sequence.

Nothing depends on evaluation order: walks can be partitioned across
workers arbitrarily without changing a single bit of the output.
"""

import math

import numba as nb
import numpy as np
from llvmlite import ir
from numba import types
from numba.extending import intrinsic

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_U0 = np.uint64(0)
_U1 = np.uint64(1)
_S8 = np.uint64(8)
_S12 = np.uint64(12)
_MASK8 = np.uint64(0xFF)
_MASK52 = np.uint64(0x000FFFFFFFFFFFFF)
_INV_2_52 = 1.0 / 4503599627370496.0

ZIGGURAT_R = 3.6541528853610087963519472518
_ZIGGURAT_V = 0.00492867323399


@intrinsic
def _mulhilo(typingctx, a, b):
    sig = types.UniTuple(types.uint64, 2)(types.uint64, types.uint64)

    def codegen(context, builder, signature, args):
        i128 = ir.IntType(128)
        prod = builder.mul(builder.zext(args[0], i128), builder.zext(args[1], i128))
        hi = builder.trunc(builder.lshr(prod, ir.Constant(i128, 64)), ir.IntType(64))
        lo = builder.trunc(prod, ir.IntType(64))
        return context.make_tuple(builder, signature.return_type, (hi, lo))

    return sig, codegen


@nb.njit(nogil=True)
def philox4x64(c0, c1, c2, c3, k0, k1):
    """Philox4x64 with 10 rounds on one counter block.

    All arguments are ``np.uint64``; returns the four output words.
    """
    for r in range(10):
        if r > 0:
            k0 = k0 + _W0
            k1 = k1 + _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def ziggurat_tables():
    """Marsaglia-Tsang tables for a 256-layer normal ziggurat with 52-bit words."""
    m1 = 2.0**52
    dn = tn = ZIGGURAT_R
    q = _ZIGGURAT_V / math.exp(-0.5 * dn * dn)
    ki = np.zeros(256, dtype=np.uint64)
    wi = np.zeros(256)
    fi = np.zeros(256)
    ki[0] = np.uint64(int((dn / q) * m1))
    wi[0] = q / m1
    wi[255] = dn / m1
    fi[0] = 1.0
    fi[255] = math.exp(-0.5 * dn * dn)
    for i in range(254, 0, -1):
        dn = math.sqrt(-2.0 * math.log(_ZIGGURAT_V / dn + math.exp(-0.5 * dn * dn)))
        ki[i + 1] = np.uint64(int((dn / tn) * m1))
        tn = dn
        fi[i] = math.exp(-0.5 * dn * dn)
        wi[i] = dn / m1
    return ki, wi, fi


_KI, _WI, _FI = ziggurat_tables()


@nb.njit(inline="always")
def uniform52(word):
    """Uniform on (0, 1) from the top 52 bits of ``word``, at cell midpoints.

    The extremes are ``2**-53`` and ``1 - 2**-53``; both ends stay open.
    """
    return (np.float64(word >> _S12) + 0.5) * _INV_2_52


@nb.njit(inline="always")
def _ziggurat_fast(word):
    # returns (value, accepted); same bit layout as numpy's standard_normal
    idx = word & _MASK8
    r = word >> _S8
    rabs = (r >> _U1) & _MASK52
    x = np.float64(rabs) * _WI[idx]
    if r & _U1:
        x = -x
    return x, rabs < _KI[idx], idx, rabs


@nb.njit(nogil=True)
def _side_word(seed, point, walker, step, pos):
    # pos-th replacement word of this step: block j = 1 + pos // 4
    j = np.uint64(1 + pos // 4)
    w = philox4x64(step, walker, j, _U0, seed, point)
    k = pos % 4
    if k == 0:
        return w[0]
    if k == 1:
        return w[1]
    if k == 2:
        return w[2]
    return w[3]


@nb.njit(nogil=True)
def _ziggurat_slow(x, idx, rabs, seed, point, walker, step, pos):
    """Finish a normal draw after the fast test failed; returns (value, pos)."""
    while True:
        if idx == 0:
            while True:
                u1 = uniform52(_side_word(seed, point, walker, step, pos))
                u2 = uniform52(_side_word(seed, point, walker, step, pos + 1))
                pos += 2
                xx = -math.log1p(-u1) / ZIGGURAT_R
                yy = -math.log1p(-u2)
                if yy + yy > xx * xx:
                    if (rabs >> _S8) & _U1:
                        return -(ZIGGURAT_R + xx), pos
                    return ZIGGURAT_R + xx, pos
        u = uniform52(_side_word(seed, point, walker, step, pos))
        pos += 1
        if (_FI[idx - 1] - _FI[idx]) * u + _FI[idx] < math.exp(-0.5 * x * x):
            return x, pos
        word = _side_word(seed, point, walker, step, pos)
        pos += 1
        x, ok, idx, rabs = _ziggurat_fast(word)
        if ok:
            return x, pos


@nb.njit(nogil=True)
def block_normals(seed, point, walker, step):
    """Three standard normals and one uniform for one step.

    All arguments are ``np.uint64``.  Returns ``(w0, w1, w2, u)``.
    """
    b0, b1, b2, b3 = philox4x64(step, walker, _U0, _U0, seed, point)
    pos = 0
    w0, ok, idx, rabs = _ziggurat_fast(b0)
    if not ok:
        w0, pos = _ziggurat_slow(w0, idx, rabs, seed, point, walker, step, pos)
    w1, ok, idx, rabs = _ziggurat_fast(b1)
    if not ok:
        w1, pos = _ziggurat_slow(w1, idx, rabs, seed, point, walker, step, pos)
    w2, ok, idx, rabs = _ziggurat_fast(b2)
    if not ok:
        w2, pos = _ziggurat_slow(w2, idx, rabs, seed, point, walker, step, pos)
    return w0, w1, w2, uniform52(b3)


@nb.njit(nogil=True)
def ziggurat_from_words(words):
    """Transform a word sequence into one normal the way numpy's ziggurat does.

    Returns ``(value, words_consumed)``.  Test helper: the per-step
    generator pulls replacement words from side blocks instead.
    """
    pos = 0
    while True:
        x, ok, idx, rabs = _ziggurat_fast(words[pos])
        pos += 1
        if ok:
            return x, pos
        if idx == 0:
            while True:
                xx = -math.log1p(-uniform52(words[pos])) / ZIGGURAT_R
                yy = -math.log1p(-uniform52(words[pos + 1]))
                pos += 2
                if yy + yy > xx * xx:
                    if (rabs >> _S8) & _U1:
                        return -(ZIGGURAT_R + xx), pos
                    return ZIGGURAT_R + xx, pos
        u = uniform52(words[pos])
        pos += 1
        if (_FI[idx - 1] - _FI[idx]) * u + _FI[idx] < math.exp(-0.5 * x * x):
            return x, pos


def _u64(value):
    return np.uint64(int(value) & 0xFFFFFFFFFFFFFFFF)


class RandomStream:
    """Replayable normal-triple stream of one walker.

    Parameters
    ----------
    seed : int
        Base seed (64-bit).
    stream_id : int
        Walker index inside its point.
    point_index : int, optional
        Index of the evaluation point; keys disjoint families of streams.
    counter : int, optional
        Step counter to start from.
    precision : {"double", "single"}
        Single precision rounds the double variates to float32.
    """

    def __init__(self, seed, stream_id, point_index=0, counter=0, precision="double"):
        if precision not in ("double", "single"):
            raise ValueError(f"precision must be 'double' or 'single', got {precision!r}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.point_index = int(point_index)
        self.counter = int(counter)
        self.precision = precision

    def __repr__(self):
        return (
            f"RandomStream(seed={self.seed}, stream_id={self.stream_id}, "
            f"point_index={self.point_index}, counter={self.counter})"
        )

    def next_block(self):
        """Advance by one step; return ``(normals(3,), bridge_uniform)``."""
        w0, w1, w2, u = block_normals(
            _u64(self.seed), _u64(self.point_index), _u64(self.stream_id), _u64(self.counter)
        )
        self.counter += 1
        dtype = np.float64 if self.precision == "double" else np.float32
        return np.array([w0, w1, w2], dtype=dtype), dtype(u)

    def normal3(self):
        """Next standard-normal triple."""
        return self.next_block()[0]
