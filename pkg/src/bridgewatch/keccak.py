"""Keccak-256 (pre-standardization padding, as used for EVM event topics).

Pure-Python sponge over keccak-f[1600] with rate 1088 / capacity 512 and
the original 0x01 domain byte (not SHA-3's 0x06). Only used to turn
human-readable event signatures in decoder configs into topic hashes, so
throughput is irrelevant.
"""

from __future__ import annotations

__all__ = ["keccak256", "event_topic", "TRANSFER_TOPIC"]

_MASK = (1 << 64) - 1

_RC = (
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A, 0x8000000080008000,
    0x000000000000808B, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
    0x000000000000008A, 0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089, 0x8000000000008003,
    0x8000000000008002, 0x8000000000000080, 0x000000000000800A, 0x800000008000000A,
    0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
)

# Rotation offsets for the flat lane layout state[x + 5*y].
_ROT = (
    0, 1, 62, 28, 27,
    36, 44, 6, 55, 20,
    3, 10, 43, 25, 39,
    41, 45, 15, 21, 8,
    18, 2, 61, 56, 14,
)


def _permute(a: list[int]) -> None:
    for rc in _RC:
        # theta
        c0 = a[0] ^ a[5] ^ a[10] ^ a[15] ^ a[20]
        c1 = a[1] ^ a[6] ^ a[11] ^ a[16] ^ a[21]
        c2 = a[2] ^ a[7] ^ a[12] ^ a[17] ^ a[22]
        c3 = a[3] ^ a[8] ^ a[13] ^ a[18] ^ a[23]
        c4 = a[4] ^ a[9] ^ a[14] ^ a[19] ^ a[24]
        d = (
            c4 ^ (((c1 << 1) | (c1 >> 63)) & _MASK),
            c0 ^ (((c2 << 1) | (c2 >> 63)) & _MASK),
            c1 ^ (((c3 << 1) | (c3 >> 63)) & _MASK),
            c2 ^ (((c4 << 1) | (c4 >> 63)) & _MASK),
            c3 ^ (((c0 << 1) | (c0 >> 63)) & _MASK),
        )
        for i in range(25):
            a[i] ^= d[i % 5]
        # rho + pi
        b = [0] * 25
        for x in range(5):
            for y in range(5):
                lane = a[x + 5 * y]
                r = _ROT[x + 5 * y]
                b[y + 5 * ((2 * x + 3 * y) % 5)] = (
                    ((lane << r) | (lane >> (64 - r))) & _MASK if r else lane
                )
        # chi
        for y in range(0, 25, 5):
            r0, r1, r2, r3, r4 = b[y], b[y + 1], b[y + 2], b[y + 3], b[y + 4]
            a[y] = r0 ^ (~r1 & r2)
            a[y + 1] = r1 ^ (~r2 & r3)
            a[y + 2] = r2 ^ (~r3 & r4)
            a[y + 3] = r3 ^ (~r4 & r0)
            a[y + 4] = r4 ^ (~r0 & r1)
        # iota
        a[0] ^= rc


def keccak256(data: bytes) -> bytes:
    """Return the 32-byte Keccak-256 digest of ``data``."""
    rate = 136
    state = [0] * 25
    buf = bytearray(data)
    pad = rate - (len(buf) % rate)
    if pad == 1:
        buf.append(0x81)
    else:
        buf.append(0x01)
        buf.extend(b"\x00" * (pad - 2))
        buf.append(0x80)
    for off in range(0, len(buf), rate):
        for i in range(17):  # 136 bytes = 17 lanes
            state[i] ^= int.from_bytes(buf[off + 8 * i : off + 8 * i + 8], "little")
        _permute(state)
    return b"".join(state[i].to_bytes(8, "little") for i in range(4))


def event_topic(signature: str) -> str:
    """topic0 for an event signature, e.g. ``Transfer(address,address,uint256)``."""
    return "0x" + keccak256(signature.encode("ascii")).hex()


TRANSFER_TOPIC = event_topic("Transfer(address,address,uint256)")
