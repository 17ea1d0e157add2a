"""Codec goldens, round trips, fuzzing and the UDP endpoint.

Goldens were derived by hand from the wire rules (4-byte alignment,
1..4 NULs after strings, big-endian scalars). ``ref_encode`` is a
second, independently written encoder used to cross-check ours on
random messages.
"""

import socket
import struct
import time

import numpy as np
import pytest

from auditorium import errors
from auditorium.osc import (CONTROL_ADDRESSES, NOTIFY_ADDRESSES, OscEndpoint, OscMessage,
                            Router, decode, decode_message, encode_bundle, encode_message)

GOLDENS = [
    ("/seat", ("B2",),
     "2f73656174000000" "2c730000" "42320000"),
    ("/head/position", (1.0, 0.0, -1.5),
     "2f686561642f706f736974696f6e0000" "2c66666600000000" "3f800000" "00000000" "bfc00000"),
    ("/head/rotation", (1.0, 0.0, 0.0, 0.0),
     "2f686561642f726f746174696f6e0000" "2c66666666000000"
     "3f800000" "00000000" "00000000" "00000000"),
    ("/ui/play", ("A",),
     "2f75692f706c617900000000" "2c730000" "41000000"),
    ("/ui/stop", (),
     "2f75692f73746f7000000000" "2c000000"),
    ("/ui/rating", ("basic_audio_quality", "B", 73),
     "2f75692f726174696e670000" "2c73736900000000"
     "62617369635f617564696f5f7175616c69747900" "42000000" "00000049"),
    ("/ui/source", ("all",),
     "2f75692f736f757263650000" "2c730000" "616c6c00"),
    ("/ui/trial/next", (),
     "2f75692f747269616c2f6e6578740000" "2c000000"),
    ("/ui/info", ("marker",),
     "2f75692f696e666f00000000" "2c730000" "6d61726b65720000"),
    ("/state/trial", (2,),
     "2f73746174652f747269616c00000000" "2c690000" "00000002"),
    ("/state/transport", ("playing",),
     "2f73746174652f7472616e73706f727400000000" "2c730000" "706c6179696e6700"),
    ("/state/seat", ("C3",),
     "2f73746174652f7365617400" "2c730000" "43330000"),
]


def ref_encode(address, args):
    """Independent minimal encoder, written from the wire rules."""

    def pstr(s):
        raw = s.encode("utf-8")
        return raw + b"\x00" * (4 - len(raw) % 4)

    tags, body = ",", b""
    for a in args:
        if isinstance(a, int):
            tags += "i"
            body += a.to_bytes(4, "big", signed=True)
        elif isinstance(a, float):
            tags += "f"
            body += struct.pack(">f", a)
        elif isinstance(a, str):
            tags += "s"
            body += pstr(a)
        else:
            tags += "b"
            body += len(a).to_bytes(4, "big") + bytes(a) + b"\x00" * (-len(a) % 4)
    return pstr(address) + pstr(tags) + body


@pytest.mark.parametrize("address,args,want_hex", GOLDENS,
                         ids=[g[0] for g in GOLDENS])
def test_golden_bytes(address, args, want_hex):
    got = encode_message(address, args)
    assert got.hex() == want_hex
    assert len(got) % 4 == 0
    back = decode_message(got)
    assert back.address == address
    assert back.args == args


def test_goldens_cover_the_whole_address_space():
    covered = {g[0] for g in GOLDENS}
    assert covered == set(CONTROL_ADDRESSES) | set(NOTIFY_ADDRESSES)


def test_golden_signatures_match_address_table():
    table = {**CONTROL_ADDRESSES, **NOTIFY_ADDRESSES}
    for address, args, _ in GOLDENS:
        assert OscMessage(address, args).typetag == table[address]


def f32(x):
    return struct.unpack(">f", struct.pack(">f", x))[0]


def random_message(rng):
    depth = rng.integers(1, 4)
    address = "/" + "/".join(
        "".join(chr(rng.integers(97, 123)) for _ in range(rng.integers(1, 8)))
        for _ in range(depth))
    args = []
    for _ in range(rng.integers(0, 6)):
        kind = rng.integers(0, 4)
        if kind == 0:
            args.append(int(rng.integers(-2**31, 2**31)))
        elif kind == 1:
            args.append(f32(float(rng.standard_normal()) * 1e3))
        elif kind == 2:
            n = rng.integers(0, 12)
            args.append("".join(chr(rng.integers(32, 127)) for _ in range(n)))
        else:
            args.append(bytes(rng.integers(0, 256, size=rng.integers(0, 24), dtype=np.uint8)))
    return address, tuple(args)


def test_round_trips(rng):
    for _ in range(2000):
        address, args = random_message(rng)
        data = encode_message(address, args)
        assert data == ref_encode(address, args)
        back = decode_message(data)
        assert back == OscMessage(address, args)
        # a second pass through the codec is byte-stable
        assert encode_message(back.address, back.args) == data


def test_bundle_flattening():
    inner = [OscMessage("/ui/stop"), OscMessage("/seat", ("B2",))]
    raw = encode_bundle(inner)
    assert raw[:8] == b"#bundle\x00"
    assert decode(raw) == inner

    nested = encode_bundle([OscMessage("/ui/play", ("A",)),
                            encode_bundle(inner)])
    assert decode(nested) == [OscMessage("/ui/play", ("A",))] + inner


def test_decode_single_message_via_decode():
    assert decode(encode_message("/ui/stop")) == [OscMessage("/ui/stop")]


def test_encode_rejects_bad_input():
    with pytest.raises(errors.InvalidAddress):
        encode_message("no-slash")
    with pytest.raises(errors.InvalidAddress):
        encode_message("/")
    with pytest.raises(errors.UnsupportedArgType):
        encode_message("/x", (True,))
    with pytest.raises(errors.UnsupportedArgType):
        encode_message("/x", (2**40,))
    with pytest.raises(errors.UnsupportedArgType):
        encode_message("/x", ({"a": 1},))
    with pytest.raises(errors.UnsupportedArgType):
        encode_message("/x", ("nul\x00inside",))


def test_decode_rejects_malformed():
    with pytest.raises(errors.NotOsc):
        decode(b"GET / HTTP/1.1\r\n")
    with pytest.raises(errors.NotOsc):
        decode_message(b"")
    with pytest.raises(errors.Truncated):
        decode_message(b"/abc")  # length not padded, no typetag
    with pytest.raises(errors.Truncated):
        decode_message(b"/ab\x00" + b"\x2cii\x00" + b"\x00" * 4)  # 2 ints declared, 1 present
    with pytest.raises(errors.BadPadding):
        decode_message(b"/a\x00X" + b",\x00\x00\x00")  # junk in address padding
    with pytest.raises(errors.NotOsc):
        decode_message(b"/ab\x00" + b"ii\x00\x00")  # typetag missing the comma
    with pytest.raises(errors.UnknownTypeTag):
        decode_message(b"/ab\x00" + b",q\x00\x00")
    with pytest.raises(errors.Truncated):
        decode_message(b"/ab\x00" + b",b\x00\x00" + struct.pack(">i", 100))
    with pytest.raises(errors.Truncated):
        decode(b"#bundle\x00")
    with pytest.raises(errors.Truncated):
        decode(b"#bundle\x00" + b"\x00" * 8 + struct.pack(">i", 64))


def test_codec_fuzz_never_crashes(rng):
    """Arbitrary bytes either decode or raise a protocol error, nothing else."""
    for i in range(500):
        n = int(rng.integers(0, 120))
        data = bytes(rng.integers(0, 256, size=n, dtype=np.uint8))
        if i % 3 == 0:  # mutate a valid message: nastier than pure noise
            base = bytearray(encode_message("/ui/rating", ("basic_audio_quality", "B", 73)))
            for _ in range(int(rng.integers(1, 6))):
                base[int(rng.integers(0, len(base)))] = int(rng.integers(0, 256))
            data = bytes(base)
        try:
            decode(data)
        except errors.OscError:
            pass


def test_router_dispatch_and_signature_checks():
    seen = []
    router = Router()
    router.on("/seat", lambda label: seen.append(label))
    router.dispatch(OscMessage("/seat", ("C4",)))
    assert seen == ["C4"]

    with pytest.raises(errors.InvalidAddress):
        router.dispatch(OscMessage("/nope", ()))
    with pytest.raises(errors.UnsupportedArgType):
        router.dispatch(OscMessage("/seat", (3,)))
    with pytest.raises(errors.InvalidAddress):
        router.on("/nope", lambda: None)

    # registered address with no handler yet: dispatch is a quiet no-op
    router.dispatch(OscMessage("/ui/stop", ()))


def wait_for(predicate, timeout=2.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        if predicate():
            return True
        time.sleep(0.005)
    return False


def test_endpoint_receives_and_counts():
    seen = []
    router = Router()
    router.on("/seat", lambda label: seen.append(label))
    router.on("/ui/rating", lambda *a: (_ for _ in ()).throw(RuntimeError("boom")))
    ep = OscEndpoint(router, port=0)
    ep.start()
    try:
        tx = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        target = ("127.0.0.1", ep.port)
        tx.sendto(encode_message("/seat", ("A1",)), target)
        tx.sendto(b"\xff\xfe not osc", target)
        tx.sendto(encode_message("/unknown", ("x",)), target)
        tx.sendto(encode_message("/seat", (123,)), target)  # wrong signature
        tx.sendto(encode_message("/ui/rating", ("a", "b", 1)), target)  # handler raises
        tx.sendto(encode_message("/seat", ("B2",)), target)  # loop must still be alive

        assert wait_for(lambda: len(seen) == 2)
        assert seen == ["A1", "B2"]
        assert wait_for(lambda: ep.stats.received == 6)
        assert ep.stats.malformed == 1
        assert ep.stats.unroutable == 2
        assert ep.stats.handler_errors == 1
        assert ep.stats.dispatched == 2
        tx.close()
    finally:
        ep.close()


def test_endpoint_notify():
    rx = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    rx.bind(("127.0.0.1", 0))
    rx.settimeout(2.0)
    ep = OscEndpoint(Router(), port=0, reply_to=rx.getsockname())
    try:
        ep.notify("/state/trial", 1)
        ep.notify("/state/transport", "playing")
        first = decode(rx.recv(4096))
        second = decode(rx.recv(4096))
        assert first == [OscMessage("/state/trial", (1,))]
        assert second == [OscMessage("/state/transport", ("playing",))]
    finally:
        ep.close()
        rx.close()


def test_endpoint_bind_conflict():
    ep = OscEndpoint(Router(), port=0)
    try:
        with pytest.raises(errors.BindFailed):
            OscEndpoint(Router(), port=ep.port)
    finally:
        ep.close()
