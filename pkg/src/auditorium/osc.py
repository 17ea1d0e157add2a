"""OSC 1.0 codec, address space and UDP endpoint.

Wire format, as used here: big-endian int32 ``i``, float32 ``f``,
NUL-terminated strings ``s`` padded to a multiple of four bytes (one to
four NULs), size-prefixed blobs ``b`` zero-padded to four. Every message
carries a type tag string starting with ','. Bundles ("#bundle") are
flattened recursively and their time tags ignored; everything is
dispatched on arrival.

Routing is exact-match on the address, no pattern syntax.
"""

from __future__ import annotations

import socket
import struct
import threading
from dataclasses import dataclass, field

from . import errors

#: messages the server consumes, address -> type tag signature
CONTROL_ADDRESSES = {
    "/seat": "s",              # seat label, e.g. "B3"
    "/head/position": "fff",   # x, y, z in metres
    "/head/rotation": "ffff",  # quaternion w, x, y, z
    "/ui/play": "s",           # blinded condition label ("ref", "A", ...)
    "/ui/stop": "",
    "/ui/rating": "ssi",       # attribute id, label, value 0..100
    "/ui/source": "s",         # source selector: "all" or an index
    "/ui/trial/next": "",
    "/ui/info": "s",           # free-form marker from the client
}

#: notifications the server emits
NOTIFY_ADDRESSES = {
    "/state/trial": "i",       # -1 familiarization, 0..n-1 trials, n finished
    "/state/transport": "s",   # "playing" or "stopped"
    "/state/seat": "s",
}

IMMEDIATELY = 1  # OSC time tag meaning "now"


@dataclass(frozen=True)
class OscMessage:
    address: str
    args: tuple = ()

    @property
    def typetag(self) -> str:
        return "".join(_tag_of(a) for a in self.args)


def _tag_of(arg) -> str:
    if isinstance(arg, bool):
        raise errors.UnsupportedArgType("bool is not an OSC 1.0 argument type")
    if isinstance(arg, int):
        return "i"
    if isinstance(arg, float):
        return "f"
    if isinstance(arg, str):
        return "s"
    if isinstance(arg, (bytes, bytearray)):
        return "b"
    raise errors.UnsupportedArgType(f"cannot encode {type(arg).__name__} as an OSC argument")


def _pad_string(value: str) -> bytes:
    if "\x00" in value:
        raise errors.UnsupportedArgType("OSC strings cannot contain NUL")
    raw = value.encode("utf-8")
    return raw + b"\x00" * (4 - len(raw) % 4)


def _check_address(address: str):
    if not address.startswith("/") or len(address) < 2 or "\x00" in address:
        raise errors.InvalidAddress(f"bad OSC address {address!r}")


def encode_message(address: str, args=()) -> bytes:
    _check_address(address)
    out = [_pad_string(address), _pad_string("," + "".join(_tag_of(a) for a in args))]
    for arg in args:
        if isinstance(arg, bool):
            raise errors.UnsupportedArgType("bool is not an OSC 1.0 argument type")
        elif isinstance(arg, int):
            if not -2**31 <= arg < 2**31:
                raise errors.UnsupportedArgType(f"int32 overflow: {arg}")
            out.append(struct.pack(">i", arg))
        elif isinstance(arg, float):
            out.append(struct.pack(">f", arg))
        elif isinstance(arg, str):
            out.append(_pad_string(arg))
        else:
            raw = bytes(arg)
            out.append(struct.pack(">i", len(raw)) + raw + b"\x00" * (-len(raw) % 4))
    return b"".join(out)


def encode_bundle(messages, timetag: int = IMMEDIATELY) -> bytes:
    out = [b"#bundle\x00", struct.pack(">Q", timetag)]
    for m in messages:
        raw = m if isinstance(m, (bytes, bytearray)) else encode_message(m.address, m.args)
        out.append(struct.pack(">i", len(raw)))
        out.append(bytes(raw))
    return b"".join(out)


def _read_padded_string(data: bytes, pos: int) -> tuple[str, int]:
    end = data.find(b"\x00", pos)
    if end < 0:
        raise errors.Truncated("unterminated string")
    raw = data[pos:end]
    next_pos = pos + (len(raw) // 4 + 1) * 4
    if next_pos > len(data):
        raise errors.Truncated("string padding runs past the end")
    if any(data[end:next_pos]):
        raise errors.BadPadding("non-NUL bytes in string padding")
    try:
        return raw.decode("utf-8"), next_pos
    except UnicodeDecodeError as exc:
        raise errors.BadPadding(f"string is not valid UTF-8: {exc}") from None


def decode_message(data: bytes) -> OscMessage:
    """Decode a single OSC message (no bundles)."""
    if not data or data[0:1] != b"/":
        raise errors.NotOsc("datagram does not start with an address")
    if len(data) % 4:
        raise errors.Truncated(f"datagram length {len(data)} is not a multiple of 4")
    address, pos = _read_padded_string(data, 0)
    _check_address(address)
    if pos >= len(data):
        raise errors.Truncated("missing type tag string")
    tags, pos = _read_padded_string(data, pos)
    if not tags.startswith(","):
        raise errors.NotOsc("type tag string does not start with ','")

    args = []
    for tag in tags[1:]:
        if tag == "i":
            if pos + 4 > len(data):
                raise errors.Truncated("int32 runs past the end")
            args.append(struct.unpack_from(">i", data, pos)[0])
            pos += 4
        elif tag == "f":
            if pos + 4 > len(data):
                raise errors.Truncated("float32 runs past the end")
            args.append(struct.unpack_from(">f", data, pos)[0])
            pos += 4
        elif tag == "s":
            value, pos = _read_padded_string(data, pos)
            args.append(value)
        elif tag == "b":
            if pos + 4 > len(data):
                raise errors.Truncated("blob size runs past the end")
            size = struct.unpack_from(">i", data, pos)[0]
            pos += 4
            if size < 0 or pos + size > len(data):
                raise errors.Truncated(f"blob of {size} bytes does not fit")
            args.append(data[pos:pos + size])
            pos += size + (-size % 4)
            if pos > len(data):
                raise errors.Truncated("blob padding runs past the end")
        else:
            raise errors.UnknownTypeTag(tag)
    return OscMessage(address, tuple(args))


def decode(data: bytes) -> list[OscMessage]:
    """Decode a datagram into messages, flattening bundles recursively."""
    if data[0:1] == b"/":
        return [decode_message(data)]
    if data[0:8] == b"#bundle\x00":
        if len(data) < 16:
            raise errors.Truncated("bundle shorter than header plus time tag")
        out = []
        pos = 16  # skip the time tag: everything dispatches immediately
        while pos < len(data):
            if pos + 4 > len(data):
                raise errors.Truncated("bundle element size runs past the end")
            size = struct.unpack_from(">i", data, pos)[0]
            pos += 4
            if size < 0 or pos + size > len(data):
                raise errors.Truncated(f"bundle element of {size} bytes does not fit")
            if size % 4:
                raise errors.BadPadding(f"bundle element size {size} not a multiple of 4")
            out.extend(decode(data[pos:pos + size]))
            pos += size
        return out
    raise errors.NotOsc("datagram is neither a message nor a bundle")


class Router:
    """Exact-match dispatch with signature checks against the address table."""

    def __init__(self, signatures: dict[str, str] | None = None):
        self.signatures = dict(CONTROL_ADDRESSES if signatures is None else signatures)
        self._handlers: dict[str, callable] = {}

    def on(self, address: str, handler):
        if address not in self.signatures:
            raise errors.InvalidAddress(f"{address} is not in the address space")
        self._handlers[address] = handler

    def dispatch(self, message: OscMessage):
        sig = self.signatures.get(message.address)
        if sig is None:
            raise errors.InvalidAddress(f"no route for {message.address}")
        if message.typetag != sig:
            raise errors.UnsupportedArgType(
                f"{message.address} expects ,{sig} got ,{message.typetag}")
        handler = self._handlers.get(message.address)
        if handler is not None:
            handler(*message.args)


@dataclass
class EndpointStats:
    received: int = 0
    dispatched: int = 0
    malformed: int = 0    # undecodable datagrams
    unroutable: int = 0   # well-formed but unknown address or bad signature
    handler_errors: int = 0
    last_error: str = ""
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


class OscEndpoint:
    """UDP receive loop plus a send socket for notifications.

    Malformed or unroutable traffic is counted, never fatal: the render
    side must survive arbitrary garbage on the control port.
    """

    def __init__(self, router: Router, host: str = "127.0.0.1", port: int = 9000,
                 reply_to: tuple[str, int] | None = None):
        self.router = router
        self.stats = EndpointStats()
        self.reply_to = reply_to
        try:
            self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self._sock.bind((host, port))
        except OSError as exc:
            raise errors.BindFailed(f"cannot bind udp {host}:{port}: {exc}") from None
        self.port = self._sock.getsockname()[1]
        self._running = False
        self._thread: threading.Thread | None = None

    def start(self):
        self._running = True
        self._thread = threading.Thread(target=self._run, name="osc-endpoint", daemon=True)
        self._thread.start()

    def _run(self):
        while self._running:
            try:
                data, _ = self._sock.recvfrom(65536)
            except OSError:
                break
            with self.stats.lock:
                self.stats.received += 1
            try:
                messages = decode(data)
            except errors.OscError as exc:
                with self.stats.lock:
                    self.stats.malformed += 1
                    self.stats.last_error = str(exc)
                continue
            for message in messages:
                try:
                    self.router.dispatch(message)
                    with self.stats.lock:
                        self.stats.dispatched += 1
                except (errors.InvalidAddress, errors.UnsupportedArgType) as exc:
                    with self.stats.lock:
                        self.stats.unroutable += 1
                        self.stats.last_error = str(exc)
                except Exception as exc:  # handler bug: log, keep serving
                    with self.stats.lock:
                        self.stats.handler_errors += 1
                        self.stats.last_error = f"{message.address}: {exc}"

    def notify(self, address: str, *args):
        if self.reply_to is None:
            return
        try:
            self._sock.sendto(encode_message(address, args), self.reply_to)
        except OSError:
            pass  # notification loss is acceptable; audio must not stop

    def close(self):
        self._running = False
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()
        if self._thread is not None:
            self._thread.join(timeout=2.0)
