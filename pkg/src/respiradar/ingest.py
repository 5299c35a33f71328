"""Capture-card wire format, on-disk capture container and raw-cube decoding.

The capture card emits UDP datagrams carrying a 10-byte header (u32 LE
sequence number, u48 LE cumulative payload byte offset) followed by up to
1456 payload bytes.  Concatenated payloads form the raw sample stream:
interleaved signed 16-bit little-endian I/Q pairs, sample-major within a
chirp, rx-channel blocks within a chirp, chirp-major within a frame.

Captures are stored in a small binary container: magic ``RVSC``, u16 LE
version, the radar configuration as eight little-endian u64/f64 fields,
a u64 frame count, the raw sample stream, then one f64 timestamp per frame.
"""

from __future__ import annotations

import socket
import struct
from dataclasses import dataclass

import numpy as np

from .config import RadarConfig
from .errors import (
    BadMagicError,
    DatagramTooShortError,
    DuplicateSeqError,
    HeaderCubeMismatchError,
    LengthMismatchError,
    NonMonotonicByteCountError,
    PayloadTooLargeError,
    TruncatedFrameError,
    UnsupportedVersionError,
)

DATAGRAM_HEADER_BYTES = 10
MAX_PAYLOAD_BYTES = 1456
BYTES_PER_SAMPLE = 4  # int16 I + int16 Q

CAPTURE_MAGIC = b"RVSC"
CAPTURE_VERSION = 1
DEFAULT_UDP_PORT = 4098

# carrier, slope, adc rate, samples/chirp, chirps/frame, frame rate, rx, bandwidth
_CONFIG_STRUCT = struct.Struct("<dddQQdQd")
_FRAME_COUNT_STRUCT = struct.Struct("<Q")
_HEADER_BYTES = 4 + 2 + _CONFIG_STRUCT.size + _FRAME_COUNT_STRUCT.size


@dataclass(frozen=True)
class Datagram:
    """One wire packet: sequence number, cumulative byte offset, payload."""

    seq: int
    byte_count: int
    payload: bytes

    def __post_init__(self) -> None:
        if not 0 <= self.seq < 2**32:
            raise ValueError("seq must fit an unsigned 32-bit integer")
        if not 0 <= self.byte_count < 2**48:
            raise ValueError("byte_count must fit an unsigned 48-bit integer")
        if len(self.payload) == 0:
            raise ValueError("payload must not be empty")
        if len(self.payload) > MAX_PAYLOAD_BYTES:
            raise PayloadTooLargeError(
                f"payload of {len(self.payload)} bytes exceeds {MAX_PAYLOAD_BYTES}"
            )


@dataclass(frozen=True)
class LossReport:
    """Accounting of received versus missing datagrams in one session."""

    expected_datagrams: int
    received: int
    gaps: tuple[tuple[int, int], ...]  # (first missing seq, run length)
    zero_filled_bytes: int


def parse_datagram(buf: bytes) -> Datagram:
    """Parse one raw wire packet.

    Raises DatagramTooShortError below 11 bytes and PayloadTooLargeError
    above header + 1456 bytes; any other byte content is accepted.
    """
    if len(buf) <= DATAGRAM_HEADER_BYTES:
        raise DatagramTooShortError(
            f"datagram of {len(buf)} bytes is shorter than header + 1 payload byte"
        )
    payload = bytes(buf[DATAGRAM_HEADER_BYTES:])
    if len(payload) > MAX_PAYLOAD_BYTES:
        raise PayloadTooLargeError(
            f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD_BYTES}"
        )
    seq = struct.unpack_from("<I", buf, 0)[0]
    byte_count = int.from_bytes(buf[4:10], "little")
    return Datagram(seq=seq, byte_count=byte_count, payload=payload)


def serialize_datagram(dgram: Datagram) -> bytes:
    return (
        struct.pack("<I", dgram.seq)
        + dgram.byte_count.to_bytes(6, "little")
        + dgram.payload
    )


def stream_to_datagrams(stream: bytes) -> list[Datagram]:
    """Chunk a byte stream into maximal datagrams with consistent seq/offsets."""
    out = []
    for seq, offset in enumerate(range(0, len(stream), MAX_PAYLOAD_BYTES)):
        out.append(
            Datagram(
                seq=seq,
                byte_count=offset,
                payload=bytes(stream[offset : offset + MAX_PAYLOAD_BYTES]),
            )
        )
    return out


def reassemble(datagrams) -> tuple[bytes, LossReport]:
    """Rebuild the byte stream from datagrams in any arrival order.

    Missing sequence ranges are zero-filled using the cumulative byte
    offsets, so downstream frame indexing stays aligned.  Duplicate
    packets are tolerated when their payloads agree.
    """
    datagrams = list(datagrams)
    if not datagrams:
        raise ValueError("no datagrams to reassemble")

    by_seq: dict[int, Datagram] = {}
    for dgram in datagrams:
        prev = by_seq.get(dgram.seq)
        if prev is not None and prev.payload != dgram.payload:
            raise DuplicateSeqError(f"seq {dgram.seq} received twice with differing payloads")
        by_seq[dgram.seq] = dgram

    out = bytearray()
    gaps: list[tuple[int, int]] = []
    zero_filled = 0
    next_seq = 0
    expected_offset = 0
    for seq in sorted(by_seq):
        dgram = by_seq[seq]
        if dgram.byte_count < expected_offset:
            raise NonMonotonicByteCountError(
                f"seq {seq} carries byte offset {dgram.byte_count} below {expected_offset}"
            )
        missing = seq - next_seq
        fill = dgram.byte_count - expected_offset
        if missing == 0:
            if fill != 0:
                raise NonMonotonicByteCountError(
                    f"seq {seq} offset skips {fill} bytes with no missing datagrams"
                )
        else:
            if fill < missing:
                raise NonMonotonicByteCountError(
                    f"{missing} datagrams missing before seq {seq} but only {fill} bytes unaccounted"
                )
            gaps.append((next_seq, missing))
            zero_filled += fill
            out += bytes(fill)
        out += dgram.payload
        expected_offset = dgram.byte_count + len(dgram.payload)
        next_seq = seq + 1

    report = LossReport(
        expected_datagrams=next_seq,
        received=len(by_seq),
        gaps=tuple(gaps),
        zero_filled_bytes=zero_filled,
    )
    return bytes(out), report


@dataclass
class RadarCube:
    """Decoded raw capture: complex samples indexed [frame][chirp][sample]."""

    config: RadarConfig
    data: np.ndarray
    frame_timestamps: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.complex128)
        self.frame_timestamps = np.asarray(self.frame_timestamps, dtype=np.float64)
        expected = (
            self.data.shape[0],
            self.config.chirps_per_frame,
            self.config.samples_per_chirp,
        )
        if self.data.ndim != 3 or self.data.shape != expected:
            raise ValueError(f"cube shape {self.data.shape} does not match config {expected}")
        if self.frame_timestamps.shape != (self.data.shape[0],):
            raise ValueError("one timestamp per frame required")
        if self.n_frames >= 2:
            dt = np.diff(self.frame_timestamps)
            if np.any(dt <= 0):
                raise ValueError("frame timestamps must be strictly increasing")
            mean_dt = float(np.mean(dt))
            if abs(mean_dt * self.config.frame_rate_hz - 1.0) > 0.01:
                raise ValueError("mean frame spacing deviates >1% from the frame rate")

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def duration_s(self) -> float:
        return self.n_frames * self.config.frame_period_s


def frame_stream_bytes(config: RadarConfig) -> int:
    """Byte size of one frame on the wire (all rx channels)."""
    return (
        config.chirps_per_frame
        * config.rx_channels
        * config.samples_per_chirp
        * BYTES_PER_SAMPLE
    )


def decode_cube(stream: bytes, config: RadarConfig, frame_timestamps=None) -> RadarCube:
    """Decode a raw sample stream into a cube, selecting rx channel 0.

    Raises LengthMismatchError when the stream is not aligned to whole
    I/Q pairs, TruncatedFrameError when it ends inside a frame.
    """
    if len(stream) % BYTES_PER_SAMPLE:
        raise LengthMismatchError(
            f"stream of {len(stream)} bytes is not a whole number of I/Q pairs"
        )
    frame_bytes = frame_stream_bytes(config)
    if len(stream) % frame_bytes:
        raise TruncatedFrameError(
            f"stream of {len(stream)} bytes is not a whole number of {frame_bytes}-byte frames"
        )
    n_frames = len(stream) // frame_bytes

    raw = np.frombuffer(stream, dtype="<i2").astype(np.float64)
    samples = raw[0::2] + 1j * raw[1::2]
    samples = samples.reshape(
        n_frames,
        config.chirps_per_frame,
        config.rx_channels,
        config.samples_per_chirp,
    )[:, :, 0, :].copy()

    if frame_timestamps is None:
        frame_timestamps = np.arange(n_frames) / config.frame_rate_hz
    return RadarCube(config=config, data=samples, frame_timestamps=frame_timestamps)


def default_full_scale(cube: RadarCube) -> float:
    """Quantiser full-scale: 4x the peak I/Q component, for noise headroom."""
    if cube.data.size == 0:
        return 1.0
    peak = max(float(np.abs(cube.data.real).max()), float(np.abs(cube.data.imag).max()))
    return 4.0 * peak if peak > 0 else 1.0


def _quantize(values: np.ndarray, full_scale: float) -> np.ndarray:
    scaled = np.rint(values * (32767.0 / full_scale))
    return np.clip(scaled, -32768, 32767)


def quantize_cube(cube: RadarCube, full_scale: float | None = None) -> RadarCube:
    """The cube as it survives int16 encoding (values in ADC counts)."""
    if full_scale is None:
        full_scale = default_full_scale(cube)
    data = _quantize(cube.data.real, full_scale) + 1j * _quantize(cube.data.imag, full_scale)
    return RadarCube(
        config=cube.config, data=data, frame_timestamps=cube.frame_timestamps.copy()
    )


def encode_cube(cube: RadarCube, full_scale: float | None = None) -> bytes:
    """Serialise a single-channel cube to the raw int16 I/Q stream."""
    if cube.config.rx_channels != 1:
        raise ValueError("only single-channel cubes can be encoded")
    if full_scale is None:
        full_scale = default_full_scale(cube)
    n_frames = cube.n_frames
    shape = (n_frames, cube.config.chirps_per_frame, cube.config.samples_per_chirp)
    interleaved = np.empty(shape + (2,), dtype="<i2")
    interleaved[..., 0] = _quantize(cube.data.real, full_scale).astype("<i2")
    interleaved[..., 1] = _quantize(cube.data.imag, full_scale).astype("<i2")
    return interleaved.tobytes()


def write_capture(cube: RadarCube, path, full_scale: float | None = None) -> None:
    """Write the capture container for a cube (quantising to int16)."""
    payload = encode_cube(cube, full_scale=full_scale)
    cfg = cube.config
    header = (
        CAPTURE_MAGIC
        + struct.pack("<H", CAPTURE_VERSION)
        + _CONFIG_STRUCT.pack(
            cfg.carrier_hz,
            cfg.chirp_slope_hz_per_s,
            cfg.adc_rate_hz,
            cfg.samples_per_chirp,
            cfg.chirps_per_frame,
            cfg.frame_rate_hz,
            cfg.rx_channels,
            cfg.bandwidth_hz,
        )
        + _FRAME_COUNT_STRUCT.pack(cube.n_frames)
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        fh.write(cube.frame_timestamps.astype("<f8").tobytes())


def load_capture(path) -> RadarCube:
    """Read a capture container back into a cube with its embedded timestamps."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 or blob[:4] != CAPTURE_MAGIC:
        raise BadMagicError("not a capture container (bad magic)")
    version = struct.unpack_from("<H", blob, 4)[0]
    if version != CAPTURE_VERSION:
        raise UnsupportedVersionError(f"container version {version} not supported")
    if len(blob) < _HEADER_BYTES:
        raise HeaderCubeMismatchError("container truncated inside the header")

    fields = _CONFIG_STRUCT.unpack_from(blob, 6)
    config = RadarConfig(
        carrier_hz=fields[0],
        chirp_slope_hz_per_s=fields[1],
        adc_rate_hz=fields[2],
        samples_per_chirp=int(fields[3]),
        chirps_per_frame=int(fields[4]),
        frame_rate_hz=fields[5],
        rx_channels=int(fields[6]),
    )
    declared_bw = fields[7]
    if abs(declared_bw - config.bandwidth_hz) > 1e-6 * config.bandwidth_hz:
        raise HeaderCubeMismatchError("declared bandwidth disagrees with chirp parameters")

    n_frames = _FRAME_COUNT_STRUCT.unpack_from(blob, 6 + _CONFIG_STRUCT.size)[0]
    sample_bytes = n_frames * frame_stream_bytes(config)
    expected_size = _HEADER_BYTES + sample_bytes + 8 * n_frames
    if len(blob) != expected_size:
        raise HeaderCubeMismatchError(
            f"container holds {len(blob)} bytes, header implies {expected_size}"
        )
    stream = blob[_HEADER_BYTES : _HEADER_BYTES + sample_bytes]
    stamps = np.frombuffer(blob[_HEADER_BYTES + sample_bytes :], dtype="<f8").copy()
    return decode_cube(stream, config, frame_timestamps=stamps)


def receive_datagrams(
    sock: socket.socket | None = None,
    *,
    port: int = DEFAULT_UDP_PORT,
    host: str = "0.0.0.0",
    idle_timeout_s: float = 1.0,
    max_datagrams: int | None = None,
) -> list[Datagram]:
    """Collect datagrams from a UDP socket until idle or a count is reached.

    Pass an already-bound socket to control the address, otherwise one is
    bound to (host, port).  No real-time guarantees: packets are parsed as
    they arrive and returned in arrival order for reassemble().
    """
    owned = sock is None
    if owned:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.bind((host, port))
    try:
        sock.settimeout(idle_timeout_s)
        received: list[Datagram] = []
        while max_datagrams is None or len(received) < max_datagrams:
            try:
                buf, _ = sock.recvfrom(65536)
            except socket.timeout:
                break
            received.append(parse_datagram(buf))
        return received
    finally:
        if owned:
            sock.close()
