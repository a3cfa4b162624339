"""Wire codec for the IR pointing device.

Device-to-host frames start with 0xA1, host-to-device frames with 0xA2.
Layouts are fixed per report/command id:

    0xA1 0x20  buttons(2, big-endian) led|flags(1) reserved(2) battery(1)
    0xA1 0x30  buttons(2)
    0xA1 0x33  buttons(2) + 4 blob slots of 3 bytes each

    0xA2 0x11  led mask in the high nibble
    0xA2 0x12  0x00, reporting mode (0x30 or 0x33)
    0xA2 0x13  0x04 to enable the IR camera, 0x00 to disable
    0xA2 0x15  0x00 (status request)

A blob slot packs a 10-bit x, a 10-bit y and a 4-bit size as

    [x & 0xFF] [y & 0xFF] [(y >> 8) << 6 | (x >> 8) << 4 | size]

An absent slot is the sentinel FF FF FF. No valid blob encodes to the
sentinel: y is at most 767, so the top two bits of the third byte never
reach 0b11 for a real detection. A non-sentinel slot whose y field
decodes above 767 cannot be a detection either and is skipped.

Decoding is total: any byte string either decodes or raises one of the
errors defined here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

INPUT_PREFIX = 0xA1
OUTPUT_PREFIX = 0xA2

REPORT_STATUS = 0x20
REPORT_BUTTONS = 0x30
REPORT_BUTTONS_IR = 0x33

CMD_SET_LEDS = 0x11
CMD_SET_REPORTING_MODE = 0x12
CMD_IR_ENABLE = 0x13
CMD_STATUS_REQUEST = 0x15

REPORTING_MODES = (REPORT_BUTTONS, REPORT_BUTTONS_IR)

CAMERA_MAX_X = 1023
CAMERA_MAX_Y = 767
MAX_BLOB_SIZE = 15
MAX_BLOBS = 4
BATTERY_RAW_MAX = 200

ABSENT_SLOT = b"\xff\xff\xff"

# total frame lengths including the two-byte header
REPORT_LENGTHS = {
    REPORT_STATUS: 8,
    REPORT_BUTTONS: 4,
    REPORT_BUTTONS_IR: 16,
}
COMMAND_LENGTHS = {
    CMD_SET_LEDS: 3,
    CMD_SET_REPORTING_MODE: 4,
    CMD_IR_ENABLE: 3,
    CMD_STATUS_REQUEST: 3,
}


class CodecError(Exception):
    """Base for wire codec failures."""


class BadPrefix(CodecError):
    pass


class UnknownReportId(CodecError):
    pass


class UnknownCommandId(CodecError):
    pass


class TruncatedFrame(CodecError):
    """Frame length does not match the layout for its id (short or long)."""


@dataclass(frozen=True)
class IrBlob:
    """One camera detection. x in 0..1023, y in 0..767, size in 0..15."""

    x: int
    y: int
    size: int

    def __post_init__(self) -> None:
        if not (0 <= self.x <= CAMERA_MAX_X):
            raise ValueError(f"blob x out of range: {self.x}")
        if not (0 <= self.y <= CAMERA_MAX_Y):
            raise ValueError(f"blob y out of range: {self.y}")
        if not (0 <= self.size <= MAX_BLOB_SIZE):
            raise ValueError(f"blob size out of range: {self.size}")


@dataclass(frozen=True)
class Status:
    buttons: int = 0
    led_mask: int = 0
    battery_raw: int = 0

    def __post_init__(self) -> None:
        _check_buttons(self.buttons)
        if not (0 <= self.led_mask <= 0xF):
            raise ValueError(f"led mask out of range: {self.led_mask}")
        if not (0 <= self.battery_raw <= BATTERY_RAW_MAX):
            raise ValueError(f"battery out of range: {self.battery_raw}")

    @property
    def battery_percent(self) -> float:
        return self.battery_raw / 2.0


@dataclass(frozen=True)
class Buttons:
    buttons: int = 0

    def __post_init__(self) -> None:
        _check_buttons(self.buttons)


@dataclass(frozen=True)
class ButtonsIr:
    buttons: int = 0
    blobs: tuple[IrBlob, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        _check_buttons(self.buttons)
        object.__setattr__(self, "blobs", tuple(self.blobs))
        if len(self.blobs) > MAX_BLOBS:
            raise ValueError(f"at most {MAX_BLOBS} blobs per frame")


DeviceReport = Status | Buttons | ButtonsIr


@dataclass(frozen=True)
class SetLeds:
    mask: int

    def __post_init__(self) -> None:
        if not (0 <= self.mask <= 0xF):
            raise ValueError(f"led mask out of range: {self.mask}")


@dataclass(frozen=True)
class SetReportingMode:
    mode: int

    def __post_init__(self) -> None:
        if self.mode not in REPORTING_MODES:
            raise ValueError(f"unknown reporting mode: {self.mode:#x}")


@dataclass(frozen=True)
class IrEnable:
    on: bool


@dataclass(frozen=True)
class StatusRequest:
    pass


DeviceCommand = SetLeds | SetReportingMode | IrEnable | StatusRequest


def _check_buttons(buttons: int) -> None:
    if not (0 <= buttons <= 0xFFFF):
        raise ValueError(f"button mask out of range: {buttons}")


def _encode_slot(blob: IrBlob) -> bytes:
    packed = ((blob.y >> 8) << 6) | ((blob.x >> 8) << 4) | blob.size
    return bytes((blob.x & 0xFF, blob.y & 0xFF, packed))


def _decode_slot(b0: int, b1: int, b2: int) -> IrBlob | None:
    if b0 == 0xFF and b1 == 0xFF and b2 == 0xFF:
        return None
    y = b1 | ((b2 >> 6) & 0x3) << 8
    if y > CAMERA_MAX_Y:
        # expressible on the wire but not by any real detection
        return None
    x = b0 | ((b2 >> 4) & 0x3) << 8
    return IrBlob(x=x, y=y, size=b2 & 0xF)


def encode_report(report: DeviceReport) -> bytes:
    if isinstance(report, Status):
        return bytes(
            (
                INPUT_PREFIX,
                REPORT_STATUS,
                report.buttons >> 8,
                report.buttons & 0xFF,
                report.led_mask << 4,
                0x00,
                0x00,
                report.battery_raw,
            )
        )
    if isinstance(report, Buttons):
        return bytes(
            (INPUT_PREFIX, REPORT_BUTTONS, report.buttons >> 8, report.buttons & 0xFF)
        )
    if isinstance(report, ButtonsIr):
        out = bytearray(
            (INPUT_PREFIX, REPORT_BUTTONS_IR, report.buttons >> 8, report.buttons & 0xFF)
        )
        for blob in report.blobs:
            out += _encode_slot(blob)
        out += ABSENT_SLOT * (MAX_BLOBS - len(report.blobs))
        return bytes(out)
    raise TypeError(f"not a device report: {report!r}")


def decode_report(frame: bytes) -> DeviceReport:
    if len(frame) < 2:
        raise TruncatedFrame(f"need at least 2 bytes, got {len(frame)}")
    if frame[0] != INPUT_PREFIX:
        raise BadPrefix(f"expected {INPUT_PREFIX:#x}, got {frame[0]:#x}")
    report_id = frame[1]
    expected = REPORT_LENGTHS.get(report_id)
    if expected is None:
        raise UnknownReportId(f"{report_id:#x}")
    if len(frame) != expected:
        raise TruncatedFrame(
            f"report {report_id:#x} takes {expected} bytes, got {len(frame)}"
        )
    buttons = (frame[2] << 8) | frame[3]
    if report_id == REPORT_STATUS:
        # low flag nibble and reserved bytes are ignored
        return Status(buttons=buttons, led_mask=frame[4] >> 4, battery_raw=frame[7])
    if report_id == REPORT_BUTTONS:
        return Buttons(buttons=buttons)
    blobs = []
    for off in range(4, 16, 3):
        blob = _decode_slot(frame[off], frame[off + 1], frame[off + 2])
        if blob is not None:
            blobs.append(blob)
    return ButtonsIr(buttons=buttons, blobs=tuple(blobs))


def encode_command(cmd: DeviceCommand) -> bytes:
    if isinstance(cmd, SetLeds):
        return bytes((OUTPUT_PREFIX, CMD_SET_LEDS, cmd.mask << 4))
    if isinstance(cmd, SetReportingMode):
        return bytes((OUTPUT_PREFIX, CMD_SET_REPORTING_MODE, 0x00, cmd.mode))
    if isinstance(cmd, IrEnable):
        return bytes((OUTPUT_PREFIX, CMD_IR_ENABLE, 0x04 if cmd.on else 0x00))
    if isinstance(cmd, StatusRequest):
        return bytes((OUTPUT_PREFIX, CMD_STATUS_REQUEST, 0x00))
    raise TypeError(f"not a device command: {cmd!r}")


def decode_command(frame: bytes) -> DeviceCommand:
    if len(frame) < 2:
        raise TruncatedFrame(f"need at least 2 bytes, got {len(frame)}")
    if frame[0] != OUTPUT_PREFIX:
        raise BadPrefix(f"expected {OUTPUT_PREFIX:#x}, got {frame[0]:#x}")
    cmd_id = frame[1]
    expected = COMMAND_LENGTHS.get(cmd_id)
    if expected is None:
        raise UnknownCommandId(f"{cmd_id:#x}")
    if len(frame) != expected:
        raise TruncatedFrame(
            f"command {cmd_id:#x} takes {expected} bytes, got {len(frame)}"
        )
    if cmd_id == CMD_SET_LEDS:
        return SetLeds(mask=frame[2] >> 4)
    if cmd_id == CMD_SET_REPORTING_MODE:
        if frame[3] not in REPORTING_MODES:
            raise UnknownCommandId(f"reporting mode {frame[3]:#x}")
        return SetReportingMode(mode=frame[3])
    if cmd_id == CMD_IR_ENABLE:
        if frame[2] not in (0x00, 0x04):
            raise UnknownCommandId(f"ir enable payload {frame[2]:#x}")
        return IrEnable(on=frame[2] == 0x04)
    return StatusRequest()


def split_frames(data: bytes) -> list[bytes]:
    """Split a concatenated device-to-host stream into whole frames."""
    frames = []
    pos = 0
    while pos < len(data):
        if data[pos] != INPUT_PREFIX:
            raise BadPrefix(f"at offset {pos}: {data[pos]:#x}")
        if pos + 1 >= len(data):
            raise TruncatedFrame("stream ends inside a header")
        length = REPORT_LENGTHS.get(data[pos + 1])
        if length is None:
            raise UnknownReportId(f"at offset {pos}: {data[pos + 1]:#x}")
        if pos + length > len(data):
            raise TruncatedFrame("stream ends inside a frame")
        frames.append(data[pos : pos + length])
        pos += length
    return frames
