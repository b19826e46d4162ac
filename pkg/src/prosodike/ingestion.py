"""Readers that bring alignments, audio and pitch tracks onto the frame grid.

Supported inputs: Praat TextGrid (long and short text forms, interval tiers
only), RIFF WAV (mono PCM16 or IEEE float32) and ``time,value`` CSV tracks.
"""

from __future__ import annotations

import csv
import io
import math
import re
import struct
from dataclasses import dataclass, field

import numpy as np

from .datamodel import PhoneSegment, WordSpan


class TextGridError(ValueError):
    """Malformed TextGrid input.  ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class AlignmentError(ValueError):
    pass


class UnsupportedAudioError(ValueError):
    pass


class TrackFormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# TextGrid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    xmin: float
    xmax: float
    text: str


@dataclass(frozen=True)
class Tier:
    name: str
    intervals: tuple[Interval, ...]
    xmin: float | None = None
    xmax: float | None = None

    @property
    def start(self) -> float:
        if self.xmin is not None:
            return self.xmin
        return self.intervals[0].xmin if self.intervals else 0.0

    @property
    def end(self) -> float:
        if self.xmax is not None:
            return self.xmax
        return self.intervals[-1].xmax if self.intervals else 0.0


@dataclass(frozen=True)
class TextGridDocument:
    tiers: tuple[Tier, ...]
    xmin: float | None = None
    xmax: float | None = None

    def tier(self, name: str) -> Tier:
        for t in self.tiers:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def start(self) -> float:
        if self.xmin is not None:
            return self.xmin
        return min((t.start for t in self.tiers), default=0.0)

    @property
    def end(self) -> float:
        if self.xmax is not None:
            return self.xmax
        return max((t.end for t in self.tiers), default=0.0)


_TOKEN = re.compile(
    r'"(?:[^"]|"")*"'  # quoted string, "" escapes a quote
    r"|<exists>|<absent>"
    r"|\[\s*\d*\s*\]"  # item [3] / intervals [12] indices, skipped
    r"|[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
)


@dataclass
class _Tokens:
    values: list[tuple[str, int]] = field(default_factory=list)
    pos: int = 0

    def next(self, what: str) -> tuple[str, int]:
        if self.pos >= len(self.values):
            last = self.values[-1][1] if self.values else 1
            raise TextGridError(f"unexpected end of file, expected {what}", last)
        tok = self.values[self.pos]
        self.pos += 1
        return tok

    def string(self, what: str) -> tuple[str, int]:
        tok, line = self.next(what)
        if not tok.startswith('"'):
            raise TextGridError(f"expected quoted {what}, got {tok}", line)
        return tok[1:-1].replace('""', '"'), line

    def number(self, what: str) -> tuple[float, int]:
        tok, line = self.next(what)
        try:
            return float(tok), line
        except ValueError:
            raise TextGridError(f"expected number for {what}, got {tok}", line) from None

    def count(self, what: str) -> tuple[int, int]:
        value, line = self.number(what)
        if value != int(value) or value < 0:
            raise TextGridError(f"expected non-negative integer for {what}", line)
        return int(value), line


def _tokenize(text: str) -> _Tokens:
    toks = _Tokens()
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]
    for m in _TOKEN.finditer(text):
        tok = m.group(0)
        if tok.startswith("["):
            continue
        line = _line_of(line_starts, m.start())
        toks.values.append((tok, line))
    return toks


def _line_of(line_starts: list[int], offset: int) -> int:
    lo, hi = 0, len(line_starts)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if line_starts[mid] <= offset:
            lo = mid
        else:
            hi = mid
    return lo + 1


def parse_textgrid(text: str) -> TextGridDocument:
    """Parse a TextGrid in long or short text form."""
    if text.startswith("\ufeff"):
        text = text[1:]
    toks = _tokenize(text)
    file_type, line = toks.string("file type")
    if file_type != "ooTextFile":
        raise TextGridError(f'expected "ooTextFile", got "{file_type}"', line)
    obj_class, line = toks.string("object class")
    if obj_class != "TextGrid":
        raise TextGridError(f'expected "TextGrid", got "{obj_class}"', line)
    xmin, _ = toks.number("xmin")
    xmax, _ = toks.number("xmax")
    flag, line = toks.next("<exists>")
    if flag == "<absent>":
        return TextGridDocument((), xmin, xmax)
    if flag != "<exists>":
        raise TextGridError(f"expected <exists>, got {flag}", line)
    n_tiers, _ = toks.count("tier count")
    tiers = []
    for _i in range(n_tiers):
        cls, line = toks.string("tier class")
        if cls == "TextTier":
            raise TextGridError("point tiers are not supported", line)
        if cls != "IntervalTier":
            raise TextGridError(f"unknown tier class {cls}", line)
        name, _ = toks.string("tier name")
        txmin, _ = toks.number("tier xmin")
        txmax, _ = toks.number("tier xmax")
        n, _ = toks.count("interval count")
        intervals = []
        prev_end = -math.inf
        for _j in range(n):
            a, line = toks.number("interval xmin")
            b, bline = toks.number("interval xmax")
            label, _ = toks.string("interval text")
            if not a < b:
                raise TextGridError(f"interval xmax {b} not greater than xmin {a}", bline)
            if a < prev_end:
                raise TextGridError(f"interval starting at {a} overlaps or precedes previous", line)
            prev_end = b
            intervals.append(Interval(a, b, label))
        tiers.append(Tier(name, tuple(intervals), txmin, txmax))
    if toks.pos != len(toks.values):
        raise TextGridError("trailing content after last tier", toks.values[toks.pos][1])
    return TextGridDocument(tuple(tiers), xmin, xmax)


def _num(x: float) -> str:
    return repr(float(x))


def _quote(s: str) -> str:
    return '"' + s.replace('"', '""') + '"'


def serialize_textgrid(doc: TextGridDocument, short: bool = False) -> str:
    """Render ``doc``; floats are written with full round-trip precision."""
    out = ['File type = "ooTextFile"', 'Object class = "TextGrid"', ""]
    if short:
        out += [_num(doc.start), _num(doc.end), "<exists>", str(len(doc.tiers))]
        for t in doc.tiers:
            out += ['"IntervalTier"', _quote(t.name), _num(t.start), _num(t.end), str(len(t.intervals))]
            for iv in t.intervals:
                out += [_num(iv.xmin), _num(iv.xmax), _quote(iv.text)]
        return "\n".join(out) + "\n"
    out += [
        f"xmin = {_num(doc.start)} ",
        f"xmax = {_num(doc.end)} ",
        "tiers? <exists> ",
        f"size = {len(doc.tiers)} ",
        "item []: ",
    ]
    for i, t in enumerate(doc.tiers, start=1):
        out += [
            f"    item [{i}]:",
            '        class = "IntervalTier" ',
            f"        name = {_quote(t.name)} ",
            f"        xmin = {_num(t.start)} ",
            f"        xmax = {_num(t.end)} ",
            f"        intervals: size = {len(t.intervals)} ",
        ]
        for j, iv in enumerate(t.intervals, start=1):
            out += [
                f"        intervals [{j}]:",
                f"            xmin = {_num(iv.xmin)} ",
                f"            xmax = {_num(iv.xmax)} ",
                f"            text = {_quote(iv.text)} ",
            ]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# TextGrid -> frame-grid skeleton
# ---------------------------------------------------------------------------

_SILENT_TEXT = {"", "sil", "sp", "<sil>", "#"}


def seconds_to_frame(t: float, frame_shift_ms: float) -> int:
    """Nearest frame boundary; exact ties go to the earlier frame."""
    x = t * 1000.0 / frame_shift_ms
    x = round(x, 9)  # absorb binary noise such as 0.15/0.01 = 14.999999999999998
    return int(math.ceil(x - 0.5))


def align_to_utterance(
    doc: TextGridDocument,
    phone_tier: str = "phones",
    word_tier: str = "words",
    frame_shift_ms: float = 10.0,
) -> tuple[tuple[PhoneSegment, ...], tuple[WordSpan, ...]]:
    """Quantize phone/word tiers onto the frame grid.

    Silent phone intervals become ``sil`` phones owned by no word.
    """
    try:
        phones_iv = doc.tier(phone_tier).intervals
    except KeyError:
        raise AlignmentError(f"no tier named {phone_tier!r}") from None
    try:
        words_iv = doc.tier(word_tier).intervals
    except KeyError:
        raise AlignmentError(f"no tier named {word_tier!r}") from None
    if not phones_iv:
        return (), ()

    shift_s = frame_shift_ms / 1000.0
    phones: list[PhoneSegment] = []
    prev_end = seconds_to_frame(phones_iv[0].xmin, frame_shift_ms)
    for iv in phones_iv:
        end = seconds_to_frame(iv.xmax, frame_shift_ms)
        n = max(1, end - prev_end)
        label = iv.text.strip()
        if label.lower() in _SILENT_TEXT:
            label = "sil"
        phones.append(PhoneSegment(label, prev_end, n))
        prev_end += n

    mids = [(iv.xmin + iv.xmax) / 2 for iv in phones_iv]
    words: list[WordSpan] = []
    for w in words_iv:
        text = w.text.strip()
        if text.lower() in _SILENT_TEXT:
            continue
        idx = [i for i, m in enumerate(mids) if w.xmin <= m < w.xmax]
        if not idx:
            raise AlignmentError(f"word {text!r} at {w.xmin}-{w.xmax}s contains no phones")
        a, b = idx[0], idx[-1] + 1
        if b - a != len(idx):
            raise AlignmentError(f"word {text!r} phones are not contiguous")
        tol = shift_s + 1e-9
        if abs(phones_iv[a].xmin - w.xmin) > tol or abs(phones_iv[b - 1].xmax - w.xmax) > tol:
            raise AlignmentError(
                f"word {text!r} boundaries {w.xmin}-{w.xmax}s differ from its phones "
                f"{phones_iv[a].xmin}-{phones_iv[b - 1].xmax}s by more than one frame"
            )
        if any(phones[i].label == "sil" for i in range(a, b)):
            raise AlignmentError(f"word {text!r} contains a silent phone")
        words.append(WordSpan(text, a, b))
    return tuple(phones), tuple(words)


# ---------------------------------------------------------------------------
# WAV
# ---------------------------------------------------------------------------

_PCM = 1
_IEEE_FLOAT = 3
_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self) -> None:
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")


def read_wav(data: bytes) -> AudioBuffer:
    """Decode a mono PCM16 / float32 RIFF file; int16 is scaled by 1/32768."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedAudioError("not a RIFF/WAVE file")
    pos = 12
    fmt = None
    payload = None
    while pos + 8 <= len(data):
        cid, size = data[pos:pos + 4], struct.unpack("<I", data[pos + 4:pos + 8])[0]
        body = data[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            if len(body) < 16:
                raise UnsupportedAudioError("truncated fmt chunk")
            tag, channels, rate, _, _, bits = struct.unpack("<HHIIHH", body[:16])
            if tag == _EXTENSIBLE and len(body) >= 26:
                tag = struct.unpack("<H", body[24:26])[0]
            fmt = (tag, channels, rate, bits)
        elif cid == b"data":
            payload = body
        pos += 8 + size + (size & 1)
    if fmt is None or payload is None:
        raise UnsupportedAudioError("missing fmt or data chunk")
    tag, channels, rate, bits = fmt
    if channels != 1:
        raise UnsupportedAudioError(f"{channels} channels; only mono is supported")
    if tag == _PCM and bits == 16:
        n = len(payload) // 2
        samples = np.frombuffer(payload[:2 * n], dtype="<i2").astype(float) / 32768.0
    elif tag == _IEEE_FLOAT and bits == 32:
        n = len(payload) // 4
        samples = np.frombuffer(payload[:4 * n], dtype="<f4").astype(float)
    else:
        raise UnsupportedAudioError(f"format tag {tag} with {bits} bits is not supported")
    return AudioBuffer(samples, rate)


def write_wav(buf: AudioBuffer, float32: bool = False) -> bytes:
    if float32:
        payload = np.asarray(buf.samples, dtype="<f4").tobytes()
        tag, bits = _IEEE_FLOAT, 32
    else:
        ints = np.clip(np.round(np.asarray(buf.samples) * 32768.0), -32768, 32767)
        payload = ints.astype("<i2").tobytes()
        tag, bits = _PCM, 16
    block = bits // 8
    fmt = struct.pack("<HHIIHH", tag, 1, buf.sample_rate_hz, buf.sample_rate_hz * block, block, bits)
    chunks = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    chunks += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        chunks += b"\x00"
    return b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks


# ---------------------------------------------------------------------------
# time,value tracks
# ---------------------------------------------------------------------------


def read_track_csv(text: str, frame_shift_ms: float = 10.0) -> np.ndarray:
    """Resample a ``time_seconds,value`` track onto the frame grid.

    Each frame takes the value of the nearest row (ties to the earlier row)
    when that row is at most one frame away; otherwise the frame is 0.0.
    """
    times: list[float] = []
    values: list[float] = []
    for rowno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        try:
            t, v = float(row[0]), float(row[1])
        except (ValueError, IndexError):
            if not times and rowno == 1:
                continue  # header
            raise TrackFormatError(f"row {rowno}: expected time,value") from None
        if times and not t > times[-1]:
            raise TrackFormatError(f"row {rowno}: time {t} is not after {times[-1]}")
        times.append(t)
        values.append(v)
    if not times:
        return np.zeros(0)
    shift = frame_shift_ms / 1000.0
    t_arr = np.asarray(times)
    v_arr = np.asarray(values)
    n_frames = seconds_to_frame(times[-1], frame_shift_ms) + 1
    grid = np.arange(n_frames) * shift
    right = np.searchsorted(t_arr, grid, side="left").clip(0, len(t_arr) - 1)
    left = (right - 1).clip(0, None)
    d_right = np.abs(t_arr[right] - grid)
    d_left = np.abs(grid - t_arr[left])
    pick = np.where(d_left <= d_right + 1e-12, left, right)
    dist = np.minimum(d_left, d_right)
    out = v_arr[pick]
    out[dist > shift + 1e-9] = 0.0
    return out
