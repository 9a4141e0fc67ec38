"""Text recovery from unencrypted, text-operator PDF payloads.

No external PDF library is used: content streams are located by scanning
for stream objects, run through their declared filter chains (FlateDecode,
ASCII85Decode, ASCIIHexDecode), and the text-showing operators (Tj, TJ,
', ") are interpreted. Two modes are offered:

* ``layout=True`` reorders shown text by tracked text-matrix positions
  (top-to-bottom, left-to-right) before joining lines.
* ``layout=False`` dumps shown strings in raw stream order.

Glyph strings are decoded as Latin-1, which covers the simple-font PDFs
this engine targets; CID/Type0 composite fonts and scanned pages are out
of scope and surface as warnings or empty output.
"""

from __future__ import annotations

import base64
import binascii
import re
import zlib
from dataclasses import dataclass

_STREAM_START = re.compile(rb">>\s*stream(\r\n|\n|\r)")
_FILTER_NAMES = re.compile(rb"/(FlateDecode|ASCII85Decode|ASCIIHexDecode|Fl|A85|AHx)\b")
_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMITERS = b"()<>[]{}/%"

_FILTER_ALIASES = {
    b"Fl": b"FlateDecode",
    b"A85": b"ASCII85Decode",
    b"AHx": b"ASCIIHexDecode",
}


@dataclass
class _Run:
    order: int
    x: float
    y: float
    text: str


def extract_pdf_text(payload: bytes, layout: bool = True) -> tuple[str, list[str]]:
    """Return (text, warnings) recovered from a PDF byte payload."""
    if not payload.lstrip().startswith(b"%PDF"):
        raise ValueError("payload does not carry a PDF header")
    if b"/Encrypt" in payload:
        raise ValueError("encrypted PDFs are not supported")

    warnings: list[str] = []
    pages: list[str] = []
    for index, stream in enumerate(_decoded_streams(payload, warnings)):
        if b"BT" not in stream or (b"Tj" not in stream and b"TJ" not in stream
                                   and b"'" not in stream and b'"' not in stream):
            continue  # image/font/metadata stream, not page content
        runs = _text_runs(stream, warnings, tag=f"stream {index}")
        if not runs:
            continue
        pages.append(_render_runs(runs, layout=layout))
    return "\n".join(pages), warnings


def _decoded_streams(payload: bytes, warnings: list[str]):
    for match in _STREAM_START.finditer(payload):
        dict_start = _dict_start(payload, match.start())
        header = payload[dict_start : match.start() + 2]
        body_start = match.end()
        body_end = payload.find(b"endstream", body_start)
        if body_end < 0:
            warnings.append("unterminated stream object skipped")
            continue
        raw = payload[body_start:body_end].rstrip(b"\r\n")
        filters = [_FILTER_ALIASES.get(f, f) for f in _FILTER_NAMES.findall(header)]
        try:
            yield _apply_filters(raw, filters)
        except Exception as exc:
            warnings.append(f"stream could not be decoded ({exc})")


def _dict_start(payload: bytes, dict_end: int) -> int:
    """Walk backwards from the '>>' before 'stream' to its matching '<<'."""
    depth = 1
    i = dict_end - 1
    while i > 0:
        pair = payload[i : i + 2]
        if pair == b">>":
            depth += 1
            i -= 2
        elif pair == b"<<":
            depth -= 1
            if depth == 0:
                return i
            i -= 2
        else:
            i -= 1
    return 0


def _apply_filters(raw: bytes, filters: list[bytes]) -> bytes:
    data = raw
    for name in filters:
        if name == b"ASCII85Decode":
            stripped = bytes(data).strip()
            if stripped.startswith(b"<~"):
                stripped = stripped[2:]
            if stripped.endswith(b"~>"):
                stripped = stripped[:-2]
            data = base64.a85decode(stripped, ignorechars=_WHITESPACE)
        elif name == b"FlateDecode":
            data = zlib.decompress(data)
        elif name == b"ASCIIHexDecode":
            hexed = bytes(data).split(b">")[0]
            hexed = bytes(ch for ch in hexed if ch not in _WHITESPACE)
            if len(hexed) % 2:
                hexed += b"0"
            data = binascii.unhexlify(hexed)
        else:
            raise ValueError(f"unsupported filter {name.decode('latin-1')}")
    return data


# --- content-stream interpretation -----------------------------------------


def _text_runs(stream: bytes, warnings: list[str], tag: str) -> list[_Run]:
    runs: list[_Run] = []
    operands: list[object] = []
    x = y = 0.0
    line_x = line_y = 0.0
    leading = 0.0
    order = 0

    def show(text: str) -> None:
        nonlocal order
        if text:
            runs.append(_Run(order=order, x=x, y=y, text=text))
            order += 1

    def move_line(tx: float, ty: float) -> None:
        nonlocal x, y, line_x, line_y
        line_x += tx
        line_y += ty
        x, y = line_x, line_y

    for kind, value in _tokens(stream, warnings, tag):
        if kind != "op":
            operands.append(value)
            continue
        op = value
        try:
            if op == b"BT":
                x = y = line_x = line_y = 0.0
            elif op == b"Tm" and len(operands) >= 6:
                line_x, line_y = float(operands[-2]), float(operands[-1])  # type: ignore[arg-type]
                x, y = line_x, line_y
            elif op == b"Td" and len(operands) >= 2:
                move_line(float(operands[-2]), float(operands[-1]))  # type: ignore[arg-type]
            elif op == b"TD" and len(operands) >= 2:
                leading = -float(operands[-1])  # type: ignore[arg-type]
                move_line(float(operands[-2]), float(operands[-1]))  # type: ignore[arg-type]
            elif op == b"TL" and operands:
                leading = float(operands[-1])  # type: ignore[arg-type]
            elif op == b"T*":
                move_line(0.0, -leading)
            elif op == b"Tj" and operands:
                show(_as_text(operands[-1]))
            elif op == b"'" and operands:
                move_line(0.0, -leading)
                show(_as_text(operands[-1]))
            elif op == b'"' and operands:
                move_line(0.0, -leading)
                show(_as_text(operands[-1]))
            elif op == b"TJ" and operands and isinstance(operands[-1], list):
                parts: list[str] = []
                for element in operands[-1]:
                    if isinstance(element, bytes):
                        parts.append(_as_text(element))
                    elif isinstance(element, float) and element < -100:
                        parts.append(" ")  # large kern gaps stand in for spaces
                show("".join(parts))
        except (TypeError, ValueError):
            warnings.append(f"{tag}: malformed operands for {op.decode('latin-1')}")
        operands.clear()
    return runs


def _as_text(value: object) -> str:
    if isinstance(value, bytes):
        return value.decode("latin-1")
    return ""


def _render_runs(runs: list[_Run], layout: bool) -> str:
    if not layout:
        return "\n".join(run.text for run in runs)
    lines: dict[float, list[_Run]] = {}
    for run in runs:
        lines.setdefault(round(run.y, 1), []).append(run)
    ordered_lines = []
    for y in sorted(lines, reverse=True):
        fragments = sorted(lines[y], key=lambda r: (r.x, r.order))
        ordered_lines.append(" ".join(f.text for f in fragments))
    return "\n".join(ordered_lines)


def _tokens(stream: bytes, warnings: list[str], tag: str):
    """Yield ('str'|'num'|'name'|'arr'|'op', value) tokens from a content stream."""
    i = 0
    n = len(stream)
    array_stack: list[list[object]] = []

    def emit(kind: str, value: object):
        if array_stack and kind in ("str", "num"):
            array_stack[-1].append(value)
            return None
        return kind, value

    while i < n:
        ch = stream[i : i + 1]
        if ch in b"\x00\t\n\x0c\r ":
            i += 1
        elif ch == b"%":
            i = stream.find(b"\n", i)
            i = n if i < 0 else i + 1
        elif ch == b"(":
            text, i = _literal_string(stream, i)
            out = emit("str", text)
            if out:
                yield out
        elif stream[i : i + 2] == b"<<":
            i = _skip_dict(stream, i)
        elif ch == b"<":
            end = stream.find(b">", i)
            if end < 0:
                warnings.append(f"{tag}: unterminated hex string")
                break
            hexed = bytes(c for c in stream[i + 1 : end] if c not in _WHITESPACE)
            if len(hexed) % 2:
                hexed += b"0"
            out = emit("str", binascii.unhexlify(hexed))
            if out:
                yield out
            i = end + 1
        elif ch == b"[":
            array_stack.append([])
            i += 1
        elif ch == b"]":
            array = array_stack.pop() if array_stack else []
            yield "arr", array
            i += 1
        elif ch == b"/":
            j = i + 1
            while j < n and stream[j] not in _WHITESPACE and stream[j : j + 1] not in b"()<>[]{}/%":
                j += 1
            yield "name", stream[i + 1 : j]
            i = j
        elif ch in b"+-.0123456789":
            j = i + 1
            while j < n and stream[j : j + 1] in b"+-.0123456789":
                j += 1
            try:
                value = float(stream[i:j])
            except ValueError:
                value = 0.0
            out = emit("num", value)
            if out:
                yield out
            i = j
        else:
            j = i
            while j < n and stream[j] not in _WHITESPACE and stream[j : j + 1] not in b"()<>[]{}/%":
                j += 1
            if j == i:
                i += 1
                continue
            yield "op", stream[i:j]
            i = j


def _literal_string(stream: bytes, start: int) -> tuple[bytes, int]:
    out = bytearray()
    depth = 1
    i = start + 1
    n = len(stream)
    escapes = {
        ord("n"): b"\n", ord("r"): b"\r", ord("t"): b"\t",
        ord("b"): b"\b", ord("f"): b"\x0c",
        ord("("): b"(", ord(")"): b")", ord("\\"): b"\\",
    }
    while i < n:
        byte = stream[i]
        if byte == 0x5C:  # backslash
            i += 1
            if i >= n:
                break
            nxt = stream[i]
            if nxt in escapes:
                out += escapes[nxt]
                i += 1
            elif 0x30 <= nxt <= 0x37:  # up to three octal digits
                digits = bytearray()
                while i < n and len(digits) < 3 and 0x30 <= stream[i] <= 0x37:
                    digits.append(stream[i])
                    i += 1
                out.append(int(digits, 8) & 0xFF)
            elif nxt in (0x0A, 0x0D):  # line continuation
                i += 1
                if nxt == 0x0D and i < n and stream[i] == 0x0A:
                    i += 1
            else:
                out.append(nxt)
                i += 1
        elif byte == 0x28:  # (
            depth += 1
            out.append(byte)
            i += 1
        elif byte == 0x29:  # )
            depth -= 1
            if depth == 0:
                return bytes(out), i + 1
            out.append(byte)
            i += 1
        else:
            out.append(byte)
            i += 1
    return bytes(out), i


def _skip_dict(stream: bytes, start: int) -> int:
    depth = 0
    i = start
    n = len(stream)
    while i < n:
        if stream[i : i + 2] == b"<<":
            depth += 1
            i += 2
        elif stream[i : i + 2] == b">>":
            depth -= 1
            i += 2
            if depth == 0:
                return i
        elif stream[i : i + 1] == b"(":
            _, i = _literal_string(stream, i)
        else:
            i += 1
    return i
