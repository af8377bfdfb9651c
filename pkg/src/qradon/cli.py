"""Portable file format, command line surface, and benchmark harness.

Text container::

    ADRT1 <image|sino> n=<n> hlo=<int> hhi=<int> dtype=<i64|f64>
    <hhi-hlo rows of 2**n whitespace-separated values, ascending height>

The canonical form uses single spaces, LF line endings, integers verbatim
and floats at 17 significant digits, so round trips are byte identical.
``image`` files must have ``hlo=0, hhi=N``; ``sino`` files carry any window.
A binary variant (magic ``ADRT1B``, same header fields, little-endian
8-byte values row-major) serves large benchmarking runs.

Exit codes: 0 success, 1 usage or format error, 2 validation failure or
out-of-range data, 3 integer overflow.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import statistics
import sys
import time

import numpy as np

from .grid import ClipError, SquareImage, StripImage, embed
from .inverse import OutOfRangeError, delta_inverse_profile, divergence_probe, inverse
from .lines import (
    digital_line_closed,
    digital_line_recursive,
    dual_line_closed,
    dual_line_recursive,
)
from .range import validate
from .transform import forward, forward_bruteforce, full_adrt, backproject


class FormatError(ValueError):
    """Malformed container data; carries a 1-based line/column position."""

    def __init__(self, message: str, line: int, col: int = 1):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


_TEXT_MAGIC = b"ADRT1"
_BIN_MAGIC = b"ADRT1B"
_HEADER_RE = re.compile(
    r"^(ADRT1B?) (image|sino) n=(-?\d+) hlo=(-?\d+) hhi=(-?\d+) dtype=(i64|f64)$"
)


def _format_value(v, integer: bool) -> str:
    if integer:
        return str(int(v))
    return format(float(v), ".17g")


def serialize(obj, binary: bool = False) -> bytes:
    """Canonical byte serialization of a square or strip image."""
    if isinstance(obj, SquareImage):
        strip = embed(obj)
    elif isinstance(obj, StripImage):
        strip = obj
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    tag = strip.kind
    if tag == "image" and (strip.h_lo, strip.h_hi) != (0, strip.width):
        raise ValueError("image containers require the window [0, N)")
    integer = strip.data.dtype == np.int64
    dt = "i64" if integer else "f64"
    magic = "ADRT1B" if binary else "ADRT1"
    header = (
        f"{magic} {tag} n={strip.n} hlo={strip.h_lo} hhi={strip.h_hi} dtype={dt}\n"
    )
    if binary:
        payload = strip.data.astype("<i8" if integer else "<f8").tobytes()
        return header.encode("ascii") + payload
    lines = [header]
    for row in strip.data:
        lines.append(" ".join(_format_value(v, integer) for v in row) + "\n")
    return "".join(lines).encode("ascii")


def _parse_header(line: str, lineno: int):
    match = _HEADER_RE.match(line)
    if not match:
        raise FormatError(f"malformed header {line!r}", lineno)
    magic, tag, n, hlo, hhi = (
        match.group(1), match.group(2), int(match.group(3)),
        int(match.group(4)), int(match.group(5)),
    )
    dtype = np.int64 if match.group(6) == "i64" else np.float64
    if not 0 <= n <= 30:
        raise FormatError("n must be between 0 and 30", lineno)
    if hhi < hlo:
        raise FormatError("window bounds must satisfy hlo <= hhi", lineno)
    if tag == "image" and (hlo, hhi) != (0, 1 << n):
        raise FormatError("image containers require hlo=0 and hhi=N", lineno)
    return magic, tag, n, hlo, hhi, dtype


def _build(tag, n, hlo, hhi, arr):
    if tag == "image":
        return SquareImage(n, arr)
    return StripImage(n, hlo, hhi, "sino", arr)


def parse_image(data: bytes):
    """Parse a container; returns a :class:`SquareImage` or :class:`StripImage`."""
    newline = data.find(b"\n")
    if newline < 0:
        raise FormatError("missing header line", 1)
    try:
        header = data[:newline].decode("ascii")
    except UnicodeDecodeError:
        raise FormatError("header is not ASCII", 1) from None
    magic, tag, n, hlo, hhi, dtype = _parse_header(header, 1)
    rows = hhi - hlo
    width = 1 << n
    if magic == "ADRT1B":
        payload = data[newline + 1 :]
        expect = rows * width * 8
        if len(payload) != expect:
            raise FormatError(
                f"binary payload holds {len(payload)} bytes, expected {expect}", 2
            )
        arr = np.frombuffer(
            payload, dtype="<i8" if dtype == np.int64 else "<f8"
        ).reshape(rows, width).astype(dtype)
        return _build(tag, n, hlo, hhi, arr)
    try:
        text = data[newline + 1 :].decode("ascii")
    except UnicodeDecodeError:
        raise FormatError("payload is not ASCII", 2) from None
    body = text.splitlines()
    while body and not body[-1].strip():
        body.pop()
    if len(body) != rows:
        raise FormatError(
            f"found {len(body)} data rows, expected {rows}", min(len(body), rows) + 2
        )
    arr = np.zeros((rows, width), dtype=dtype)
    for i, line in enumerate(body):
        lineno = i + 2
        tokens = list(re.finditer(r"\S+", line))
        if len(tokens) != width:
            raise FormatError(
                f"row holds {len(tokens)} values, expected {width}", lineno
            )
        for j, tok in enumerate(tokens):
            text_tok = tok.group(0)
            col = tok.start() + 1
            try:
                if dtype == np.int64:
                    arr[i, j] = int(text_tok)
                else:
                    val = float(text_tok)
                    if not np.isfinite(val):
                        raise ValueError
                    arr[i, j] = val
            except (ValueError, OverflowError):
                raise FormatError(
                    f"non-numeric token {text_tok!r}", lineno, col
                ) from None
    return _build(tag, n, hlo, hhi, arr)


# -- benchmark harness ----------------------------------------------------------


def bench_forward(sizes, repeats: int = 5, seed: int = 0):
    """Median-of-``repeats`` forward wall times per size, in seconds."""
    rng = np.random.default_rng(seed)
    results = []
    for N in sizes:
        n = int(N).bit_length() - 1
        if (1 << n) != N:
            raise ValueError(f"size {N} is not a power of two")
        img = SquareImage(n, rng.random((N, N)))
        forward(img)  # warm-up: page faults and allocator noise stay out
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            forward(img)
            times.append(time.perf_counter() - t0)
        results.append((N, statistics.median(times)))
    return results


# -- command implementations -----------------------------------------------------


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _write_output(path: str, payload: bytes) -> None:
    if path == "-":
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()
        return
    with open(path, "wb") as fh:
        fh.write(payload)


def _quadrant_path(base: str, idx: int) -> str:
    root, ext = os.path.splitext(base)
    return f"{root}.q{idx}{ext}"


def _cmd_forward(args) -> int:
    img = parse_image(_read_input(args.input))
    if not isinstance(img, SquareImage):
        raise ValueError("forward expects an image container")
    op = forward_bruteforce if args.oracle else forward
    _write_output(args.output, serialize(op(img), binary=args.binary))
    return 0


def _cmd_inverse(args) -> int:
    sino = parse_image(_read_input(args.input))
    if isinstance(sino, SquareImage):
        sino = embed(sino)
    if args.allow_out_of_range:
        square, report = inverse(sino, tol=args.tol, allow_out_of_range=True)
        _write_output(args.output, serialize(square, binary=args.binary))
        print(
            f"out-of-range residuals: max |r| = {report.max_abs} "
            f"over {len(report.residuals)} constraints",
            file=sys.stderr,
        )
        return 0
    square = inverse(sino, tol=args.tol)
    _write_output(args.output, serialize(square, binary=args.binary))
    return 0


def _cmd_backproject(args) -> int:
    sino = parse_image(_read_input(args.input))
    if isinstance(sino, SquareImage):
        sino = embed(sino)
    out = backproject(sino, args.m)
    _write_output(args.output, serialize(out, binary=args.binary))
    return 0


def _cmd_fulladrt(args) -> int:
    img = parse_image(_read_input(args.input))
    if not isinstance(img, SquareImage):
        raise ValueError("fulladrt expects an image container")
    for idx, quad in enumerate(full_adrt(img)):
        _write_output(_quadrant_path(args.output, idx), serialize(quad, binary=args.binary))
    return 0


def _cmd_validate(args) -> int:
    sino = parse_image(_read_input(args.input))
    if isinstance(sino, SquareImage):
        sino = embed(sino)
    report = validate(sino, tol=args.tol)
    if args.json:
        print(json.dumps(report.to_json_dict()))
    else:
        mass, support = report.counts
        print(
            f"constraints: {len(report.residuals)} (mass {mass}, support {support}); "
            f"max |residual| = {report.max_abs}; "
            f"verdict: {'PASS' if report.passed else 'FAIL'}"
        )
    return 0 if report.passed else 2


def _cmd_lines(args) -> int:
    N = 1 << args.n
    if not 0 <= args.s < N:
        raise ValueError(f"slope {args.s} out of range for n={args.n}")
    if args.dual:
        build = dual_line_closed if args.closed_form else (
            lambda n, h, s: dual_line_recursive(n, n, 0, h, s)
        )
    else:
        build = digital_line_closed if args.closed_form else (
            lambda n, h, s: digital_line_recursive(n, n, 0, h, s)
        )
    line = build(args.n, args.h, args.s)
    for t, k in enumerate(line.heights):
        print(f"{t} {int(k)}")
    return 0


def _cmd_invdelta(args) -> int:
    lo, hi = args.window
    dtype = np.int64 if args.dtype == "i64" else np.float64
    profile = delta_inverse_profile(args.n, args.h, args.s, lo, hi, dtype=dtype)
    _write_output(args.output, serialize(profile, binary=args.binary))
    return 0


def _cmd_divergence(args) -> int:
    hs = None
    if args.h is not None or args.s is not None:
        if args.h is None or args.s is None:
            raise ValueError("--h and --s must be given together")
        hs = (args.h, args.s)
    rows = ["k,probe,restricted"]
    for k in range(1, args.kmax + 1):
        p = divergence_probe(args.n, k, hs)
        r = divergence_probe(args.n, k, hs, restricted=True)
        rows.append(f"{k},{p},{r}")
    _write_output(args.output, ("\n".join(rows) + "\n").encode("ascii"))
    return 0


def _cmd_bench(args) -> int:
    sizes = [int(tok) for tok in args.sizes.split(",") if tok]
    rows = ["N,seconds"]
    for N, seconds in bench_forward(sizes, repeats=args.repeats):
        rows.append(f"{N},{seconds:.6f}")
    _write_output(args.output, ("\n".join(rows) + "\n").encode("ascii"))
    return 0


# -- argument parsing -------------------------------------------------------------


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _window_arg(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError("window must look like LO:HI")
    try:
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError("window bounds must be integers") from None


def _build_parser() -> _Parser:
    parser = _Parser(prog="qradon", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--threads", type=int, default=None,
        help="cap worker count (accepted for compatibility; compute is "
        "currently single-threaded); mirrors ADRT_THREADS",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def io_args(p, output=True):
        p.add_argument("input", help="input file, or - for stdin")
        if output:
            p.add_argument("-o", "--output", default="-", help="output file, or - for stdout")
        p.add_argument("--binary", action="store_true", help="write the binary container")

    p = sub.add_parser("forward", help="transform a square image")
    io_args(p)
    p.add_argument("--oracle", action="store_true", help="use the O(N^3) per-line oracle")
    p.set_defaults(fn=_cmd_forward)

    p = sub.add_parser("inverse", help="recover the square image of a sinogram")
    io_args(p)
    p.add_argument("--allow-out-of-range", action="store_true")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(fn=_cmd_inverse)

    p = sub.add_parser("backproject", help="back-projection (transpose)")
    io_args(p)
    p.add_argument("--m", type=int, default=None, help="number of levels (default n)")
    p.set_defaults(fn=_cmd_backproject)

    p = sub.add_parser("fulladrt", help="four-quadrant transform")
    io_args(p)
    p.set_defaults(fn=_cmd_fulladrt)

    p = sub.add_parser("validate", help="range membership check")
    p.add_argument("input", help="input file, or - for stdin")
    p.add_argument("--tol", type=float, default=0.0)
    p.add_argument("--json", action="store_true", help="machine-readable residual dump")
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("lines", help="print a digital line as 't k(t)' rows")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--h", type=int, default=0)
    p.add_argument("--s", type=int, default=0)
    p.add_argument("--dual", action="store_true")
    p.add_argument("--closed-form", action="store_true")
    p.set_defaults(fn=_cmd_lines)

    p = sub.add_parser("invdelta", help="inverse image of a sinogram delta")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--window", type=_window_arg, required=True, metavar="LO:HI")
    p.add_argument("--dtype", choices=("i64", "f64"), default="i64")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--binary", action="store_true")
    p.set_defaults(fn=_cmd_invdelta)

    p = sub.add_parser("divergence", help="truncated-inverse defect per cut size")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kmax", type=int, required=True)
    p.add_argument("--h", type=int, default=None)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(fn=_cmd_divergence)

    p = sub.add_parser("bench", help="forward wall times per size, CSV")
    p.add_argument("--sizes", required=True, help="comma separated powers of two")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(fn=_cmd_bench)

    return parser


def _resolve_threads(args) -> int | None:
    threads = args.threads
    if threads is None:
        env = os.environ.get("ADRT_THREADS")
        if env is not None:
            try:
                threads = int(env)
            except ValueError:
                raise ValueError(f"ADRT_THREADS must be an integer, got {env!r}")
    if threads is not None and threads < 1:
        raise ValueError("thread count must be >= 1")
    return threads


def run(argv) -> int:
    """Dispatch one invocation; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _resolve_threads(args)
        return args.fn(args)
    except _UsageError as exc:
        print(f"qradon: {exc}", file=sys.stderr)
        return 1
    except OutOfRangeError as exc:
        print(f"qradon: out of range: {exc}", file=sys.stderr)
        return 2
    except OverflowError as exc:
        print(f"qradon: overflow: {exc}", file=sys.stderr)
        return 3
    except (FormatError, ClipError, ValueError, OSError) as exc:
        print(f"qradon: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))
