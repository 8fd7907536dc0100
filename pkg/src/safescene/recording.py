"""The session file: schema, streaming writer, loader, and validator.

Layout of a session file (one document, two top-level keys):

    meta:
      version: 1
      rate_hz: 20.0
      created_unix: 1723180800.0
      sample_count:            0     # patched in place by finalize()
      camera: {...}
      extrinsic: {...}
      zone: {...}
      table: {...}
      monitor: {...}
      chain: {...}
    samples:
    - {t: 0.0, joints_rad: [...], wrist_px: [u, v], wrist_depth_m: d, wrist_conf: c, safety_flag: false}
    - ...

The samples are a block sequence of single-line flow maps so the file can
be appended frame by frame, inspected with a pager, and truncated files
stay diagnosable. Floats are written with repr(), which round-trips
bit-exactly. The sample_count field is written as a fixed-width padded
integer at open time and patched by seek at finalize, so appends never
rewrite earlier bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
import yaml

from . import serialization as ser
from .errors import (
    IoFailure,
    NonMonotonicTimestamp,
    ParseError,
    SchemaError,
    ValidationError,
)
from .geometry import CameraIntrinsics, RigidTransform, TablePlane
from .kinematics import KinematicChain, limit_violations
from .monitor import MonitorConfig, SafetyZone

SESSION_VERSION = 1
_COUNT_FIELD_WIDTH = 12
_SAMPLE_KEYS = ("t", "joints_rad", "wrist_px", "wrist_depth_m", "wrist_conf", "safety_flag")
_META_KEYS = (
    "version", "rate_hz", "created_unix", "sample_count",
    "camera", "extrinsic", "zone", "table", "monitor", "chain",
)

try:
    _LOADER = yaml.CSafeLoader
except AttributeError:  # pragma: no cover - libyaml is present on our targets
    _LOADER = yaml.SafeLoader


@dataclass(frozen=True)
class SessionMeta:
    """Everything needed to reinterpret the samples: calibration, zone, chain."""

    rate_hz: float
    created_unix: float
    camera: CameraIntrinsics
    extrinsic: RigidTransform
    zone: SafetyZone
    table: TablePlane
    monitor: MonitorConfig
    chain: KinematicChain
    version: int = SESSION_VERSION

    def __post_init__(self) -> None:
        if self.version != SESSION_VERSION:
            raise ValueError(f"unsupported session version {self.version}")
        if not (math.isfinite(self.rate_hz) and self.rate_hz > 0):
            raise ValueError(f"rate_hz must be > 0, got {self.rate_hz!r}")
        if not math.isfinite(self.created_unix):
            raise ValueError("created_unix must be finite")


@dataclass(frozen=True)
class FrameSample:
    """One 20 Hz tick as stored on disk."""

    t: float
    joints_rad: tuple[float, ...]
    wrist_px: tuple[float, float] | None
    wrist_depth_m: float | None
    wrist_conf: float
    safety_flag: bool

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t) and self.t >= 0):
            raise ValueError(f"t must be finite and >= 0, got {self.t!r}")
        joints = tuple(float(a) for a in self.joints_rad)
        if not all(math.isfinite(a) for a in joints):
            raise ValueError("joint angles must be finite")
        object.__setattr__(self, "joints_rad", joints)
        if self.wrist_px is None:
            if self.wrist_depth_m is not None:
                raise ValueError("wrist_depth_m must be null when wrist_px is null")
        else:
            px = (float(self.wrist_px[0]), float(self.wrist_px[1]))
            if not all(math.isfinite(v) for v in px):
                raise ValueError("wrist_px must be finite")
            object.__setattr__(self, "wrist_px", px)
            if self.wrist_depth_m is not None and not math.isfinite(self.wrist_depth_m):
                raise ValueError("wrist_depth_m must be finite")
        if not (0.0 <= self.wrist_conf <= 1.0):
            raise ValueError(f"wrist_conf must be in [0, 1], got {self.wrist_conf!r}")


@dataclass(frozen=True)
class SessionRecording:
    meta: SessionMeta
    samples: tuple[FrameSample, ...]

    def __post_init__(self) -> None:
        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        dof = self.meta.chain.dof
        prev = None
        for i, s in enumerate(samples):
            if i == 0 and s.t != 0.0:
                raise ValueError(f"sample 0: first timestamp must be 0.0, got {s.t!r}")
            if prev is not None and s.t <= prev:
                raise ValueError(f"sample {i}: timestamp {s.t!r} not after {prev!r}")
            if len(s.joints_rad) != dof:
                raise ValueError(f"sample {i}: {len(s.joints_rad)} joints for a {dof}-joint chain")
            prev = s.t

    @property
    def duration_s(self) -> float:
        """Nominal content length: last timestamp plus one frame period."""
        if not self.samples:
            return 0.0
        return self.samples[-1].t + 1.0 / self.meta.rate_hz


# ---------------------------------------------------------------------------
# writing


def _fmt_float(x: float) -> str:
    # repr round-trips bit-exactly, but YAML 1.1 only resolves scientific
    # notation as a float when the mantissa carries a dot (1e-17 parses as
    # a string, 1.0e-17 as a float)
    s = repr(float(x))
    if "e" in s and "." not in s:
        mantissa, exp = s.split("e", 1)
        s = f"{mantissa}.0e{exp}"
    return s


def _fmt_opt_float(x: float | None) -> str:
    return "null" if x is None else _fmt_float(x)


def sample_line(s: FrameSample) -> str:
    """The single-line flow-map form of one sample."""
    joints = "[" + ", ".join(_fmt_float(a) for a in s.joints_rad) + "]"
    px = "null" if s.wrist_px is None else f"[{_fmt_float(s.wrist_px[0])}, {_fmt_float(s.wrist_px[1])}]"
    flag = "true" if s.safety_flag else "false"
    return (
        f"- {{t: {_fmt_float(s.t)}, joints_rad: {joints}, wrist_px: {px}, "
        f"wrist_depth_m: {_fmt_opt_float(s.wrist_depth_m)}, "
        f"wrist_conf: {_fmt_float(s.wrist_conf)}, safety_flag: {flag}}}\n"
    )


def _meta_header(meta: SessionMeta) -> tuple[bytes, int]:
    """Serialized meta block + 'samples:'; returns (bytes, count-field offset)."""
    head = (
        "meta:\n"
        f"  version: {meta.version}\n"
        f"  rate_hz: {_fmt_float(meta.rate_hz)}\n"
        f"  created_unix: {_fmt_float(meta.created_unix)}\n"
    )
    count_prefix = "  sample_count: "
    count_offset = len(head.encode("utf-8")) + len(count_prefix)
    head += count_prefix + format(0, f">{_COUNT_FIELD_WIDTH}d") + "\n"
    nested = {
        "camera": ser.camera_to_dict(meta.camera),
        "extrinsic": ser.transform_to_dict(meta.extrinsic),
        "zone": ser.zone_to_dict(meta.zone),
        "table": ser.table_to_dict(meta.table),
        "monitor": ser.monitor_to_dict(meta.monitor),
        "chain": ser.chain_to_dict(meta.chain),
    }
    dumped = yaml.safe_dump(nested, sort_keys=False, default_flow_style=False)
    head += "".join("  " + line + "\n" for line in dumped.splitlines())
    head += "samples:\n"
    return head.encode("utf-8"), count_offset


class SessionWriter:
    """Single-owner streaming writer; every append lands on disk in order."""

    def __init__(self, path: str | Path, meta: SessionMeta) -> None:
        self.path = Path(path)
        self.meta = meta
        self._count = 0
        self._last_t: float | None = None
        self._finalized = False
        header, self._count_offset = _meta_header(meta)
        try:
            self._f = open(self.path, "wb")
            self._f.write(header)
            self._f.flush()
        except OSError as e:
            raise IoFailure(f"cannot open {self.path} for writing: {e}") from e

    @property
    def sample_count(self) -> int:
        return self._count

    def append(self, sample: FrameSample) -> None:
        if self._finalized:
            raise IoFailure(f"writer for {self.path} is finalized")
        if len(sample.joints_rad) != self.meta.chain.dof:
            raise ValidationError(
                f"sample {self._count}: {len(sample.joints_rad)} joints for a "
                f"{self.meta.chain.dof}-joint chain"
            )
        if self._last_t is None:
            if sample.t != 0.0:
                raise ValidationError(f"first sample must have t=0.0, got {sample.t!r}")
        elif sample.t <= self._last_t:
            raise NonMonotonicTimestamp(f"append t={sample.t!r} after t={self._last_t!r}")
        try:
            self._f.write(sample_line(sample).encode("utf-8"))
            self._f.flush()
        except OSError as e:
            raise IoFailure(f"write to {self.path} failed: {e}") from e
        self._last_t = sample.t
        self._count += 1

    def finalize(self) -> Path:
        """Patch the sample count into the header and close the file."""
        if self._finalized:
            return self.path
        try:
            self._f.seek(self._count_offset)
            self._f.write(format(self._count, f">{_COUNT_FIELD_WIDTH}d").encode("utf-8"))
            self._f.flush()
            self._f.close()
        except OSError as e:
            raise IoFailure(f"finalize of {self.path} failed: {e}") from e
        self._finalized = True
        return self.path

    def abort(self) -> None:
        """Close without finalizing; the file keeps its placeholder count."""
        if not self._finalized:
            self._f.close()
            self._finalized = True


def open_writer(path: str | Path, meta: SessionMeta) -> SessionWriter:
    return SessionWriter(path, meta)


def write(rec: SessionRecording, path: str | Path) -> Path:
    """Whole-file write; byte-identical to streaming the same samples."""
    w = SessionWriter(path, rec.meta)
    for s in rec.samples:
        w.append(s)
    return w.finalize()


# ---------------------------------------------------------------------------
# loading


def _meta_from_dict(v, path: str) -> tuple[SessionMeta, int]:
    d = ser.require_mapping(v, path)
    ser.no_extras(d, _META_KEYS, path)
    version = ser.as_int(ser.take(d, "version", path), f"{path}.version")
    if version != SESSION_VERSION:
        raise SchemaError(f"{path}.version: unsupported version {version}")
    count = ser.as_int(ser.take(d, "sample_count", path), f"{path}.sample_count")
    def build() -> SessionMeta:
        return SessionMeta(
            rate_hz=ser.as_float(ser.take(d, "rate_hz", path), f"{path}.rate_hz"),
            created_unix=ser.as_float(ser.take(d, "created_unix", path), f"{path}.created_unix"),
            camera=ser.camera_from_dict(ser.take(d, "camera", path), f"{path}.camera"),
            extrinsic=ser.transform_from_dict(ser.take(d, "extrinsic", path), f"{path}.extrinsic"),
            zone=ser.zone_from_dict(ser.take(d, "zone", path), f"{path}.zone"),
            table=ser.table_from_dict(ser.take(d, "table", path), f"{path}.table"),
            monitor=ser.monitor_from_dict(ser.take(d, "monitor", path), f"{path}.monitor"),
            chain=ser.chain_from_dict(ser.take(d, "chain", path), f"{path}.chain"),
        )
    try:
        return build(), count
    except ValueError as e:
        raise ValidationError(f"{path}: {e}") from e


def _sample_from_dict(v, index: int) -> FrameSample:
    path = f"samples[{index}]"
    d = ser.require_mapping(v, path)
    ser.no_extras(d, _SAMPLE_KEYS, path)
    raw_px = ser.take(d, "wrist_px", path)
    if raw_px is None:
        px = None
    else:
        vals = ser.as_float_list(raw_px, 2, f"{path}.wrist_px")
        px = (vals[0], vals[1])
    raw_depth = ser.take(d, "wrist_depth_m", path)
    depth = None if raw_depth is None else ser.as_float(raw_depth, f"{path}.wrist_depth_m")
    raw_joints = ser.take(d, "joints_rad", path)
    if not isinstance(raw_joints, list):
        raise SchemaError(f"{path}.joints_rad: expected a list")
    joints = tuple(ser.as_float(a, f"{path}.joints_rad[{i}]") for i, a in enumerate(raw_joints))
    try:
        return FrameSample(
            t=ser.as_float(ser.take(d, "t", path), f"{path}.t"),
            joints_rad=joints,
            wrist_px=px,
            wrist_depth_m=depth,
            wrist_conf=ser.as_float(ser.take(d, "wrist_conf", path), f"{path}.wrist_conf"),
            safety_flag=ser.as_bool(ser.take(d, "safety_flag", path), f"{path}.safety_flag"),
        )
    except ValueError as e:
        raise ValidationError(f"{path}: {e}") from e


def load(path: str | Path) -> SessionRecording:
    """Parse and fully validate a session file.

    Every failure is a typed RecordingError: ParseError for non-YAML input,
    SchemaError for shape problems, ValidationError for invariant breaches
    (named by sample index), IoFailure for OS-level trouble.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    return loads(raw, source=str(path))


def loads(raw: bytes | str, source: str = "<bytes>") -> SessionRecording:
    """load() for in-memory bytes; same guarantees."""
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"{source}: not valid UTF-8: {e}") from e
    else:
        text = raw
    try:
        data = yaml.load(text, Loader=_LOADER)
    except yaml.YAMLError as e:
        raise ParseError(f"{source}: malformed YAML: {e}") from e
    except RecursionError as e:
        raise ParseError(f"{source}: YAML nesting too deep") from e
    except Exception as e:  # arbitrary bytes must never escape as untyped
        raise ParseError(f"{source}: unparseable input ({type(e).__name__}: {e})") from e

    top = ser.require_mapping(data, source)
    ser.no_extras(top, ["meta", "samples"], source)
    meta, declared_count = _meta_from_dict(ser.take(top, "meta", source), "meta")
    raw_samples = ser.take(top, "samples", source)
    if raw_samples is None:
        raw_samples = []
    if not isinstance(raw_samples, list):
        raise SchemaError(f"{source}: samples must be a sequence")
    samples = tuple(_sample_from_dict(s, i) for i, s in enumerate(raw_samples))
    if declared_count != len(samples):
        raise ValidationError(
            f"{source}: sample_count says {declared_count} but file holds {len(samples)} "
            "(unfinalized or truncated recording?)"
        )
    try:
        return SessionRecording(meta=meta, samples=samples)
    except ValueError as e:
        raise ValidationError(f"{source}: {e}") from e


# ---------------------------------------------------------------------------
# validation report


@dataclass(frozen=True)
class ReportEntry:
    code: str
    message: str
    sample_index: int | None = None


@dataclass
class ValidationReport:
    errors: list[ReportEntry] = field(default_factory=list)
    warnings: list[ReportEntry] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors and not self.warnings

    def lines(self) -> list[str]:
        out = [f"error[{e.code}] {e.message}" for e in self.errors]
        out += [f"warning[{w.code}] {w.message}" for w in self.warnings]
        return out


def validate(rec: SessionRecording) -> ValidationReport:
    """Invariant re-check plus soft diagnostics (rate jitter, joint limits)."""
    report = ValidationReport()
    dof = rec.meta.chain.dof
    period = 1.0 / rec.meta.rate_hz
    prev_t = None
    for i, s in enumerate(rec.samples):
        if i == 0 and s.t != 0.0:
            report.errors.append(ReportEntry("first_t", f"sample 0 starts at t={s.t!r}, expected 0.0", 0))
        if prev_t is not None:
            gap = s.t - prev_t
            if gap <= 0:
                report.errors.append(
                    ReportEntry("non_monotonic", f"sample {i} at t={s.t!r} not after t={prev_t!r}", i)
                )
            elif abs(gap - period) > 0.5 * period:
                report.warnings.append(
                    ReportEntry(
                        "rate_jitter",
                        f"sample {i} at t={s.t!r}: gap {gap:.6f}s deviates >50% from {period:.6f}s",
                        i,
                    )
                )
        if len(s.joints_rad) != dof:
            report.errors.append(
                ReportEntry("joint_count", f"sample {i} has {len(s.joints_rad)} joints, chain has {dof}", i)
            )
        else:
            for name, angle, lo, hi in limit_violations(rec.meta.chain, s.joints_rad):
                report.warnings.append(
                    ReportEntry(
                        "joint_limits",
                        f"sample {i} at t={s.t!r}: joint {name} angle {angle:.6f} outside [{lo:.6f}, {hi:.6f}]",
                        i,
                    )
                )
        if s.wrist_px is None and s.wrist_depth_m is not None:
            report.errors.append(ReportEntry("px_depth", f"sample {i} has depth without a pixel", i))
        prev_t = s.t
    return report


def session_filename(created_unix: float) -> str:
    return f"session-{int(created_unix)}.yaml"
