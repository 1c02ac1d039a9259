"""Read and write the wearable CSV export formats and session manifests.

File contracts (UTF-8, LF line endings):

* uniform channel CSV: line 1 = UTC start timestamp (seconds), line 2 =
  sampling rate, then one value per line. The ACC file carries three
  comma-separated columns per row (X, Y, Z). Header lines may repeat the
  value across columns (vendor exports do); all copies must agree.
* IBI CSV: line 1 = UTC start timestamp (an optional ", IBI" suffix is
  tolerated), then ``offset_seconds,interval_seconds`` rows with strictly
  increasing offsets.
* annotation CSV: header ``start_s,end_s,behavior``; times are seconds from
  session start. Overlapping episodes are merged on read.
* manifest: YAML with participant_id, session_id, session_start_epoch and
  relative paths to the four signal files plus the annotation file.

Session start is the minimum of the channel-file start timestamps; channels
that begin later get a positive start offset.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import IngestError
from .timeline import (
    UNIFORM_RATES,
    AggressionEpisode,
    Session,
    SignalChannel,
    merge_episodes,
)

_SIGNAL_KEYS = ("bvp", "eda", "acc", "ibi")


@dataclass(frozen=True)
class SessionManifest:
    """Locations of one session's files plus identity metadata."""

    participant_id: str
    session_id: str
    session_start_epoch: float
    bvp: Path
    eda: Path
    acc: Path
    ibi: Path
    annotations: Path

    def signal_paths(self) -> dict[str, Path]:
        return {"bvp": self.bvp, "eda": self.eda, "acc": self.acc, "ibi": self.ibi}


def _read_lines(path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read file: {exc}", path=str(path)) from exc
    lines = text.split("\n")
    while lines and lines[-1].strip() == "":
        lines.pop()
    return lines


def _parse_header_value(line: str, path, lineno: int, what: str) -> float:
    fields = [f.strip() for f in line.split(",") if f.strip() != ""]
    if not fields:
        raise IngestError(f"missing {what}", path=str(path), line=lineno)
    try:
        values = [float(f) for f in fields]
    except ValueError:
        # tolerate a trailing literal tag such as "IBI" on vendor headers
        try:
            values = [float(fields[0])]
        except ValueError:
            raise IngestError(f"non-numeric {what}: {line!r}", path=str(path),
                              line=lineno) from None
    if any(v != values[0] for v in values):
        raise IngestError(f"{what} columns disagree: {line!r}", path=str(path), line=lineno)
    return values[0]


def read_uniform_channel(path, name: str, expected_rate: float,
                         session_start_epoch: float | None = None) -> SignalChannel:
    """Parse a single-column uniform channel file."""
    lines = _read_lines(path)
    if len(lines) < 2:
        raise IngestError("file needs a start-timestamp line and a rate line",
                          path=str(path), line=1)
    start = _parse_header_value(lines[0], path, 1, "start timestamp")
    rate = _parse_header_value(lines[1], path, 2, "sampling rate")
    if rate != expected_rate:
        raise IngestError(f"rate mismatch: file declares {rate:g} Hz, expected "
                          f"{expected_rate:g} Hz", path=str(path), line=2)
    values = []
    for i, line in enumerate(lines[2:], start=3):
        if line.strip() == "":
            raise IngestError("blank line inside data body", path=str(path), line=i)
        try:
            values.append(float(line))
        except ValueError:
            raise IngestError(f"non-numeric sample: {line!r}", path=str(path),
                              line=i) from None
    offset = 0.0 if session_start_epoch is None else start - session_start_epoch
    if offset < 0:
        raise IngestError(f"channel starts {-offset:g} s before the session start",
                          path=str(path), line=1)
    return SignalChannel.uniform(name, expected_rate, values, start_offset=offset)


def read_acc_channels(path, expected_rate: float = 32.0,
                      session_start_epoch: float | None = None
                      ) -> tuple[SignalChannel, SignalChannel, SignalChannel]:
    """Parse the three-column accelerometer file into the three axis channels."""
    lines = _read_lines(path)
    if len(lines) < 2:
        raise IngestError("file needs a start-timestamp line and a rate line",
                          path=str(path), line=1)
    start = _parse_header_value(lines[0], path, 1, "start timestamp")
    rate = _parse_header_value(lines[1], path, 2, "sampling rate")
    if rate != expected_rate:
        raise IngestError(f"rate mismatch: file declares {rate:g} Hz, expected "
                          f"{expected_rate:g} Hz", path=str(path), line=2)
    columns: tuple[list, list, list] = ([], [], [])
    for i, line in enumerate(lines[2:], start=3):
        parts = line.split(",")
        if len(parts) != 3:
            raise IngestError(f"expected 3 comma-separated columns: {line!r}",
                              path=str(path), line=i)
        try:
            sample = [float(p) for p in parts]
        except ValueError:
            raise IngestError(f"non-numeric sample: {line!r}", path=str(path),
                              line=i) from None
        for col, v in zip(columns, sample):
            col.append(v)
    offset = 0.0 if session_start_epoch is None else start - session_start_epoch
    if offset < 0:
        raise IngestError(f"channel starts {-offset:g} s before the session start",
                          path=str(path), line=1)
    return tuple(
        SignalChannel.uniform(f"ACC_{tag}", expected_rate, col, start_offset=offset)
        for tag, col in zip(("X", "Y", "Z"), columns)
    )


def read_ibi_channel(path, session_start_epoch: float | None = None) -> SignalChannel:
    """Parse the event-based inter-beat-interval file."""
    lines = _read_lines(path)
    if not lines:
        raise IngestError("file needs a start-timestamp line", path=str(path), line=1)
    start = _parse_header_value(lines[0], path, 1, "start timestamp")
    times, values = [], []
    prev = None
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise IngestError(f"expected 'offset,interval': {line!r}", path=str(path), line=i)
        try:
            offset_s, interval = float(parts[0]), float(parts[1])
        except ValueError:
            raise IngestError(f"non-numeric row: {line!r}", path=str(path), line=i) from None
        if prev is not None and offset_s <= prev:
            raise IngestError(f"event offsets must be strictly increasing "
                              f"({offset_s:g} after {prev:g})", path=str(path), line=i)
        prev = offset_s
        times.append(offset_s)
        values.append(interval)
    channel_offset = 0.0 if session_start_epoch is None else start - session_start_epoch
    if channel_offset < 0:
        raise IngestError(f"channel starts {-channel_offset:g} s before the session start",
                          path=str(path), line=1)
    return SignalChannel.events("IBI", times, values, start_offset=channel_offset)


ANNOTATION_HEADER = "start_s,end_s,behavior"


def read_annotations(path) -> tuple[AggressionEpisode, ...]:
    """Parse the episode coding file: sorted, merged, validated intervals."""
    lines = _read_lines(path)
    if not lines or lines[0].strip() != ANNOTATION_HEADER:
        raise IngestError(f"annotation header must be {ANNOTATION_HEADER!r}",
                          path=str(path), line=1)
    episodes = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise IngestError(f"expected 'start,end,behavior': {line!r}",
                              path=str(path), line=i)
        try:
            start_s, end_s = float(parts[0]), float(parts[1])
        except ValueError:
            raise IngestError(f"non-numeric interval: {line!r}", path=str(path),
                              line=i) from None
        if not start_s < end_s:
            raise IngestError(f"invalid interval ({start_s:g}, {end_s:g})",
                              path=str(path), line=i)
        if start_s < 0:
            raise IngestError(f"negative start {start_s:g}", path=str(path), line=i)
        episodes.append(AggressionEpisode(start_s, end_s))
    return merge_episodes(episodes)


def read_manifest(path) -> SessionManifest:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IngestError(f"cannot read manifest: {exc}", path=str(path)) from exc
    except yaml.YAMLError as exc:
        raise IngestError(f"malformed manifest: {exc}", path=str(path)) from exc
    if not isinstance(doc, dict) or "files" not in doc:
        raise IngestError("manifest must be a mapping with a 'files' section",
                          path=str(path))
    files = doc["files"]
    missing_keys = [k for k in (*_SIGNAL_KEYS, "annotations") if k not in files]
    if missing_keys:
        raise IngestError(f"manifest lacks file entries: {missing_keys}", path=str(path))
    resolved = {k: (path.parent / files[k]).resolve() for k in
                (*_SIGNAL_KEYS, "annotations")}
    absent = [str(p) for p in resolved.values() if not p.is_file()]
    if absent:
        raise IngestError(f"referenced files do not exist: {absent}", path=str(path))
    try:
        return SessionManifest(
            participant_id=str(doc["participant_id"]),
            session_id=str(doc["session_id"]),
            session_start_epoch=float(doc["session_start_epoch"]),
            **resolved,
        )
    except KeyError as exc:
        raise IngestError(f"manifest lacks required key {exc}", path=str(path)) from None


def load_session(manifest: SessionManifest | str | Path) -> Session:
    """Assemble a validated Session from a manifest (object or path)."""
    if not isinstance(manifest, SessionManifest):
        manifest = read_manifest(manifest)
    starts = {}
    for key, p in manifest.signal_paths().items():
        lines = _read_lines(p)
        if not lines:
            raise IngestError("empty channel file", path=str(p), line=1)
        starts[key] = _parse_header_value(lines[0], p, 1, "start timestamp")
    session_start = min(starts.values())
    if manifest.session_start_epoch > session_start:
        raise IngestError(
            f"manifest start epoch {manifest.session_start_epoch:g} is after the "
            f"earliest channel start {session_start:g}", path=str(manifest.bvp))

    bvp = read_uniform_channel(manifest.bvp, "BVP", UNIFORM_RATES["BVP"], session_start)
    eda = read_uniform_channel(manifest.eda, "EDA", UNIFORM_RATES["EDA"], session_start)
    acc_x, acc_y, acc_z = read_acc_channels(manifest.acc, UNIFORM_RATES["ACC_X"], session_start)
    ibi = read_ibi_channel(manifest.ibi, session_start)
    channels = {"BVP": bvp, "IBI": ibi, "EDA": eda,
                "ACC_X": acc_x, "ACC_Y": acc_y, "ACC_Z": acc_z}
    duration = max(ch.extent for ch in channels.values())
    episodes = read_annotations(manifest.annotations)
    for ep in episodes:
        if ep.end > duration:
            raise IngestError(
                f"episode ({ep.start:g}, {ep.end:g}) exceeds the channel extent "
                f"{duration:g}", path=str(manifest.annotations))
    return Session(
        participant_id=manifest.participant_id,
        session_id=manifest.session_id,
        duration=duration,
        channels=channels,
        episodes=episodes,
    )


# -- writers (round-trip counterparts) --------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_session(session: Session, directory, start_epoch: float = 1_600_000_000.0) -> Path:
    """Write one session in the export formats; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    def header(channel, rate=None):
        out = [_fmt(start_epoch + channel.start_offset)]
        if rate is not None:
            out.append(_fmt(rate))
        return out

    bvp = session.channel("BVP")
    (directory / "bvp.csv").write_text(
        "\n".join(header(bvp, bvp.sample_rate) + [_fmt(v) for v in bvp.samples]) + "\n",
        encoding="utf-8")
    eda = session.channel("EDA")
    (directory / "eda.csv").write_text(
        "\n".join(header(eda, eda.sample_rate) + [_fmt(v) for v in eda.samples]) + "\n",
        encoding="utf-8")
    ax, ay, az = (session.channel(f"ACC_{t}") for t in ("X", "Y", "Z"))
    rows = [f"{_fmt(x)},{_fmt(y)},{_fmt(z)}" for x, y, z in
            zip(ax.samples, ay.samples, az.samples)]
    (directory / "acc.csv").write_text(
        "\n".join(header(ax, ax.sample_rate) + rows) + "\n", encoding="utf-8")
    ibi = session.channel("IBI")
    ibi_rows = [f"{_fmt(t)},{_fmt(v)}" for t, v in zip(ibi.event_times, ibi.samples)]
    (directory / "ibi.csv").write_text(
        "\n".join(header(ibi) + ibi_rows) + "\n", encoding="utf-8")
    ann_rows = [f"{_fmt(ep.start)},{_fmt(ep.end)},aggression" for ep in session.episodes]
    (directory / "annotations.csv").write_text(
        "\n".join([ANNOTATION_HEADER] + ann_rows) + "\n", encoding="utf-8")

    manifest = {
        "participant_id": session.participant_id,
        "session_id": session.session_id,
        "session_start_epoch": float(start_epoch),
        "files": {"bvp": "bvp.csv", "eda": "eda.csv", "acc": "acc.csv",
                  "ibi": "ibi.csv", "annotations": "annotations.csv"},
    }
    manifest_path = directory / "manifest.yaml"
    manifest_path.write_text(yaml.safe_dump(manifest, sort_keys=True), encoding="utf-8")
    return manifest_path


def write_population(sessions, directory, start_epoch: float = 1_600_000_000.0) -> list[Path]:
    """Write each session under ``directory/<participant>/<session>/``."""
    return [
        write_session(s, Path(directory) / s.participant_id / s.session_id, start_epoch)
        for s in sessions
    ]


def discover_manifests(root) -> list[Path]:
    """All manifest.yaml files below ``root``, in sorted order."""
    return sorted(Path(root).rglob("manifest.yaml"))


def load_sessions(paths_or_root) -> list[Session]:
    """Load sessions from manifest paths or from a directory tree."""
    if isinstance(paths_or_root, (str, Path)) and Path(paths_or_root).is_dir():
        paths = discover_manifests(paths_or_root)
        if not paths:
            raise IngestError(f"no manifest.yaml found under {paths_or_root}")
    else:
        paths = [Path(p) for p in paths_or_root]
    return [load_session(p) for p in paths]
