import json

import numpy as np
import pytest

from faultfusion.errors import DataError
from faultfusion.schemas import Channel
from faultfusion.signals.base import RawSignal
from faultfusion.signals.csv_io import export_csv, ingest_csv, load_manifest


def test_export_then_ingest_is_exact(tmp_path) -> None:  # noqa: ANN001
    """Every float survives the text round trip bit for bit."""
    samples = np.random.default_rng(0).normal(size=257) * 1e3
    samples[3] = 1 / 3
    path = tmp_path / "signal.csv"

    export_csv(RawSignal(samples, 1000.0, "x"), path)
    loaded = ingest_csv(path, label="x", sample_rate_hz=1000.0)

    np.testing.assert_array_equal(loaded.samples, samples)


def test_ingest_keeps_seventeen_digit_values(tmp_path) -> None:  # noqa: ANN001
    """Values the fast C parser rounds off by one ulp still come back exactly."""
    samples = np.array([0.1 + 0.2, 1 / 3, 2.2250738585072014e-308, -9.87654321012345e-7, 123456.78901234567])
    path = tmp_path / "edge.csv"
    path.write_text("".join(f"{value!r}\n" for value in samples.tolist()))

    loaded = ingest_csv(path, label="x", sample_rate_hz=1000.0)

    assert loaded.samples.tobytes() == samples.tobytes()


def test_header_and_named_column(tmp_path) -> None:  # noqa: ANN001
    """A named column implies a header row."""
    path = tmp_path / "multi.csv"
    path.write_text("time,current\n0.0,1.5\n0.001,-2.25\n")

    signal = ingest_csv(path, label="motor", sample_rate_hz=1000.0, value_column="current")

    np.testing.assert_array_equal(signal.samples, [1.5, -2.25])
    assert signal.channel is Channel.CURRENT


def test_bad_cell_names_the_line(tmp_path) -> None:  # noqa: ANN001
    """A non-numeric cell is reported with its 1-based line number."""
    path = tmp_path / "bad.csv"
    path.write_text("value\n1.0\n2.0\nabc\n")

    with pytest.raises(DataError, match=r"bad.csv:4: expected a finite number, got 'abc'"):
        ingest_csv(path, label="x", sample_rate_hz=10.0, skip_header=True)


def test_missing_and_empty_files(tmp_path) -> None:  # noqa: ANN001
    """Absent and empty files are data errors."""
    with pytest.raises(DataError, match="does not exist"):
        ingest_csv(tmp_path / "nope.csv", label="x", sample_rate_hz=10.0)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DataError, match="empty"):
        ingest_csv(empty, label="x", sample_rate_hz=10.0)


def test_manifest_paths_are_relative_to_the_manifest(tmp_path) -> None:  # noqa: ANN001
    """Entries are resolved next to the manifest file and keep their labels and channels."""
    data = tmp_path / "data"
    data.mkdir()
    export_csv(RawSignal(np.arange(8.0), 100.0, "a"), data / "a.csv")
    manifest = tmp_path / "manifest.json"
    manifest.write_text(
        json.dumps(
            {
                "entries": [
                    {"path": "data/a.csv", "label": "healthy", "sample_rate_hz": 100.0},
                    {"path": "data/a.csv", "label": "worn", "sample_rate_hz": 100.0, "channel": "vibration"},
                ]
            }
        )
    )

    signals = load_manifest(manifest)

    assert [s.label for s in signals] == ["healthy", "worn"]
    assert signals[1].channel is Channel.VIBRATION


def test_invalid_manifest(tmp_path) -> None:  # noqa: ANN001
    """Unknown keys and missing files are data errors."""
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"entries": [{"path": "a.csv", "label": "x", "sample_rate_hz": 1, "rate": 2}]}))
    with pytest.raises(DataError, match="invalid"):
        load_manifest(manifest)
    with pytest.raises(DataError, match="does not exist"):
        load_manifest(tmp_path / "missing.json")
