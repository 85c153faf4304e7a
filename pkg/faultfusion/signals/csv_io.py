"""Single-column CSV recordings and the JSON manifests that list them."""

import logging
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from faultfusion.errors import DataError
from faultfusion.schemas import Channel, DatasetManifest
from faultfusion.signals.base import RawSignal

logger = logging.getLogger("faultfusion")


def ingest_csv(  # noqa: PLR0913
    path: Path | str,
    *,
    label: str,
    sample_rate_hz: float,
    value_column: int | str = 0,
    skip_header: bool = False,
    channel: Channel = Channel.CURRENT,
) -> RawSignal:
    """
    Read one numeric column of a CSV file as a :class:`RawSignal`.

    A named ``value_column`` implies a header row. A cell that does not parse
    as a finite number raises :class:`DataError` naming its line.
    """
    path = Path(path)
    if not path.is_file():
        msg = f"Signal file {path} does not exist"
        raise DataError(msg)
    has_header = skip_header or isinstance(value_column, str)
    try:
        frame = pd.read_csv(path, header=0 if has_header else None, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        msg = f"Signal file {path} is empty"
        raise DataError(msg) from None
    except pd.errors.ParserError as exc:
        msg = f"Signal file {path} is not valid CSV: {exc}"
        raise DataError(msg) from exc
    if frame.empty:
        msg = f"Signal file {path} has no data rows"
        raise DataError(msg)

    try:
        column = frame[value_column] if isinstance(value_column, str) else frame.iloc[:, value_column]
    except (KeyError, IndexError):
        msg = f"Signal file {path} has no column {value_column!r}"
        raise DataError(msg) from None

    cells = column.str.strip()
    parsed = pd.to_numeric(cells, errors="coerce").to_numpy(dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(parsed))
    if bad.size:
        row = int(bad[0])
        line = row + 1 + int(has_header)
        msg = f"{path}:{line}: expected a finite number, got {cells.iloc[row]!r}"
        raise DataError(msg)
    # Python's float() is the exact round-trip parser; to_numeric above only locates bad rows.
    samples = cells.astype(np.float64).to_numpy()
    logger.debug("Ingested %d samples from %s", samples.size, path)
    return RawSignal(samples, sample_rate_hz, label, channel)


def export_csv(signal: RawSignal, path: Path | str, *, header: bool = False) -> None:
    """Write the samples as a single ``value`` column that :func:`ingest_csv` reads back exactly."""
    frame = pd.DataFrame({"value": signal.samples})
    frame.to_csv(path, index=False, header=header, float_format="%.17g")


def load_manifest(path: Path | str) -> list[RawSignal]:
    """Ingest every recording listed in a dataset manifest JSON file."""
    path = Path(path)
    try:
        manifest = DatasetManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        msg = f"Manifest {path} does not exist"
        raise DataError(msg) from None
    except ValidationError as exc:
        msg = f"Manifest {path} is invalid: {exc}"
        raise DataError(msg) from exc

    return [
        ingest_csv(
            path.parent / entry.path,
            label=entry.label,
            sample_rate_hz=entry.sample_rate_hz,
            value_column=entry.value_column,
            skip_header=entry.skip_header,
            channel=entry.channel,
        )
        for entry in manifest.entries
    ]
