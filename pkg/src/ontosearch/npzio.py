"""Deterministic ``.npz`` writing.

``np.savez`` stamps zip entries with the current time, so two identical
saves differ at the byte level.  Rerunning a command with the same inputs
must produce identical artifacts, so entries are written with a fixed
timestamp and in sorted name order.  Files load with plain ``np.load``.
"""

from __future__ import annotations

import io
import zipfile
from pathlib import Path

import numpy as np

_EPOCH = (1980, 1, 1, 0, 0, 0)  # earliest timestamp zip can represent


def save_arrays(path: str | Path, **arrays) -> None:
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(
                buf, np.asarray(arrays[name]), allow_pickle=False
            )
            info = zipfile.ZipInfo(name + ".npy", date_time=_EPOCH)
            zf.writestr(info, buf.getvalue())
