import os
import shutil
import tempfile
from pathlib import Path

from loguru import logger
from natsort import natsorted

CHECKPOINT_EXTENSION = ".ckpt"


def atomic_write_bytes(path: Path | str, payload: bytes) -> Path:
    """Write to a temporary sibling, then rename over the target."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise

    return path


def atomic_write_text(path: Path | str, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def get_latest_checkpoint(path: Path | str) -> Path | None:
    # Checkpoints are named epoch_0001.ckpt, epoch_0002.ckpt, ...
    ckpt_dir = Path(path)

    if ckpt_dir.exists() is False:
        return None

    ckpts = natsorted(ckpt_dir.glob(f"*{CHECKPOINT_EXTENSION}"))
    if len(ckpts) == 0:
        return None

    return ckpts[-1]


class ArtifactStage:
    """Collects a command's outputs in a staging directory and publishes them together.

    Files are moved into `out` only when the block exits cleanly; on error the
    staging directory is removed and `out` is left untouched.

    ```
    with ArtifactStage(out) as stage:
        write_history(stage.path("history.csv"))
    ```
    """

    def __init__(self, out: Path | str):
        self.out = Path(out)
        self.staging: Path | None = None

    def __enter__(self) -> "ArtifactStage":
        parent = self.out.parent
        parent.mkdir(parents=True, exist_ok=True)
        self.staging = Path(tempfile.mkdtemp(prefix=f".{self.out.name}.", dir=parent))
        return self

    def path(self, name: str) -> Path:
        target = self.staging / name
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def __exit__(self, exc_type, exc, tb) -> None:
        try:
            if exc_type is not None:
                logger.warning(f"Discarding partial outputs for {self.out}")
                return

            self.out.mkdir(parents=True, exist_ok=True)
            for item in sorted(self.staging.rglob("*")):
                if item.is_file():
                    target = self.out / item.relative_to(self.staging)
                    target.parent.mkdir(parents=True, exist_ok=True)
                    os.replace(item, target)
                    logger.info(f"Wrote {target}")
        finally:
            shutil.rmtree(self.staging, ignore_errors=True)
