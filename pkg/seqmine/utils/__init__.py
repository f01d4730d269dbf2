from .file import ArtifactStage, atomic_write_bytes, atomic_write_text, get_latest_checkpoint
from .logger import setup_logging, worker_logger
from .rich_utils import print_config_tree, print_report
from .utils import task_wrapper

__all__ = [
    "ArtifactStage",
    "atomic_write_bytes",
    "atomic_write_text",
    "get_latest_checkpoint",
    "setup_logging",
    "worker_logger",
    "print_config_tree",
    "print_report",
    "task_wrapper",
]
