from typing import TYPE_CHECKING, Sequence

import rich
import rich.syntax
import rich.table
import rich.tree
from omegaconf import OmegaConf

if TYPE_CHECKING:
    from seqmine.metrics import EvalReport
    from seqmine.utils.schema import RunSpec


def print_config_tree(
    spec: "RunSpec",
    print_order: Sequence[str] = ("data", "synth", "model", "train", "sweep"),
) -> None:
    """Prints the resolved run spec as a Rich tree, one branch per section."""

    style = "dim"
    tree = rich.tree.Tree("CONFIG", style=style, guide_style=style)
    cfg = spec.model_dump(mode="json")

    queue = [field for field in print_order if field in cfg]
    queue += [field for field in cfg if field not in queue]

    for field in queue:
        branch = tree.add(field, style=style, guide_style=style)
        group = cfg[field]
        if isinstance(group, dict):
            content = OmegaConf.to_yaml(OmegaConf.create(group))
        else:
            content = str(group)
        branch.add(rich.syntax.Syntax(content, "yaml"))

    rich.print(tree)


def print_report(title: str, rows: Sequence[tuple[str, "EvalReport"]]) -> None:
    """Summary table with one row per model or grid point."""

    table = rich.table.Table(title=title)
    table.add_column("Model")
    for column in ("Acc", "Precision", "Recall"):
        table.add_column(column, justify="right")

    for name, report in rows:
        table.add_row(
            name,
            f"{100 * report.accuracy:.2f}",
            f"{100 * report.precision:.2f}",
            f"{100 * report.recall:.2f}",
        )

    rich.print(table)
