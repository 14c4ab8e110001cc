import dataclasses

import matplotlib.pyplot as plt
import pandas as pd
import seaborn as sns
import tyro


@dataclasses.dataclass
class Args:
    import_csv: str
    """CSV written by `wclab verify w2-envelope --emit csv`"""
    export_png: str | None = None
    """File to save the figure to (shown interactively when omitted)"""
    title: str = "W2 contraction envelope"
    """Figure title"""


def plot_envelope(df: pd.DataFrame, title: str) -> plt.Figure:
    long_df = df.melt(
        id_vars="step",
        value_vars=[c for c in ("coupling_bound", "exact_ot", "envelope") if c in df.columns],
        var_name="series",
        value_name="distance",
    )
    long_df = long_df[long_df["distance"] > 0]

    sns.set_theme(style="whitegrid")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    sns.lineplot(data=long_df, x="step", y="distance", hue="series", style="series", markers=True, ax=ax)
    if "coupling_se" in df.columns:
        # coupling_se is the standard error of the mean squared distance
        band = 3 * df["coupling_se"] / (2 * df["coupling_bound"])
        lower = (df["coupling_bound"] - band).clip(lower=1e-300)
        ax.fill_between(df["step"], lower, df["coupling_bound"] + band, alpha=0.2)
    ax.set_yscale("log")
    ax.set_xlabel("Step k")
    ax.set_ylabel("W2 distance")
    fig.suptitle(title)
    fig.tight_layout()
    return fig


def main(args: Args):
    df = pd.read_csv(args.import_csv)
    fig = plot_envelope(df, args.title)
    if args.export_png:
        fig.savefig(args.export_png, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main(tyro.cli(Args))
