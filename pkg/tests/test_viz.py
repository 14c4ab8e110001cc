import matplotlib

matplotlib.use("Agg")

import pandas as pd

from wclab.viz_results.plot_envelope import Args, main, plot_envelope


def _envelope() -> pd.DataFrame:
    steps = [0, 10, 20]
    return pd.DataFrame(
        {
            "step": steps,
            "coupling_bound": [1.0, 0.9, 0.8],
            "coupling_se": [0.01, 0.01, 0.01],
            "exact_ot": [0.95, 0.85, 0.75],
            "envelope": [2.0, 1.8, 1.6],
        }
    )


def test_plot_envelope_draws_every_series():
    fig = plot_envelope(_envelope(), "test")
    ax = fig.axes[0]
    assert ax.get_yscale() == "log"
    assert len(ax.get_lines()) >= 3


def test_main_exports_png(tmp_path):
    _envelope().to_csv(tmp_path / "envelope.csv", index=False)
    main(Args(import_csv=str(tmp_path / "envelope.csv"), export_png=str(tmp_path / "envelope.png")))
    assert (tmp_path / "envelope.png").stat().st_size > 0
