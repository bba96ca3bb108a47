"""Figure rendering: files exist and rendering is deterministic."""

from sentgraph.datasets import gen_planar
from sentgraph.evaluation import SampleReport, full_report, is_planar
from sentgraph.report import (
    save_ablation_figure,
    save_calibration_figure,
    save_graph_gallery,
    save_loss_curve,
    save_report_figure,
)


def _report():
    graphs = gen_planar(6, n_nodes=10, seed=7)
    return full_report(graphs[:3], graphs[3:5], graphs[5:], validity=is_planar)


def test_loss_curve_figure(tmp_path):
    curve = [(0, 3.0, 3.1), (100, 1.2, 1.5), (200, 0.8, 1.1)]
    out = tmp_path / "figs" / "loss.png"
    save_loss_curve(curve, out)
    assert out.exists() and out.stat().st_size > 0


def test_report_figure(tmp_path):
    out = tmp_path / "report.png"
    save_report_figure(_report(), out)
    assert out.exists()


def test_gallery_figure_deterministic(tmp_path):
    graphs = gen_planar(5, n_nodes=8, seed=8)
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    save_graph_gallery(graphs, a)
    save_graph_gallery(graphs, b)
    assert a.read_bytes() == b.read_bytes()


def test_ablation_figure(tmp_path):
    rep = _report()
    out = tmp_path / "ablate.png"
    save_ablation_figure(rep, rep, out)
    assert out.exists()


def test_calibration_figure(tmp_path):
    table = [(0.05, 0.02, 0.4), (0.05, 0.04, 0.6), (0.1, 0.02, 0.8), (0.1, 0.04, 0.97)]
    out = tmp_path / "cal.png"
    save_calibration_figure(table, out)
    assert out.exists()
