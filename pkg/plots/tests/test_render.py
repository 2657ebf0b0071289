import subprocess
import sys

import pytest

from bkspd_plots.cli import main
from bkspd_plots.render import PlotSpec, RenderError, read_trace, render

HEADER = (
    "experiment,method,s,l,t,matrix_loads,matvecs,mu,"
    "rel_err_anorm,residual_norm,kappa_actual,seed"
)

SMALL_TRACE = HEADER + "\n" + "\n".join(
    f"demo,{method},,,{t},{t},{t},0,{err},{err},, 1".replace(" ", "")
    for method in ("alpha", "beta")
    for t, err in ((1, 1e-1), (2, 1e-3), (3, 1e-6))
) + "\n"


def write_small_trace(tmp_path, name="trace.csv"):
    path = tmp_path / name
    path.write_text(SMALL_TRACE, encoding="utf-8")
    return path


class TestReadTrace:
    def test_reads_rows(self, tmp_path):
        rows = read_trace(write_small_trace(tmp_path))
        assert len(rows) == 6
        assert rows[0]["method"] == "alpha"

    def test_rejects_missing_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("method,t\ncg,1\n", encoding="utf-8")
        with pytest.raises(RenderError, match="matrix_loads"):
            read_trace(path)

    def test_rejects_empty_body(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(HEADER + "\n", encoding="utf-8")
        with pytest.raises(RenderError, match="no data rows"):
            read_trace(path)

    def test_rejects_empty_file(self, tmp_path):
        path = tmp_path / "null.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(RenderError, match="empty"):
            read_trace(path)


class TestRender:
    def test_one_series_per_method(self, tmp_path):
        path = write_small_trace(tmp_path)
        out = tmp_path / "fig.png"
        result = render(
            PlotSpec(csv_paths=(path,), x="matrix_loads", y="rel_err_anorm", out=str(out))
        )
        assert out.exists() and out.stat().st_size > 0
        assert result.series == 2
        assert result.labels == ["alpha", "beta"]

    def test_rejects_unknown_axes(self, tmp_path):
        path = write_small_trace(tmp_path)
        with pytest.raises(RenderError, match="x must be"):
            render(PlotSpec(csv_paths=(path,), x="seed", y="rel_err_anorm", out="x.png"))
        with pytest.raises(RenderError, match="y must be"):
            render(PlotSpec(csv_paths=(path,), x="mu", y="t", out="x.png"))

    def test_rejects_empty_selection(self, tmp_path):
        path = write_small_trace(tmp_path)
        with pytest.raises(RenderError, match="nothing to draw"):
            render(PlotSpec(csv_paths=(path,), x="l", y="kappa_actual", out="x.png"))

    def test_deterministic_output(self, tmp_path):
        path = write_small_trace(tmp_path)
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        for out in (a, b):
            render(PlotSpec(csv_paths=(path,), x="matrix_loads", y="rel_err_anorm", out=str(out)))
        assert a.read_bytes() == b.read_bytes()

    def test_svg_and_pdf_outputs(self, tmp_path):
        path = write_small_trace(tmp_path)
        for ext in ("svg", "pdf"):
            out = tmp_path / f"fig.{ext}"
            render(PlotSpec(csv_paths=(path,), x="matrix_loads", y="rel_err_anorm", out=str(out)))
            assert out.stat().st_size > 0


class TestCli:
    def test_success(self, tmp_path):
        path = write_small_trace(tmp_path)
        out = tmp_path / "fig.png"
        code = main(
            ["--csv", str(path), "--x", "matrix_loads", "--y", "rel_err_anorm",
             "--out", str(out)]
        )
        assert code == 0
        assert out.exists()

    def test_empty_body_nonzero_exit(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(HEADER + "\n", encoding="utf-8")
        code = main(
            ["--csv", str(path), "--x", "mu", "--y", "rel_err_anorm", "--out",
             str(tmp_path / "fig.png")]
        )
        assert code == 2

    def test_no_logy_flag(self, tmp_path):
        path = write_small_trace(tmp_path)
        out = tmp_path / "fig.png"
        assert main(
            ["--csv", str(path), "--x", "matrix_loads", "--y", "rel_err_anorm",
             "--out", str(out), "--no-logy"]
        ) == 0


def _run_harness(tmp_path, command, preset, out_name):
    out = tmp_path / out_name
    subprocess.run(
        [sys.executable, "-m", "bkspd.cli", command, "--preset", preset,
         "--out", str(out)],
        check=True,
        capture_output=True,
    )
    return out


class TestAcceptance:
    def test_criterion_11_renders_harness_traces(self, tmp_path):
        compare_csv = _run_harness(tmp_path, "compare", "fastdecay", "compare.csv")
        regpath_csv = _run_harness(tmp_path, "regpath", "fastdecay", "regpath.csv")
        sample_csv = _run_harness(tmp_path, "sample", "outliers20", "sample.csv")

        compare_fig = render(
            PlotSpec(csv_paths=(compare_csv,), x="matrix_loads",
                     y="rel_err_anorm", out=str(tmp_path / "compare.png"))
        )
        methods = {row["method"] for row in read_trace(compare_csv)}
        ok = compare_fig.series == len(methods)

        regpath_fig = render(
            PlotSpec(csv_paths=(regpath_csv,), x="mu", y="rel_err_anorm",
                     logx=True, out=str(tmp_path / "regpath.png"))
        )
        ok = ok and regpath_fig.series == len(
            {row["method"] for row in read_trace(regpath_csv)}
        )

        sample_fig = render(
            PlotSpec(csv_paths=(sample_csv,), x="matrix_loads",
                     y="rel_err_anorm", out=str(tmp_path / "sample.png"))
        )
        ok = ok and sample_fig.series == len(
            {row["method"] for row in read_trace(sample_csv)}
        )
        for name in ("compare.png", "regpath.png", "sample.png"):
            ok = ok and (tmp_path / name).stat().st_size > 0

        status = "PASS" if ok else "FAIL"
        print(f"[acceptance] criterion 11 (render harness traces): {status}")
        assert ok
