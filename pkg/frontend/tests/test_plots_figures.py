"""Figure construction from synthetic output files."""

import hashlib
import json
import os

import matplotlib.pyplot as plt
import numpy as np
import pytest

from swaves_plots import SchemaError, ecdf, plot_cdf, plot_heatmap
from swaves_plots.cli import main
from swaves_plots.figures import read_forecast, read_per_user_ratios

HEADER = ("user_id,total_packets,unsuccessful,ratio,"
          "cause_not_running,cause_migrating,cause_deadline\n")


def write_run(dirpath, ratios, strategy="swaves", alpha=0.5, d_max=1.0, seed=1):
    os.makedirs(dirpath, exist_ok=True)
    with open(os.path.join(dirpath, "per_user.csv"), "w") as fh:
        fh.write(HEADER)
        for uid, r in enumerate(ratios):
            bad = round(r * 1000)
            fh.write(f"{uid},1000,{bad},{r!r},0,0,{bad}\n")
    with open(os.path.join(dirpath, "summary.json"), "w") as fh:
        json.dump({"strategy": strategy, "alpha": alpha, "d_max_ms": d_max,
                   "seed": seed, "mean_ratio": float(np.mean(ratios))}, fh)


def line_data(fig):
    ax = fig.axes[0]
    return {
        ln.get_label(): (np.asarray(ln.get_xdata()), np.asarray(ln.get_ydata()))
        for ln in ax.get_lines()
    }


def test_all_zero_ratios_step_at_zero(tmp_path):
    write_run(tmp_path / "r", [0.0] * 8)
    fig, groups, _ = plot_cdf(str(tmp_path / "*" / "per_user.csv"),
                              ["strategy"], str(tmp_path / "f.svg"))
    (x, y), = line_data(fig).values()
    assert np.array_equal(x, np.zeros(8))
    assert np.array_equal(y, np.arange(1, 9) / 8)
    plt.close(fig)


def test_three_point_cdf_hits_the_thirds(tmp_path):
    write_run(tmp_path / "r", [0.3, 0.1, 0.2])
    fig, _, _ = plot_cdf(str(tmp_path / "*" / "per_user.csv"),
                         ["strategy"], str(tmp_path / "f.svg"))
    (x, y), = line_data(fig).values()
    assert np.array_equal(x, [0.1, 0.2, 0.3])
    assert np.allclose(y, [1 / 3, 2 / 3, 1.0])
    plt.close(fig)


def test_two_seeds_pool_into_one_hundred_points(tmp_path):
    rng = np.random.default_rng(0)
    write_run(tmp_path / "s1", rng.random(50).tolist(), seed=1)
    write_run(tmp_path / "s2", rng.random(50).tolist(), seed=2)
    fig, groups, _ = plot_cdf(str(tmp_path / "*" / "per_user.csv"),
                              ["strategy", "alpha"], str(tmp_path / "f.svg"))
    assert list(groups) == ["swaves/0.5"]
    (x, y), = line_data(fig).values()
    assert len(x) == 100 and y[-1] == 1.0
    plt.close(fig)


def test_one_line_per_group_with_slash_labels(tmp_path):
    write_run(tmp_path / "a", [0.1, 0.2], strategy="static", alpha=0.1)
    write_run(tmp_path / "b", [0.0, 0.1], strategy="swaves", alpha=0.9)
    fig, groups, _ = plot_cdf(str(tmp_path / "*" / "per_user.csv"),
                              ["strategy", "alpha"], str(tmp_path / "f.svg"))
    assert sorted(groups) == ["static/0.1", "swaves/0.9"]
    assert sorted(line_data(fig)) == ["static/0.1", "swaves/0.9"]
    plt.close(fig)


def test_cdf_lines_are_monotone(tmp_path):
    rng = np.random.default_rng(1)
    for i, s in enumerate(("static", "swaves")):
        write_run(tmp_path / s, rng.random(40).tolist(), strategy=s)
    fig, _, _ = plot_cdf(str(tmp_path / "*" / "per_user.csv"),
                         ["strategy"], str(tmp_path / "f.svg"))
    for x, y in line_data(fig).values():
        assert np.all(np.diff(x) >= 0)
        assert np.all(np.diff(y) >= 0)
    plt.close(fig)


def test_both_image_formats_written(tmp_path):
    write_run(tmp_path / "r", [0.5])
    fig, _, written = plot_cdf(str(tmp_path / "*" / "per_user.csv"),
                               ["strategy"], str(tmp_path / "fig.png"))
    assert sorted(os.path.basename(w) for w in written) == ["fig.png", "fig.svg"]
    for w in written:
        assert os.path.getsize(w) > 0
    plt.close(fig)


def test_inputs_left_unmodified(tmp_path):
    write_run(tmp_path / "r", [0.1, 0.9])
    files = [tmp_path / "r" / "per_user.csv", tmp_path / "r" / "summary.json"]
    before = [hashlib.sha256(f.read_bytes()).hexdigest() for f in files]
    fig, _, _ = plot_cdf(str(tmp_path / "*" / "per_user.csv"),
                         ["strategy"], str(tmp_path / "f.svg"))
    plt.close(fig)
    after = [hashlib.sha256(f.read_bytes()).hexdigest() for f in files]
    assert before == after


def test_missing_column_names_file_and_column(tmp_path):
    p = tmp_path / "r"
    os.makedirs(p)
    (p / "per_user.csv").write_text(
        "user_id,total_packets,unsuccessful,"
        "cause_not_running,cause_migrating,cause_deadline\n0,10,0,0,0,0\n"
    )
    (p / "summary.json").write_text('{"strategy": "x"}')
    with pytest.raises(SchemaError) as err:
        plot_cdf(str(tmp_path / "*" / "per_user.csv"), ["strategy"],
                 str(tmp_path / "f.svg"))
    assert "per_user.csv" in str(err.value) and "'ratio'" in str(err.value)


def test_empty_glob_is_an_error(tmp_path):
    with pytest.raises(SchemaError):
        plot_cdf(str(tmp_path / "nope" / "*.csv"), ["strategy"],
                 str(tmp_path / "f.svg"))


def test_unknown_group_key_is_an_error(tmp_path):
    write_run(tmp_path / "r", [0.1])
    with pytest.raises(SchemaError):
        plot_cdf(str(tmp_path / "*" / "per_user.csv"), ["seed_count"],
                 str(tmp_path / "f.svg"))


def test_missing_summary_is_an_error(tmp_path):
    p = tmp_path / "r"
    os.makedirs(p)
    (p / "per_user.csv").write_text(HEADER + "0,10,0,0.0,0,0,0\n")
    with pytest.raises(SchemaError):
        plot_cdf(str(tmp_path / "*" / "per_user.csv"), ["strategy"],
                 str(tmp_path / "f.svg"))


def test_ecdf_plain():
    x, y = ecdf(np.array([3.0, 1.0, 2.0]))
    assert x.tolist() == [1.0, 2.0, 3.0]
    assert y.tolist() == [1 / 3, 2 / 3, 1.0]


# --- heatmaps ---


def forecast_csv(tmp_path, entries, n_vnfs=1, n_bs=4):
    p = tmp_path / "forecast_t0.0.csv"
    vals = {k: v for k, v in entries.items()}
    with open(p, "w") as fh:
        fh.write("vnf,bs,p\n")
        for v in range(n_vnfs):
            for b in range(n_bs):
                fh.write(f"{v},{b},{vals.get((v, b), 0.0)!r}\n")
    return str(p)


def test_heatmap_all_zero_uniform(tmp_path):
    path = forecast_csv(tmp_path, {}, n_vnfs=2, n_bs=4)
    fig, mat, _ = plot_heatmap(path, str(tmp_path / "h.svg"))
    assert mat.shape == (2, 4)
    img = np.asarray(fig.axes[0].images[0].get_array())
    assert np.all(img == 0.0)
    plt.close(fig)


def test_heatmap_single_hot_cell(tmp_path):
    path = forecast_csv(tmp_path, {(0, 2): 1.0}, n_vnfs=1, n_bs=4)
    fig, mat, _ = plot_heatmap(path, str(tmp_path / "h.svg"))
    img = np.asarray(fig.axes[0].images[0].get_array()).ravel()
    assert sorted(img) == [0.0, 0.0, 0.0, 1.0]
    plt.close(fig)


def test_heatmap_binary_forecast_uses_two_values(tmp_path):
    path = forecast_csv(tmp_path, {(0, 1): 1.0, (0, 3): 1.0}, n_bs=4)
    fig, mat, _ = plot_heatmap(path, str(tmp_path / "h.svg"))
    assert set(np.unique(mat)) == {0.0, 1.0}
    plt.close(fig)


def test_heatmap_square_cell_count_becomes_a_grid(tmp_path):
    path = forecast_csv(tmp_path, {}, n_bs=16)
    fig, _, _ = plot_heatmap(path, str(tmp_path / "h.svg"))
    assert np.asarray(fig.axes[0].images[0].get_array()).shape == (4, 4)
    plt.close(fig)

    path = forecast_csv(tmp_path, {}, n_bs=6)
    fig, _, _ = plot_heatmap(path, str(tmp_path / "h.svg"))
    assert np.asarray(fig.axes[0].images[0].get_array()).shape == (1, 6)
    plt.close(fig)


def test_heatmap_rejects_out_of_range(tmp_path):
    path = forecast_csv(tmp_path, {(0, 1): 1.5})
    with pytest.raises(ValueError):
        read_forecast(path)
    path2 = forecast_csv(tmp_path, {(0, 0): -0.25})
    with pytest.raises(ValueError):
        read_forecast(path2)


def test_heatmap_rejects_bad_header_and_holes(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("vnf,cell,p\n0,0,0.5\n")
    with pytest.raises(SchemaError):
        read_forecast(str(p))
    p.write_text("vnf,bs,p\n0,0,0.5\n0,2,0.5\n")  # bs=1 missing
    with pytest.raises(SchemaError):
        read_forecast(str(p))


# --- command line ---


def test_cli_cdf_roundtrip(tmp_path, capsys):
    write_run(tmp_path / "r", [0.0, 0.2, 0.4])
    code = main(["cdf", "--glob", str(tmp_path / "*" / "per_user.csv"),
                 "--group-by", "strategy", "--out", str(tmp_path / "fig.svg")])
    assert code == 0
    assert "1 group(s)" in capsys.readouterr().out
    assert (tmp_path / "fig.svg").exists() and (tmp_path / "fig.png").exists()


def test_cli_heatmap_roundtrip(tmp_path, capsys):
    path = forecast_csv(tmp_path, {(0, 1): 0.7})
    assert main(["heatmap", "--in", path, "--out", str(tmp_path / "h.svg")]) == 0
    assert (tmp_path / "h.png").exists()


def test_cli_rejects_out_of_range(tmp_path, capsys):
    path = forecast_csv(tmp_path, {(0, 1): 2.0})
    assert main(["heatmap", "--in", path, "--out", str(tmp_path / "h.svg")]) == 2
    assert "outside [0, 1]" in capsys.readouterr().err


def test_cli_bad_glob_exits_2(tmp_path, capsys):
    assert main(["cdf", "--glob", str(tmp_path / "none*.csv"),
                 "--out", str(tmp_path / "f.svg")]) == 2
