from fairltr_plots.cli import main

HEADER = (
    "experiment_id,sweep_value,trial,step,ndcg_cum,unfair_exposure,unfair_impact,"
    "exp_ratio_g0,exp_ratio_g1,imp_ratio_g0,imp_ratio_g1"
)


def _tiny_csv(path, sweep=False):
    sweep_value = "0.01" if sweep else ""
    lines = [HEADER]
    for step in (10, 20):
        lines.append(f"pol,{sweep_value},0,{step},0.5,0.3,0.2,1,1,1,1")
        lines.append(f"pol,{sweep_value},mean,{step},0.5,0.3,0.2,1,1,1,1")
        lines.append(f"pol,{sweep_value},std,{step},0.01,0.01,0.01,0,0,0,0")
    path.write_text("\n".join(lines) + "\n")
    return path


def test_timeseries_command(tmp_path, capsys):
    csv = _tiny_csv(tmp_path / "run.csv")
    out = tmp_path / "fig.svg"
    rc = main(["timeseries", "--csv", str(csv), "--metric", "ndcg_cum,unfair_impact",
               "--out", str(out)])
    assert rc == 0
    assert out.exists()
    assert str(out) in capsys.readouterr().out


def test_sweep_command(tmp_path):
    csv = _tiny_csv(tmp_path / "sweep.csv", sweep=True)
    out = tmp_path / "fig.svg"
    rc = main(["sweep", "--csv", str(csv), "--metric", "unfair_impact", "--out", str(out)])
    assert rc == 0
    assert out.exists()


def test_unknown_metric_rejected(tmp_path, capsys):
    csv = _tiny_csv(tmp_path / "run.csv")
    rc = main(["timeseries", "--csv", str(csv), "--metric", "latency",
               "--out", str(tmp_path / "fig.svg")])
    assert rc == 2
    assert "latency" in capsys.readouterr().err


def test_schema_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("experiment_id,sweep_value,trial,step\npol,,mean,10\n")
    rc = main(["timeseries", "--csv", str(bad), "--metric", "ndcg_cum",
               "--out", str(tmp_path / "fig.svg")])
    assert rc == 1
    assert "ndcg_cum" in capsys.readouterr().err
