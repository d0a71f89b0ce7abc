import os

import pytest

import alignaudit as aa


def test_divergences():
    assert aa.kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.14384103622589045, abs=1e-12)
    assert aa.kl_divergence([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert aa.jensen_shannon([0.7, 0.3], [0.3, 0.7]) == pytest.approx(0.11870910076930725, abs=1e-12)
    assert aa.emd_ordinal([1, 0, 0, 0, 0], [0, 1, 0, 0, 0]) == pytest.approx(0.25)


def test_agreement_and_tests():
    k = aa.cohens_kappa([[40, 10], [5, 45]])
    assert k["kappa"] == pytest.approx(0.70, abs=1e-12)
    t = aa.two_sample_t(1.28, 0.10, 27, 0.93, 0.07, 27)
    assert round(t["sed"], 2) == 0.12
    assert t["df"] == 52
    w = aa.wilcoxon_signed_rank([1, 2, 3, 4, 5, 6, -1])
    assert w["exact"]
    assert w["p_value"] == pytest.approx(6 / 128, abs=1e-12)


def test_relative_gain():
    assert aa.relative_gain_cell(0.613, 0.823) == "34.3%"
    assert aa.relative_gain(0.5, 0.75) == pytest.approx(0.5)


def test_alignment_ctrl_below_ft():
    targets = {
        "q1|C1": [0.7, 0.2, 0.1],
        "q1|C2": [0.1, 0.3, 0.6],
        "q1|C3": [0.3, 0.4, 0.3],
        "q2|C1": [0.2, 0.6, 0.2],
        "q2|C2": [0.6, 0.1, 0.3],
        "q2|C3": [0.1, 0.1, 0.8],
    }
    r = aa.train_and_evaluate(targets, modes=["ZS", "FT", "FT [ctrl]"])
    assert r["loss"] < 1e-6
    assert r["scores"]["FT"] > 0.999
    assert r["scores"]["FT [ctrl]"] < r["scores"]["FT"]
    assert r["scores"]["ZS"] < r["scores"]["FT"]


def test_invalid_distribution_raises():
    with pytest.raises(aa.AlignAuditError):
        aa.kl_divergence([0.5, 0.5], [1.0])


def test_align_command_and_verify(tmp_path):
    config = os.path.join(aa.DATA_DIR, "configs", "align_toy.json")
    out = tmp_path / "align"
    assert aa.run_command("align", config, str(out)) == 0
    assert (out / "report.json").exists()
    code, stdout, _ = aa.verify_report(str(out))
    assert code == 0
    assert stdout


def test_missing_config_is_config_error(tmp_path):
    assert aa.run_command("survey", str(tmp_path / "none.json"), str(tmp_path / "out")) == 2


def test_dilemma_runs_are_reproducible(tmp_path):
    config = os.path.join(aa.DATA_DIR, "configs", "dilemma_toy.json")
    a, b = tmp_path / "a", tmp_path / "b"
    assert aa.run_command("dilemma", config, str(a)) == 0
    assert aa.run_command("dilemma", config, str(b)) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
