import shutil

from sdp_mtd.cli import bundled_scenarios, main


def test_run_writes_expected_rows(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = main(["run", str(bundled_scenarios() / "fig1_sdp_scan.cfg"), "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "scenario,mode,seed,metric,value"
    assert "fig1_sdp_scan,sdp,42,ports_open,0" in lines
    assert "[PASS] scan_blackening" in capsys.readouterr().err


def test_mode_override_turns_scan_into_baseline(tmp_path):
    out = tmp_path / "r.csv"
    main(["run", str(bundled_scenarios() / "fig1_sdp_scan.cfg"), "--mode", "baseline",
          "--out", str(out)])
    assert "fig1_sdp_scan,baseline,42,ports_open,1" in out.read_text().splitlines()


def test_seed_override_changes_trace(tmp_path):
    cfg = str(bundled_scenarios() / "fig1_sdp_replay.cfg")
    a, b = tmp_path / "a.log", tmp_path / "b.log"
    main(["run", cfg, "--trace", str(a), "--out", str(tmp_path / "a.csv")])
    main(["run", cfg, "--seed", "43", "--trace", str(b), "--out", str(tmp_path / "b.csv")])
    assert a.read_bytes() != b.read_bytes()
    assert ",42," in (tmp_path / "a.csv").read_text() and ",43," in (tmp_path / "b.csv").read_text()


def test_stdout_when_no_out(capsys):
    main(["run", str(bundled_scenarios() / "fig1_sdp_probe.cfg")])
    assert capsys.readouterr().out.startswith("scenario,mode,seed,metric,value\n")


def test_check_exit_codes(tmp_path, capsys):
    good = tmp_path / "good"
    good.mkdir()
    for name in ("fig1_sdp_probe.cfg", "fig1_baseline_probe.cfg", "fig1_sdp_replay.cfg"):
        shutil.copy(bundled_scenarios() / name, good / name)
    assert main(["check", str(good), "--jobs", "2"]) == 0
    out = capsys.readouterr().out
    assert "ALL CHECKS PASSED" in out and out.count("deterministic_rerun") == 3



def test_check_fails_when_a_check_fails(tmp_path, capsys):
    d = tmp_path / "d"
    d.mkdir()
    text = (bundled_scenarios() / "fig1_baseline_scan.cfg").read_text()
    # baseline scan with the static port moved outside the scanned range: expectation breaks
    (d / "x.cfg").write_text(text.replace("attack.ports = 0-999", "attack.ports = 0-20"))
    assert main(["check", str(d)]) == 1
    assert "SOME CHECKS FAILED" in capsys.readouterr().out


def test_bad_config_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("scenario.name = x\nscenario.mode = sdp\n")
    assert main(["run", str(p)]) == 2
    assert "scenario.seed" in capsys.readouterr().err
    assert main(["check", str(tmp_path / "empty")]) == 2
