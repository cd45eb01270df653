import json
import os

from glsim import cli

DATA = os.path.join(os.path.dirname(__file__), "data")
GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def demo_args(tmp_path, *extra):
    return ["--netlist", f"{DATA}/demo.netlist.json",
            "--lib", f"{DATA}/demo.lib.json",
            "--sdf", f"{DATA}/demo.sdf",
            "--vcd", f"{DATA}/demo.vcd",
            "--window-period", "20000",
            "--saif", str(tmp_path / "out.saif"), *extra]


def test_demo_exit_zero_and_golden_saif(tmp_path):
    assert cli.main(demo_args(tmp_path)) == 0
    got = (tmp_path / "out.saif").read_text()
    want = open(f"{GOLDEN}/demo.saif").read()
    assert got == want


def test_missing_netlist_is_usage_error(tmp_path, capsys):
    assert cli.main(["--lib", f"{DATA}/demo.lib.json", "--vcd", f"{DATA}/demo.vcd"]) == 1
    err = capsys.readouterr().err
    assert "--netlist" in err and "usage" in err


def test_parse_error_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    args = demo_args(tmp_path)
    args[args.index("--netlist") + 1] = str(bad)
    assert cli.main(args) == 2


def test_missing_file_exit_2(tmp_path):
    args = demo_args(tmp_path)
    args[args.index("--vcd") + 1] = str(tmp_path / "missing.vcd")
    assert cli.main(args) == 2


def test_semantic_error_exit_3(tmp_path):
    bad = tmp_path / "undriven.json"
    bad.write_text(json.dumps({
        "name": "u", "inputs": ["a"], "outputs": [],
        "gates": [{"name": "g", "cell": "INV", "pins": {"A": "ghost", "Y": "y"}}]}))
    args = demo_args(tmp_path)
    args[args.index("--netlist") + 1] = str(bad)
    assert cli.main(args) == 3


def test_capacity_error_exit_4(tmp_path):
    # one window cannot be split further, so a tiny cap is unrecoverable
    args = demo_args(tmp_path, "--mem-cap", "8")
    args.remove("--window-period")
    args.remove("20000")
    assert cli.main(args) == 4


def test_segmented_fallback_still_succeeds(tmp_path):
    # 2 windows: a cap below the total but above one window forces segments
    full = demo_args(tmp_path)
    assert cli.main(full) == 0
    want = (tmp_path / "out.saif").read_text()
    assert cli.main(demo_args(tmp_path, "--mem-cap", "100")) == 0
    assert (tmp_path / "out.saif").read_text() == want


def test_oracle_flag_passes_on_demo(tmp_path):
    assert cli.main(demo_args(tmp_path, "--oracle")) == 0


def test_injected_engine_bug_fails_oracle_exit_5(tmp_path, monkeypatch):
    from glsim import scheduler

    original = scheduler.simcore.two_pass_simulate

    def corrupted(*args, **kwargs):
        arena = original(*args, **kwargs)
        if arena.buf.size:
            arena.buf[0] += 1  # shift one stored transition
        return arena

    monkeypatch.setattr(scheduler.simcore, "two_pass_simulate", corrupted)
    assert cli.main(demo_args(tmp_path, "--oracle")) == 5


def test_two_pass_mismatch_exit_5(tmp_path, monkeypatch):
    from glsim import simcore

    def broken(model, arena):
        from glsim.errors import ConsistencyError
        raise ConsistencyError("two-pass mismatch (injected)")

    monkeypatch.setattr("glsim.simcore.verify_two_pass", broken)
    assert cli.main(demo_args(tmp_path)) == 5


def test_env_variables_mirror_flags(tmp_path, monkeypatch):
    monkeypatch.setenv("GLSIM_NETLIST", f"{DATA}/demo.netlist.json")
    monkeypatch.setenv("GLSIM_LIB", f"{DATA}/demo.lib.json")
    monkeypatch.setenv("GLSIM_SDF", f"{DATA}/demo.sdf")
    monkeypatch.setenv("GLSIM_VCD", f"{DATA}/demo.vcd")
    monkeypatch.setenv("GLSIM_WINDOW_PERIOD", "20000")
    monkeypatch.setenv("GLSIM_SAIF", str(tmp_path / "env.saif"))
    assert cli.main([]) == 0
    assert (tmp_path / "env.saif").read_text() == open(f"{GOLDEN}/demo.saif").read()


def test_flags_win_over_env(tmp_path, monkeypatch):
    monkeypatch.setenv("GLSIM_SAIF", str(tmp_path / "env.saif"))
    assert cli.main(demo_args(tmp_path)) == 0
    assert not (tmp_path / "env.saif").exists()
    assert (tmp_path / "out.saif").exists()


def test_json_report_and_dump_vcd(tmp_path):
    args = demo_args(tmp_path,
                     "--report", str(tmp_path / "r.json"),
                     "--dump-vcd", str(tmp_path / "d.vcd"),
                     "--dump-nets", "y,n1")
    assert cli.main(args) == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    assert rep["nets"] == 7 and rep["windows"] == 2
    assert rep["total_tc"] == 21 and rep["total_filtered"] == 1
    vcd = (tmp_path / "d.vcd").read_text()
    assert "$var wire 1" in vcd and " y $end" in vcd


def test_no_ig_flag(tmp_path):
    assert cli.main(demo_args(tmp_path, "--no-ig")) == 0
    assert "(IG" not in (tmp_path / "out.saif").read_text()


def test_report_stable_modulo_timings(tmp_path):
    args = demo_args(tmp_path, "--report", str(tmp_path / "a.json"))
    assert cli.main(args) == 0
    args = demo_args(tmp_path, "--report", str(tmp_path / "b.json"), "--threads", "4")
    assert cli.main(args) == 0
    a = json.loads((tmp_path / "a.json").read_text())
    b = json.loads((tmp_path / "b.json").read_text())
    a.pop("timings"), b.pop("timings")
    a.pop("tasks"), b.pop("tasks")  # task split depends on worker count
    assert a == b


def test_pathpulse_pct_passthrough(tmp_path):
    # different threshold, still self-consistent against the reference
    assert cli.main(demo_args(tmp_path, "--pathpulse-pct", "50", "--oracle")) == 0


def test_delay_mode_avg_passthrough(tmp_path):
    assert cli.main(demo_args(tmp_path, "--delay-mode", "avg", "--oracle")) == 0
    avg = (tmp_path / "out.saif").read_text()
    assert cli.main(demo_args(tmp_path)) == 0
    full = (tmp_path / "out.saif").read_text()
    assert avg != full  # u1's conditional rows collapse to their mean


def test_zero_delay_run_without_sdf(tmp_path):
    args = demo_args(tmp_path)
    i = args.index("--sdf")
    del args[i:i + 2]
    assert cli.main(args) == 0
    text = (tmp_path / "out.saif").read_text()
    assert "(DURATION 40000)" in text


def test_bad_config_values_are_usage_errors(tmp_path):
    assert cli.main(demo_args(tmp_path, "--mem-cap", "lots")) == 1
    assert cli.main(demo_args(tmp_path, "--pathpulse-pct", "150")) == 1
    assert cli.main(demo_args(tmp_path, "--cycle-parallelism", "0")) == 1


def test_conflicting_window_flags(tmp_path):
    wf = tmp_path / "w.txt"
    wf.write_text("0\n40000\n")
    assert cli.main(demo_args(tmp_path, "--windows-file", str(wf))) == 1


def test_windows_file(tmp_path):
    wf = tmp_path / "w.txt"
    wf.write_text("0\n20000\n40000\n")
    args = demo_args(tmp_path)
    i = args.index("--window-period")
    del args[i:i + 2]
    assert cli.main(args + ["--windows-file", str(wf)]) == 0
    assert (tmp_path / "out.saif").read_text() == open(f"{GOLDEN}/demo.saif").read()
