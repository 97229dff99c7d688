import pytest

import pneulogic as pl


def test_compile_counter_hold_uses_four_rows():
    c = pl.compile(pl.program("counter_hold.fsm"))
    assert c.product_rows == 4
    assert c.membrane.startswith("MEMBRANE v1\n")
    # holds at 11 while A=0, otherwise counts up with wrap-around
    want = [3 if s == 3 and a == 0 else (s + 1) % 4 for s in range(4) for a in range(2)]
    assert list(c.next_states) == want


def test_membrane_round_trip_and_valve_truth_table():
    c = pl.compile(pl.program("phase_toggle.fsm"))
    p = pl.decode_membrane(c.membrane)
    assert p == c.pattern
    assert p.encode() == c.membrane
    rows = p.truth_table()
    for r, (n1, n0) in enumerate(rows):
        assert (n1, n0) == p.eval(bool(r & 4), bool(r & 2), bool(r & 1))


def test_errors_map_to_python_exceptions():
    with pytest.raises(pl.ParseError):
        pl.compile("fsm x\nbits 3\n")
    with pytest.raises(pl.Error):
        pl.decode_membrane("nonsense")
    with pytest.raises(pl.Error):
        pl.DilutionLadder().dilute(7)


def test_verify_reports_a_minimum_period():
    r = pl.verify(pl.program("loop_branch.fsm"), search=True)
    assert r["all_pass"] and r["passed"] == 8
    assert 1.0 < r["min_period"] < 40.0


def test_plants():
    m = pl.RotaryMixer()
    m.run(0b10, 20)
    m.run(0b11, 10)
    m.run(0b00, 30)
    assert abs(m.fraction("R2") - 0.5) < 1e-6
    d = pl.DilutionLadder()
    for k in range(4):
        d.dilute(k)
    assert d.concentrations == pytest.approx([1, 0.5, 0.25, 0.125, 0.0625], abs=1e-12)
    assert d.solute == pytest.approx(d.initial_solute + d.refill_input, abs=1e-12)


def test_embedded_mixer_session():
    s = pl.EmbeddedSession(pl.program("mixer.fsm"), pl.program("mixer.plant"))
    assert s.state == "10"
    s.run_script(pl.program("mixer_presses.tsv"), 600.0)
    snap = s.snapshot()
    assert snap["state"] == "00" and snap["transitions"] == 3
    assert snap["compartments"]["left"] == pytest.approx({"R2": 1.0})
    assert s.history_tsv().startswith("cycle\tcompartment\tsource\tfraction\n")
