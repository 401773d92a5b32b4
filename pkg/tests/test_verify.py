import pytest

from mollify import verify


def test_every_invariant_registered():
    names = {s: [n for n, _ in checks] for s, checks in verify.SUITES.items()}
    assert names["convolve"] == ["unit_mass", "concentration_link", "jump_average", "tensor_direct", "commutation"]
    assert names["approx"] == ["certification", "telescoping", "linearity", "push_convergence", "realness"]


@pytest.mark.parametrize("seed", [0, 1])
def test_all_hold(seed):
    checks = verify.run_checks(seed)
    assert len(checks) == 10
    bad = [c.line() for c in checks if not c.ok]
    assert not bad, bad


def test_crash_is_a_failure(monkeypatch):
    def boom(rng):
        raise RuntimeError("kaput")

    monkeypatch.setitem(verify.SUITES, "approx", [("boom", boom)])
    (c,) = verify.run_checks(0, suites=["approx"])
    assert not c.ok and "RuntimeError: kaput" in c.detail
    assert c.line().startswith("[FAIL] approx.boom")


def test_suite_filter():
    checks = verify.run_checks(0, suites=["approx"])
    assert {c.suite for c in checks} == {"approx"}
