import math

import numpy as np
import pytest

import catdec


def bell():
    return catdec.maximally_entangled(2, "A", "E")


def test_version():
    assert catdec.__version__ == "0.1.0"


def test_state_roundtrip():
    rho = catdec.random_state("hs_mixed", [2, 3], ["A", "E"], seed=5)
    assert rho.dims == [2, 3]
    assert rho.labels == ["A", "E"]
    m = rho.matrix
    assert m.shape == (6, 6)
    assert np.allclose(m, m.conj().T)
    assert math.isclose(np.trace(m).real, 1.0, abs_tol=1e-12)
    again = catdec.DensityOperator(m, [2, 3], ["A", "E"])
    assert np.array_equal(again.matrix, m)


def test_bell_entropies():
    phi = bell()
    assert catdec.hmin(phi, ["A"], ["E"])["value"] == pytest.approx(-1.0, abs=1e-6)
    assert catdec.hmax(phi, ["A"], ["E"])["value"] == pytest.approx(-1.0, abs=1e-6)
    v = catdec.imax(phi, ["E"], ["A"])
    assert v["value"] == pytest.approx(2.0, abs=1e-6)
    assert v["bound_kind"] == "exact"
    i, var = catdec.mutual_info(phi, ["A"], ["E"])
    assert i == pytest.approx(2.0, abs=1e-12)
    assert var == pytest.approx(0.0, abs=1e-12)


def test_distances():
    zero = catdec.DensityOperator(np.diag([1.0, 0.0]).astype(complex), [2], ["A"])
    one = catdec.DensityOperator(np.diag([0.0, 1.0]).astype(complex), [2], ["A"])
    assert catdec.trace_distance(zero, one) == pytest.approx(1.0)
    assert catdec.purified_distance(zero, one) == pytest.approx(1.0)
    assert catdec.purified_distance(zero, zero) == pytest.approx(0.0, abs=1e-7)


def test_convex_split_phi2():
    tau = catdec.DensityOperator(np.eye(2, dtype=complex) / 2, [2], ["A"])
    errs = [catdec.convex_split_error(bell(), "A", tau, n) for n in (1, 2, 4)]
    assert errs[0] == pytest.approx(math.sqrt(3) / 2, abs=1e-9)
    assert errs[0] > errs[1] > errs[2]


def test_catalytic_transcript():
    t = catdec.catalytic_decouple(bell(), "A", "E", n=4)
    assert t["used_n"] == 4
    tau = catdec.DensityOperator(np.eye(2, dtype=complex) / 2, [2], ["A"])
    assert t["achieved_error"] == pytest.approx(
        catdec.convex_split_error(bell(), "A", tau, 4), abs=1e-9)


def test_classical_hmax_matches_sdp():
    p = np.array([0.6, 0.3, 0.1])
    rho = catdec.DensityOperator(np.diag(p).astype(complex), [3, 1], ["A", "B"])
    sdp = catdec.hmax_smooth(rho, ["A"], ["B"], 0.1)["value"]
    assert catdec.hmax_smooth_classical(p, 0.1) == pytest.approx(sdp, abs=1e-5)


def test_run_is_deterministic():
    a = catdec.run("convex-split", seed=3, n=4, trials=2, format="csv")
    b = catdec.run("convex-split", seed=3, n=4, trials=2, format="csv", threads=2)
    assert a == b
    report = catdec.run("erase", seed=3)
    assert report["failed_checks"] == []
    assert len(report["rows"]) == 1


def test_errors():
    with pytest.raises(catdec.CapacityError):
        catdec.random_state("hs_mixed", [100, 100], seed=1)
    with pytest.raises(catdec.StateError):
        catdec.DensityOperator(np.array([[1, 1j], [0, 0]]), [2])
    with pytest.raises(catdec.IoError):
        catdec.read_state("/nonexistent/state.json")
    with pytest.raises(catdec.Error):
        catdec.run("teleport", seed=1)
