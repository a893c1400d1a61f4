import json
import math
from importlib import resources

import jsonschema
import numpy as np
import pytest

from quafe.circuit import (
    Circuit,
    Coupler,
    Coupling,
    Detector,
    ElectronPhase,
    JointState,
    Mixer,
    OpticalPhase,
    Splitter,
    apply_element,
    heralded_noon_state,
    noon_source,
    run,
    single_arm_sensor,
    two_arm_sensor,
)
from quafe.errors import CircuitError, HeraldLimitError, TruncationError
from quafe.fock import displace_vacuum, rule_cutoff
from quafe.interference import current_closed_form, single_arm_closed_form
from quafe.noon import noon_probability

SCHEMA = json.loads(resources.files("quafe").joinpath("data/detection_report.schema.json").read_text())


def mzi(*middle, detector="current"):
    return Circuit("e0", (Splitter("e0", "a", "b"), *middle, Mixer("a", "b", "c"), Detector("c", detector)))


def test_bare_interferometer():
    report = run(mzi())
    assert report.current == pytest.approx(1.0, abs=1e-15)
    assert report.discarded == pytest.approx(0.0, abs=1e-15)


def test_destructive_interference():
    report = run(mzi(ElectronPhase("a", math.pi)))
    assert report.current == pytest.approx(0.0, abs=1e-15)
    assert report.discarded == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("mean", [0.3, 4.0, 40.0])
def test_which_path_information(mean):
    report = run(mzi(Coupler("a", "wg", Coupling.single_mode(mean))))
    # dense check: kept port holds (|beta> + |0>)/2
    cut = rule_cutoff(mean)
    vacuum = np.zeros(cut + 1)
    vacuum[0] = 1.0
    kept = (displace_vacuum(math.sqrt(mean), cut) + vacuum) / 2
    assert report.current == pytest.approx(np.vdot(kept, kept).real, rel=1e-13)
    # the interference term is linear in <0|beta> = exp(-N/2)
    assert report.current == pytest.approx((1 + math.exp(-mean / 2)) / 2, rel=1e-14)


def test_splitter_amplitudes():
    state = JointState.incident("e0", {})
    state = apply_element(state, Splitter("e0", "a", "b"))
    assert state.path_probability("a") == pytest.approx(0.5)
    assert state.path_probability("b") == pytest.approx(0.5)


def test_two_arm_sensor_at_zero_phase(coupling_200):
    assert run(two_arm_sensor(coupling_200, math.pi / 2, 0.0)).current == pytest.approx(0.5, abs=1e-14)


def test_two_arm_sensor_matches_closed_form(coupling_200):
    mean, ratios = coupling_200.mean_photons, coupling_200.freq_ratios
    for phi_e in (0.0, 1.0, math.pi / 2):
        for phi in np.linspace(-0.02, 0.02, 9):
            report = run(two_arm_sensor(coupling_200, phi_e, phi))
            assert report.current == pytest.approx(current_closed_form(mean, ratios, phi_e, phi), abs=1e-12)
            assert report.current + report.discarded == pytest.approx(1.0, abs=1e-12)


def test_single_arm_sensor_matches_closed_form(coupling_200):
    mean, ratios = coupling_200.mean_photons, coupling_200.freq_ratios
    for phi in np.linspace(math.pi - 0.02, math.pi + 0.02, 9):
        report = run(single_arm_sensor(coupling_200, math.pi / 2, phi))
        assert report.current == pytest.approx(single_arm_closed_form(mean, ratios, math.pi / 2, phi), abs=1e-12)


def test_single_arm_single_mode_substitution():
    coupling = Coupling.single_mode(6.0)
    for phi in np.linspace(2.5, 3.8, 7):
        a = run(single_arm_sensor(coupling, 0.9, phi)).current
        b = run(two_arm_sensor(coupling, 0.9, math.pi - phi)).current
        assert a == pytest.approx(b, abs=1e-12)


@pytest.mark.parametrize("n0", [1, 3, 10])
def test_noon_herald(n0):
    report = run(noon_source(Coupling.single_mode(float(n0))))
    herald = heralded_noon_state(report, n0, ("wg1", "wg2"))
    assert herald.weights == pytest.approx((0.5, 0.5), abs=1e-12)
    assert herald.delta == pytest.approx(0.0, abs=1e-12)
    assert herald.probability == pytest.approx(0.5 * noon_probability([n0], n0, "dressed_single"), rel=1e-12)
    total = sum(h.probability for h in report.heralds) + report.unresolved + report.discarded
    assert total == pytest.approx(1.0, abs=1e-12)


def test_noon_herald_two_modes_matches_pure_form():
    coupling = Coupling((2.0, 0.4), (0.5, 0.73))
    report = run(noon_source(coupling))
    herald = heralded_noon_state(report, 2, ("wg1", "wg2"))
    occ = {"wg1": (2, 0), "wg2": (0, 0)}
    assert herald.outcome.amplitude(occ) != 0
    assert herald.probability == pytest.approx(0.5 * noon_probability([2.0, 0.4], 2, "pure_single"), rel=1e-12)


def test_optical_phase_shifts_noon_phase():
    n0, phi = 3, 0.37
    coupling = Coupling.single_mode(3.0)
    circuit = Circuit("e0", (
        Splitter("e0", "a", "b"),
        Coupler("a", "wg1", coupling),
        Coupler("b", "wg2", coupling),
        OpticalPhase("wg2", phi),
        Mixer("a", "b", "c"),
        Detector("c", "energy"),
    ))
    herald = heralded_noon_state(run(circuit), n0, ("wg1", "wg2"))
    assert herald.delta == pytest.approx(n0 * phi, abs=1e-12)


def test_impossible_post_selection():
    report = run(noon_source(Coupling.single_mode(0.0)))
    with pytest.raises(CircuitError):
        heralded_noon_state(report, 2, ("wg1", "wg2"))


def test_herald_limits():
    with pytest.raises(HeraldLimitError):
        run(noon_source(Coupling.single_mode(5.0)), max_configs=10)
    with pytest.raises(TruncationError, match="wg1"):
        run(noon_source(Coupling.single_mode(5.0)), cutoffs={"wg1": (3,), "wg2": (3,)})


def test_min_probability_reports_unresolved():
    full = run(noon_source(Coupling.single_mode(2.0)))
    cut = run(noon_source(Coupling.single_mode(2.0)), min_probability=1e-3)
    assert len(cut.heralds) < len(full.heralds)
    listed = sum(h.probability for h in cut.heralds)
    assert listed + cut.unresolved == pytest.approx(cut.current, abs=1e-12)


def test_report_matches_schema():
    report = run(noon_source(Coupling((1.0, 0.2), (0.5, 0.8))), min_probability=1e-9)
    jsonschema.validate(report.to_dict(), SCHEMA)
    jsonschema.validate(run(mzi()).to_dict(), SCHEMA)


@pytest.mark.parametrize("elements, message", [
    ((Splitter("e0", "a", "b"),), "detector"),
    ((Detector("e0"), Detector("e0")), "detector"),
    ((Splitter("e0", "a", "b"), Mixer("a", "a", "c"), Detector("c")), "differ"),
    ((Splitter("e0", "a", "a"), Detector("a")), "differ"),
    ((Coupler("x", "wg", Coupling.single_mode(1.0)), Detector("e0")), "not live"),
    ((Splitter("e0", "a", "b"), Detector("e0")), "not live"),
    ((Splitter("e0", "a", "b"), Coupler("a", "wg", Coupling.single_mode(1.0, 0.5)),
      Coupler("b", "wg", Coupling.single_mode(1.0, 0.6)), Mixer("a", "b", "c"), Detector("c")), "disagree"),
    ((Detector("e0", "voltage"),), "kind"),
])
def test_structural_errors(elements, message):
    with pytest.raises(CircuitError, match=message):
        Circuit("e0", elements)


def test_coupling_validation():
    with pytest.raises(CircuitError):
        Coupling((1.0,), (0.5, 0.7))
    with pytest.raises(CircuitError):
        Coupling((-1.0,), (0.5,))
    c = Coupling((4.0, 1.0), (0.5, 0.75))
    assert c.betas == (2.0, 1.0)
    assert c.freq_ratios == (1.0, 1.5)
    assert c.truncated(1).mean_photons == (4.0,)
    assert c.scaled(0.5).mean_photons == (2.0, 0.5)
