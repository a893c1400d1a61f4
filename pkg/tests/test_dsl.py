import math
from pathlib import Path

import pytest

from quafe.circuit import Coupler, Coupling, Detector, ElectronPhase, Mixer, OpticalPhase, Splitter
from quafe.cli import BUILTIN_CIRCUITS, builtin_source
from quafe.dsl import DslError, SourceSpan, lower, parse, parse_source, pretty, tokenize

MALFORMED = sorted((Path(__file__).parent / "golden" / "malformed").glob("*.quafe"))
PROFILES = {"calibrated": Coupling((4.0, 2.0), (0.5, 0.75))}


def kinds(source):
    return [(t.kind, t.text) for t in tokenize(source)[:-1]]


def test_tokens_of_split():
    assert kinds("split e0 -> a b") == [("keyword", "split"), ("ident", "e0"), ("arrow", "->"),
                                        ("ident", "a"), ("ident", "b")]


def test_degrees_are_exact():
    tok = tokenize("ephase b 90deg")[2]
    assert tok.unit == "deg" and tok.angle == math.pi / 2
    assert tokenize("ephase b 180deg")[2].angle == math.pi
    assert tokenize("ephase b -45deg")[2].angle == -math.pi / 4
    assert tokenize("ephase b 0.25rad")[2].angle == 0.25


def test_units_and_comments():
    toks = tokenize("# header\nwaveguide wg { scale = 1.5e-1 } # trailing\n")
    assert [t.kind for t in toks] == ["keyword", "ident", "lbrace", "ident", "equals", "number", "rbrace", "eof"]
    assert toks[5].text == "1.5e-1" and toks[5].unit is None
    assert tokenize("1eV 200keV 60nm 3mm")[0].unit == "eV"
    assert [t.unit for t in tokenize("1eV 200keV 60nm 3mm")[:-1]] == ["eV", "keV", "nm", "mm"]


def test_spans_are_byte_offsets():
    toks = tokenize("path e0\n  split e0 -> a b")
    split = toks[2]
    assert split.span == SourceSpan(2, 3, 10, 15)
    # a multi-byte character in a comment shifts byte offsets but not columns
    toks = tokenize("# é\npath e0")
    assert toks[0].span.line == 2 and toks[0].span.start == len("# é\n".encode())


@pytest.mark.parametrize("source, message", [
    ("path e0 & x", "illegal character '&'"),
    ("ephase a 3furlong", "unknown unit"),
])
def test_lexical_errors(source, message):
    with pytest.raises(DslError, match=message) as info:
        tokenize(source)
    assert info.value.diagnostics[0].span.line == 1


def test_fig4a_lowers_to_seven_elements():
    ast = parse_source(builtin_source("fig4a"))
    circuit = lower(ast, PROFILES, {"phi_e": 0.5, "phi_ell": 0.1})
    assert [type(e) for e in circuit.elements] == [Splitter, Coupler, OpticalPhase, Coupler, ElectronPhase,
                                                   Mixer, Detector]
    assert circuit.elements[4] == ElectronPhase("a", 0.5)
    assert circuit.elements[2] == OpticalPhase("wg", 0.1)


def test_fig4b_phase_on_reference_arm():
    circuit = lower(parse_source(builtin_source("fig4b")), PROFILES, {"phi_e": 0.5, "phi_ell": 0.1})
    assert circuit.elements[4] == ElectronPhase("b", 0.5)
    assert circuit.elements[1].path == circuit.elements[3].path == "a"


def test_fig3a_two_waveguides_energy_detector():
    circuit = lower(parse_source(builtin_source("fig3a")), PROFILES)
    assert set(circuit.waveguide_energies()) == {"wg1", "wg2"}
    assert circuit.detector.kind == "energy"
    # waveguide parameters: one mode, scaled coupling
    coupler = circuit.elements[1]
    assert coupler.coupling == Coupling((4.0 * 0.025,), (0.5,))


@pytest.mark.parametrize("name", BUILTIN_CIRCUITS)
def test_round_trip(name):
    ast = parse_source(builtin_source(name))
    text = pretty(ast)
    again = parse_source(text)
    assert again == ast
    assert pretty(again) == text


def test_round_trip_preserves_literals():
    src = "path e0\nwaveguide w { scale = 2, modes = 1 }\nsplit e0 -> a b\nephase a 90deg\nophase w -0.5rad\n" \
          "couple b w @calibrated\nmix a b -> c\ndetect c current\n"
    assert pretty(parse_source(src)) == src
    assert parse_source(pretty(parse_source(src))) == parse_source(src)


def test_parse_takes_tokens():
    tokens = tokenize(builtin_source("fig4a"))
    assert parse(tokens) == parse_source(builtin_source("fig4a"))


@pytest.mark.parametrize("path", MALFORMED, ids=lambda p: p.stem)
def test_malformed_corpus(path):
    expected = path.with_suffix(".err").read_text()
    source = path.read_text()
    messages = []
    for _ in range(2):  # identical input, identical diagnostics
        with pytest.raises(DslError) as info:
            parse_source(source, path.name)
        messages.append(str(info.value) + "\n")
    assert messages[0] == messages[1] == expected


def test_corpus_size():
    assert len(MALFORMED) == 10


def test_error_limit():
    source = "path e0\n" + "split -> \n" * 30 + "detect e0 current\n"
    with pytest.raises(DslError) as info:
        parse_source(source)
    assert len(info.value.diagnostics) == 10


def test_expected_set_in_message():
    with pytest.raises(DslError, match="expected 'current' or 'energy'"):
        parse_source("path e0\ndetect e0 photons\n")


def test_lowering_errors():
    ast = parse_source(builtin_source("fig4a"))
    with pytest.raises(DslError, match=r"unbound parameter \$phi_ell"):
        lower(ast, PROFILES, {"phi_e": 0.0})
    with pytest.raises(DslError, match="unknown coupling profile @calibrated"):
        lower(ast, {}, {"phi_e": 0.0, "phi_ell": 0.0})
    with pytest.raises(DslError, match="no phase-matched modes"):
        lower(ast, {"calibrated": None}, {"phi_e": 0.0, "phi_ell": 0.0})


def test_lowering_error_names_span():
    src = "path e0\nsplit e0 -> a b\ncouple a nowhere @calibrated\nmix a b -> c\ndetect c current\n"
    with pytest.raises(DslError) as info:
        parse_source(src, "x.quafe")
    assert str(info.value) == "x.quafe:3:10: waveguide 'nowhere' is not declared"


def test_parse_does_not_simulate(monkeypatch):
    import quafe.circuit

    def boom(*args, **kwargs):
        raise AssertionError("simulation during parse")

    monkeypatch.setattr(quafe.circuit, "run", boom)
    monkeypatch.setattr(quafe.circuit, "apply_element", boom)
    for name in BUILTIN_CIRCUITS:
        parse_source(builtin_source(name))


def test_declarations_must_precede_statements():
    with pytest.raises(DslError, match="declaration 'waveguide' after the first statement"):
        parse_source("path e0\nsplit e0 -> a b\nwaveguide w { }\nmix a b -> c\ndetect c current\n")


def test_single_incident_path():
    with pytest.raises(DslError, match="exactly one incident"):
        parse_source("path e0\npath e1\ndetect e0 current\n")
