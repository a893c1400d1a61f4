"""Joint electron-path / photon evolution through free-electron circuits.

Every photonic component reachable from vacuum by couplers and optical phase
shifters is a product of coherent states, so a path carries a short list of
terms ``amplitude * prod_modes |beta_mode>`` and all overlaps are analytic.
Dense number amplitudes are built only when an energy-resolving detector asks
for heralded outcomes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .errors import CircuitError, HeraldLimitError, TruncationError
from .fock import DEFAULT_TAIL_TOLERANCE, coherent_overlap, displace_vacuum, poisson_tail, rule_cutoff

__all__ = [
    "Coupling",
    "Splitter",
    "Mixer",
    "ElectronPhase",
    "OpticalPhase",
    "Coupler",
    "Detector",
    "Circuit",
    "Term",
    "JointState",
    "HeraldedOutcome",
    "DetectionReport",
    "NoonHerald",
    "apply_element",
    "run",
    "heralded_noon_state",
    "two_arm_sensor",
    "single_arm_sensor",
    "noon_source",
]

SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class Coupling:
    """Mean photon numbers handed to a waveguide by one coupler pass.

    ``photon_energies`` (eV) fix the mode frequencies; index 0 is the
    fundamental that optical phases are quoted for.
    """

    mean_photons: tuple
    photon_energies: tuple

    def __post_init__(self):
        object.__setattr__(self, "mean_photons", tuple(float(m) for m in self.mean_photons))
        object.__setattr__(self, "photon_energies", tuple(float(e) for e in self.photon_energies))
        if len(self.mean_photons) != len(self.photon_energies) or not self.mean_photons:
            raise CircuitError("coupling needs one photon energy per mode")
        if any(m < 0 for m in self.mean_photons):
            raise CircuitError("mean photon numbers must be non-negative")
        if any(e <= 0 for e in self.photon_energies):
            raise CircuitError("photon energies must be positive")

    @property
    def freq_ratios(self) -> tuple:
        return tuple(e / self.photon_energies[0] for e in self.photon_energies)

    @property
    def betas(self) -> tuple:
        # real, non-negative coupling amplitudes
        return tuple(math.sqrt(m) for m in self.mean_photons)

    def scaled(self, factor: float) -> "Coupling":
        return Coupling(tuple(factor * m for m in self.mean_photons), self.photon_energies)

    def truncated(self, modes: int) -> "Coupling":
        return Coupling(self.mean_photons[:modes], self.photon_energies[:modes])

    @classmethod
    def single_mode(cls, mean: float, photon_energy: float = 1.0) -> "Coupling":
        return cls((mean,), (photon_energy,))

    @classmethod
    def from_result(cls, result) -> "Coupling":
        """Phase-matched modes of a :class:`quafe.coupler.CouplingResult`."""
        m = result.matched
        return cls(tuple(result.mean_photons[m]), tuple(result.photon_energy[m]))


@dataclass(frozen=True)
class Splitter:
    source: str
    out_a: str
    out_b: str


@dataclass(frozen=True)
class Mixer:
    in_a: str
    in_b: str
    out: str
    discard_port: str = "discard"


@dataclass(frozen=True)
class ElectronPhase:
    path: str
    phi: float


@dataclass(frozen=True)
class OpticalPhase:
    waveguide: str
    phi: float


@dataclass(frozen=True)
class Coupler:
    path: str
    waveguide: str
    coupling: Coupling


@dataclass(frozen=True)
class Detector:
    path: str
    kind: str = "current"  # or "energy"


Element = Union[Splitter, Mixer, ElectronPhase, OpticalPhase, Coupler, Detector]


@dataclass(frozen=True)
class Circuit:
    incident: str
    elements: tuple

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        self.validate()

    @property
    def detector(self) -> Detector:
        return self.elements[-1]

    def waveguide_energies(self) -> dict:
        """Photon energies of each waveguide's modes, from its couplers."""
        out = {}
        for el in self.elements:
            if isinstance(el, Coupler):
                energies = el.coupling.photon_energies
                known = out.setdefault(el.waveguide, energies)
                if len(known) != len(energies) or not np.allclose(known, energies, rtol=1e-12, atol=0):
                    raise CircuitError(f"couplers disagree on the modes of waveguide {el.waveguide!r}")
        return out

    def validate(self) -> None:
        if not self.elements or not isinstance(self.elements[-1], Detector):
            raise CircuitError("circuit must end with exactly one detector")
        if sum(isinstance(el, Detector) for el in self.elements) != 1:
            raise CircuitError("circuit must contain exactly one detector")
        if self.elements[-1].kind not in ("current", "energy"):
            raise CircuitError(f"unknown detector kind {self.elements[-1].kind!r}")
        live = {self.incident}
        used = {self.incident}

        def consume(name, what):
            if name not in live:
                raise CircuitError(f"{what} uses path {name!r}, which is not live")

        def produce(*names):
            for name in names:
                if name in used:
                    raise CircuitError(f"path {name!r} is produced twice")
                used.add(name)
                live.add(name)

        for el in self.elements:
            if isinstance(el, Splitter):
                consume(el.source, "splitter")
                if el.out_a == el.out_b:
                    raise CircuitError("splitter outputs must differ")
                live.discard(el.source)
                produce(el.out_a, el.out_b)
            elif isinstance(el, Mixer):
                if el.in_a == el.in_b:
                    raise CircuitError(f"mixer inputs must differ, got {el.in_a!r} twice")
                consume(el.in_a, "mixer")
                consume(el.in_b, "mixer")
                live.difference_update((el.in_a, el.in_b))
                produce(el.out)
            elif isinstance(el, (ElectronPhase, Coupler, Detector)):
                consume(el.path, type(el).__name__.lower())
        self.waveguide_energies()


@dataclass(frozen=True)
class Term:
    amplitude: complex
    modes: Mapping[str, tuple] = field(default_factory=dict)  # waveguide -> per-mode beta


def _mode_beta(term: Term, wg: str, n: int) -> complex:
    betas = term.modes.get(wg, ())
    return betas[n] if n < len(betas) else 0.0


def term_overlap(a: Term, b: Term) -> complex:
    """``<a|b>`` including both amplitudes."""
    out = np.conj(a.amplitude) * b.amplitude
    for wg in set(a.modes) | set(b.modes):
        size = max(len(a.modes.get(wg, ())), len(b.modes.get(wg, ())))
        for n in range(size):
            out *= coherent_overlap(_mode_beta(a, wg, n), _mode_beta(b, wg, n))
    return complex(out)


def terms_norm2(terms: Sequence[Term]) -> float:
    total = 0.0
    for i, a in enumerate(terms):
        total += abs(a.amplitude) ** 2
        for b in terms[i + 1:]:
            total += 2.0 * term_overlap(a, b).real
    return total


def _merge(terms):
    merged = {}
    for t in terms:
        key = tuple(sorted((wg, betas) for wg, betas in t.modes.items() if any(b != 0 for b in betas)))
        merged[key] = merged.get(key, 0.0) + t.amplitude
    return tuple(Term(amp, dict(key)) for key, amp in merged.items() if amp != 0)


@dataclass(frozen=True)
class JointState:
    paths: Mapping[str, tuple]
    waveguides: Mapping[str, tuple]  # waveguide -> mode photon energies
    discarded: float = 0.0

    @classmethod
    def incident(cls, path: str, waveguides: Mapping[str, tuple]) -> "JointState":
        return cls({path: (Term(1.0 + 0j, {}),)}, dict(waveguides))

    def path_probability(self, path: str) -> float:
        return terms_norm2(self.paths[path])

    @property
    def total_probability(self) -> float:
        return sum(self.path_probability(p) for p in self.paths) + self.discarded

    def _with_paths(self, paths, discarded=None) -> "JointState":
        return JointState(paths, self.waveguides, self.discarded if discarded is None else discarded)


def _coupler(term: Term, wg: str, coupling: Coupling) -> Term:
    old = term.modes.get(wg, ())
    new = []
    amp = term.amplitude
    for n, gamma in enumerate(coupling.betas):
        beta = old[n] if n < len(old) else 0.0
        # S(gamma) S(beta) = exp(i Im(conj(gamma) beta)) S(beta + gamma)
        amp *= np.exp(1j * np.imag(np.conj(gamma) * beta))
        new.append(complex(beta + gamma))
    modes = dict(term.modes)
    modes[wg] = tuple(new)
    return Term(complex(amp), modes)


def _optical_phase(term: Term, wg: str, phi: float, ratios) -> Term:
    if wg not in term.modes:
        return term
    modes = dict(term.modes)
    # e^{i N phi_n} on amplitudes proportional to (beta*)^N rotates beta by e^{-i phi_n}
    modes[wg] = tuple(b * np.exp(-1j * phi * r) for b, r in zip(term.modes[wg], ratios))
    return Term(term.amplitude, modes)


def apply_element(state: JointState, element: Element) -> JointState:
    paths = dict(state.paths)
    if isinstance(element, Splitter):
        terms = paths.pop(element.source)
        half = tuple(Term(t.amplitude * SQRT_HALF, t.modes) for t in terms)
        paths[element.out_a] = half
        paths[element.out_b] = half
        return state._with_paths(paths)
    if isinstance(element, Mixer):
        a = paths.pop(element.in_a)
        b = paths.pop(element.in_b)
        kept = _merge([Term(t.amplitude * SQRT_HALF, t.modes) for t in a]
                      + [Term(t.amplitude * SQRT_HALF, t.modes) for t in b])
        lost = _merge([Term(t.amplitude * SQRT_HALF, t.modes) for t in a]
                      + [Term(-t.amplitude * SQRT_HALF, t.modes) for t in b])
        paths[element.out] = kept
        return state._with_paths(paths, state.discarded + max(terms_norm2(lost), 0.0))
    if isinstance(element, ElectronPhase):
        factor = np.exp(1j * element.phi)
        paths[element.path] = tuple(Term(t.amplitude * factor, t.modes) for t in paths[element.path])
        return state._with_paths(paths)
    if isinstance(element, OpticalPhase):
        energies = state.waveguides.get(element.waveguide, ())
        if not energies:
            return state
        ratios = [e / energies[0] for e in energies]
        for p, terms in paths.items():
            paths[p] = tuple(_optical_phase(t, element.waveguide, element.phi, ratios) for t in terms)
        return state._with_paths(paths)
    if isinstance(element, Coupler):
        paths[element.path] = tuple(_coupler(t, element.waveguide, element.coupling) for t in paths[element.path])
        return state._with_paths(paths)
    if isinstance(element, Detector):
        return state
    raise CircuitError(f"unknown circuit element {element!r}")


@dataclass(frozen=True)
class HeraldedOutcome:
    """Electron energy loss, its probability, and the normalised photonic
    state it heralds as ``((occupations, amplitude), ...)`` where occupations
    map waveguide -> per-mode photon numbers."""

    energy_loss: float
    probability: float
    components: tuple

    def amplitude(self, occupations: Mapping[str, tuple]) -> complex:
        key = {wg: tuple(n) for wg, n in occupations.items()}
        for occ, amp in self.components:
            if _same_occupation(occ, key):
                return amp
        return 0.0


def _same_occupation(a, b) -> bool:
    wgs = set(a) | set(b)
    for wg in wgs:
        x, y = tuple(a.get(wg, ())), tuple(b.get(wg, ()))
        n = max(len(x), len(y))
        if x + (0,) * (n - len(x)) != y + (0,) * (n - len(y)):
            return False
    return True


@dataclass(frozen=True)
class DetectionReport:
    current: float  # probability on the detected path
    discarded: float  # mixer sink plus undetected live paths
    heralds: tuple = ()
    unresolved: float = 0.0  # detected probability not listed in heralds

    def to_dict(self) -> dict:
        return {
            "current": self.current,
            "discarded": self.discarded,
            "unresolved": self.unresolved,
            "heralds": [
                {
                    "energy_loss_eV": h.energy_loss,
                    "probability": h.probability,
                    "components": [
                        {
                            "waveguide_occupations": {wg: list(n) for wg, n in occ.items()},
                            "re": float(np.real(amp)),
                            "im": float(np.imag(amp)),
                        }
                        for occ, amp in h.components
                    ],
                }
                for h in self.heralds
            ],
        }


def _enumerate_configs(log_weights, min_probability, max_configs):
    """Occupation tuples with weight above ``min_probability`` for one term.

    ``log_weights[m]`` holds log probabilities of each photon number in mode m
    (already multiplied into the term weight for m = 0).
    """
    bounds = [float(np.max(lw)) for lw in log_weights]
    rest = np.concatenate([np.cumsum(bounds[::-1])[::-1][1:], [0.0]])
    log_min = math.log(min_probability) if min_probability > 0 else -math.inf
    configs = np.zeros((1, 0), dtype=np.int64)
    logp = np.zeros(1)
    for m, lw in enumerate(log_weights):
        support = np.flatnonzero(np.isfinite(lw))
        if len(configs) * len(support) > max_configs:
            raise HeraldLimitError(
                f"more than {max_configs} heralded configurations; raise min_probability"
            )
        configs = np.hstack([np.repeat(configs, len(support), axis=0),
                             np.tile(support, len(configs))[:, None]])
        logp = np.repeat(logp, len(support)) + np.tile(lw[support], len(logp))
        keep = logp + rest[m] >= log_min
        configs, logp = configs[keep], logp[keep]
    return configs


def _heralds(terms, waveguides, min_probability, max_configs, tail_tolerance, cutoffs, energy_resolution):
    modes = [(wg, n) for wg in sorted(waveguides) for n in range(len(waveguides[wg]))]
    if not modes:
        prob = terms_norm2(terms)
        return [HeraldedOutcome(0.0, prob, (({}, 1.0 + 0j),))] if prob > 0 else []
    betas = np.array([[_mode_beta(t, wg, n) for wg, n in modes] for t in terms], dtype=complex)
    amps = np.array([t.amplitude for t in terms], dtype=complex)
    mode_cut = []
    for m, (wg, n) in enumerate(modes):
        mean = float(np.max(np.abs(betas[:, m]) ** 2))
        cut = rule_cutoff(mean)
        if cutoffs and wg in cutoffs:
            cut = cutoffs[wg][n]
        if poisson_tail(mean, cut) > tail_tolerance:
            raise TruncationError(f"cutoff {cut} too small for waveguide {wg!r} mode {n} (mean {mean:.4g})")
        mode_cut.append(cut)
    vectors = [[displace_vacuum(b, c, tail_tolerance=1.0) for b, c in zip(row, mode_cut)] for row in betas]

    found = []
    for j, row in enumerate(vectors):
        with np.errstate(divide="ignore"):
            logw = [np.log(np.abs(v) ** 2) for v in row]
        logw[0] = logw[0] + math.log(max(abs(amps[j]) ** 2, 1e-300))
        found.append(_enumerate_configs(logw, min_probability, max_configs))
    configs = np.unique(np.vstack(found), axis=0)
    if len(configs) > max_configs:
        raise HeraldLimitError(f"more than {max_configs} heralded configurations; raise min_probability")

    amplitude = np.zeros(len(configs), dtype=complex)
    for j, row in enumerate(vectors):
        contrib = np.full(len(configs), amps[j])
        for m, vec in enumerate(row):
            contrib = contrib * vec[configs[:, m]]
        amplitude += contrib
    prob = np.abs(amplitude) ** 2
    energy_per_mode = np.array([waveguides[wg][n] for wg, n in modes])
    energy = configs @ energy_per_mode
    keys = np.round(energy / energy_resolution).astype(np.int64)

    outcomes = []
    for key in np.unique(keys):
        idx = np.flatnonzero(keys == key)
        idx = idx[prob[idx] > 0]
        if len(idx) == 0:
            continue
        p = float(np.sum(prob[idx]))
        if p < min_probability:
            continue
        norm = math.sqrt(p)
        comps = []
        for i in idx[np.argsort(-prob[idx], kind="stable")]:
            occ = {}
            for m, (wg, n) in enumerate(modes):
                occ.setdefault(wg, []).append(int(configs[i, m]))
            comps.append(({wg: tuple(v) for wg, v in occ.items()}, complex(amplitude[i] / norm)))
        outcomes.append(HeraldedOutcome(float(np.mean(energy[idx])), p, tuple(comps)))
    return outcomes


def run(
    circuit: Circuit,
    *,
    min_probability: float = 0.0,
    max_configs: int = 2_000_000,
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
    cutoffs: Optional[Mapping[str, Sequence[int]]] = None,
    energy_resolution: float = 1e-9,
) -> DetectionReport:
    """Evolve a single incident electron through ``circuit`` from photon vacuum.

    For energy-resolving detectors the heralded outcomes are listed, grouped
    by total energy loss; outcomes below ``min_probability`` are omitted and
    their mass reported as ``unresolved``.
    """
    waveguides = circuit.waveguide_energies()
    state = JointState.incident(circuit.incident, waveguides)
    for el in circuit.elements:
        state = apply_element(state, el)
    det = circuit.detector
    current = state.path_probability(det.path)
    others = sum(state.path_probability(p) for p in state.paths if p != det.path)
    heralds = ()
    unresolved = 0.0
    if det.kind == "energy":
        heralds = tuple(_heralds(state.paths[det.path], waveguides, min_probability, max_configs,
                                 tail_tolerance, cutoffs, energy_resolution))
        unresolved = max(current - sum(h.probability for h in heralds), 0.0)
    return DetectionReport(current, state.discarded + others, heralds, unresolved)


@dataclass(frozen=True)
class NoonHerald:
    """Heralded ``(|N0,0> + e^{i delta}|0,N0>)/sqrt(2)`` across two waveguides."""

    n0: int
    probability: float
    delta: float
    weights: tuple  # component probabilities within the heralded state
    outcome: HeraldedOutcome


def heralded_noon_state(report: DetectionReport, n0: int, waveguides: Sequence[str]) -> NoonHerald:
    """Pick the outcome in which the electron lost ``n0`` fundamental photons."""
    if len(waveguides) != 2:
        raise CircuitError("a NOON herald needs exactly two waveguides")
    if not report.heralds:
        raise CircuitError("report has no energy-resolved outcomes")
    first, second = waveguides
    occ_first = {first: (n0,), second: (0,)}
    occ_second = {first: (0,), second: (n0,)}
    for h in report.heralds:
        a = h.amplitude(occ_first)
        b = h.amplitude(occ_second)
        if a != 0 or b != 0:
            if h.probability <= 0:
                break
            delta = float(np.angle(b / a)) if a != 0 and b != 0 else float("nan")
            return NoonHerald(n0, h.probability, delta, (abs(a) ** 2, abs(b) ** 2), h)
    raise CircuitError(f"no heralded outcome populates the N0={n0} NOON components; post-selection impossible")


def two_arm_sensor(coupling: Coupling, phi_e: float, phi_ell: float, detector: str = "current") -> Circuit:
    """Both electron arms pass one waveguide; the optical phase sits between them."""
    return Circuit("e0", (
        Splitter("e0", "a", "b"),
        Coupler("a", "wg", coupling),
        OpticalPhase("wg", phi_ell),
        Coupler("b", "wg", coupling),
        ElectronPhase("a", phi_e),
        Mixer("a", "b", "c"),
        Detector("c", detector),
    ))


def single_arm_sensor(coupling: Coupling, phi_e: float, phi_ell: float, detector: str = "current") -> Circuit:
    """Arm A passes the waveguide twice with the optical phase in between."""
    return Circuit("e0", (
        Splitter("e0", "a", "b"),
        Coupler("a", "wg", coupling),
        OpticalPhase("wg", phi_ell),
        Coupler("a", "wg", coupling),
        ElectronPhase("b", phi_e),
        Mixer("a", "b", "c"),
        Detector("c", detector),
    ))


def noon_source(coupling: Coupling, phi_e: float = 0.0, coupling_b: Optional[Coupling] = None) -> Circuit:
    """Each arm excites its own waveguide; energy-resolved detection after mixing."""
    elements = [
        Splitter("e0", "a", "b"),
        Coupler("a", "wg1", coupling),
        Coupler("b", "wg2", coupling_b or coupling),
    ]
    if phi_e:
        elements.append(ElectronPhase("a", phi_e))
    elements += [Mixer("a", "b", "c"), Detector("c", "energy")]
    return Circuit("e0", tuple(elements))
