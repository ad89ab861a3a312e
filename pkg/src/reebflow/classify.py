"""Verdicts: is a transition-time profile that of the standard flow?

The invariant sigma vanishes exactly on the standard class, but a finite
grid cannot certify a limit, so the verdict uses two thresholds with an
explicit inconclusive band:

    standard       tail supremum < tau_std and the trend is vanishing
    nonstandard    tail supremum >= tau_ns
    inconclusive   anything between

``self_similarity_scan`` checks supplied witnesses lam * f = f o h + k; it
never searches for h.  Passing every supplied witness is necessary but not
sufficient for standardness: a single scale can be exactly self-similar on
a profile whose oscillation still blows up, and the scan report says so
when it happens.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .efunc import EFunction, GridSpec, diagnose_class
from .flow import DEFAULT_TRANSVERSAL, Flow, Transversal, extract_transition
from .oscillation import (
    EquivalenceWitness,
    SigmaEstimate,
    WitnessReport,
    check_witness,
    sigma_estimate,
)

__all__ = [
    "ClassificationReport",
    "ScanReport",
    "classify",
    "self_similarity_scan",
    "flow_classify",
]


@dataclass(frozen=True)
class ClassificationReport:
    sigma: SigmaEstimate
    verdict: str  # "standard" | "nonstandard" | "inconclusive"
    tau_std: float
    tau_ns: float
    witnesses: tuple[WitnessReport, ...]
    shifts: dict
    provenance: str
    warnings: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "sigma_hat": float(self.sigma.sigma_hat),
            "trend": self.sigma.trend,
            "s_m": [float(v) for v in self.sigma.s_m],
            "witnesses": [w.to_json() for w in self.witnesses],
            "shifts": self.shifts,
            "provenance": self.provenance,
            "tau_std": float(self.tau_std),
            "tau_ns": float(self.tau_ns),
            "warnings": list(self.warnings),
        }


def classify(
    f: EFunction,
    g: GridSpec,
    tau_std: float = 1e-3,
    tau_ns: float = 1e-1,
    variant: str = "star",
    tail_window: int = 8,
    provenance: str = "builtin",
    shifts: dict | None = None,
    witnesses: tuple[WitnessReport, ...] = (),
) -> ClassificationReport:
    if not tau_std < tau_ns:
        raise ValueError(f"need tau_std < tau_ns, got {tau_std:g} >= {tau_ns:g}")
    warnings = tuple(diagnose_class(f, g))
    sigma = sigma_estimate(f, g, variant=variant, tail_window=tail_window)
    if sigma.sigma_hat >= tau_ns:
        verdict = "nonstandard"
    elif sigma.sigma_hat < tau_std and sigma.trend == "vanishing":
        verdict = "standard"
    else:
        verdict = "inconclusive"
    return ClassificationReport(
        sigma, verdict, tau_std, tau_ns, witnesses, shifts or {}, provenance, warnings
    )


@dataclass(frozen=True)
class ScanReport:
    results: tuple[WitnessReport, ...]
    all_passed: bool
    verdict: str
    note: str

    def to_json(self) -> dict:
        return {
            "witnesses": [r.to_json() for r in self.results],
            "all_pass": bool(self.all_passed),
            "verdict": self.verdict,
            "note": self.note,
        }


def self_similarity_scan(
    f: EFunction,
    witnesses: Sequence[EquivalenceWitness],
    g: GridSpec,
    tol: float = 1e-9,
    tau_std: float = 1e-3,
    tau_ns: float = 1e-1,
) -> ScanReport:
    """Check each supplied witness lam * f = f o h + k and relate to the verdict."""
    results = tuple(check_witness(f, None, w, g, tol) for w in witnesses)
    all_passed = bool(results) and all(r.passed for r in results)
    verdict = classify(f, g, tau_std, tau_ns).verdict
    if all_passed and verdict == "standard":
        note = "all supplied scales pass and the profile is standard"
    elif all_passed and verdict == "nonstandard":
        note = (
            "all supplied scales pass yet the profile is nonstandard: a finite "
            "witness list does not certify self-similarity at every scale"
        )
    elif not all_passed and verdict == "nonstandard":
        note = "witness failures are consistent with the nonstandard verdict"
    else:
        note = "witness failures on a standard/inconclusive profile: check the supplied h and k"
    return ScanReport(results, all_passed, verdict, note)


def flow_classify(
    F: Flow,
    tv: Transversal = DEFAULT_TRANSVERSAL,
    g: GridSpec | None = None,
    tau_std: float = 1e-3,
    tau_ns: float = 1e-1,
) -> ClassificationReport:
    """Extract the transition-time function of a flow, then classify it."""
    g = g or GridSpec()
    f = extract_transition(F, g, tv)
    shifts = {"flow_shift": float(F.shift), "time_factor": float(F.lam)}
    report = classify(f, g, tau_std, tau_ns, provenance="extracted-from-flow", shifts=shifts)
    return report
