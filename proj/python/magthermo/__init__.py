"""Thermodynamics of a Fermi gas in a constant magnetic field."""

import json

from ._core import (
    BoxSpec,
    MagthermoError,
    box_observables,
    code_version,
    density_bulk,
    fermi_f,
    first_order_term_verify,
    fit_rate,
    free_kernel,
    heat_diagonal,
    heat_diagonal_domega,
    mehler,
    pressure_bulk,
    set_thread_count,
    spectrum,
    susceptibility_bulk,
)
from ._core import _run_convergence_json


def run_convergence(study, cache_dir=""):
    """Run a finite-size study given as a dict; returns the report as a dict."""
    return json.loads(_run_convergence_json(json.dumps(study), str(cache_dir)))


__all__ = [
    "BoxSpec",
    "MagthermoError",
    "box_observables",
    "code_version",
    "density_bulk",
    "fermi_f",
    "first_order_term_verify",
    "fit_rate",
    "free_kernel",
    "heat_diagonal",
    "heat_diagonal_domega",
    "mehler",
    "pressure_bulk",
    "run_convergence",
    "set_thread_count",
    "spectrum",
    "susceptibility_bulk",
]
