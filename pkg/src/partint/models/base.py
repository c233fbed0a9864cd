"""Common container for catalog models."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from partint.expr import Expression, as_expression
from partint.poisson import Chart


@dataclass(frozen=True, eq=False)
class Model:
    """A Hamiltonian on a chart, with named observables and alternative Hamiltonians.

    ``box`` gives a per-variable sampling interval used by the samplers in
    :mod:`partint.reduction`; variables missing from it default to [-1, 1].
    ``sampler``, when set, draws a full phase vector from a numpy Generator
    instead (used where the box would produce unrealizable geometry).
    """

    name: str
    chart: Chart
    hamiltonian: Expression
    observables: Mapping[str, Expression] = field(default_factory=dict)
    hamiltonians: Mapping[str, Expression] = field(default_factory=dict)
    box: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    description: str = ""
    sampler: Callable | None = None
    params: Mapping[str, object] = field(default_factory=dict)

    def resolve(self, text) -> Expression:
        """Look ``text`` up as a named Hamiltonian/observable, else parse it."""
        if isinstance(text, Expression):
            e = text
        elif text in self.hamiltonians:
            e = self.hamiltonians[text]
        elif text in self.observables:
            e = self.observables[text]
        elif text == "H":
            e = self.hamiltonian
        else:
            e = as_expression(text)
        self.chart.check_expression(e)
        return e

    def sampling_box(self) -> dict[str, tuple[float, float]]:
        return {name: tuple(self.box.get(name, (-1.0, 1.0))) for name in self.chart.names}
