"""Plain-text artifact formats.

* coefficients: CSV ``n,re,im`` with one row per nonzero frequency
* sampled functions: CSV ``j,re,im`` with rows j = 0..G-1 in order
* step functions: CSV ``start,re,im``, one row per arc
* grid masks: ``# grid G`` then ``start,stop`` rows of runs
* special products: ``r = ...`` followed by ``[g]`` and ``[h]`` coefficient blocks

Floats are written with ``repr`` so a round trip is exact and repeated runs
produce identical bytes.
"""

from __future__ import annotations

import csv
import io as _io
import os
import tempfile
from pathlib import Path

import numpy as np

from .sampling import SampledFunction, StepFunction, mask_runs
from .trigpoly import SpecialProduct, TrigPoly


class FormatError(ValueError):
    pass


def _num(x: float) -> str:
    return repr(float(x))


def atomic_write(path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _rows(text: str, header: list[str]) -> list[list[str]]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise FormatError("empty file")
    rows = list(csv.reader(lines))
    if [c.strip() for c in rows[0]] != header:
        raise FormatError(f"expected header {','.join(header)}, got {','.join(rows[0])}")
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"line {i}: expected {len(header)} fields")
    return rows[1:]


def _complex_rows(rows, first=int):
    try:
        keys = [first(r[0]) for r in rows]
        vals = [complex(float(r[1]), float(r[2])) for r in rows]
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    return keys, np.asarray(vals, dtype=np.complex128)


# coefficients


def coefficients_to_text(P: TrigPoly) -> str:
    out = ["n,re,im"]
    out += [f"{n},{_num(c.real)},{_num(c.imag)}" for n, c in zip(P.freqs.tolist(), P.coeffs)]
    return "\n".join(out) + "\n"


def coefficients_from_text(text: str) -> TrigPoly:
    freqs, vals = _complex_rows(_rows(text, ["n", "re", "im"]))
    if len(set(freqs)) != len(freqs):
        raise FormatError("duplicate frequency")
    return TrigPoly(np.asarray(freqs, dtype=np.int64), vals)


def write_coefficients(path, P: TrigPoly) -> None:
    atomic_write(path, coefficients_to_text(P))


def read_coefficients(path) -> TrigPoly:
    return coefficients_from_text(Path(path).read_text())


# sampled functions


def sampled_to_text(f: SampledFunction) -> str:
    out = ["j,re,im"]
    out += [f"{j},{_num(v.real)},{_num(v.imag)}" for j, v in enumerate(f.values)]
    return "\n".join(out) + "\n"


def sampled_from_text(text: str) -> SampledFunction:
    idx, vals = _complex_rows(_rows(text, ["j", "re", "im"]))
    if idx != list(range(len(idx))):
        raise FormatError("sample rows must be j = 0..G-1 in order")
    return SampledFunction(len(idx), vals)


# step functions


def step_to_text(S: StepFunction) -> str:
    out = ["start,re,im"]
    out += [f"{_num(b)},{_num(v.real)},{_num(v.imag)}" for b, v in zip(S.breakpoints, S.values)]
    return "\n".join(out) + "\n"


def step_from_text(text: str) -> StepFunction:
    starts, vals = _complex_rows(_rows(text, ["start", "re", "im"]), first=float)
    return StepFunction(starts, vals)


def read_function(path, G: int | None = None) -> SampledFunction:
    """Load a target given either as samples or as a step function (sampled on G)."""
    text = Path(path).read_text()
    header = next((ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")), "")
    if header.replace(" ", "").startswith("start,"):
        if G is None:
            raise FormatError("a grid size is needed to sample a step function")
        return step_from_text(text).sample(G)
    f = sampled_from_text(text)
    if G is not None and f.G != G:
        raise FormatError(f"file holds {f.G} samples, expected {G}")
    return f


# masks


def mask_to_text(mask) -> str:
    mask = np.asarray(mask, dtype=bool)
    out = [f"# grid {mask.size}", "start,stop"]
    out += [f"{a},{b}" for a, b in mask_runs(mask)]
    return "\n".join(out) + "\n"


def mask_from_text(text: str) -> np.ndarray:
    first = text.splitlines()[0] if text else ""
    if not first.startswith("# grid "):
        raise FormatError("mask file must start with '# grid G'")
    G = int(first.split()[2])
    mask = np.zeros(G, dtype=bool)
    for a, b in _rows(text, ["start", "stop"]):
        start, stop = int(a), int(b)
        mask[np.arange(start, stop) % G] = True
    return mask


# special products


def product_to_text(P: SpecialProduct) -> str:
    return (f"r = {P.r}\n[g]\n" + coefficients_to_text(P.g) + "[h]\n"
            + coefficients_to_text(P.h))


def product_from_text(text: str, check: bool = True) -> SpecialProduct:
    head, _, rest = text.partition("[g]\n")
    g_text, sep, h_text = rest.partition("[h]\n")
    key, _, value = head.strip().partition("=")
    if key.strip() != "r" or not sep:
        raise FormatError("special product file needs 'r = ...', [g] and [h] blocks")
    return SpecialProduct(coefficients_from_text(g_text), coefficients_from_text(h_text),
                          int(value), check=check)


def write_product(path, P: SpecialProduct) -> None:
    atomic_write(path, product_to_text(P))


def read_product(path, check: bool = True) -> SpecialProduct:
    return product_from_text(Path(path).read_text(), check=check)


def rows_to_csv(header: list[str], rows) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_num(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()
