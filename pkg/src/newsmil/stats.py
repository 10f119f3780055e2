"""Coverage statistics and annotator agreement.

Per-city ratios of predicted unique incidents to officially reported
counts feed a Welch one-way ANOVA (robust to unequal variances), with
pairwise Welch t-tests and Holm-Bonferroni adjustment as post-hoc
tests, plus Cohen's kappa for inter-annotator agreement.

p-values come from this module's own regularized incomplete beta
(continued-fraction evaluation), so the statistics stack has no
numeric dependency beyond lgamma and stays property-testable.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .dedup import IncidentRecord, find_duplicates


class StatsError(ValueError):
    pass


# -- regularized incomplete beta ---------------------------------------------

_CF_EPS = 1e-15
_CF_TINY = 1e-300
_CF_MAX_ITER = 500


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise StatsError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b), absolute error well under 1e-10 over the tested
    parameter range; satisfies I_x(a,b) + I_(1-x)(b,a) = 1."""
    if a <= 0 or b <= 0:
        raise StatsError(f"beta parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise StatsError(f"x must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log(1.0 - x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def f_sf(f_value: float, df1: float, df2: float) -> float:
    """Survival function of the F distribution."""
    if f_value <= 0.0:
        return 1.0
    x = df2 / (df2 + df1 * f_value)
    return regularized_incomplete_beta(x, df2 / 2.0, df1 / 2.0)


def t_sf_two_sided(t_value: float, df: float) -> float:
    """Two-sided p-value for a t statistic."""
    x = df / (df + t_value * t_value)
    return regularized_incomplete_beta(x, df / 2.0, 0.5)


# -- Welch one-way ANOVA -------------------------------------------------------


@dataclass
class WelchResult:
    F: float
    df1: int
    df2: float
    p: float

    def to_json(self) -> dict:
        return {"F": self.F, "df1": self.df1, "df2": self.df2, "p": self.p}


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs)


def _sample_var(xs: Sequence[float]) -> float:
    m = _mean(xs)
    return sum((x - m) ** 2 for x in xs) / (len(xs) - 1)


def _group_values(group) -> list[float]:
    values = list(group.ratios) if hasattr(group, "ratios") else list(group)
    return [float(v) for v in values]


def _validated_groups(groups) -> list[list[float]]:
    values = [_group_values(g) for g in groups]
    if len(values) < 2:
        raise StatsError(f"need at least 2 groups, got {len(values)}")
    for i, g in enumerate(values):
        if len(g) < 2:
            raise StatsError(f"group {i} has n={len(g)} < 2")
        if _sample_var(g) <= 0.0:
            raise StatsError(f"group {i} has zero variance")
    return values


def welch_anova(groups) -> WelchResult:
    """Welch (1951) heteroscedastic one-way test.

    With weights w_j = n_j / s_j^2 and weighted grand mean m_w:
        numerator   = sum(w_j (m_j - m_w)^2) / (g - 1)
        denominator = 1 + 2 (g - 2) / (g^2 - 1) * L
        df2         = (g^2 - 1) / (3 L)
    where L = sum((1 - w_j / sum(w))^2 / (n_j - 1)).
    """
    values = _validated_groups(groups)
    g = len(values)
    n = [len(v) for v in values]
    means = [_mean(v) for v in values]
    variances = [_sample_var(v) for v in values]
    w = [n_j / v_j for n_j, v_j in zip(n, variances)]
    w_sum = sum(w)
    grand = sum(w_j * m_j for w_j, m_j in zip(w, means)) / w_sum
    numerator = sum(w_j * (m_j - grand) ** 2 for w_j, m_j in zip(w, means)) / (g - 1)
    lam = sum((1.0 - w_j / w_sum) ** 2 / (n_j - 1) for w_j, n_j in zip(w, n))
    f_value = numerator / (1.0 + 2.0 * (g - 2) / (g * g - 1.0) * lam)
    df2 = (g * g - 1.0) / (3.0 * lam)
    return WelchResult(F=f_value, df1=g - 1, df2=df2, p=f_sf(f_value, g - 1, df2))


@dataclass
class PairwiseTest:
    group_a: str
    group_b: str
    t: float
    df: float
    p_raw: float
    p_adjusted: float

    def to_json(self) -> dict:
        return {"group_a": self.group_a, "group_b": self.group_b, "t": self.t,
                "df": self.df, "p_raw": self.p_raw, "p_adjusted": self.p_adjusted}


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> tuple[float, float, float]:
    """Two-sample unequal-variance t-test with Welch-Satterthwaite df;
    returns (t, df, two-sided p)."""
    va, vb = _sample_var(a), _sample_var(b)
    na, nb = len(a), len(b)
    se_a, se_b = va / na, vb / nb
    se2 = se_a + se_b
    t_value = (_mean(a) - _mean(b)) / math.sqrt(se2)
    df = se2 * se2 / (se_a * se_a / (na - 1) + se_b * se_b / (nb - 1))
    return t_value, df, t_sf_two_sided(t_value, df)


def holm_adjust(p_values: Sequence[float]) -> list[float]:
    """Holm-Bonferroni step-down adjustment; monotone in rank and
    always >= the raw p-value."""
    m = len(p_values)
    order = sorted(range(m), key=lambda i: p_values[i])
    adjusted = [0.0] * m
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, (m - rank) * p_values[idx])
        adjusted[idx] = min(1.0, running)
    return adjusted


def posthoc_pairwise(groups, names: Sequence[str] | None = None) -> list[PairwiseTest]:
    """Welch t-test per group pair, Holm-adjusted across all pairs."""
    values = _validated_groups(groups)
    if names is None:
        names = [getattr(g, "crime_type", f"group{i}") for i, g in enumerate(groups)]
    pairs = [(i, j) for i in range(len(values)) for j in range(i + 1, len(values))]
    raw = []
    for i, j in pairs:
        t_value, df, p = welch_t_test(values[i], values[j])
        raw.append((i, j, t_value, df, p))
    adjusted = holm_adjust([p for *_, p in raw])
    return [PairwiseTest(names[i], names[j], t_value, df, p, p_adj)
            for (i, j, t_value, df, p), p_adj in zip(raw, adjusted)]


# -- Cohen's kappa ---------------------------------------------------------------


def cohen_kappa(labels_a: Sequence, labels_b: Sequence) -> float:
    """Chance-corrected agreement between two paired label lists."""
    if len(labels_a) != len(labels_b):
        raise StatsError(
            f"label lists differ in length: {len(labels_a)} vs {len(labels_b)}")
    n = len(labels_a)
    if n == 0:
        raise StatsError("need at least one label pair")
    observed = sum(1 for x, y in zip(labels_a, labels_b) if x == y) / n
    categories = set(labels_a) | set(labels_b)
    expected = 0.0
    for c in categories:
        pa = sum(1 for x in labels_a if x == c) / n
        pb = sum(1 for y in labels_b if y == c) / n
        expected += pa * pb
    if expected >= 1.0:
        warnings.warn("chance agreement is 1 (both annotators constant); "
                      "kappa degenerates")
        return 1.0 if observed == 1.0 else 0.0
    return (observed - expected) / (1.0 - expected)


# -- official counts and coverage ratios --------------------------------------------


def _norm(text: str) -> str:
    return " ".join(text.strip().lower().split())


@dataclass
class OfficialCounts:
    counts: dict[tuple[str, str, str], int]

    def get(self, city: str, state: str, crime_type: str) -> int | None:
        return self.counts.get((_norm(city), _norm(state), _norm(crime_type)))


OFFICIAL_HEADER = ["city", "state", "crime_type", "count"]


def load_official_counts(path: str | Path) -> OfficialCounts:
    counts: dict[tuple[str, str, str], int] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != OFFICIAL_HEADER:
            raise StatsError(
                f"official counts header must be {','.join(OFFICIAL_HEADER)}, got {header}")
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 4:
                raise StatsError(f"row {rownum}: expected 4 columns, got {len(row)}")
            city, state, crime_type, count_text = (cell.strip() for cell in row)
            try:
                count = int(count_text)
            except ValueError as exc:
                raise StatsError(f"row {rownum}: count {count_text!r} is not an integer") from exc
            if count < 0:
                raise StatsError(f"row {rownum}: negative count {count}")
            key = (_norm(city), _norm(state), _norm(crime_type))
            if key in counts:
                raise StatsError(f"row {rownum}: duplicate entry for {key}")
            counts[key] = count
    return OfficialCounts(counts)


@dataclass
class RatioSample:
    crime_type: str
    cities: list[str]
    ratios: list[float]

    def to_json(self) -> dict:
        return {"crime_type": self.crime_type, "cities": self.cities,
                "ratios": self.ratios}


def coverage_ratios(records: Sequence[IncidentRecord], official: OfficialCounts,
                    crime_type: str) -> RatioSample:
    """Unique predicted incidents over the official count, per city.

    Only cities present in both sources with a positive official count
    contribute; incident records are deduplicated before counting.
    """
    report = find_duplicates(records)
    by_id = {r.article_id: r for r in records}
    unique_per_city: dict[tuple[str, str], int] = {}
    city_display: dict[tuple[str, str], str] = {}
    for cluster in report.clusters:
        rec = by_id[cluster[0]]
        key = (_norm(rec.city), _norm(rec.state))
        unique_per_city[key] = unique_per_city.get(key, 0) + 1
        city_display.setdefault(key, rec.city)
    cities, ratios = [], []
    for key in sorted(unique_per_city):
        count = official.get(key[0], key[1], crime_type)
        if count is None or count == 0:
            continue
        cities.append(city_display[key])
        ratios.append(unique_per_city[key] / count)
    if not cities:
        warnings.warn(f"no city has both predictions and official counts for "
                      f"{crime_type!r}")
    return RatioSample(crime_type, cities, ratios)
