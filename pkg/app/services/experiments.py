"""
Experiment Service
Orchestrates module operations into report rows and runs the golden regression sets
"""

import math
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import ConsistencyError, GoldenMismatchError, PreconditionError
from app.models.schemas import (
    DiscrepancyQuery,
    ExperimentConfig,
    GroupShape,
    Report,
    RhoSpec,
    SieveInstance,
)
from app.services.curve_lab import curve_lab
from app.services.occurrence import occurrence_service
from app.services.primes import is_prime
from app.services.report import format_cell, read_csv, write_report
from app.services.sieve_estimates import sieve_estimator

# Column schema of every subcommand; CSV headers and JSON key order follow these exactly
SCHEMAS: Dict[str, List[str]] = {
    "occurs": ["m", "k", "occurs", "witnesses", "candidates"],
    "count": ["M", "K", "count", "strategy"],
    "count-r": ["M", "K", "count_r", "strategy"],
    "density-scan": ["M", "K", "density"],
    "shapes-for-prime": ["p", "m", "k", "N"],
    "curves": ["p", "a", "b", "N", "trace", "m", "k"],
    "verify-ruck": ["p", "orders", "shapes", "status"],
    "m-of-g": ["m", "k", "N", "M_of_G", "censored", "mode"],
    "aut": ["m", "k", "aut", "method"],
    "cl-ratio": ["m", "k", "N", "M_of_G", "aut", "lhs", "rhs_unnormalized", "censored"],
    "rho": ["k", "j", "d", "rho", "rho_brute"],
    "sieve": ["k", "j", "M", "y", "survivors", "main_term"],
    "legendre": ["k", "j", "M", "y", "survivors", "legendre"],
    "euler-product": ["d", "d1", "a", "y_lo", "y", "product"],
    "fund-disc": ["d", "d1", "a"],
    "t-sum": ["d", "K", "T"],
    "discrepancy": ["y", "h", "q", "a", "E"],
    "pi-discrepancy": ["x", "q", "a", "discrepancy"],
    "ratios": ["M", "K", "count", "thm12", "thm13_density", "thm14_ratio"],
    "window-count": ["m", "k", "primes"],
    "heuristic": ["M", "K", "heuristic_density"],
    "l1": ["d", "terms", "l1"],
    "golden": ["set", "file", "rows", "status"],
}

GOLDEN_SETS: Dict[str, List[str]] = {
    "default": ["count_table", "census_97", "euler_table"],
    "slow": ["theorem_trend", "thm12_table"],
}

GOLDEN_SCHEMAS: Dict[str, List[str]] = {
    "count_table": ["M", "K", "count"],
    "census_97": ["p", "m", "k", "N", "count"],
    "euler_table": ["d", "d1", "a", "y", "product", "l1_reference"],
    "theorem_trend": SCHEMAS["ratios"],
    "thm12_table": SCHEMAS["ratios"],
}


def _row(command: str, *values: Any) -> Dict[str, Any]:
    return dict(zip(SCHEMAS[command], values))


def _cells_match(expected: str, actual: str) -> bool:
    if expected == actual:
        return True
    try:
        int(expected), int(actual)
        return False  # integers compare exactly
    except ValueError:
        pass
    try:
        return math.isclose(float(expected), float(actual), rel_tol=settings.GOLDEN_REL_TOL)
    except ValueError:
        return False


class ExperimentRunner:
    """Maps one ExperimentConfig onto the services and returns its Report"""

    def run(self, config: ExperimentConfig) -> Report:
        if config.command not in SCHEMAS:
            raise PreconditionError(f"unknown command {config.command!r}")
        handler: Callable = getattr(self, "_" + config.command.replace("-", "_"))

        logger.info("{} started with {}", config.command, config.params)
        start = time.perf_counter()
        rows = handler(config.params, config)
        logger.info("{} finished in {} ms ({} rows)", config.command, int((time.perf_counter() - start) * 1000), len(rows))
        return Report(command=config.command, columns=SCHEMAS[config.command], rows=rows)

    # Occurrence

    def _occurs(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        result = occurrence_service.occurs(params["m"], params["k"], want_witnesses=params.get("witnesses", False))
        return [_row(
            "occurs",
            params["m"],
            params["k"],
            result.occurs,
            [w.p for w in result.witnesses],
            result.candidates,
        )]

    def _count(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        report = occurrence_service.count_S(
            params["M"], params["K"], params.get("strategy", "auto"), config.threads, config.mem_budget
        )
        return [_row("count", report.M, report.K, report.count, report.strategy)]

    def _count_r(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        M, K = params["M"], params["K"]
        strategy = occurrence_service.resolve_strategy(M, K, params.get("strategy", "auto"), config.mem_budget)
        count = occurrence_service.count_R(M, K, strategy, config.threads, config.mem_budget)
        return [_row("count-r", M, K, count, strategy)]

    def _density_scan(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        scan = occurrence_service.density_scan(
            params["M"], params["k_grid"], params.get("strategy", "auto"), config.threads, config.mem_budget
        )
        return [_row("density-scan", params["M"], K, density) for K, density in scan]

    def _shapes_for_prime(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        p = params["p"]
        return [_row("shapes-for-prime", p, s.m, s.k, s.order) for s in occurrence_service.shapes_for_prime(p, params["M"])]

    def _window_count(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        m, k = params["m"], params["k"]
        return [_row("window-count", m, k, occurrence_service.window_prime_count(m, k))]

    def _heuristic(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        M, K = params["M"], params["K"]
        return [_row("heuristic", M, K, occurrence_service.heuristic_density(M, K))]

    def _ratios(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        r = sieve_estimator.theorem_ratios(params["M"], params["K"], params.get("strategy", "auto"), config.threads)
        return [_row("ratios", r.M, r.K, r.count, r.thm12, r.thm13_density, r.thm14_ratio)]

    # Curves

    def _curves(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        p = params["p"]
        if params.get("a") is not None:
            pairs = [(params["a"], params["b"])]
        else:
            pairs = [(a, b) for a in range(p) for b in range(p) if (4 * a ** 3 + 27 * b * b) % p]
        rows = []
        for a, b in pairs:
            rec = curve_lab.curve_record(p, a, b)
            rows.append(_row("curves", rec.p, rec.a, rec.b, rec.N, rec.trace, rec.shape.m, rec.shape.k))
        return rows

    def _verify_ruck(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        rows = []
        for p in range(max(5, params.get("p_min", 5)), params["p_max"] + 1):
            if not is_prime(p):
                continue
            observed: Dict[int, set] = {}
            for shape, _ in curve_lab.census(p, threads=config.threads).as_dict().items():
                if (p - 1) % shape.m or (p + 1 - shape.order) ** 2 >= 4 * p:
                    raise ConsistencyError(f"p={p}: census shape {shape.sort_key()} breaks Hasse or m | p - 1")
                observed.setdefault(shape.order, set()).add(shape)

            s = math.isqrt(4 * p)
            orders = [N for N in range(max(1, p + 1 - s), p + 2 + s) if (p + 1 - N) ** 2 < 4 * p]
            for N in orders:
                allowed = set(curve_lab.ruck_enumerate(N, p))
                if observed.get(N, set()) != allowed:
                    raise ConsistencyError(
                        f"p={p}, N={N}: census shapes {sorted(x.sort_key() for x in observed.get(N, ()))} "
                        f"differ from admissible {sorted(x.sort_key() for x in allowed)}"
                    )
            rows.append(_row("verify-ruck", p, len(orders), sum(len(v) for v in observed.values()), "OK"))
        return rows

    def _m_of_g(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        shape = GroupShape(m=params["m"], k=params["k"])
        mode = params.get("mode", "raw")
        result = curve_lab.M_of_G(shape, mode, config.threads)
        return [_row("m-of-g", shape.m, shape.k, shape.order, result.total, result.censored, mode)]

    def _aut(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        shape = GroupShape(m=params["m"], k=params["k"])
        method = params.get("method", "closed")
        return [_row("aut", shape.m, shape.k, curve_lab.aut_order(shape, method), method)]

    def _cl_ratio(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        shape = GroupShape(m=params["m"], k=params["k"])
        r = curve_lab.cohen_lenstra_ratio(shape, params.get("mode", "raw"), config.threads)
        return [_row("cl-ratio", shape.m, shape.k, shape.order, r.m_of_g, r.aut, r.lhs, r.rhs_unnormalized, r.censored)]

    # Sieve

    def _rho(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        spec = RhoSpec(k=params["k"], j=params["j"])
        d = params["d"]
        return [_row("rho", spec.k, spec.j, d, sieve_estimator.rho(spec, d), sieve_estimator.rho_brute(spec, d))]

    def _sieve(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        inst = SieveInstance(k=params["k"], j=params["j"], M=params["M"])
        y = params["y"]
        return [_row(
            "sieve", inst.k, inst.j, inst.M, y,
            sieve_estimator.sieve_survivors(inst, y),
            sieve_estimator.sieve_main_term(inst, y),
        )]

    def _legendre(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        inst = SieveInstance(k=params["k"], j=params["j"], M=params["M"])
        y = params["y"]
        return [_row(
            "legendre", inst.k, inst.j, inst.M, y,
            sieve_estimator.sieve_survivors(inst, y),
            sieve_estimator.legendre_survivors(inst, y),
        )]

    def _euler_product(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        char = sieve_estimator.character_spec(params["d"])
        y, y_lo = params["y"], params.get("y_lo", 0)
        return [_row("euler-product", char.d, char.d1, char.a, y_lo, y, sieve_estimator.euler_product(char, y, y_lo))]

    def _fund_disc(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        d = params["d"]
        d1, a = sieve_estimator.fundamental_discriminant(d)
        return [_row("fund-disc", d, d1, a)]

    def _t_sum(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        return [_row("t-sum", params["d"], params["K"], sieve_estimator.T_sum(params["d"], params["K"]))]

    def _discrepancy(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        query = DiscrepancyQuery(y=params["y"], h=params["h"], q=params.get("q", 1), a=params.get("a", 0))
        return [_row("discrepancy", query.y, query.h, query.q, query.a, sieve_estimator.psi_discrepancy(query))]

    def _pi_discrepancy(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        x, q, a = params["x"], params.get("q", 1), params.get("a", 0)
        return [_row("pi-discrepancy", x, q, a, sieve_estimator.pi_discrepancy(x, q, a))]

    def _l1(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        d, terms = params["d"], params.get("terms", 10 ** 6)
        return [_row("l1", d, terms, sieve_estimator.l1_reference(d, terms))]

    # Golden files

    def _golden(self, params: Dict, config: ExperimentConfig) -> List[Dict]:
        which = params.get("set", "default")
        directory = Path(params.get("directory") or settings.GOLDEN_DIR)
        return self.golden_check(directory, which, params.get("bless", False), config.threads)

    def golden_check(self, directory: Path, which: str = "default", bless: bool = False, threads: Optional[int] = None) -> List[Dict]:
        """Re-run a golden set and diff it against (or bless it into) directory"""
        if which not in GOLDEN_SETS:
            raise PreconditionError(f"unknown golden set {which!r}, expected one of {sorted(GOLDEN_SETS)}")
        rows, failures = [], []
        for name in GOLDEN_SETS[which]:
            report = self.golden_report(name, threads)
            path = directory / f"{name}.csv"
            if bless:
                write_report(report, "csv", str(path))
                status = "blessed"
            else:
                problem = self._diff(path, report)
                status = "ok" if problem is None else "mismatch"
                if problem:
                    failures.append(problem)
            logger.info("golden {}: {}", path, status)
            rows.append(_row("golden", which, path.name, len(report.rows), status))

        if failures:
            raise GoldenMismatchError("; ".join(failures))
        return rows

    def golden_report(self, name: str, threads: Optional[int] = None) -> Report:
        builders = {
            "count_table": self._golden_count_table,
            "census_97": self._golden_census_97,
            "euler_table": self._golden_euler_table,
            "theorem_trend": lambda t: self._golden_ratios([(10, 10 ** 5), (10 ** 4, 4)], t),
            "thm12_table": lambda t: self._golden_ratios([(10 ** 3, 4), (10 ** 4, 4), (10 ** 5, 4)], t),
        }
        return Report(command=name, columns=GOLDEN_SCHEMAS[name], rows=builders[name](threads))

    def _golden_count_table(self, threads: Optional[int]) -> List[Dict]:
        matrix = occurrence_service.occurrence_matrix(64, 64, "direct", threads)
        prefix = matrix.astype(np.int64).cumsum(axis=0).cumsum(axis=1)
        return [
            {"M": M, "K": K, "count": int(prefix[M - 1, K - 1])}
            for M in range(1, 65)
            for K in range(1, 65)
        ]

    def _golden_census_97(self, threads: Optional[int]) -> List[Dict]:
        census = curve_lab.census(97, "raw", threads)
        return [
            {"p": 97, "m": c.shape.m, "k": c.shape.k, "N": c.shape.order, "count": c.count}
            for c in census.counts
        ]

    def _golden_euler_table(self, threads: Optional[int]) -> List[Dict]:
        rows = []
        for d in (3, 4, 7, 8, 11):
            char = sieve_estimator.character_spec(d)
            rows.append({
                "d": d,
                "d1": char.d1,
                "a": char.a,
                "y": 10 ** 5,
                "product": sieve_estimator.euler_product(char, 10 ** 5),
                "l1_reference": sieve_estimator.l1_reference(d),
            })
        return rows

    def _golden_ratios(self, boxes, threads: Optional[int]) -> List[Dict]:
        rows = []
        for M, K in boxes:
            r = sieve_estimator.theorem_ratios(M, K, "direct", threads)
            rows.append(dict(zip(SCHEMAS["ratios"], (r.M, r.K, r.count, r.thm12, r.thm13_density, r.thm14_ratio))))
        return rows

    def _diff(self, path: Path, report: Report) -> Optional[str]:
        """First difference between a blessed file and a fresh report, None when they agree"""
        expected = read_csv(path)
        if expected and list(expected[0].keys()) != report.columns:
            return f"{path}: header {list(expected[0].keys())} != {report.columns}"
        if len(expected) != len(report.rows):
            return f"{path}: {len(expected)} blessed rows, {len(report.rows)} computed"
        for index, (old, new) in enumerate(zip(expected, report.rows), start=1):
            for column in report.columns:
                actual = format_cell(new[column])
                if not _cells_match(old[column], actual):
                    return f"{path}: row {index}, column {column}: blessed {old[column]}, computed {actual}"
        return None


# Singleton instance
experiment_runner = ExperimentRunner()
