"""Experiment registry and parallel parameter sweeps"""

import dataclasses
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
from tqdm import tqdm

from analysis.observables import (
    CHARGE_TOL,
    commutator_norm,
    diagonal_ensemble,
    entanglement_entropy,
    initial_state,
    ite_average,
    level_spacing_stats,
    magnetization_series,
    sff_averaged,
    sff_dip_time,
    steady_state_average,
    thermalization_time,
)
from analysis.xxzmap import verify_obc, verify_pbc_k0
from core.basis import Boundary, constrained_sector_basis, enumerate_basis, lucas
from core.config import RunConfig
from core.errors import ConfigError, NumericalError
from core.hamiltonians import (
    PhysicalParams,
    Target,
    build_third_charge_pxp,
    op_hf2_kernel,
    op_sigma_x_tilde,
    op_sigma_z_total,
)
from core.symmetry import build_sector_basis, sector_dimensions
from experiments.output import ExperimentResult, Table, emit_plot_data, write_manifest
from floquet.drive import (
    CosineTwoTone,
    DriveProtocol,
    SquareAsymmetric,
    SquareTwoTone,
    floquet_log_hamiltonian,
    floquet_operator,
    floquet_spectrum,
)
from floquet.fpt import asym_coefficients, fpt_for

logger = logging.getLogger(__name__)

# protocols on which each sweep axis acts
PROTOCOL_AXES = {
    "gamma_over_pi": ("square2",),
    "px": ("asym",),
    "p": ("asym",),
    "lambda_over_w1": ("square2", "asym", "cos2"),
    "w0": ("square2", "asym", "cos2"),
}


def sector_label(config: RunConfig, parity: Optional[int] = None, use_config_parity: bool = True) -> str:
    if config.boundary is Boundary.OBC:
        label = "obc"
    else:
        P = config.parity_value if use_config_parity else parity
        label = f"k{config.k}P{'none' if P is None else f'{P:+d}'}"
    if config.n_up is not None:
        label += f"N{config.n_up}"
    return label


def build_target(config: RunConfig, L: Optional[int] = None, parity="config") -> Target:
    """Working basis: a (K, P) sector under PBC, the full constrained basis under OBC"""
    L = config.L if L is None else L
    bc = config.boundary
    if config.n_up is not None:
        basis = constrained_sector_basis(L, config.n_up, bc)
    else:
        basis = enumerate_basis(L, bc)
    if bc is Boundary.OBC:
        return basis
    P = config.parity_value if parity == "config" else parity
    return build_sector_basis(basis, config.k, P)


def make_protocol(config: RunConfig, axis: Optional[str] = None, value: Optional[float] = None) -> DriveProtocol:
    """Protocol for the configured drive, with one sweep axis overridden"""
    overrides = {} if axis is None else {axis: value}
    if axis == "L":
        raise ConfigError("Sweeping L changes the basis, not the drive; only sweep-r supports it")
    if axis is not None and config.protocol not in PROTOCOL_AXES[axis]:
        raise ConfigError(f"Sweep axis {axis!r} does not apply to protocol {config.protocol!r}")
    lambda0 = config.lambda0
    w0, w1 = config.w0, config.w1
    if "lambda_over_w1" in overrides:
        w1 = lambda0 / overrides["lambda_over_w1"]
        if config.tie_w0:
            w0 = w1
    if "w0" in overrides:
        w0 = overrides["w0"]

    cfg = config
    if "gamma_over_pi" in overrides:
        cfg = dataclasses.replace(config, T1=None, gamma_over_pi=overrides["gamma_over_pi"])
    T1 = cfg.period()
    params = PhysicalParams(lambda0, w0, w1, T1)

    if config.protocol == "square2":
        return SquareTwoTone(params, config.q, config.detuning_sign, config.w1_sign_flip)
    if config.protocol == "asym":
        p = config.p
        if "p" in overrides:
            p = overrides["p"]
        if "px" in overrides:
            x = lambda0 * T1 / np.pi
            p = overrides["px"] / x
        return SquareAsymmetric(params, p, config.detuning_sign)
    return CosineTwoTone(params, config.p_h, config.detuning_sign)


def solve(protocol: DriveProtocol, target: Target):
    return floquet_spectrum(floquet_operator(protocol, target), protocol.params.T1)


def log_grid(n_max: int, points_per_decade: int) -> np.ndarray:
    """0 followed by integer, roughly log-spaced cycle counts up to n_max"""
    decades = np.log10(float(max(n_max, 1)))
    grid = np.logspace(0, decades, int(np.ceil(decades * points_per_decade)) + 1)
    return np.concatenate([[0], np.unique(np.round(grid).astype(np.int64))])


class ExperimentRunner:
    """Runs one configured experiment and writes its artifacts"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.logger = logging.getLogger(__name__)
        self.experiments: Dict[str, Callable[[], ExperimentResult]] = {
            "sweep-r": self.sweep_r,
            "spectrum-entanglement": self.spectrum_entanglement,
            "dynamics": self.dynamics,
            "sff": self.sff,
            "verify-map": self.verify_map,
            "charge-norm": self.charge_norm,
            "fpt-compare": self.fpt_compare,
            "asym-sweep": self.asym_sweep,
            "crossover": self.crossover,
            "thermalization": self.thermalization,
            "sector-dims": self.sector_dims,
        }

    def parallel_map(self, fn, items, desc: str) -> list:
        """Ordered map over sweep points on a thread pool"""
        items = list(items)
        with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
            return list(tqdm(pool.map(fn, items), total=len(items), desc=desc, disable=None))

    def run(self, out_dir=None) -> List[Path]:
        config = self.config
        out_dir = Path(out_dir or config.output_dir)
        if config.experiment not in self.experiments:
            raise ConfigError(f"Unknown experiment {config.experiment!r}")

        self.logger.info(f"Running {config.experiment} (L={config.L}, {config.protocol}, {config.threads} threads)")
        start = time.perf_counter()
        result = self.experiments[config.experiment]()
        wall_time = time.perf_counter() - start

        files = emit_plot_data(result, config, out_dir)
        files.append(write_manifest(result, config, out_dir, files, wall_time))
        self.logger.info(f"{config.experiment} finished in {wall_time:.1f}s")
        return files

    # -- spectra ---------------------------------------------------------

    def _r_point(self, target: Target, axis: str, value: float) -> float:
        spectrum = solve(make_protocol(self.config, axis, value), target)
        return level_spacing_stats(spectrum, self.config.n_bin).mean

    def sweep_r(self) -> ExperimentResult:
        config = self.config
        grid = config.require_sweep()
        if config.axis == "L":
            protocol = make_protocol(config)

            def point(value):
                target = build_target(config, L=int(value))
                return value, target.dim, level_spacing_stats(solve(protocol, target), config.n_bin).mean

            rows = self.parallel_map(point, grid, "sweep-r")
            table = Table([("L", "sites"), ("D_sec", "states"), ("r_mean", "1")], rows)
            return ExperimentResult("sweep-r", config.L, sector_label(config), table)

        target = build_target(config)
        means = self.parallel_map(lambda v: self._r_point(target, config.axis, v), grid, "sweep-r")
        rows = [(v, target.dim, r) for v, r in zip(grid, means)]
        table = Table([(config.axis, "1"), ("D_sec", "states"), ("r_mean", "1")], rows)
        return ExperimentResult("sweep-r", config.L, sector_label(config), table, dim=target.dim)

    def asym_sweep(self) -> ExperimentResult:
        config = self.config
        if config.protocol != "asym":
            raise ConfigError("asym-sweep needs protocol = asym")
        grid = config.require_sweep()
        target = build_target(config)

        def point(px):
            protocol = make_protocol(config, "px", px)
            r = level_spacing_stats(solve(protocol, target), config.n_bin).mean
            c1 = abs(asym_coefficients(protocol.params, protocol.p).c1[1])
            return px, protocol.p, target.dim, r, c1

        rows = self.parallel_map(point, grid, "asym-sweep")
        table = Table([("px", "1"), ("p", "1"), ("D_sec", "states"), ("r_mean", "1"), ("abs_C1", "1/energy")], rows)
        x = config.lambda0 * config.period() / np.pi
        return ExperimentResult("asym-sweep", config.L, sector_label(config), table, summary={"x": x}, dim=target.dim)

    def spectrum_entanglement(self) -> ExperimentResult:
        config = self.config
        target = build_target(config)
        spectrum = solve(make_protocol(config), target)
        entropies = np.array([entanglement_entropy(spectrum.vectors[:, i], target) for i in range(spectrum.dim)])

        rows = [(i, spectrum.theta[i], spectrum.quasienergies[i], entropies[i]) for i in range(spectrum.dim)]
        table = Table([("index", "1"), ("theta", "rad"), ("quasienergy", "energy"), ("entropy", "nats")], rows)

        stats = level_spacing_stats(spectrum, config.n_bin)
        centers = 0.5 * (stats.bin_edges[:-1] + stats.bin_edges[1:])
        histogram = Table([("r", "1"), ("P_r", "1"), ("bin_width", "1")], [(c, h, stats.bin_width) for c, h in zip(centers, stats.histogram)])

        D = spectrum.dim
        middle = entropies[D // 4: D - D // 4] if D >= 4 else entropies
        summary = {"r_mean": stats.mean, "S_mean": float(np.mean(entropies)), "S_std_middle": float(np.std(middle))}
        return ExperimentResult(
            "spectrum-entanglement", config.L, sector_label(config), table,
            extra_tables={"hist": histogram}, summary=summary, dim=D,
        )

    # -- dynamics --------------------------------------------------------

    def dynamics(self) -> ExperimentResult:
        config = self.config
        target = build_target(config)
        spectrum = solve(make_protocol(config), target)
        psi0 = initial_state(config.initial_state, target)
        n = log_grid(config.n_max, config.points_per_decade)

        Z, X = op_sigma_z_total(target), op_sigma_x_tilde(target)
        mz = magnetization_series(spectrum, psi0, Z, n, config.L, "Mz", config.initial_state)
        mx = magnetization_series(spectrum, psi0, X, n, config.L, "Mx", config.initial_state)
        rows = list(zip(n, mz.values, mx.values))
        table = Table([("n", "cycles"), ("Mz", "1"), ("Mx", "1")], rows)
        summary = {
            "initial_state": config.initial_state,
            "Mz_diagonal_ensemble": diagonal_ensemble(spectrum, psi0, Z, config.L),
            "Mz_ite": ite_average(target, Z),
        }
        return ExperimentResult("dynamics", config.L, sector_label(config), table, summary=summary, dim=target.dim)

    def sff(self) -> ExperimentResult:
        config = self.config
        target = build_target(config)
        protocol = make_protocol(config)
        # every early cycle, so the dip is resolved, then an even grid to sff_n_max
        early = np.arange(min(config.sff_points, config.sff_n_max) + 1)
        late = np.round(np.linspace(0, config.sff_n_max, config.sff_points)).astype(np.int64)
        n = np.unique(np.concatenate([early, late]))
        w0 = protocol.params.w0
        window = w0 * (1 + config.w0_spread * np.linspace(-1, 1, config.w0_window))
        series = sff_averaged(protocol, target, n, window)
        n_dip = sff_dip_time(series, target.dim)
        table = Table([("n", "cycles"), ("K", "1")], list(zip(series.n, series.values)))
        dip = Table([("n_dip", "cycles"), ("K_plateau", "1")], [(n_dip, 1.0 / target.dim)])
        summary = {"plateau": 1.0 / target.dim, "n_dip": n_dip, "w0_window": window.tolist()}
        return ExperimentResult(
            "sff", config.L, sector_label(config), table,
            extra_tables={"dip": dip}, summary=summary, dim=target.dim,
        )

    def crossover(self) -> ExperimentResult:
        config = self.config
        if config.axis != "lambda_over_w1":
            raise ConfigError("crossover sweeps lambda_over_w1")
        target = build_target(config)
        psi0 = initial_state(config.initial_state, target)
        Z = op_sigma_z_total(target)
        m_ite = ite_average(target, Z)

        def point(value):
            spectrum = solve(make_protocol(config, "lambda_over_w1", value), target)
            return value, steady_state_average(spectrum, psi0, Z, config.L, config.n0, config.window), m_ite

        rows = self.parallel_map(point, config.require_sweep(), "crossover")
        table = Table([("lambda_over_w1", "1"), ("Mz_st", "1"), ("Mz_ite", "1")], rows)
        return ExperimentResult("crossover", config.L, sector_label(config), table, summary={"n0": config.n0, "window": config.window})

    def thermalization(self) -> ExperimentResult:
        config = self.config
        if config.axis != "lambda_over_w1":
            raise ConfigError("thermalization sweeps lambda_over_w1")
        target = build_target(config)
        psi0 = initial_state(config.initial_state, target)
        Z = op_sigma_z_total(target)

        def point(value):
            spectrum = solve(make_protocol(config, "lambda_over_w1", value), target)
            n_star = thermalization_time(spectrum, psi0, Z, config.L, config.threshold, config.n_max, config.points_per_decade)
            return value, n_star

        rows = self.parallel_map(point, config.require_sweep(), "thermalization")
        table = Table([("lambda_over_w1", "1"), ("n_star", "cycles")], rows)
        summary = {"threshold": config.threshold, "n_max": config.n_max}
        return ExperimentResult("thermalization", config.L, sector_label(config), table, summary=summary, dim=target.dim)

    # -- analytic comparisons --------------------------------------------

    def fpt_compare(self) -> ExperimentResult:
        config = self.config
        target = build_target(config)

        def point(value):
            protocol = make_protocol(config, config.axis, value)
            H_num = floquet_log_hamiltonian(solve(protocol, target))
            H1 = fpt_for(protocol, 1).matrix(target)
            H2 = fpt_for(protocol, 2).matrix(target)
            h2 = H2.norm()
            rel = (H_num - H2).norm() / h2 if h2 > 0 else float("nan")
            return value, H_num.norm(), H1.norm(), h2, rel, (H_num - H1 - H2).norm()

        rows = self.parallel_map(point, config.require_sweep(), "fpt-compare")
        columns = [
            (config.axis, "1"), ("HF_num_norm", "energy"), ("HF1_norm", "energy"),
            ("HF2_norm", "energy"), ("rel_dev_2", "1"), ("residual_12", "energy"),
        ]
        return ExperimentResult("fpt-compare", config.L, sector_label(config), Table(columns, rows), dim=target.dim)

    def charge_norm(self) -> ExperimentResult:
        config = self.config
        if config.boundary is not Boundary.PBC:
            raise ConfigError("charge-norm needs periodic boundaries")
        # the third charge is parity odd, so the sector keeps both parities
        target = build_target(config, parity=None)
        C3 = build_third_charge_pxp(target, config.J, -0.5)
        kernel_norm = commutator_norm(op_hf2_kernel(target), C3)

        def point(value):
            H_F = floquet_log_hamiltonian(solve(make_protocol(config, config.axis, value), target))
            return value, commutator_norm(H_F, C3)

        rows = self.parallel_map(point, config.require_sweep(), "charge-norm")
        table = Table([(config.axis, "1"), ("commutator_norm", "energy^2")], rows)
        summary = {"kernel_commutator_norm": kernel_norm, "kernel_commutes": kernel_norm < CHARGE_TOL}
        self.logger.info(f"|[K, C3]|_F = {kernel_norm:.3e}")
        return ExperimentResult(
            "charge-norm", config.L, sector_label(config, parity=None, use_config_parity=False),
            table, summary=summary, dim=target.dim,
        )

    def verify_map(self) -> ExperimentResult:
        config = self.config
        tasks = []
        for L in range(config.L_min, config.L_max + 1):
            if config.boundary is Boundary.PBC:
                tasks += [(L, N) for N in range(1, (L + 1) // 2) if 2 * N < L]
            else:
                tasks += [(L, N) for N in range(0, (L + 1) // 2 + 1)]

        def point(task):
            L, N = task
            if config.boundary is Boundary.PBC:
                return verify_pbc_k0(L, N, config.J).as_record()
            return verify_obc(L, N, config.J).as_record()

        records = self.parallel_map(point, tasks, "verify-map")
        keys = ["bc", "L", "N", "dim", "max_entry_deviation", "spectral_deviation", "constant", "pass"]
        units = ["-", "sites", "up-spins", "states", "energy", "energy", "energy", "bool"]
        rows = [[rec[k] for k in keys] for rec in records]
        failed = [f"L={r['L']},N={r['N']}" for r in records if not r["pass"]]
        summary = {"checked": len(records), "failed": failed}
        label = config.boundary.value
        return ExperimentResult("verify-map", config.L_max, label, Table(list(zip(keys, units)), rows), summary=summary)

    def sector_dims(self) -> ExperimentResult:
        config = self.config
        if config.boundary is not Boundary.PBC:
            raise ConfigError("sector-dims needs periodic boundaries")
        rows = []
        for L in range(max(config.L_min, 3), config.L_max + 1):
            dims = sector_dimensions(enumerate_basis(L, Boundary.PBC))
            if sum(dims.values()) != lucas(L):
                raise NumericalError(f"Sector dimensions for L={L} sum to {sum(dims.values())}, expected {lucas(L)}")
            rows += [(L, k, "none" if P is None else f"{P:+d}", dim) for (k, P), dim in sorted(dims.items(), key=lambda kv: (kv[0][0], -(kv[0][1] or 0)))]
        table = Table([("L", "sites"), ("k", "2pi/L"), ("P", "1"), ("dim", "states")], rows)
        return ExperimentResult("sector-dims", config.L_max, "all", table)
