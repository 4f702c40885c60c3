"""Experiment orchestration: builds, runs, and serializes every recipe.

Each experiment writes CSV data files (floats at 17 significant digits, so
reruns with the same config and seed are byte-identical) plus a JSON manifest
with the resolved config, seed, wall time, version, and file checksums.
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, parse_grid
from .dynamics import (ProductStateSpec, StateVector, TimeSeries,
                       evolve_entropy, evolve_expectation, charge_profile,
                       random_product_state)
from .ensembles import (GibbsParams, gibbs_weights, microcanonical_window,
                        solve_beta, solve_beta_gamma, EmptyWindowError)
from .entanglement import eigenstate_site_rdms, weighted_site_entropy
from .eth import (IDEAL_QUBIT_DECAY, counter_diagonal_average,
                  diag_offdiag_ratio, energy_basis_elements, eigenstate_scatter,
                  random_site_operator, scaling_fit, sigma_x_product)
from .operators import build_charge_operators, build_hamiltonian
from .sectors import SectorLabel
from .selectors import operator_selector
from .spectral import (classify_spacing, diagonalize_system, spacing_distribution,
                       surmise, poisson, InsufficientLevelsError)
from .utils import state_rng, worker_map


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------

def fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_json(path: Path, payload) -> Path:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj)}")


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def label_slug(label: SectorLabel | None) -> str:
    if label is None:
        return "full"
    parts = []
    if label.charge is not None:
        parts.append(f"Q{label.charge}")
    if label.parity is not None:
        parts.append("Pplus" if label.parity > 0 else "Pminus")
    return "_".join(parts)


def float_slug(x: float) -> str:
    s = f"{float(x):g}".replace("-", "m").replace(".", "p")
    return s


# ---------------------------------------------------------------------------
# shared computations
# ---------------------------------------------------------------------------

def _parse_observable(expr: str, ham):
    """Split 'entropy:SITE' from selector expressions."""
    if expr.startswith("entropy:"):
        site = int(expr.split(":", 1)[1])
        if not 1 <= site <= ham.L:
            raise ConfigError(f"entropy site {site} out of range 1..{ham.L}")
        return ("entropy", site)
    return ("operator", operator_selector(expr, ham.L, 2 if ham.kind == "qubit" else 3, ham))


def _ensemble(ham, count, master_seed, f=0.0, target_E=None, target_tol=0.002,
              max_attempts=2_000_000, salt=()):
    spec = ProductStateSpec(kind=ham.kind, L=ham.L, f=f, target_E=target_E,
                            target_tol=target_tol, max_attempts=max_attempts)

    def make(i):
        rng = np.random.default_rng(np.random.SeedSequence(
            (int(master_seed),) + tuple(int(s) for s in salt) + (int(i),)))
        s = random_product_state(spec, ham, rng=rng)
        s.provenance.update(master_seed=master_seed, index=i, salt=salt)
        return s

    return [make(i) for i in range(count)]


def _series_matrix(states, spectra, times, kind, payload):
    """Per-state series stacked as (T, n_states); deterministic order."""
    if kind == "entropy":
        rows = worker_map(lambda s: evolve_entropy(s, spectra, payload, times).values,
                          states)
    else:
        rows = worker_map(lambda s: evolve_expectation(s, spectra, payload, times).values,
                          states)
    return np.stack(rows, axis=1)


def _quantile_rows(times, matrix, quantiles):
    qs = np.quantile(matrix, quantiles, axis=1)
    means = matrix.mean(axis=1)
    for k, t in enumerate(times):
        yield (t, means[k], *qs[:, k])


def _thermal_entropy_curve(spectra, site, energies):
    rdms = eigenstate_site_rdms(spectra, site)
    out = []
    for e in energies:
        beta = solve_beta(spectra, float(e))
        w = gibbs_weights(spectra, GibbsParams(beta))
        out.append((float(e), beta, weighted_site_entropy(w, rdms)))
    return out


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def run_spectrum(config: ExperimentConfig, outdir: Path) -> list[Path]:
    ham = config.hamiltonian
    p = config.params
    spectra = diagonalize_system(ham, sectors="none" if p["sectors"] == "none" else "auto")
    parts = spectra.parts if hasattr(spectra, "parts") else [spectra]
    files = []
    rows = []
    summary = []
    for part in parts:
        slug = label_slug(part.sector)
        for i, e in enumerate(part.energies):
            rows.append((slug, i, e))
        summary.append({"sector": slug, "dimension": part.n_levels})
    files.append(write_csv(outdir / "eigenvalues.csv",
                           ["sector", "index", "energy"], rows))
    files.append(write_json(outdir / "sectors.json", summary))
    if p["export_matrix"]:
        H = build_hamiltonian(ham)
        H.export_coordinate_text(outdir / "hamiltonian.txt")
        files.append(outdir / "hamiltonian.txt")
    return files


def _levels_for(energies, slug, p, outdir, files, classifications):
    try:
        dist = spacing_distribution(energies, degree=p["unfold_degree"],
                                    trim=p["unfold_trim"], bins=p["bins"],
                                    s_max=p["s_max"])
    except InsufficientLevelsError as err:
        classifications.append({"sector": slug, "dimension": len(energies),
                                "skipped": str(err)})
        return
    centers = 0.5 * (dist.bin_edges[:-1] + dist.bin_edges[1:])
    wd = surmise(p["surmise_beta"], centers)
    po = poisson(centers)
    files.append(write_csv(outdir / f"levels_{slug}.csv",
                           ["s_bin_center", "density", "wigner_ref", "poisson_ref"],
                           zip(centers, dist.densities, wd, po)))
    c = classify_spacing(dist, beta=p["surmise_beta"])
    classifications.append({
        "sector": slug, "dimension": len(energies),
        "n_spacings": c.n_spacings, "classification": c.label,
        "chi2_wigner": c.chi2_wigner, "chi2_poisson": c.chi2_poisson,
        "degenerate_fraction": c.degenerate_fraction,
        "low_confidence": c.low_confidence,
        "mean_spacing": dist.mean_spacing,
    })


def run_levels(config: ExperimentConfig, outdir: Path) -> list[Path]:
    ham = config.hamiltonian
    p = config.params
    spectra = diagonalize_system(ham, sectors="none" if p["sectors"] == "none" else "auto")
    parts = spectra.parts if hasattr(spectra, "parts") else [spectra]
    files: list[Path] = []
    classifications: list[dict] = []
    for part in parts:
        _levels_for(part.energies, label_slug(part.sector), p, outdir, files,
                    classifications)
    if p["include_full"] and hasattr(spectra, "parts"):
        _levels_for(spectra.energies, "full", p, outdir, files, classifications)
    files.append(write_json(outdir / "classification.json", classifications))
    return files


def run_evolve(config: ExperimentConfig, outdir: Path) -> list[Path]:
    ham = config.hamiltonian
    p = config.params
    kind, payload = _parse_observable(p["observable"], ham)
    spectra = diagonalize_system(ham)
    times = np.arange(0.0, p["t_max"] + 0.5 * p["dt"], p["dt"])
    targets = p["target_energies"] or [None]
    files: list[Path] = []
    summary = []
    rdms = None
    for t_idx, target in enumerate(targets):
        states = _ensemble(ham, p["n_states"], config.master_seed, f=p["f"],
                           target_E=target, target_tol=p["target_tol"],
                           max_attempts=p["max_attempts"], salt=(t_idx,))
        matrix = _series_matrix(states, spectra, times, kind, payload)
        slug = "all" if target is None else f"E{float_slug(target)}"
        header = ["t", "mean"] + [f"q{int(round(100 * q))}" for q in p["quantiles"]]
        files.append(write_csv(outdir / f"evolve_{slug}.csv", header,
                               _quantile_rows(times, matrix, p["quantiles"])))
        entry = {
            "target_E": target, "n_states": len(states),
            "late_mean": float(matrix[len(times) // 2:].mean()),
            "observable": p["observable"],
        }
        if p["thermal_prediction"] and kind == "entropy":
            H = build_hamiltonian(ham)
            e_mean = float(np.mean([H.expectation(s.amplitudes) for s in states]))
            if rdms is None:
                rdms = eigenstate_site_rdms(spectra, payload)
            if ham.kind == "qutrit" and p["f"] > 0:
                params = solve_beta_gamma(spectra, spectra.charges, e_mean,
                                          p["f"] * ham.L)
                w = gibbs_weights(spectra, params)
                entry.update(beta=params.beta, gamma=params.gamma)
            else:
                beta = solve_beta(spectra, e_mean)
                w = gibbs_weights(spectra, GibbsParams(beta))
                entry.update(beta=beta)
            entry["thermal_entropy"] = weighted_site_entropy(w, rdms)
            entry["ensemble_mean_E"] = e_mean
        summary.append(entry)
    files.append(write_json(outdir / "summary.json", summary))
    return files


def run_eth(config: ExperimentConfig, outdir: Path) -> list[Path]:
    ham = config.hamiltonian
    p = config.params
    if ham.kind != "qubit":
        raise ConfigError("the eth experiment runs on the qubit chain")
    files: list[Path] = []
    ratio_rows, counter_rows, counter_points = [], [], []
    for L in p["sizes"]:
        spec_L = replace(ham, L=L)
        spectra = diagonalize_system(spec_L)
        obs = operator_selector(p["ratio_observable"], L, 2, spec_L)
        data_local = energy_basis_elements(spectra, obs)
        data_global = energy_basis_elements(spectra, sigma_x_product(L))
        r_local = diag_offdiag_ratio(data_local)
        r_global = diag_offdiag_ratio(data_global)
        ratio_rows.append((L, r_local.ratio, r_global.ratio))
        vals = []
        for k in range(p["n_random_ops"]):
            rng = np.random.default_rng(np.random.SeedSequence(
                (config.master_seed, L, k)))
            O = random_site_operator(L, rng)
            vals.append(counter_diagonal_average(energy_basis_elements(spectra, O)))
        counter_rows.append((L, float(np.mean(vals))))
        counter_points.append((L, float(np.mean(vals))))
    files.append(write_csv(outdir / "ratio_vs_L.csv",
                           ["L", "ratio_local", "ratio_global"], ratio_rows))
    files.append(write_csv(outdir / "counter_diagonal_vs_L.csv",
                           ["L", "dtilde"], counter_rows))
    fit = scaling_fit(counter_points, log_scale=True)
    ratio_fit = scaling_fit([(L, r) for L, r, _ in ratio_rows], log_scale=True)
    files.append(write_json(outdir / "fits.json", {
        "counter_diagonal": {"slope": fit.slope, "intercept": fit.intercept,
                             "residual": fit.residual,
                             "ideal_slope": IDEAL_QUBIT_DECAY},
        "ratio_local": {"slope": ratio_fit.slope, "intercept": ratio_fit.intercept,
                        "residual": ratio_fit.residual},
    }))
    if p["scatter_L"]:
        spec_L = replace(ham, L=p["scatter_L"])
        spectra = diagonalize_system(spec_L)
        obs = operator_selector(p["scatter_observable"], spec_L.L, 2, spec_L)
        E, vals = eigenstate_scatter(spectra, O=obs)
        _, ents = eigenstate_scatter(spectra, site=p["scatter_site"])
        files.append(write_csv(outdir / "scatter.csv",
                               ["energy", "observable", "site_entropy"],
                               zip(E, vals, ents)))
        if p["thermal_curve_points"]:
            span = spectra.energies[-1] - spectra.energies[0]
            grid = np.linspace(spectra.energies[0] + 0.1 * span,
                               spectra.energies[-1] - 0.1 * span,
                               p["thermal_curve_points"])
            rdms = eigenstate_site_rdms(spectra, p["scatter_site"])
            diag = spectra.op_diagonal(obs)
            rows = []
            for e in grid:
                beta = solve_beta(spectra, float(e))
                w = gibbs_weights(spectra, GibbsParams(beta))
                rows.append((float(e), beta, float(np.dot(w, diag)),
                             weighted_site_entropy(w, rdms)))
            files.append(write_csv(outdir / "thermal_curve.csv",
                                   ["energy", "beta", "gibbs_observable",
                                    "gibbs_site_entropy"], rows))
    return files


def run_thermal(config: ExperimentConfig, outdir: Path) -> list[Path]:
    ham = config.hamiltonian
    p = config.params
    d = 2 if ham.kind == "qubit" else 3
    spectra = diagonalize_system(ham)
    obs_exprs = [e.strip() for e in p["observables"].split(";") if e.strip()]
    obs = [operator_selector(e, ham.L, d, ham) for e in obs_exprs]
    diags = [spectra.op_diagonal(o) for o in obs]
    rdms = eigenstate_site_rdms(spectra, p["site"])
    files: list[Path] = []
    if p["mode"] == "targets":
        if not p["targets_e"]:
            raise ConfigError("thermal targets mode needs targets_e")
        if p["targets_q"] and len(p["targets_q"]) != len(p["targets_e"]):
            raise ConfigError("targets_q must match targets_e in length")
        rows = []
        for i, e in enumerate(p["targets_e"]):
            if p["targets_q"]:
                q = p["targets_q"][i]
                params = solve_beta_gamma(spectra, spectra.charges, e, q)
                w = gibbs_weights(spectra, params)
                mu = params.mu
                row = [e, q, params.beta, params.gamma,
                       mu if mu is not None else float("nan")]
            else:
                beta = solve_beta(spectra, e)
                w = gibbs_weights(spectra, GibbsParams(beta))
                row = [e, float("nan"), beta, float("nan"), float("nan")]
            row.extend(float(np.dot(w, dg)) for dg in diags)
            row.append(weighted_site_entropy(w, rdms))
            rows.append(tuple(row))
        header = (["target_E", "target_Q", "beta", "gamma", "mu"]
                  + [o.name for o in obs] + [f"site{p['site']}_entropy"])
        files.append(write_csv(outdir / "thermal_targets.csv", header, rows))
    else:
        betas = parse_grid(p["beta_grid"], "beta_grid")
        mus = parse_grid(p["mu_grid"], "mu_grid")
        if spectra.charges is None:
            raise ConfigError("thermal surface needs a charge-resolved qutrit "
                              "spectrum")
        qdiag = spectra.charges
        rows = []
        for beta in betas:
            for mu in mus:
                w = gibbs_weights(spectra, GibbsParams(beta, beta * mu))
                row = [beta, mu, float(np.dot(w, spectra.energies)),
                       float(np.dot(w, qdiag))]
                row.extend(float(np.dot(w, dg)) for dg in diags)
                row.append(weighted_site_entropy(w, rdms))
                rows.append(tuple(row))
        header = (["beta", "mu", "energy", "charge"] + [o.name for o in obs]
                  + [f"site{p['site']}_entropy"])
        files.append(write_csv(outdir / "thermal_surface.csv", header, rows))
    return files


def _initial_charge_state(ham, initial: str, master_seed) -> StateVector:
    L = ham.L
    if initial == "single":
        f = np.zeros(L)
        f[0] = 1.0
    elif initial == "half":
        f = np.zeros(L)
        f[:L // 2] = 1.0
    else:
        f = np.asarray([float(x) for x in initial.replace(",", " ").split()])
        if len(f) != L or np.any((f < 0) | (f > 1)):
            raise ConfigError("initial must be 'single', 'half', or L values in [0,1]")
    spec = ProductStateSpec(kind="qutrit", L=L, f=tuple(f))
    return random_product_state(spec, ham, rng=state_rng(master_seed, 0))


def run_chargespread(config: ExperimentConfig, outdir: Path) -> list[Path]:
    ham = config.hamiltonian
    p = config.params
    if ham.kind != "qutrit":
        raise ConfigError("chargespread needs a qutrit chain")
    state = _initial_charge_state(ham, p["initial"], config.master_seed)
    # definite-charge initial states live in one sector; only diagonalize it
    fvec = np.array([float(x) for x in p["initial"].replace(",", " ").split()]) \
        if p["initial"] not in ("single", "half") else None
    charge_support = None
    if p["initial"] == "single":
        charge_support = {1}
    elif p["initial"] == "half":
        charge_support = {ham.L // 2}
    elif fvec is not None and np.all((fvec == 0) | (fvec == 1)):
        charge_support = {int(fvec.sum())}
    spectra = diagonalize_system(ham, only_charges=charge_support)
    times = np.arange(0.0, p["t_max"] + 0.5 * p["dt"], p["dt"])
    series = charge_profile(state, spectra, times)
    header = ["t"] + [f"q{r}" for r in range(1, ham.L + 1)]
    rows = [(t, *series.values[k]) for k, t in enumerate(times)]
    files = [write_csv(outdir / "charge_profile.csv", header, rows)]
    total = series.values.sum(axis=1)
    late = series.values[int(len(times) * (1 - p["late_fraction"])):]
    uniform = total[0] / ham.L
    files.append(write_json(outdir / "summary.json", {
        "total_charge": float(total[0]),
        "uniform_target": float(uniform),
        "late_max_deviation": float(np.max(np.abs(late - uniform))),
        "total_charge_drift": float(np.max(np.abs(total - total[0]))),
    }))
    return files


# ---------------------------------------------------------------------------
# sweep modes
# ---------------------------------------------------------------------------

def _parse_variants(raw: str):
    out = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        overrides = {}
        for item in chunk.split(","):
            key, _, val = item.partition("=")
            key = key.strip()
            if key not in ("J", "h_x", "h_z", "h1", "h2", "h3", "a"):
                raise ConfigError(f"variant key {key!r} is not a coefficient")
            overrides[key] = float(val)
        out.append(overrides)
    if not out:
        raise ConfigError("variants is empty")
    return out


def run_sweep(config: ExperimentConfig, outdir: Path) -> list[Path]:
    mode = config.params["mode"]
    return {
        "coefficient_grid": _sweep_coefficients,
        "system_size": _sweep_system_size,
        "energy_grid": _sweep_energy_grid,
        "charge_grid": _sweep_charge_grid,
    }[mode](config, outdir)


def _sweep_coefficients(config: ExperimentConfig, outdir: Path) -> list[Path]:
    ham = config.hamiltonian
    p = config.params
    files: list[Path] = []
    summary = []
    times = np.arange(0.0, p["t_max"] + 0.5 * p["dt"], p["dt"])
    for v_idx, overrides in enumerate(_parse_variants(p["variants"])):
        variant = replace(ham, **overrides)
        spectra = diagonalize_system(variant)
        part = spectra.parts[0] if hasattr(spectra, "parts") else spectra
        classifications: list[dict] = []
        _levels_for(part.energies, f"variant{v_idx}", p, outdir, files,
                    classifications)
        states = _ensemble(variant, p["n_states"], config.master_seed,
                           salt=(v_idx,))
        matrix = _series_matrix(states, spectra, times, "entropy", p["site"])
        header = ["t", "mean"] + [f"q{int(round(100 * q))}" for q in p["quantiles"]]
        files.append(write_csv(outdir / f"variant{v_idx}_entropy.csv", header,
                               _quantile_rows(times, matrix, p["quantiles"])))
        summary.append({"variant": v_idx, "overrides": overrides,
                        "levels": classifications})
    files.append(write_json(outdir / "sweep_summary.json", summary))
    return files


def _late_slice(times, t_lo):
    return np.searchsorted(times, t_lo, side="left")


def _sweep_system_size(config: ExperimentConfig, outdir: Path) -> list[Path]:
    ham = config.hamiltonian
    p = config.params
    files: list[Path] = []
    rows = []
    times = np.arange(0.0, p["t_max"] + 0.5 * p["dt"], p["dt"])
    k0 = int(len(times) * (1 - p["late_fraction"]))
    for L in p["sizes"]:
        spec_L = replace(ham, L=L)
        spectra = diagonalize_system(spec_L)
        for e_idx, target in enumerate(p["target_energies"]):
            states = _ensemble(spec_L, p["n_states"], config.master_seed,
                               target_E=target, target_tol=p["target_tol"],
                               salt=(L, e_idx))
            matrix = _series_matrix(states, spectra, times, "entropy", p["site"])
            late = matrix[k0:]
            rows.append((L, target, float(late.mean()),
                         float(late.std(axis=0).mean())))
    files.append(write_csv(outdir / "late_time_stats.csv",
                           ["L", "target_E", "late_mean", "late_std"], rows))
    if p["reference_L"]:
        ref = replace(ham, L=p["reference_L"])
        spectra = diagonalize_system(ref)
        lo = min(p["target_energies"])
        hi = max(p["target_energies"])
        grid = np.linspace(lo, hi, p["reference_points"])
        curve = _thermal_entropy_curve(spectra, p["site"], grid)
        files.append(write_csv(outdir / "thermal_reference.csv",
                               ["energy", "beta", "thermal_entropy"], curve))
    return files


def _sweep_energy_grid(config: ExperimentConfig, outdir: Path) -> list[Path]:
    ham = config.hamiltonian
    p = config.params
    d = 2 if ham.kind == "qubit" else 3
    spectra = diagonalize_system(ham)
    obs = operator_selector(p["observable"], ham.L, d, ham)
    targets = np.arange(p["e_min"], p["e_max"] + 0.5 * p["e_step"], p["e_step"])
    t_hi = p["t_late"]
    t_lo = t_hi - p["late_window"]
    late_times = np.linspace(t_lo, t_hi, p["late_samples"])
    H = build_hamiltonian(ham)

    def one(job):
        e_idx, target, s_idx = job
        state = _ensemble(ham, 1, config.master_seed,
                          target_E=float(target), target_tol=p["target_tol"],
                          salt=(e_idx, s_idx))[0]
        energy = H.expectation(state.amplitudes)
        obs_t0 = obs.expectation(state.amplitudes)
        ent_t0 = evolve_entropy(state, spectra, p["site"], [0.0]).values[0]
        obs_late = evolve_expectation(state, spectra, obs, late_times).values.mean()
        ent_late = evolve_entropy(state, spectra, p["site"], late_times).values.mean()
        return (float(target), s_idx, energy, obs_t0, float(obs_late),
                float(ent_t0), float(ent_late))

    jobs = [(e_idx, t, s) for e_idx, t in enumerate(targets)
            for s in range(p["n_per_point"])]
    rows = worker_map(one, jobs)
    files = [write_csv(outdir / "states.csv",
                       ["target_E", "state", "energy", "obs_t0", "obs_late",
                        "entropy_t0", "entropy_late"], rows)]

    diag = spectra.op_diagonal(obs)
    rdms = eigenstate_site_rdms(spectra, p["site"])
    grid = np.linspace(p["e_min"], p["e_max"], p["curve_points"])
    curve_rows = []
    for e in grid:
        beta = solve_beta(spectra, float(e))
        w = gibbs_weights(spectra, GibbsParams(beta))
        gibbs_obs = float(np.dot(w, diag))
        gibbs_ent = weighted_site_entropy(w, rdms)
        try:
            window = microcanonical_window(spectra, e - p["micro_half_width"],
                                           e + p["micro_half_width"])
            members = window.member_indices
            micro_obs = float(diag[members].mean())
            micro_w = np.zeros(spectra.n_levels)
            micro_w[members] = 1.0 / len(members)
            micro_ent = weighted_site_entropy(micro_w, rdms)
        except EmptyWindowError:
            micro_obs = float("nan")
            micro_ent = float("nan")
        curve_rows.append((float(e), gibbs_obs, micro_obs, gibbs_ent, micro_ent))
    files.append(write_csv(outdir / "curves.csv",
                           ["energy", "gibbs_obs", "micro_obs", "gibbs_entropy",
                            "micro_entropy"], curve_rows))
    return files


def _sweep_charge_grid(config: ExperimentConfig, outdir: Path) -> list[Path]:
    ham = config.hamiltonian
    p = config.params
    if ham.kind != "qutrit":
        raise ConfigError("charge_grid sweep needs a qutrit chain")
    spectra = diagonalize_system(ham)
    obs = operator_selector(p["observable"], ham.L, 3, ham) if p["observable"] else None
    H = build_hamiltonian(ham)
    files: list[Path] = []
    times = np.arange(0.0, p["t_max"] + 0.5 * p["dt"], p["dt"])
    rdms = eigenstate_site_rdms(spectra, p["site"]) if p["gge_prediction"] else None
    summary = []
    for q in p["scatter_sectors"]:
        part = next(pt for pt in spectra.parts if pt.sector.charge == q)
        E, ents = eigenstate_scatter(part, site=p["site"])
        if obs is not None:
            _, vals = eigenstate_scatter(part, O=obs)
        else:
            vals = np.full(len(E), np.nan)
        files.append(write_csv(outdir / f"eigenstates_Q{q}.csv",
                               ["energy", "site_entropy", "observable"],
                               zip(E, ents, vals)))
    for f_idx, f in enumerate(p["f_values"]):
        states = _ensemble(ham, p["n_states"], config.master_seed, f=f,
                           salt=(f_idx,))
        two_times = [0.0, p["t_max"]] if p["t_max"] > 0 else [0.0]

        def one(state):
            energy = H.expectation(state.amplitudes)
            ent = evolve_entropy(state, spectra, p["site"], two_times).values
            if obs is not None:
                ov = evolve_expectation(state, spectra, obs, two_times).values
            else:
                ov = np.full(len(two_times), np.nan)
            return (energy, ent[0], ent[-1], ov[0], ov[-1])

        per_state = worker_map(one, states)
        rows = [(f, i, *vals) for i, vals in enumerate(per_state)]
        files.append(write_csv(outdir / f"states_f{float_slug(f)}.csv",
                               ["f", "state", "energy", "entropy_t0",
                                "entropy_late", "obs_t0", "obs_late"], rows))
        entry = {"f": f, "mean_energy": float(np.mean([r[2] for r in rows])),
                 "target_Q": f * ham.L}
        if p["growth_curves"]:
            matrix = _series_matrix(states, spectra, times, "entropy", p["site"])
            files.append(write_csv(outdir / f"growth_f{float_slug(f)}.csv",
                                   ["t", "mean_entropy"],
                                   zip(times, matrix.mean(axis=1))))
        if p["gge_prediction"]:
            params = solve_beta_gamma(spectra, spectra.charges,
                                      entry["mean_energy"], f * ham.L)
            w = gibbs_weights(spectra, params)
            entry.update(beta=params.beta, gamma=params.gamma,
                         gge_entropy=weighted_site_entropy(w, rdms))
        summary.append(entry)
    files.append(write_json(outdir / "charge_grid_summary.json", summary))
    return files


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_DISPATCH = {
    "spectrum": run_spectrum,
    "levels": run_levels,
    "evolve": run_evolve,
    "eth": run_eth,
    "thermal": run_thermal,
    "chargespread": run_chargespread,
    "sweep": run_sweep,
}


def run(config: ExperimentConfig) -> Path:
    """Run one experiment; returns the path of the written manifest."""
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    files = _DISPATCH[config.experiment](config, outdir)
    wall = time.perf_counter() - t0
    manifest = {
        "config": config.to_dict(),
        "experiment": config.experiment,
        "master_seed": config.master_seed,
        "version": __version__,
        "wall_time_s": wall,
        "files": {Path(f).name: sha256_file(f) for f in files},
    }
    return write_json(outdir / "manifest.json", manifest)
