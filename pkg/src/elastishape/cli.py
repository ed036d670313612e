"""Command line pipeline driver.

Each subcommand reads an optional JSON config, overlays explicit flags,
runs one pipeline stage, and writes its artifacts plus a manifest.json
with the fully resolved configuration into the output directory.  Exit
codes: 0 success, 2 configuration error, 3 input error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import re
import sys
from dataclasses import asdict, fields as dataclass_fields
from pathlib import Path

import numpy as np

from . import __version__
from .baseline import (
    class_distances,
    classical_mds,
    icp_register,
    knn_accuracy,
    vertex_pca,
)
from .diffeos import jacobian_det, pullback, random_diffeo
from .errors import ConfigError, InputError, NumericalError
from .fileio import (
    export_obj,
    load_model,
    load_surface,
    save_model,
    save_surface,
    write_matrix_csv,
)
from .grids import Surface, make_grid
from .regression import CovariateTable, run_model_suite
from .registration import RegistrationOpts, register
from .shape_stats import (
    cumulative_variance,
    diff_field,
    karcher_mean,
    pc_path,
    pc_scores,
    reconstruct,
    register_cohort,
    shape_pca,
)
from .sphharm import harmonic_orders, real_harmonic
from .srnf import srnf
from .synthetic import gen_pca_cohort, gen_surface

logger = logging.getLogger(__name__)

__all__ = ["main"]

_SIM_DEFAULTS = {
    "n_subjects": 40,
    "displacement": 1.2,
    "mean_amplitude": 0.3,
    "perturb_magnitude": 0.5,
    "flow_degree": 3,
    "seed": 0,
    "grid": "32x32",
    "registration": {},
}
_SIM_REG = {"max_iters": 50, "rounds": 2, "tol_rel": 1e-4}

_CMP_DEFAULTS = {
    "n_per_class": 8,
    "amplitude": 0.5,
    "mean_amplitude": 0.3,
    "perturb_magnitude": 0.5,
    "flow_degree": 3,
    "seed": 0,
    "grid": "32x32",
    "registration": {},
}
_CMP_REG = {"max_iters": 40, "rounds": 2, "tol_rel": 1e-4}


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _pick(*values):
    for v in values:
        if v is not None:
            return v
    return None


def _parse_grid(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)x(\d+)", str(text).strip().lower())
    if not m:
        raise ConfigError(f"bad grid '{text}', expected N_UxN_V like 32x32")
    return int(m.group(1)), int(m.group(2))


def _load_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be an object")
    return data


def _check_keys(cfg: dict, allowed, where: str) -> None:
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown keys: {', '.join(unknown)}")


def _reg_opts(overrides: dict) -> RegistrationOpts:
    allowed = {f.name for f in dataclass_fields(RegistrationOpts)}
    _check_keys(overrides, allowed, "registration options")
    try:
        return RegistrationOpts(**overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"registration options: {exc}") from exc


def _out_dir(args) -> Path:
    out = Path(args.out if args.out is not None else f"{args.command}-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, command: str, config: dict, inputs, outputs) -> None:
    payload = {
        "command": command,
        "version": __version__,
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": sorted(outputs),
    }
    text = json.dumps(payload, indent=2, sort_keys=True, default=str)
    (out / "manifest.json").write_text(text + "\n")


def _write_rows_csv(path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _ids(n: int) -> list:
    return [f"s{i:03d}" for i in range(n)]


def _radial_direction(grid, seed: int, degree: int) -> np.ndarray:
    """Unit flattened direction field: seeded harmonic bumps along the radius."""
    th, ph = np.meshgrid(grid.theta, grid.phi)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    bump = np.zeros_like(th)
    for l, m in harmonic_orders(max(degree, 1)):
        bump += rng.standard_normal() * real_harmonic(l, m, th, ph)
    v = (bump[..., None] * grid.nodes()).reshape(-1)
    nn = float(np.linalg.norm(v))
    if nn <= 0:
        raise NumericalError("degenerate perturbation direction")
    return v / nn


def _shape_line_cohort(grid, seed: int, n: int, displacement: float,
                       mean_amplitude: float, degree: int):
    """Two-class cohort mean + x*v around a seeded bumpy mean.

    Coefficient magnitudes stay in [displacement/2, displacement] so no
    subject sits on the class boundary closer than the registration
    residual can resolve, and the bumpy mean pins the registration
    frame, which a rotationally symmetric template would leave free.
    """
    mean_seed = int(np.random.SeedSequence([seed, 5]).generate_state(1)[0])
    mean = gen_surface(
        "bumpy-sphere", grid, amplitude=mean_amplitude, degree=degree,
        seed=mean_seed,
    )
    direction = _radial_direction(grid, seed, degree)
    half = (n + 1) // 2
    rng = np.random.default_rng(np.random.SeedSequence([seed, 9]))
    mags = (0.5 + 0.5 * rng.random(n)) * displacement
    coeffs = np.where(np.arange(n) < half, mags, -mags)
    return mean, gen_pca_cohort(mean, direction, n, seed, coefficients=coeffs)


def _pairwise_field_dist(fields: list) -> np.ndarray:
    """Pairwise L2 distances between transform fields on a shared grid."""
    cell = fields[0].grid.cell_measure
    flat = np.stack([f.q.reshape(-1) for f in fields])
    gram = flat @ flat.T * cell
    sq = np.diag(gram)
    d2 = np.clip(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0, None)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(d2)


def _diffeo_seeds(seed: int, salt: int, n: int) -> np.ndarray:
    return np.random.SeedSequence([seed, salt]).generate_state(n)


def _perturb(surfaces, grid, seeds, magnitude: float) -> list:
    return [
        pullback(f, random_diffeo(grid, int(s), magnitude))
        for f, s in zip(surfaces, seeds)
    ]


def _mds_coords(dist: np.ndarray) -> np.ndarray:
    return classical_mds(dist, 2).coords


def cmd_simulate(args) -> int:
    """Cohort on one shape line: distances and cluster accuracy at three stages.

    Stage one scores the cohort as constructed (already in vertex
    correspondence), stage two after seeded random reparameterizations,
    stage three after registering every perturbed surface to the known
    mean.  Writes a distance matrix and MDS coordinates per stage plus
    the 1-NN accuracy summary.
    """
    cfg = {**_SIM_DEFAULTS, **_load_config(args.config)}
    _check_keys(cfg, _SIM_DEFAULTS, "simulate config")
    seed = int(_pick(args.seed, cfg["seed"]))
    n_u, n_v = _parse_grid(_pick(args.grid, cfg["grid"]))
    grid = make_grid(n_u, n_v)
    n = int(cfg["n_subjects"])
    if n < 4:
        raise ConfigError("n_subjects must be at least 4")
    reg_cfg = {**_SIM_REG, **cfg["registration"]}
    opts = _reg_opts(reg_cfg)
    out = _out_dir(args)

    mean, cohort = _shape_line_cohort(
        grid, seed, n, float(cfg["displacement"]),
        float(cfg["mean_amplitude"]), int(cfg["flow_degree"]),
    )
    ids = _ids(n)
    labels = cohort.labels

    stages = {}
    stages["registered"] = _pairwise_field_dist([srnf(f) for f in cohort.surfaces])

    seeds = _diffeo_seeds(seed, 1, n)
    perturbed = _perturb(cohort.surfaces, grid, seeds, float(cfg["perturb_magnitude"]))
    stages["perturbed"] = _pairwise_field_dist([srnf(f) for f in perturbed])

    results = register_cohort(mean, perturbed, opts, threads=args.threads)
    stages["reregistered"] = _pairwise_field_dist([srnf(r.aligned) for r in results])

    outputs = []
    accuracy = {}
    for stage, dist in stages.items():
        write_matrix_csv(out / f"dist_{stage}.csv", dist, ids)
        _write_rows_csv(out / f"mds_{stage}.csv", ["x1", "x2"], _mds_coords(dist))
        outputs += [f"dist_{stage}.csv", f"mds_{stage}.csv"]
        accuracy[stage] = knn_accuracy(dist, labels)

    _write_rows_csv(
        out / "labels.csv",
        ["id", "label", "coefficient"],
        zip(ids, labels, cohort.coefficients),
    )
    _write_rows_csv(
        out / "accuracy.csv", ["stage", "accuracy"], accuracy.items()
    )
    outputs += ["labels.csv", "accuracy.csv"]

    resolved = {**cfg, "seed": seed, "grid": f"{n_u}x{n_v}",
                "registration": asdict(opts), "threads": args.threads}
    _write_manifest(out, "simulate", resolved, [], outputs)
    for stage, acc in accuracy.items():
        print(f"{stage} 1-NN accuracy: {acc:.3f}")
    return 0


def cmd_register(args) -> int:
    """Align one surface to another; write the aligned surface, rotation,
    reparameterization Jacobian field, and objective trace."""
    cfg = {"registration": {}, **_load_config(args.config)}
    _check_keys(cfg, {"registration"}, "register config")
    opts = _reg_opts(cfg["registration"])
    f1 = load_surface(args.fixed)
    f2 = load_surface(args.moving)
    out = _out_dir(args)

    res = register(f1, f2, opts)
    save_surface(res.aligned, out / "aligned.surf")
    write_matrix_csv(out / "rotation.csv", res.rotation, ["c1", "c2", "c3"])
    jac = jacobian_det(res.reparam)
    u_names = [f"u{i}" for i in range(f1.grid.n_u)]
    write_matrix_csv(out / "jacobian.csv", jac, u_names)
    write_matrix_csv(
        out / "trace.csv",
        np.asarray(res.objective_trace)[:, None],
        ["objective"],
    )
    outputs = ["aligned.surf", "rotation.csv", "jacobian.csv", "trace.csv"]
    resolved = {"registration": asdict(opts)}
    _write_manifest(out, "register", resolved, [args.fixed, args.moving], outputs)
    print(f"distance: {res.distance:.8g}")
    return 0


def cmd_mean(args) -> int:
    """Iterative mean shape of the input surfaces plus the registered set."""
    cfg = {"init_index": 0, "registration": {}, **_load_config(args.config)}
    _check_keys(cfg, {"init_index", "registration"}, "mean config")
    opts = _reg_opts(cfg["registration"])
    surfaces = [load_surface(p) for p in args.surfaces]
    init_index = int(cfg["init_index"])
    if not 0 <= init_index < len(surfaces):
        raise ConfigError(
            f"init_index {init_index} out of range for {len(surfaces)} surfaces"
        )
    out = _out_dir(args)

    result = karcher_mean(
        surfaces, opts, init_index=init_index, seed=args.seed, threads=args.threads
    )
    save_surface(result.mean, out / "mean.surf")
    outputs = ["mean.surf", "variance.csv"]
    for i, f in enumerate(result.registered):
        name = f"registered_{i:03d}.surf"
        save_surface(f, out / name)
        outputs.append(name)
    write_matrix_csv(
        out / "variance.csv",
        np.asarray(result.variance_trace)[:, None],
        ["variance"],
    )
    resolved = {"init_index": init_index, "registration": asdict(opts),
                "seed": args.seed, "threads": args.threads}
    _write_manifest(out, "mean", resolved, args.surfaces, outputs)
    print(f"final variance: {result.variance_trace[-1]:.8g}")
    return 0


def cmd_pca(args) -> int:
    """Principal component model of registered surfaces about a mean."""
    cfg = {"use_squared": False, **_load_config(args.config)}
    _check_keys(cfg, {"use_squared"}, "pca config")
    mean = load_surface(args.mean)
    surfaces = [load_surface(p) for p in args.surfaces]
    out = _out_dir(args)

    model = shape_pca(surfaces, mean)
    save_model(model, out / "model.eshm")
    cv = cumulative_variance(model, use_squared=bool(cfg["use_squared"]))
    table = np.column_stack([np.arange(1, len(cv) + 1), cv])
    write_matrix_csv(out / "cumvar.csv", table, ["d", "fraction"])
    resolved = {"use_squared": bool(cfg["use_squared"]), "mean": str(args.mean)}
    _write_manifest(
        out, "pca", resolved, [args.mean, *args.surfaces], ["model.eshm", "cumvar.csv"]
    )
    print(
        f"directions: {model.n_directions}; "
        f"first cumulative fraction: {cv[0]:.4f}"
    )
    return 0


def cmd_scores(args) -> int:
    """Principal scores of surfaces under a saved model, with the
    reconstruction error at the chosen depth."""
    model = load_model(args.model)
    depth = args.depth if args.depth else model.n_directions
    if not 1 <= depth <= model.n_directions:
        raise ConfigError(
            f"depth {depth} out of range 1..{model.n_directions}"
        )
    out = _out_dir(args)

    ids, score_rows, err_rows = [], [], []
    worst = 0.0
    for p in args.surfaces:
        f = load_surface(p)
        if not f.grid.same_dims(model.mean.grid):
            raise InputError(f"{p}: grid does not match the model")
        z = pc_scores(f, model, depth)
        rebuilt = reconstruct(z, model)
        scale = max(float(np.linalg.norm(f.flat())), 1e-300)
        rel = float(np.linalg.norm(rebuilt.flat() - f.flat())) / scale
        worst = max(worst, rel)
        name = Path(p).stem
        while name in ids:
            name += "_"
        ids.append(name)
        score_rows.append([name, *z])
        err_rows.append([name, rel])

    header = ["id"] + [f"z{k}" for k in range(1, depth + 1)]
    _write_rows_csv(out / "scores.csv", header, score_rows)
    _write_rows_csv(out / "recon_error.csv", ["id", "rel_error"], err_rows)
    resolved = {"depth": depth, "model": str(args.model)}
    _write_manifest(
        out, "scores", resolved, [args.model, *args.surfaces],
        ["scores.csv", "recon_error.csv"],
    )
    print(f"max reconstruction relative error at depth {depth}: {worst:.3e}")
    return 0


def cmd_export_path(args) -> int:
    """Mesh frames along one principal direction with per-node difference
    fields against the mean."""
    model = load_model(args.model)
    k = args.component
    if k < 1:
        raise ConfigError("component must be at least 1")
    if k > model.n_directions:
        raise InputError(
            f"component {k} out of range: model has {model.n_directions}"
        )
    if args.frames < 2:
        raise ConfigError("frames must be at least 2")
    if args.t_max <= 0:
        raise ConfigError("t-max must be positive")
    out = _out_dir(args)

    t_values = np.linspace(-args.t_max, args.t_max, args.frames)
    frames = pc_path(model, k - 1, t_values)
    u_names = [f"u{i}" for i in range(model.mean.grid.n_u)]
    outputs = ["t_values.csv"]
    for j, fr in enumerate(frames):
        export_obj(fr, out / f"frame_{j:03d}.obj")
        write_matrix_csv(out / f"diff_{j:03d}.csv", diff_field(fr, model.mean), u_names)
        outputs += [f"frame_{j:03d}.obj", f"diff_{j:03d}.csv"]
    write_matrix_csv(out / "t_values.csv", t_values[:, None], ["t"])
    resolved = {"component": k, "frames": args.frames, "t_max": args.t_max,
                "model": str(args.model)}
    _write_manifest(out, "export-path", resolved, [args.model], outputs)
    print(f"wrote {args.frames} frames along component {k}")
    return 0


def _read_scores_csv(path, cov: CovariateTable) -> np.ndarray:
    """Score table for one structure, reordered to the covariate subjects.

    With an id column, rows are matched by id; otherwise row order must
    match the covariate file and the row count must agree.
    """
    p = Path(path)
    with p.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{p}: empty score table")
    header, body = rows[0], rows[1:]
    if not body:
        raise InputError(f"{p}: no score rows")
    try:
        if header and header[0].strip().lower() == "id":
            by_id = {r[0]: [float(x) for x in r[1:]] for r in body}
            missing = [s for s in cov.ids if s not in by_id]
            if missing:
                raise InputError(
                    f"{p}: missing scores for subjects: {', '.join(missing[:5])}"
                )
            mat = np.array([by_id[s] for s in cov.ids])
        else:
            mat = np.array([[float(x) for x in r] for r in body])
    except ValueError as exc:
        raise InputError(f"{p}: non-numeric score value ({exc})") from exc
    if mat.shape[0] != cov.n_subjects:
        raise InputError(
            f"{p}: {mat.shape[0]} rows for {cov.n_subjects} subjects"
        )
    return mat


def cmd_regress(args) -> int:
    """Stepwise model suite over covariates and per-structure scores."""
    cfg = {
        "scores": {},
        "criterion": "aic",
        "n_ps": None,
        "n_interact_ps": None,
        "strict": True,
        **_load_config(args.config),
    }
    _check_keys(
        cfg, {"scores", "criterion", "n_ps", "n_interact_ps", "strict"},
        "regress config",
    )
    scores_map = dict(cfg["scores"])
    for entry in args.scores or []:
        if "=" not in entry:
            raise ConfigError(f"--scores needs STRUCT=PATH, got '{entry}'")
        struct, path = entry.split("=", 1)
        scores_map[struct] = path
    if not scores_map:
        raise ConfigError("no score tables (use --scores STRUCT=PATH or config)")
    criterion = _pick(args.criterion, cfg["criterion"])
    strict = bool(cfg["strict"]) and not args.lenient

    cov = CovariateTable.from_csv(args.covariates, strict=strict)
    scores = {s: _read_scores_csv(p, cov) for s, p in sorted(scores_map.items())}
    available = min(m.shape[1] for m in scores.values())
    n_ps = int(_pick(args.n_ps, cfg["n_ps"], min(15, available)))
    if n_ps > available:
        raise InputError(
            f"n_ps {n_ps} exceeds available score columns ({available})"
        )
    n_interact = int(_pick(args.n_interact_ps, cfg["n_interact_ps"], min(5, n_ps)))
    if n_interact > n_ps:
        raise ConfigError("n_interact_ps cannot exceed n_ps")
    out = _out_dir(args)

    report = run_model_suite(
        cov, scores, n_ps=n_ps, n_interact_ps=n_interact, criterion=criterion
    )
    model_rows, term_rows = [], []
    for row in report:
        model_rows.append(
            [row["model_id"], row["response"], row["adj_r_squared"], row["n_terms"]]
        )
        for sel in row["selected"]:
            term_rows.append(
                [row["model_id"], sel["term"], sel["coefficient"], sel["sign"],
                 sel["p_value"]]
            )
    _write_rows_csv(
        out / "models.csv",
        ["model_id", "response", "adj_r_squared", "n_terms"],
        model_rows,
    )
    _write_rows_csv(
        out / "selected_terms.csv",
        ["model_id", "term", "coefficient", "sign", "p_value"],
        term_rows,
    )
    resolved = {"scores": {s: str(p) for s, p in scores_map.items()},
                "criterion": criterion, "n_ps": n_ps, "n_interact_ps": n_interact,
                "strict": strict, "covariates": str(args.covariates)}
    _write_manifest(
        out, "regress", resolved,
        [args.covariates, *scores_map.values()],
        ["models.csv", "selected_terms.csv"],
    )
    for row in report:
        print(
            f"model {row['model_id']} ({row['response']}): "
            f"adj R2 {row['adj_r_squared']:.4f}, {row['n_terms']} terms"
        )
    return 0


def cmd_compare(args) -> int:
    """Elastic vs vertex-wise pipeline on a mis-parameterized two-class cohort.

    Builds two shape classes on one direction, perturbs every surface by
    a seeded random reparameterization, then scores both pipelines with
    the inter/intra class distances and cumulative variance curves.
    """
    cfg = {**_CMP_DEFAULTS, **_load_config(args.config)}
    _check_keys(cfg, _CMP_DEFAULTS, "compare config")
    seed = int(_pick(args.seed, cfg["seed"]))
    n_u, n_v = _parse_grid(_pick(args.grid, cfg["grid"]))
    grid = make_grid(n_u, n_v)
    m = int(cfg["n_per_class"])
    if m < 2:
        raise ConfigError("n_per_class must be at least 2")
    n = 2 * m
    opts = _reg_opts({**_CMP_REG, **cfg["registration"]})
    out = _out_dir(args)

    mean, cohort = _shape_line_cohort(
        grid, seed, n, float(cfg["amplitude"]),
        float(cfg["mean_amplitude"]), int(cfg["flow_degree"]),
    )
    labels = cohort.labels
    seeds = _diffeo_seeds(seed, 2, n)
    perturbed = _perturb(
        cohort.surfaces, grid, seeds, float(cfg["perturb_magnitude"])
    )

    results = register_cohort(mean, perturbed, opts, threads=args.threads)
    aligned = [r.aligned for r in results]
    clouds_elastic = [f.points.reshape(-1, 3) for f in aligned]
    e_inter, e_intra = class_distances(clouds_elastic, labels)
    stacked = np.stack([f.points for f in aligned])
    model_elastic = shape_pca(aligned, Surface(grid=grid, points=stacked.mean(axis=0)))
    cv_elastic = cumulative_variance(model_elastic)

    reference = perturbed[0].points.reshape(-1, 3)
    clouds_vertex = [
        icp_register(reference, f.points.reshape(-1, 3)).aligned for f in perturbed
    ]
    v_inter, v_intra = class_distances(clouds_vertex, labels)
    model_vertex = vertex_pca(clouds_vertex)
    total = float(model_vertex.singulars.sum())
    if total > 0:
        cv_vertex = np.cumsum(model_vertex.singulars) / total
    else:
        cv_vertex = np.ones(len(model_vertex.singulars))

    _write_rows_csv(
        out / "class_distances.csv",
        ["pipeline", "d_inter", "d_intra", "margin"],
        [
            ["elastic", e_inter, e_intra, e_inter - e_intra],
            ["vertex", v_inter, v_intra, v_inter - v_intra],
        ],
    )
    for name, cv in (("elastic", cv_elastic), ("vertex", cv_vertex)):
        table = np.column_stack([np.arange(1, len(cv) + 1), cv])
        write_matrix_csv(out / f"cumvar_{name}.csv", table, ["d", "fraction"])
    _write_rows_csv(
        out / "labels.csv",
        ["id", "label", "coefficient"],
        zip(_ids(n), labels, cohort.coefficients),
    )
    outputs = ["class_distances.csv", "cumvar_elastic.csv", "cumvar_vertex.csv",
               "labels.csv"]
    resolved = {**cfg, "seed": seed, "grid": f"{n_u}x{n_v}",
                "registration": asdict(opts), "threads": args.threads}
    _write_manifest(out, "compare", resolved, [], outputs)
    print(f"elastic: d_inter {e_inter:.6g}, d_intra {e_intra:.6g}")
    print(f"vertex:  d_inter {v_inter:.6g}, d_intra {v_intra:.6g}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON config file")
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument(
        "--out", default=None, help="output directory (default <command>-out)"
    )
    common.add_argument("--threads", type=int, default=1, help="worker cap")
    common.add_argument("--grid", default=None, help="grid dims as N_UxN_V")
    common.add_argument("--verbose", action="store_true", help="info logging")

    parser = argparse.ArgumentParser(
        prog="elastishape",
        description="Elastic shape analysis pipeline for closed surfaces.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "simulate", parents=[common],
        help="distance/accuracy study across reparameterization stages",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "register", parents=[common], help="align one surface to another"
    )
    p.add_argument("fixed", help="target surface file")
    p.add_argument("moving", help="surface to align")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser(
        "mean", parents=[common], help="iterative mean shape of a cohort"
    )
    p.add_argument("surfaces", nargs="+", help="surface files")
    p.set_defaults(func=cmd_mean)

    p = sub.add_parser(
        "pca", parents=[common], help="principal components of registered surfaces"
    )
    p.add_argument("--mean", required=True, help="mean surface file")
    p.add_argument("surfaces", nargs="+", help="registered surface files")
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser(
        "scores", parents=[common], help="principal scores under a saved model"
    )
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--depth", type=int, default=0, help="score count (0 = all)")
    p.add_argument("surfaces", nargs="+", help="surface files")
    p.set_defaults(func=cmd_scores)

    p = sub.add_parser(
        "export-path", parents=[common],
        help="mesh frames along a principal direction",
    )
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--component", type=int, default=1, help="direction, 1-based")
    p.add_argument("--frames", type=int, default=7, help="frame count")
    p.add_argument("--t-max", type=float, default=2.0, dest="t_max",
                   help="path endpoint in singular-value units")
    p.set_defaults(func=cmd_export_path)

    p = sub.add_parser(
        "regress", parents=[common], help="stepwise covariate/score model suite"
    )
    p.add_argument("--covariates", required=True, help="covariate CSV")
    p.add_argument("--scores", action="append", default=None,
                   metavar="STRUCT=PATH", help="score table for one structure")
    p.add_argument("--criterion", choices=("aic", "bic"), default=None)
    p.add_argument("--n-ps", type=int, default=None, dest="n_ps")
    p.add_argument("--n-interact-ps", type=int, default=None, dest="n_interact_ps")
    p.add_argument("--lenient", action="store_true",
                   help="log range violations instead of failing")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser(
        "compare", parents=[common],
        help="elastic vs vertex-wise pipeline comparison",
    )
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    """Entry point; returns the process exit code."""
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        name = exc.filename if exc.filename else str(exc)
        print(f"error: missing input file: {name}", file=sys.stderr)
        return 3
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
