"""Command line interface.

Subcommands::

    afemlab run --config cfg.txt --mesh mesh.txt --out run.csv
                [--dump-indicators] [--dump-mesh-every N] [--dump-vtk FILE]
    afemlab verify --suite reduction|quasiorth|infsup|lipschitz
                [--config cfg.txt] [--out report.csv]
    afemlab mesh info mesh.txt

Config files are flat ``key = value`` lines with ``#`` comments; see the
README for the full key list (problem selection, marking, Newton and
stop-rule parameters).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import driver, mesh as msh, nlsolve, problems, verify
from .mark import MarkConfig


def load_config(path):
    """Parse flat ``key = value`` lines; later keys win."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _parse_source(spec_str, kind, m, exact_pack):
    if spec_str.startswith("const:"):
        c = float(spec_str.split(":", 1)[1])
        return (lambda x, y: c * np.ones_like(x)), None
    if spec_str == "mms":
        return None, exact_pack  # manufactured below
    raise ValueError(f"unsupported source spec {spec_str!r}")


def build_problem(cfg):
    """Problem selection from config keys (see README)."""
    kind = cfg.get("problem", "cubic_mms")
    p = float(cfg.get("p", "2"))
    exact_name = cfg.get("exact", "sinsin")
    packs = {"sinsin": problems.sinsin_mms, "bubble": problems.bubble_mms}
    if exact_name not in packs:
        raise ValueError(f"unknown exact solution {exact_name!r}")

    if kind == "cubic_mms":
        return packs[exact_name](p=p)

    if kind == "semilinear_power":
        m = int(cfg.get("m", "3"))
        f_spec = cfg.get("f", "const:1")
        if f_spec == "mms":
            mms = packs[exact_name](p=p)
            if m == 3:
                return mms

            def f(x, y, mms=mms, m=m):
                # rebuild the source for the requested exponent
                u = mms.exact(x, y)
                return mms.f(x, y) - u ** 3 + u ** m

            return problems.make_semilinear_power(
                m, f, p=p, exact=mms.exact, exact_grad=mms.exact_grad)
        f, _ = _parse_source(f_spec, kind, m, None)
        return problems.make_semilinear_power(m, f, p=p)

    if kind == "quasilinear_heat":
        kspec = cfg.get("kappa", "const:1")
        if kspec.startswith("const:"):
            c = float(kspec.split(":", 1)[1])
            kap = (lambda s: c + 0.0 * s)
            kap1 = (lambda s: 0.0 * s)
            kap2 = (lambda s: 0.0 * s)
        elif kspec == "quadratic":
            kap = (lambda s: 1.0 + s ** 2)
            kap1 = (lambda s: 2.0 * s)
            kap2 = (lambda s: 2.0 + 0.0 * s)
        else:
            raise ValueError(f"unsupported kappa spec {kspec!r}")
        b_spec = cfg.get("b", "")
        if b_spec:
            bx, by = (float(v) for v in b_spec.split(","))
            b_field = (lambda x, y, bx=bx, by=by:
                       (bx * np.ones_like(x), by * np.ones_like(x)))
        else:
            b_field = None
        f_spec = cfg.get("f", "const:1")
        f, _ = _parse_source(f_spec, kind, None, None)
        if f is None:
            raise ValueError("f = mms is not supported for "
                             "quasilinear_heat")
        return problems.make_quasilinear_heat(kap, kap1, kap2, b_field, f,
                                              p=p)

    raise ValueError(f"unknown problem kind {kind!r}")


def build_afem_config(cfg, mesh):
    mark = MarkConfig(
        strategy=cfg.get("mark.strategy", "dorfler"),
        theta=float(cfg.get("mark.theta", "0.5")),
        mu=float(cfg.get("mark.mu", "0.5")))
    newton = nlsolve.NewtonConfig(
        tol_residual=(float(cfg["newton.tol"]) if "newton.tol" in cfg
                      else None),
        max_iters=int(cfg.get("newton.max_iters", "30")),
        damping=cfg.get("newton.damping", "armijo"),
        linear_kind=cfg.get("linear.kind", "direct"),
        linear_tol=float(cfg.get("linear.tol", "1e-12")))
    get = cfg.get
    return driver.AfemConfig(
        problem=build_problem(cfg),
        mesh=mesh,
        mark=mark,
        ell=int(get("ell", "1")),
        newton=newton,
        tol_eta=float(get("stop.tol_eta")) if "stop.tol_eta" in cfg
        else None,
        max_dofs=int(get("stop.max_dofs")) if "stop.max_dofs" in cfg
        else None,
        max_iters=int(get("stop.max_iters")) if "stop.max_iters" in cfg
        else None,
        gamma=float(get("gamma")) if "gamma" in cfg else None,
        seed=int(get("seed", "0")))


def cmd_run(args):
    cfg = load_config(args.config)
    mesh = msh.read_mesh(args.mesh)
    afem_cfg = build_afem_config(cfg, mesh)
    report = driver.afem_run(afem_cfg)
    driver.write_report_csv(report, args.out)
    if args.dump_indicators:
        for k, field in enumerate(report.fields):
            driver.write_indicator_csv(
                field, f"{args.out}.indicators.k{k:04d}.csv")
    if args.dump_mesh_every:
        for k, m in enumerate(report.meshes):
            if k % args.dump_mesh_every == 0:
                msh.write_mesh(m, f"{args.out}.mesh.k{k:04d}.txt")
    if args.dump_vtk:
        driver.write_vtk(report.meshes[-1], args.dump_vtk,
                         point_data=report.solutions[-1].vertex_values())
    last = report.records[-1]
    print(f"stopped: {report.stop_reason} after {len(report.records)} "
          f"iterations, ndof={last.n_dofs}, eta={last.eta_total:.6e}")
    return 0


def cmd_verify(args):
    if args.suite not in verify.SUITES:
        print(f"unknown suite {args.suite!r}; choose from "
              f"{sorted(verify.SUITES)}", file=sys.stderr)
        return 2
    seed = 0
    if args.config:
        seed = int(load_config(args.config).get("seed", "0"))
    rows, passed = verify.SUITES[args.suite](seed=seed)

    def fmt(v):
        return repr(float(v)) if isinstance(v, (int, float, np.floating)) \
            else repr(v)

    lines = ["suite,check,value,threshold,status"]
    for suite, check, value, threshold, ok in rows:
        lines.append(f"{suite},{check},{fmt(value)},{fmt(threshold)},"
                     f"{'pass' if ok else 'fail'}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for suite, check, value, threshold, ok in rows:
        print(f"{'PASS' if ok else 'FAIL'} {suite}/{check}: "
              f"value={fmt(value)} threshold={fmt(threshold)}")
    print(f"{'PASS' if passed else 'FAIL'} {args.suite}: "
          f"{sum(1 for r in rows if r[-1])}/{len(rows)} checks passed")
    return 0 if passed else 1


def cmd_mesh_info(args):
    m = msh.read_mesh(args.mesh)
    st = msh.mesh_stats(m)
    n_boundary = int(m.on_boundary.sum())
    print(f"vertices:  {m.n_vertices} ({n_boundary} on boundary)")
    print(f"triangles: {m.n_triangles}")
    print(f"area:      {float(m.areas.sum())!r}")
    print(f"min angle: {st.min_angle!r}")
    print(f"max neighbor area ratio: {st.max_neighbor_area_ratio!r}")
    print(f"max vertex valence: {st.max_vertex_valence}")
    print(f"h range:   [{st.h_min!r}, {st.h_max!r}]")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="afemlab",
        description="adaptive P1 finite elements for nonlinear elliptic "
                    "PDEs")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the adaptive loop")
    run.add_argument("--config", required=True)
    run.add_argument("--mesh", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--dump-indicators", action="store_true")
    run.add_argument("--dump-mesh-every", type=int, default=0,
                     metavar="N")
    run.add_argument("--dump-vtk", default="", metavar="FILE")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("--suite", required=True,
                     choices=sorted(verify.SUITES))
    ver.add_argument("--config", default="")
    ver.add_argument("--out", default="")
    ver.set_defaults(func=cmd_verify)

    mesh_cmd = sub.add_parser("mesh", help="mesh utilities")
    mesh_sub = mesh_cmd.add_subparsers(dest="mesh_command", required=True)
    info = mesh_sub.add_parser("info", help="print mesh statistics")
    info.add_argument("mesh")
    info.set_defaults(func=cmd_mesh_info)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
