"""Command-line pipeline: generate -> extract -> train -> unmix -> evaluate
-> export-map.

Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
"""
import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import io as fio
from .datagen import (WAVELENGTH_RANGE_NM, AbundanceMap, HsiCube, SpectralLibrary,
                      generate_scene)
from .errors import ContractError, DataError, NumericalError, UnmixError
from .metrics import evaluate as evaluate_metrics, nonlinear_energy_map
from .model import extract_endmembers, unmix
from .train import TrainConfig, train
from .vca import vca_extract

log = logging.getLogger("smxunmix")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _wavelengths_for(cube):
    if cube.provenance and "model" in cube.provenance:
        return np.linspace(*WAVELENGTH_RANGE_NM, cube.bands)
    return np.arange(1, cube.bands + 1, dtype=np.float64)


def cmd_generate(args):
    layout = (args.height, args.width) if args.height else None
    if layout and layout[0] * layout[1] != args.pixels:
        raise ContractError("--height * --width must equal --pixels")
    scene = generate_scene(args.model, args.r, args.b, args.pixels, args.snr_db, args.seed, layout)
    os.makedirs(args.out, exist_ok=True)
    fio.write_cube(scene.cube, os.path.join(args.out, "cube.smxc"))
    fio.write_library(scene.library, os.path.join(args.out, "endmembers.csv"))
    fio.write_abundances(scene.abundances, os.path.join(args.out, "abundances.smxc"))


def cmd_extract(args):
    cube = fio.read_cube(args.cube)
    res = vca_extract(cube, args.r, args.seed)
    log.info("VCA selected pixels %s", res.selected_pixel_indices)
    M = res.endmembers
    if np.any(M < 0):
        # noisy pixels can dip below zero; the decoder needs nonnegative blocks
        log.warning("clamping %d negative entries of the VCA endmembers to 0", int((M < 0).sum()))
        M = np.maximum(M, 0.0)
    names = [f"vca_px{i}" for i in res.selected_pixel_indices]
    fio.write_library(SpectralLibrary(_wavelengths_for(cube), M, names), args.out)


def load_config(path):
    if path is None:
        return TrainConfig()
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(d, dict) or any(isinstance(v, (dict, list)) for v in d.values()):
        raise DataError(f"{path}: config must be a flat JSON object")
    return TrainConfig.from_dict(d)


def cmd_train(args):
    cube = fio.read_cube(args.cube)
    lib = fio.read_library(args.init)
    if lib.bands != cube.bands:
        raise DataError(f"cube has {cube.bands} bands but the init library has {lib.bands}")
    cfg = load_config(args.config)
    params, history = train(cube, lib.spectra, cfg)
    fio.write_model(params, args.out_model)
    if args.out_history:
        history.to_csv(args.out_history)


def cmd_unmix(args):
    params = fio.read_model(args.model)
    cube = fio.read_cube(args.cube)
    if cube.bands != params.B:
        raise DataError(f"cube has {cube.bands} bands, model expects {params.B}")
    A, lin, nlin, hat = unmix(params, cube)
    fio.write_abundances(A, args.out_abund)
    if args.out_lin:
        fio.write_cube(lin, args.out_lin)
    if args.out_nlin:
        fio.write_cube(nlin, args.out_nlin)
    if args.out_recon:
        fio.write_cube(hat, args.out_recon)
    if args.out_endm:
        M = extract_endmembers(params)
        names = [f"est{i + 1}" for i in range(params.R)]
        fio.write_library(SpectralLibrary(_wavelengths_for(cube), M, names), args.out_endm)


def _report_paths(report):
    stem, _ = os.path.splitext(report)
    return stem + ".csv", stem + "_endmembers.png", stem + "_abundances.png"


def cmd_evaluate(args):
    A_true = fio.read_abundances(args.truth_abund)
    A_hat = fio.read_abundances(args.est_abund)
    M_true = fio.read_library(args.truth_endm)
    M_hat = fio.read_library(args.est_endm)
    if M_true.spectra.shape != M_hat.spectra.shape:
        raise DataError("true and estimated endmember libraries differ in shape")
    if A_true.values.shape != A_hat.values.shape:
        raise DataError("true and estimated abundance maps differ in shape")
    X = X_hat = None
    if (args.cube is None) != (args.recon is None):
        raise UsageError("--cube and --recon must be given together")
    if args.cube:
        X, X_hat = fio.read_cube(args.cube).data, fio.read_cube(args.recon).data
    rep = evaluate_metrics(M_true.spectra, M_hat.spectra, A_true.values, A_hat.values,
                           X, X_hat, symmetric_sid=args.symmetric_sid)
    fio.atomic_write(args.report, rep.to_text().encode("utf-8"))
    csv_path, em_png, ab_png = _report_paths(args.report)
    fio.atomic_write(csv_path, rep.to_csv().encode("utf-8"))
    if not args.no_figures:
        from . import plotting
        perm = rep.permutation
        plotting.plot_endmembers(M_true.wavelengths, M_true.spectra, M_hat.spectra[:, perm], em_png)
        plotting.plot_abundance_maps(A_true.values, A_hat.values[perm], A_hat.layout, ab_png)
    sys.stdout.write(rep.to_text())


def cmd_export_map(args):
    cube = fio.read_cube(args.input)
    if args.energy:
        values, vmax = nonlinear_energy_map(cube.data), None
    else:
        k = args.band if args.band is not None else args.endmember
        if not 0 <= k < cube.bands:
            raise DataError(f"index {k} outside 0..{cube.bands - 1}")
        values = cube.data[k]
        vmax = 1.0 if args.endmember is not None else None
    fio.export_map(values, cube.layout, args.out, vmax)


def build_parser():
    p = _Parser(prog="smxunmix", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="synthesize a ground-truthed scene")
    g.add_argument("--model", choices=["linear", "bilinear", "ppnm"], default="linear")
    g.add_argument("--r", type=int, default=4)
    g.add_argument("--b", type=int, default=224)
    g.add_argument("--pixels", type=int, default=5000)
    g.add_argument("--height", type=int)
    g.add_argument("--width", type=int)
    g.add_argument("--snr-db", type=float, default=30.0, help="use 'inf' for no noise")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("extract", help="VCA endmember initialization")
    e.add_argument("--cube", required=True)
    e.add_argument("--r", type=int, required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", required=True, help="library CSV")
    e.set_defaults(func=cmd_extract)

    t = sub.add_parser("train", help="train the autoencoder")
    t.add_argument("--cube", required=True)
    t.add_argument("--init", required=True, help="initial endmember library CSV")
    t.add_argument("--config", help="flat JSON training config")
    t.add_argument("--out-model", required=True)
    t.add_argument("--out-history")
    t.set_defaults(func=cmd_train)

    u = sub.add_parser("unmix", help="abundances and reconstructions from a trained model")
    u.add_argument("--model", required=True)
    u.add_argument("--cube", required=True)
    u.add_argument("--out-abund", required=True)
    u.add_argument("--out-lin")
    u.add_argument("--out-nlin")
    u.add_argument("--out-recon")
    u.add_argument("--out-endm", help="estimated endmember library CSV")
    u.set_defaults(func=cmd_unmix)

    v = sub.add_parser("evaluate", help="compare estimates with ground truth")
    v.add_argument("--truth-abund", required=True)
    v.add_argument("--truth-endm", required=True)
    v.add_argument("--est-abund", required=True)
    v.add_argument("--est-endm", required=True)
    v.add_argument("--cube")
    v.add_argument("--recon")
    v.add_argument("--report", required=True)
    v.add_argument("--symmetric-sid", action="store_true")
    v.add_argument("--no-figures", action="store_true")
    v.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("export-map", help="write one map as a PGM image")
    x.add_argument("--in", dest="input", required=True)
    sel = x.add_mutually_exclusive_group(required=True)
    sel.add_argument("--band", type=int)
    sel.add_argument("--endmember", type=int)
    sel.add_argument("--energy", action="store_true",
                     help="per-pixel squared norm of a nonlinear-component cube")
    x.add_argument("--out", required=True)
    x.set_defaults(func=cmd_export_map)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"smxunmix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"smxunmix: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UnmixError, ValueError, OSError, KeyError) as exc:
        print(f"smxunmix: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
