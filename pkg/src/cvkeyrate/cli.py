"""Command-line entry point: ``cvkeyrate {simulate,estimate,keyrate,sweep}``."""

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from dataclasses import dataclass

import numpy as np

from .eigen_bounds import UncertaintyViolation
from .keyrate import DEFAULT_ALPHA_GRID, SearchConfig, key_rate, optimize_alpha
from .observation import (
    ChannelParams,
    HomodyneRecord,
    InsufficientDataError,
    ObservedStatistics,
    conditional_from_params,
    conditional_from_stats,
    estimate_statistics,
    sample_record,
    sift,
    stats_from_params,
)
from .quadrature import QuadratureConfig, QuadratureError

FIG2_DELTAS = (0.0, 0.0004, 0.0008, 0.0012, 0.0016, 0.0020, 0.0024)
SWEEP_COLUMNS = (
    "loss_db", "eta", "delta", "alpha_opt", "G", "G_floored", "I_xy",
    "S_E_given_X", "s_max", "gamma_star", "eps_star", "eps_tilde_star", "error",
)


class RecordParseError(ValueError):
    pass


def loss_to_eta(loss_db):
    if loss_db < 0:
        raise ValueError(f"loss must be >= 0 dB, got {loss_db}")
    return 10.0 ** (-loss_db / 10.0)


def eta_to_loss(eta):
    return -10.0 * math.log10(eta)


@dataclass(frozen=True)
class SweepSpec:
    loss_db_grid: tuple
    delta_list: tuple = FIG2_DELTAS
    search: SearchConfig = SearchConfig()
    quad: QuadratureConfig = QuadratureConfig()
    mean_scale: float = 1.0

    def __post_init__(self):
        if not self.loss_db_grid or not self.delta_list:
            raise ValueError("sweep grids must be nonempty")
        if min(self.loss_db_grid) < 0 or min(self.delta_list) < 0:
            raise ValueError("loss and delta values must be >= 0")


# -- records -----------------------------------------------------------------


def write_record(record, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("x,basis,y\n")
        fh.writelines(f"{x},{b},{y!r}\n" for x, b, y in zip(record.x.tolist(), record.basis, record.y.tolist()))


def read_record(path):
    """Parse a ``x,basis,y`` CSV file; errors name the offending line."""
    xs, bases, ys = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "basis", "y"]:
            raise RecordParseError(f"{path}:1: expected header 'x,basis,y', got {header}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 3:
                raise RecordParseError(f"{path}:{line}: expected 3 fields, got {len(row)}")
            x, basis, y = (f.strip() for f in row)
            if x not in ("0", "1"):
                raise RecordParseError(f"{path}:{line}: bad x value {x!r}")
            if basis not in ("q", "p"):
                raise RecordParseError(f"{path}:{line}: bad basis token {basis!r}")
            try:
                yv = float(y)
            except ValueError:
                raise RecordParseError(f"{path}:{line}: bad y value {y!r}") from None
            if not math.isfinite(yv):
                raise RecordParseError(f"{path}:{line}: non-finite y value {y!r}")
            xs.append(int(x))
            bases.append(basis)
            ys.append(yv)
    return HomodyneRecord(np.array(xs, dtype=np.int8), np.array(bases, dtype="<U1"), np.array(ys))


# -- commands ----------------------------------------------------------------


def cmd_simulate(params, n, seed, out_path):
    if n < 1:
        raise ValueError(f"n must be a positive count, got {n}")
    record = sample_record(conditional_from_params(params), n, seed)
    write_record(record, out_path)
    return record


def cmd_estimate(record_path):
    return estimate_statistics(*sift(read_record(record_path)))


def cmd_keyrate(cfg, quad=QuadratureConfig(), params=None, stats=None, alpha=None):
    """Breakdown for either channel parameters or observed statistics.

    With ``params`` and no ``alpha`` the signal amplitude is optimised over
    ``cfg.alpha_grid``.
    """
    if (params is None) == (stats is None):
        raise ValueError("give exactly one of channel parameters or statistics")
    if stats is not None:
        if alpha is None:
            raise ValueError("--alpha is required with --stats")
        return key_rate(stats, conditional_from_stats(stats), alpha, cfg, quad)
    if alpha is None:
        return optimize_alpha(params, cfg, quad)
    params = dataclasses.replace(params, alpha=alpha)
    return key_rate(stats_from_params(params), conditional_from_params(params), alpha, cfg, quad)


def _sweep_row(loss_db, delta, spec):
    eta = loss_to_eta(loss_db)
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row.update(loss_db=loss_db, eta=eta, delta=delta)
    try:
        params = ChannelParams(alpha=0.0, eta=eta, delta=delta, mean_scale=spec.mean_scale)
        b = optimize_alpha(params, spec.search, spec.quad)
    except (ValueError, ArithmeticError, QuadratureError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    pt = b.argmax
    row.update(
        alpha_opt=b.alpha_used,
        G=b.G,
        G_floored=b.G_floored,
        I_xy=b.I_xy,
        S_E_given_X=b.S_E_given_X,
        s_max=b.s_max,
        gamma_star=pt.gamma if pt else "",
        eps_star=pt.eps[0] if pt else "",
        eps_tilde_star=pt.eps_tilde[0] if pt else "",
    )
    return row


def cmd_sweep(spec, out_path=None):
    """Evaluate every (loss, delta) pair and write the rows sorted as CSV."""
    rows = [_sweep_row(l, d, spec) for l in spec.loss_db_grid for d in spec.delta_list]
    rows.sort(key=lambda r: (r["loss_db"], r["delta"]))
    if out_path is not None:
        with open(out_path, "w", newline="", encoding="utf-8") as fh:
            _write_rows(fh, rows)
    return rows


def _write_rows(fh, rows):
    w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf")
    return v


# -- argument parsing --------------------------------------------------------


def _float_list(text):
    """Comma list ``a,b,c`` or inclusive range ``start:stop:step``."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise argparse.ArgumentTypeError(f"bad range {text!r}, expected start:stop:step")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(max(n, 0)))
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _search_args(p):
    p.add_argument("--f-ec", type=float, default=1.0, help="reconciliation efficiency factor (>= 1)")
    p.add_argument("--n-eps", type=int, default=SearchConfig.n_eps)
    p.add_argument("--n-gamma", type=int, default=SearchConfig.n_gamma)
    p.add_argument("--alpha-grid", type=_float_list, default=DEFAULT_ALPHA_GRID)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--symmetric", dest="symmetric", action="store_true", default=True)
    g.add_argument("--asymmetric", dest="symmetric", action="store_false")


def _channel_args(p, alpha_required=False):
    p.add_argument("--alpha", type=float, required=alpha_required)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--eta", type=float)
    g.add_argument("--loss-db", type=float)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--mean-scale", type=float, default=1.0)


def _eta(args):
    if args.loss_db is not None:
        return loss_to_eta(args.loss_db)
    return 1.0 if args.eta is None else args.eta


def build_parser():
    parser = argparse.ArgumentParser(prog="cvkeyrate", description="Binary-modulated CV-QKD key rate bounds.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a simulated homodyne record")
    _channel_args(p, alpha_required=True)
    p.add_argument("-n", type=int, required=True, help="number of rounds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("estimate", help="print conditional moments of a record as JSON")
    p.add_argument("record")

    p = sub.add_parser("keyrate", help="print one key-rate breakdown as JSON")
    _channel_args(p)
    p.add_argument("--stats", help="statistics JSON file (from 'estimate'); '-' reads stdin")
    _search_args(p)

    p = sub.add_parser("sweep", help="loss x delta grid as CSV")
    p.add_argument("--loss-db", type=_float_list, default=_float_list("0:25:1"))
    p.add_argument("--delta", type=_float_list, default=FIG2_DELTAS)
    p.add_argument("--mean-scale", type=float, default=1.0)
    p.add_argument("--out", help="output CSV (stdout if omitted)")
    _search_args(p)
    return parser


def _search_config(args):
    return SearchConfig(
        n_eps=args.n_eps, n_gamma=args.n_gamma, alpha_grid=args.alpha_grid,
        symmetric=args.symmetric, f_ec=args.f_ec,
    )


def _load_stats(path):
    if path == "-":
        return ObservedStatistics.from_dict(json.load(sys.stdin))
    with open(path, encoding="utf-8") as fh:
        return ObservedStatistics.from_dict(json.load(fh))


def _run(args, parser):
    if args.command == "simulate":
        if args.n < 1:
            parser.error(f"-n must be a positive count, got {args.n}")
        params = ChannelParams(args.alpha, _eta(args), args.delta, args.mean_scale)
        cmd_simulate(params, args.n, args.seed, args.out)
        return 0

    if args.command == "estimate":
        print(json.dumps(cmd_estimate(args.record).to_dict(), indent=2))
        return 0

    if args.command == "keyrate":
        cfg = _search_config(args)
        if args.stats is not None:
            if args.eta is not None or args.loss_db is not None or args.delta:
                parser.error("--stats cannot be combined with channel parameters")
            if args.alpha is None:
                parser.error("--alpha is required with --stats")
            b = cmd_keyrate(cfg, stats=_load_stats(args.stats), alpha=args.alpha)
            out = {"source": args.stats}
        else:
            eta = _eta(args)
            params = ChannelParams(args.alpha or 0.0, eta, args.delta, args.mean_scale)
            b = cmd_keyrate(cfg, params=params, alpha=args.alpha)
            out = {"eta": eta, "loss_db": eta_to_loss(eta), "delta": args.delta}
        out.update(b.to_dict())
        print(json.dumps(out, indent=2))
        return 0

    spec = SweepSpec(tuple(args.loss_db), tuple(args.delta), _search_config(args), mean_scale=args.mean_scale)
    rows = cmd_sweep(spec, args.out)
    if args.out is None:
        _write_rows(sys.stdout, rows)
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args, parser)
    except (UncertaintyViolation, RecordParseError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
    except (ValueError, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
