"""Command-line interface.

Subcommands mirror the library layers: `capacity-bound`, `support`,
and `sweep` for the sampler-universal upper bound; `periodic` for the
exact capacity of a concrete sampling system; `filterbank` and
`single-branch` for the achievability designs; `oracle` for the
finite-block cross-check; `density` for sampling-set diagnostics.
Channels, systems, and sampling sets come in as JSON documents; output
is deterministic JSON (sorted keys) or CSV for sweeps.  Reports carry
the quadrature grid actually used so results are reproducible.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import aliasing, oracle, systems
from .errors import SampcapError, ValidationError
from .spectrum import Grid, parse_channel_spec
from .support import select_support
from .waterfill import capacity_upper_bound

LN2 = float(np.log(2.0))

EPILOG = """\
exit codes:
  0  success
  2  validation failure (bad flag value, malformed or missing input file,
     request outside the model's domain)
  3  numeric nonconvergence
  4  infeasible sampling-system design
"""


def _read(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _load_channel(path):
    return parse_channel_spec(_read(path))


def _validate(args):
    # shared flag invariants; argparse already handles types and presence
    if getattr(args, "grid", None) is not None and args.grid < 16:
        raise ValidationError("grid: need at least 16 bins")
    for name in ("rate", "rate_min", "rate_max", "fq"):
        val = getattr(args, name, None)
        if val is not None and val <= 0:
            raise ValidationError("rate must be positive" if name != "fq" else "fq must be positive")
    if getattr(args, "power", None) is not None and args.power < 0:
        raise ValidationError("power must be nonnegative")
    if getattr(args, "steps", None) is not None and args.steps < 2:
        raise ValidationError("steps: a sweep needs at least 2 points")
    if getattr(args, "rate_max", None) is not None and args.rate_max < args.rate_min:
        raise ValidationError("rate-max must be at least rate-min")
    if getattr(args, "aliases", None) is not None and args.aliases < 1:
        raise ValidationError("aliases must be at least 1")
    if getattr(args, "periods", None) is not None and args.periods < 1:
        raise ValidationError("periods must be at least 1")
    if getattr(args, "tones", None) is not None and args.tones < 1:
        raise ValidationError("tones must be at least 1")
    if getattr(args, "tol", None) is not None and not 0 < args.tol < 1:
        raise ValidationError("tol must lie in (0, 1)")
    if getattr(args, "jitter", None) is not None and args.jitter < 0:
        raise ValidationError("jitter must be nonnegative")


def _emit(args, payload, text=None):
    out = text if text is not None else json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def _cap_fields(args, nats):
    if args.bits:
        return {"capacity_bits": nats / LN2}
    return {"capacity_nats": nats}


def _grid_report(g):
    return {"n_bins": g.n_bins, "window": list(g.window)}


def cmd_capacity_bound(args):
    s = _load_channel(args.channel)
    g = Grid.for_snr(s, args.grid)
    sel, wf = capacity_upper_bound(s, args.rate, args.power, g, tol=args.tol)
    payload = {
        "f_s": args.rate,
        "power": args.power,
        "nu": wf.nu,
        "support": sel.set.to_json(),
        "support_measure": sel.set.measure,
        "snr_threshold": sel.threshold,
        "grid": _grid_report(g),
        **_cap_fields(args, wf.capacity_nats),
    }
    _emit(args, payload)
    return 0


def cmd_support(args):
    s = _load_channel(args.channel)
    g = Grid.for_snr(s, args.grid)
    sel = select_support(s, args.rate, g)
    payload = {
        "f_s": args.rate,
        "intervals": sel.set.to_json(),
        "measure": sel.set.measure,
        "snr_threshold": sel.threshold,
        "captured_snr": sel.captured_snr,
        "grid": _grid_report(g),
    }
    _emit(args, payload)
    return 0


def _periodic_payload(args, system, s):
    g = aliasing.alias_grid(system, s, args.grid)
    L = args.aliases if args.aliases is not None else aliasing.auto_alias_count(system, s)
    wf = aliasing.periodic_capacity(system, s, args.power, g, L, tol=args.tol)
    return {
        "T_q": system.T_q,
        "f_s": system.f_s,
        "power": args.power,
        "aliases": L,
        "nu": wf.nu,
        "grid": _grid_report(g),
        **_cap_fields(args, wf.capacity_nats),
    }


def cmd_periodic(args):
    s = _load_channel(args.channel)
    system = aliasing.parse_system_spec(_read(args.system))
    payload = _periodic_payload(args, system, s)
    _emit(args, payload)
    return 0


def cmd_filterbank(args):
    s = _load_channel(args.channel)
    g = Grid.for_snr(s, args.grid)
    sel, wf = capacity_upper_bound(s, args.rate, args.power, g, tol=args.tol)
    design = systems.build_filterbank(sel.set, args.rate)
    payload = _periodic_payload(args, design.system, s)
    nats = payload.pop("capacity_nats", None)
    if nats is None:
        nats = payload.pop("capacity_bits") * LN2
    payload.update(
        {
            "system": aliasing.system_spec_json(design.system),
            "branch_rates": list(design.rates),
            "upper_bound_nats": wf.capacity_nats,
            "gap_nats": wf.capacity_nats - nats,
            **_cap_fields(args, nats),
        }
    )
    _emit(args, payload)
    return 0


def cmd_single_branch(args):
    s = _load_channel(args.channel)
    g = Grid.for_snr(s, args.grid)
    sel, wf = capacity_upper_bound(s, args.rate, args.power, g, tol=args.tol)
    design = systems.build_single_branch(sel.set, args.rate, f_mod=args.fq)
    payload = _periodic_payload(args, design.system, s)
    nats = payload.pop("capacity_nats", None)
    if nats is None:
        nats = payload.pop("capacity_bits") * LN2
    payload.update(
        {
            "system": aliasing.system_spec_json(design.system),
            "cell_rate": design.f_mod,
            "modulator": {str(k): [v.real, v.imag] for k, v in design.coeffs.items()},
            "sub_bands": list(design.sub_bands),
            "slots": list(design.slots),
            "alias_free": design.alias_free,
            "upper_bound_nats": wf.capacity_nats,
            "gap_nats": wf.capacity_nats - nats,
            **_cap_fields(args, nats),
        }
    )
    _emit(args, payload)
    return 0


def cmd_oracle(args):
    s = _load_channel(args.channel)
    system = aliasing.parse_system_spec(_read(args.system))
    if args.jitter > 0:
        rng = np.random.default_rng(args.seed)
        n_times = args.periods * sum(len(b.offsets) for b in system.branches)
        devs = rng.uniform(-args.jitter, args.jitter, n_times)
        blk, kadec = oracle.perturbed_block_capacity(
            system, s, args.power, args.periods, devs, args.tones
        )
    else:
        model = oracle.build_block_model(system, s, args.periods, args.tones)
        blk = oracle.block_capacity(model, args.power)
        kadec = None
    payload = {
        "T_blk": blk.T_blk,
        "n_periods": args.periods,
        "power": args.power,
        "nu": blk.nu,
        **_cap_fields(args, blk.capacity_nats),
    }
    if kadec is not None:
        payload["jitter"] = args.jitter
        payload["seed"] = args.seed
        payload["kadec"] = [
            {
                "rate": rep.rate,
                "max_deviation_periods": rep.deviation_periods,
                "bound_periods": rep.bound_periods,
                "satisfied": rep.satisfied,
            }
            for rep in kadec
        ]
    if args.compare:
        g = aliasing.alias_grid(system, s, args.grid)
        wf = aliasing.periodic_capacity(system, s, args.power, g)
        payload["periodic_nats"] = wf.capacity_nats
        payload["oracle_gap_nats"] = wf.capacity_nats - blk.capacity_nats
        payload["grid"] = _grid_report(g)
    _emit(args, payload)
    return 0


def cmd_sweep(args):
    s = _load_channel(args.channel)
    g = Grid.for_snr(s, args.grid)
    rates = np.linspace(args.rate_min, args.rate_max, args.steps)
    rows = []
    for f_s in rates:
        sel, wf = capacity_upper_bound(s, float(f_s), args.power, g, tol=args.tol)
        rows.append(
            {
                "f_s": float(f_s),
                "capacity_nats": wf.capacity_nats,
                "nu": wf.nu,
                "measure": sel.set.measure,
            }
        )
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["f_s", "capacity_nats", "nu", "measure"])
        writer.writeheader()
        writer.writerows(rows)
        _emit(args, None, text=buf.getvalue())
    else:
        _emit(args, {"power": args.power, "rows": rows, "grid": _grid_report(g)})
    return 0


def cmd_density(args):
    sset = systems.parse_sampling_set(_read(args.set))
    rep = systems.beurling_density(sset)
    payload = {
        "density_lower": rep.lower,
        "density_upper": rep.upper,
        "exact": rep.exact,
    }
    rate = args.rate
    if rate is None and not isinstance(sset, systems.FiniteSet):
        rate = rep.lower
    if rate is not None:
        kad = systems.kadec_check(sset, rate)
        payload["kadec"] = {
            "rate": kad.rate,
            "max_deviation_periods": kad.deviation_periods,
            "bound_periods": kad.bound_periods,
            "satisfied": kad.satisfied,
        }
    _emit(args, payload)
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="sampcap",
        description="Capacity of bandlimited Gaussian channels under sub-Nyquist sampling",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, channel=True, power=True, grid=True):
        if channel:
            sp.add_argument("--channel", required=True, help="channel spec JSON file")
        if power:
            sp.add_argument("--power", type=float, required=True, help="average power budget")
        if grid:
            sp.add_argument("--grid", type=int, default=4096, help="frequency bins (>= 16)")
        sp.add_argument("--tol", type=float, default=1e-9, help="water-level budget tolerance")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized options")
        sp.add_argument("--bits", action="store_true", help="report capacity in bits")
        sp.add_argument("--out", help="write output to a file instead of stdout")

    sp = sub.add_parser("capacity-bound", help="sampler-universal capacity upper bound")
    common(sp)
    sp.add_argument("--rate", type=float, required=True, help="sampling rate f_s")
    sp.set_defaults(func=cmd_capacity_bound)

    sp = sub.add_parser("support", help="SNR-maximal frequency support at a rate")
    common(sp, power=False)
    sp.add_argument("--rate", type=float, required=True)
    sp.set_defaults(func=cmd_support)

    sp = sub.add_parser("periodic", help="exact capacity of a periodic sampling system")
    common(sp)
    sp.add_argument("--system", required=True, help="system spec JSON file")
    sp.add_argument("--aliases", type=int, default=None, help="alias count L (default auto)")
    sp.set_defaults(func=cmd_periodic)

    sp = sub.add_parser("filterbank", help="capacity-achieving filter-bank design")
    common(sp)
    sp.add_argument("--rate", type=float, required=True)
    sp.add_argument("--aliases", type=int, default=None)
    sp.set_defaults(func=cmd_filterbank)

    sp = sub.add_parser("single-branch", help="capacity-achieving modulated single branch")
    common(sp)
    sp.add_argument("--rate", type=float, required=True)
    sp.add_argument("--fq", type=float, default=None, help="modulation cell rate")
    sp.add_argument("--aliases", type=int, default=None)
    sp.set_defaults(func=cmd_single_branch)

    sp = sub.add_parser("oracle", help="finite-block time-domain cross-check")
    common(sp)
    sp.add_argument("--system", required=True)
    sp.add_argument("--periods", type=int, default=32, help="block length in periods")
    sp.add_argument("--tones", type=int, default=None)
    sp.add_argument("--aliases", type=int, default=None)
    sp.add_argument("--jitter", type=float, default=0.0, help="amplitude of random time jitter")
    sp.add_argument(
        "--compare", action="store_true", help="also compute the frequency-domain value"
    )
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("sweep", help="capacity bound across sampling rates")
    common(sp)
    sp.add_argument("--rate-min", type=float, required=True)
    sp.add_argument("--rate-max", type=float, required=True)
    sp.add_argument("--steps", type=int, default=33)
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("density", help="sampling-set density and stability checks")
    sp.add_argument("--set", required=True, help="sampling set JSON file")
    sp.add_argument("--rate", type=float, default=None, help="reference rate")
    sp.add_argument("--out", help="write output to a file instead of stdout")
    sp.set_defaults(func=cmd_density)

    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
        return args.func(args)
    except SampcapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
