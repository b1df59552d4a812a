import argparse
import sys
from typing import Callable, Sequence

from pydantic import ValidationError

from common.utils import configure_logging, get_flow_aware_logger
from ksrecon import __version__
from ksrecon.cli import commands
from ksrecon.errors import (
    ConfigurationError,
    DegenerateInputError,
    DegenerateStatisticsError,
    DivergenceError,
    DomainMismatchError,
    FileFormatError,
    KsreconError,
    OutOfBoundsError,
    ShapeError,
    SliceReconstructionError,
)
from ksrecon.sraki.config import Method

logger = get_flow_aware_logger("ksrecon.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, (ValidationError, ConfigurationError)):
        return EXIT_USAGE
    if isinstance(error, DivergenceError):
        return EXIT_DIVERGED
    if isinstance(error, SliceReconstructionError):
        return EXIT_DIVERGED if error.diverged else EXIT_DATA
    if isinstance(
        error,
        (
            ShapeError,
            DomainMismatchError,
            FileFormatError,
            OutOfBoundsError,
            DegenerateInputError,
            DegenerateStatisticsError,
        ),
    ):
        return EXIT_DATA
    return EXIT_FAILURE


def _common(parser: argparse.ArgumentParser, out_help: str = "output directory") -> None:
    parser.add_argument("-o", "--out", help=out_help)
    parser.add_argument("--config", help="flat key=value file; command-line flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ksrecon",
        description="Self-consistency reconstruction of undersampled multi-coil k-space",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="logging level (default: $KSRECON_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a phantom, coil maps and k-space")
    _common(p)
    p.add_argument("--coils", type=int)
    p.add_argument("--dims", help="NXxNYxNZ, e.g. 64x64x32")
    p.add_argument("--snr", help="SNR in dB for the noisy copy ('inf' for none)")
    p.add_argument("--seed", type=int)
    p.add_argument("--spec", help="phantom spec file (key=value)")
    p.set_defaults(handler=commands.cmd_phantom)

    p = sub.add_parser("mask", help="generate a Poisson-disc sampling mask")
    _common(p)
    p.add_argument("--dims", help="NYxNZ")
    p.add_argument("--rate", type=float)
    p.add_argument("--acs", help="WYxWZ (default 40x10)")
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=commands.cmd_mask)

    p = sub.add_parser("undersample", help="apply a mask to a k-space volume")
    _common(p)
    p.add_argument("--data", help="k-space volume (.hdr)")
    p.add_argument("--mask", help="mask file (.msk)")
    p.set_defaults(handler=commands.cmd_undersample)

    p = sub.add_parser("recon", help="reconstruct an undersampled k-space volume")
    _common(p)
    p.add_argument("--method", choices=[m.value for m in Method])
    p.add_argument("--data", help="k-space volume (.hdr)")
    p.add_argument("--mask", help="mask file (.msk)")
    p.add_argument("--iters", type=int, help="reconstruction iterations (50/15/50 by method)")
    p.add_argument("--lr", type=float, help="sRAKI Adam step, relative to the local k-space amplitude (default 2)")
    p.add_argument("--lr-calib", dest="lr_calib", type=float, help="network calibration learning rate")
    p.add_argument("--calib-iters", dest="calib_iters", type=int)
    p.add_argument("--kernel", type=int, help="SPIRiT kernel size (default 5)")
    p.add_argument("--thresh-frac", dest="thresh_frac", type=float)
    p.add_argument("--tikhonov", type=float, help="SPIRiT calibration ridge weight")
    p.add_argument("--dc", choices=["strict", "soft"])
    p.add_argument("--beta", type=float, help="self-consistency weight for --dc soft")
    p.add_argument("--seed", type=int)
    p.add_argument("--per-slice", dest="per_slice", action="store_const", const=True)
    p.add_argument("--mask-mode", dest="mask_mode", choices=["checkerboard", "center"])
    p.add_argument(
        "--no-linear-branch",
        dest="linear_branch",
        action="store_const",
        const=False,
        help="train the sRAKI network without the calibrated linear branch",
    )
    p.add_argument("--solver", choices=["cg", "adam"], help="sRAKI reconstruction descent (default cg)")
    p.add_argument("--threads", type=int, help="slice workers (default $KSRECON_THREADS)")
    p.set_defaults(handler=commands.cmd_recon)

    p = sub.add_parser("metrics", help="score a reconstruction or compare result sets")
    _common(p)
    p.add_argument("--recon", help="reconstructed volume (.hdr)")
    p.add_argument("--ref", help="reference volume (.hdr)")
    p.add_argument("--phantom", help="phantom spec file supplying the vessel geometry")
    p.add_argument("--profile", type=int, help="vessel vertex index for the sharpness profile")
    p.add_argument("--half-width", dest="half_width", type=int)
    p.add_argument("--alpha", type=float, help="Deriche smoothing (default 1.0)")
    p.add_argument("--method", help="method label for the results row")
    p.add_argument("--rate", type=float, help="rate label for the results row")
    p.add_argument("--seed", type=int, help="seed label for the results row")
    p.add_argument("--runtime", type=float, help="runtime (s) for the results row")
    p.add_argument("--ttest", nargs=2, metavar="RESULTS", help="two results files or directories")
    p.set_defaults(handler=commands.cmd_metrics)

    p = sub.add_parser("export", help="write one plane of a volume as a 16-bit PGM")
    _common(p)
    p.add_argument("--volume", help="volume (.hdr)")
    p.add_argument("--axis", choices=["x", "y", "z"])
    p.add_argument("--index", type=int)
    p.add_argument("--name", help="output file name")
    p.set_defaults(handler=commands.cmd_export)

    p = sub.add_parser("bench", help="rate x seed x method sweep on a noisy phantom")
    _common(p)
    p.add_argument("--rates", help="comma separated, default 2,3,4,5")
    p.add_argument("--seeds", type=int)
    p.add_argument("--methods", help="comma separated subset of spirit,l1spirit,sraki")
    p.add_argument("--dims")
    p.add_argument("--coils", type=int)
    p.add_argument("--snr")
    p.add_argument("--acs")
    p.add_argument("--calib-iters", dest="calib_iters", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--threads", type=int)
    p.set_defaults(handler=commands.cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    handler: Callable = args.handler
    try:
        handler(args)
    except KsreconError as e:
        code = exit_code_for(e)
        logger.error(f"{args.command} failed: {e}")
        if code == EXIT_USAGE:
            print(parser.format_usage(), file=sys.stderr, end="")
        return code
    except ValidationError as e:
        logger.error(f"{args.command}: invalid options: {e}")
        print(parser.format_usage(), file=sys.stderr, end="")
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
