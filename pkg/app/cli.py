#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
命令行入口

子命令：
- pvalue    计算 H₀: ρ = ρ⁰ 的 p 值
- ci        计算置信集，输出一行 kind,lo,hi
- cc        计算置信曲线并写出 CSV（可选 SVG）
- simulate  运行覆盖率模拟并写出结果 CSV

退出码：0 成功，1 数值/运行时失败，2 用法错误
"""

import argparse
import math
import re
import sys
import time
from typing import List, Optional, Sequence

from app.core.config import settings
from app.core.exceptions import BaseCustomException
from app.core.logger import logger, logger_manager, log_performance_metric
from app.schemas.curves import ConfidenceSet, SetKind
from app.schemas.estimates import Method
from app.services.attenuation import AttenuationService
from app.services.curves import write_curve_csv
from app.services.plotting import write_curve_svg
from app.services.simulation import load_config, run_coverage, summarize, write_records

SQRT_TOKEN = re.compile(r"^sqrt\((.+)\)$")


def parse_number(token: str) -> float:
    """解析数值，支持 sqrt(x) 写法"""
    token = token.strip()
    match = SQRT_TOKEN.match(token)
    try:
        if match:
            return math.sqrt(float(match.group(1)))
        return float(token)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number: {token!r}")


def float_list(value: str) -> List[float]:
    return [parse_number(token) for token in value.split(",")]


def int_list(value: str) -> List[int]:
    try:
        return [int(token) for token in value.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer list: {value!r}")


def format_number(value: float) -> str:
    return f"{value:.7g}"


def format_set(result: ConfidenceSet) -> str:
    """kind,lo,hi；非区间时依次列出所有端点对"""
    if result.kind is SetKind.EMPTY:
        return "empty,,"
    values = [format_number(v) for pair in result.endpoints for v in pair]
    return ",".join([result.kind.value, *values])


def _add_estimate_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--method", required=True, type=Method, choices=list(Method),
        metavar="{corr|free|cronbach|hs}", help="推断方法"
    )
    parser.add_argument("--r", required=True, type=float_list, help="r1,r2,r3（支持 sqrt(x)）")
    parser.add_argument("--n", required=True, type=int_list, help="N1[,N2,N3]")
    parser.add_argument("--k", type=int_list, help="k2,k3（仅 cronbach）")
    parser.add_argument(
        "--reliabilities", action="store_true", default=None,
        help="第 2、3 个值按信度解释（cronbach/hs 默认如此）"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="disattenuate",
        description="衰减校正相关系数的 p 值、置信集、置信曲线与覆盖率模拟"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="输出调试日志")
    subparsers = parser.add_subparsers(dest="command", required=True)

    pvalue_parser = subparsers.add_parser("pvalue", help="计算 p 值")
    _add_estimate_arguments(pvalue_parser)
    pvalue_parser.add_argument("--rho", required=True, type=parse_number, help="原假设 ρ⁰")

    ci_parser = subparsers.add_parser("ci", help="计算置信集")
    _add_estimate_arguments(ci_parser)
    ci_parser.add_argument("--level", type=float, default=settings.DEFAULT_LEVEL, help="置信水平")

    cc_parser = subparsers.add_parser("cc", help="计算置信曲线")
    _add_estimate_arguments(cc_parser)
    cc_parser.add_argument("--grid", type=int, default=settings.CC_GRID_SIZE, help="网格点数")
    cc_parser.add_argument("--out", required=True, help="曲线 CSV 路径")
    cc_parser.add_argument("--svg", help="可选的 SVG 输出路径")
    cc_parser.add_argument("--level", type=float, default=settings.DEFAULT_LEVEL, help="SVG 中水平线的位置")
    cc_parser.add_argument("--compare-hs", action="store_true", help="SVG 中叠加 Hunter-Schmidt 曲线")

    simulate_parser = subparsers.add_parser("simulate", help="覆盖率模拟")
    simulate_parser.add_argument("--config", required=True, help="JSON 配置路径")
    simulate_parser.add_argument("--out", required=True, help="结果 CSV 路径")
    simulate_parser.add_argument("--seed", type=int, help="覆盖配置中的随机种子（默认 0）")
    simulate_parser.add_argument("--threads", type=int, default=settings.SIM_THREADS, help="并发线程数")

    return parser


def _service(args: argparse.Namespace) -> AttenuationService:
    return AttenuationService.from_inputs(args.r, args.n, args.method, args.k, args.reliabilities)


def cmd_pvalue(args: argparse.Namespace) -> int:
    result = _service(args).pvalue(args.rho)
    print(format_number(result.p))
    return 0


def cmd_ci(args: argparse.Namespace) -> int:
    result = _service(args).confidence_set(args.level)
    print(format_set(result))
    return 0


def cmd_cc(args: argparse.Namespace) -> int:
    service = _service(args)
    curve = service.confidence_curve(args.grid)
    write_curve_csv(curve, args.out)

    if args.svg:
        comparison = service.comparison_curve(args.grid) if args.compare_hs else None
        estimate = service.point_estimates(args.grid).curve_minimizer
        write_curve_svg(curve, args.svg, level=args.level, comparison=comparison, estimate=estimate)
        logger.info(f"SVG 已写出: {args.svg}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise argparse.ArgumentTypeError("--seed must be a nonnegative 64-bit integer")
        config = config.model_copy(update={"seed": args.seed})
    if args.threads < 1:
        raise argparse.ArgumentTypeError("--threads must be at least 1")

    records = run_coverage(config, threads=args.threads)
    write_records(records, args.out)

    print("method,cells,mean,sd,failures")
    for summary in summarize(records):
        print(
            f"{summary.method.value},{summary.cells},{format_number(summary.mean)},"
            f"{format_number(summary.sd)},{summary.failures}"
        )
    return 0


COMMANDS = {
    "pvalue": cmd_pvalue,
    "ci": cmd_ci,
    "cc": cmd_cc,
    "simulate": cmd_simulate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse 在用法错误时退出码为 2，--help 时为 0
        return int(e.code or 0)
    if args.verbose:
        logger_manager.set_level("DEBUG")

    start = time.perf_counter()
    try:
        code = COMMANDS[args.command](args)
    except argparse.ArgumentTypeError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return 2
    except BaseCustomException as e:
        if e.exit_code == 2:
            parser.print_usage(sys.stderr)
        print(f"error: {e.message}", file=sys.stderr)
        logger.debug(f"{e.error_code}: {e.details}")
        return e.exit_code
    log_performance_metric("elapsed", time.perf_counter() - start, unit="s", context={"command": args.command})
    return code


if __name__ == "__main__":
    sys.exit(main())
