#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试运行脚本

提供便捷的测试运行命令和选项
"""

import argparse
import shutil
import subprocess
import sys
from pathlib import Path


def run_command(cmd: list, cwd: str = None) -> int:
    """
    运行命令并返回退出码
    """
    print(f"运行命令: {' '.join(cmd)}")
    try:
        result = subprocess.run(cmd, cwd=cwd, check=False)
        return result.returncode
    except KeyboardInterrupt:
        print("\n测试被用户中断")
        return 1


def clean(project_root: Path) -> None:
    """清理 pytest 缓存与覆盖率产物"""
    for name in (".pytest_cache", ".coverage", "htmlcov"):
        target = project_root / name
        if target.is_file():
            target.unlink()
        elif target.exists():
            shutil.rmtree(target)
        else:
            continue
        print(f"删除: {target}")


def main() -> int:
    parser = argparse.ArgumentParser(description="运行项目测试")
    parser.add_argument(
        "-t", "--type",
        choices=["unit", "integration", "api", "slow", "all"],
        default="all",
        help="测试类型 (默认: all)"
    )
    parser.add_argument("-f", "--file", help="指定测试文件或目录")
    parser.add_argument("--fast", action="store_true", help="跳过蒙特卡洛等慢速测试")
    parser.add_argument("-c", "--coverage", action="store_true", help="生成 HTML 覆盖率报告")
    parser.add_argument("-n", "--numprocesses", type=int, help="并行进程数")
    parser.add_argument("-x", "--exitfirst", action="store_true", help="第一个失败时停止")
    parser.add_argument("--lf", "--last-failed", action="store_true", help="只运行上次失败的测试")
    parser.add_argument("--clean", action="store_true", help="清理 pytest 缓存")
    args = parser.parse_args()

    project_root = Path(__file__).resolve().parent.parent

    if args.clean:
        clean(project_root)
        print("缓存清理完成")
        return 0

    cmd = [sys.executable, "-m", "pytest", args.file or "tests/"]

    markers = []
    if args.type != "all":
        markers.append(args.type)
    if args.fast:
        markers.append("not slow")
    if markers:
        cmd.extend(["-m", " and ".join(markers)])

    if args.coverage:
        cmd.append("--cov-report=html:htmlcov")
    if args.numprocesses:
        cmd.extend(["-n", str(args.numprocesses)])
    if args.exitfirst:
        cmd.append("-x")
    if args.lf:
        cmd.append("--lf")

    print("=" * 60)
    exit_code = run_command(cmd, cwd=str(project_root))
    print("=" * 60)
    print("✅ 所有测试通过!" if exit_code == 0 else "❌ 测试失败")
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
