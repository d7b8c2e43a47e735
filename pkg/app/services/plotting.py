"""置信曲线的 SVG 输出"""

from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from app.core.exceptions import FileOperationException  # noqa: E402
from app.core.logger import logger  # noqa: E402
from app.schemas.curves import ConfidenceCurve  # noqa: E402


def write_curve_svg(
    curve: ConfidenceCurve,
    path: Union[str, Path],
    level: float = 0.95,
    comparison: Optional[ConfidenceCurve] = None,
    estimate: Optional[float] = None
) -> Path:
    """
    画置信曲线：模型方法为实线，comparison（通常是 HS）为虚线，
    水平线标出 level，estimate 给出时标出点估计
    """
    path = Path(path)
    # 固定 SVG 中的随机 id 与日期元数据，保证同样输入输出字节一致
    with plt.rc_context({"svg.hashsalt": "disattenuate", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 4))
        try:
            ax.plot(curve.grid, curve.cc, color="black", linestyle="-", label=curve.method.value)
            if comparison is not None:
                ax.plot(
                    comparison.grid, comparison.cc, color="black", linestyle="--",
                    label=comparison.method.value
                )
            ax.axhline(level, color="grey", linewidth=0.8)
            if estimate is not None and -1 <= estimate <= 1:
                ax.axvline(estimate, color="grey", linestyle=":", linewidth=0.8)

            ax.set_xlim(-1, 1)
            ax.set_ylim(0, 1)
            ax.set_xlabel("rho")
            ax.set_ylabel("1 - p")
            ax.legend(loc="lower left", frameon=False)
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as e:
            logger.error(f"写出 SVG 失败: {path} - {e}")
            raise FileOperationException("write", str(path)) from e
        finally:
            plt.close(fig)
    return path
