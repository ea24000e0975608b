# Figure rendering for the report paths: boxplots of scaled errors for
# simulation summaries, and data-plus-link overlays for single fits.
# Uses the object-oriented matplotlib interface with the Agg canvas so
# rendering never touches a display or global pyplot state.

from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .estimators import EstimateResult, LinearLink
from .isotonic import StepFunction, eval_step
from .model import Sample
from .simulate import SimulationSummary
from .spline import SplineFit, eval_spline

__all__ = ["save_scaled_error_boxplot", "save_link_fit_figure"]

# Stable label order for the comparison figure.
_LABEL_ORDER = ("sse", "ese", "lse", "mre", "linear", "plse")


def _new_figure(width: float = 6.4, height: float = 4.2):
    fig = Figure(figsize=(width, height))
    FigureCanvasAgg(fig)
    return fig


def save_scaled_error_boxplot(summary: SimulationSummary, path) -> None:
    """Render boxplots of sqrt(n/d) * ||alpha_hat - alpha0|| per estimator."""
    names = [n for n in _LABEL_ORDER if n in summary.estimators]
    names += [n for n in summary.estimators if n not in names]
    if not names:
        raise ValueError("summary contains no estimators")
    fig = _new_figure()
    ax = fig.add_subplot(111)
    data = [summary.estimators[n].scaled_errors for n in names]
    ax.boxplot(data, tick_labels=[n.upper() for n in names])
    ax.set_ylabel(r"$\sqrt{n/d}\,\Vert\hat\alpha - \alpha_0\Vert_2$")
    ax.set_title(f"Scaled estimation error (n = {summary.n})")
    ax.grid(True, axis="y", alpha=0.3)
    fig.savefig(path, dpi=150)


def _link_curve(result: EstimateResult, grid: np.ndarray) -> np.ndarray:
    link = result.link
    if isinstance(link, StepFunction):
        return eval_step(link, grid)
    if isinstance(link, SplineFit):
        return eval_spline(link, grid)
    if isinstance(link, LinearLink):
        return link.intercept + link.slope * grid
    raise TypeError(f"unsupported link type {type(link).__name__}")


def save_link_fit_figure(sample: Sample, result: EstimateResult, path, estimator: str = "") -> None:
    """Scatter the projected data and overlay the fitted link."""
    t = sample.xs @ result.alpha_hat
    grid = np.linspace(float(t.min()), float(t.max()), 512)
    fig = _new_figure()
    ax = fig.add_subplot(111)
    ax.plot(t, sample.ys, ".", ms=3, alpha=0.55, label="data")
    if isinstance(result.link, StepFunction):
        ax.step(grid, _link_curve(result, grid), where="post", lw=1.5, label="fitted link")
    else:
        ax.plot(grid, _link_curve(result, grid), lw=1.5, label="fitted link")
    ax.set_xlabel("projected index")
    ax.set_ylabel("response")
    title = "Fitted link" + (f" ({estimator.upper()})" if estimator else "")
    ax.set_title(title)
    ax.legend(loc="best")
    fig.savefig(path, dpi=150)
