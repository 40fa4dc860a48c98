"""Report figures.  Rendered off-screen with fixed styling and stripped PNG
metadata so identical inputs produce identical files."""
import io as _io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "smxunmix",
}


def _save(fig, path):
    buf = _io.BytesIO()
    fig.savefig(buf, format="png", dpi=100, metadata={"Software": None})
    plt.close(fig)
    from .io import atomic_write
    atomic_write(path, buf.getvalue())


def plot_endmembers(wavelengths, M_true, M_hat, path, names=None):
    """True (red) against estimated (blue) spectra, one panel per endmember."""
    R = M_true.shape[1]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, R, figsize=(2.4 * R, 2.2), sharey=True, squeeze=False)
        for i, ax in enumerate(axes[0]):
            ax.plot(wavelengths, M_true[:, i], color="tab:red", lw=1.2, label="truth")
            ax.plot(wavelengths, M_hat[:, i], color="tab:blue", lw=0.9, label="estimate")
            ax.set_title(names[i] if names else f"endmember {i + 1}")
            ax.set_xlabel("wavelength (nm)")
        axes[0][0].set_ylabel("reflectance")
        axes[0][0].legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)


def plot_abundance_maps(A_true, A_hat, layout, path):
    """Two rows of grayscale maps: ground truth on top, estimate below."""
    h, w = layout
    R = A_hat.shape[0]
    rows = [("truth", A_true), ("estimate", A_hat)] if A_true is not None else [("estimate", A_hat)]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(rows), R, figsize=(2.0 * R, 2.0 * len(rows) * h / w + 0.4),
                                 squeeze=False)
        for r, (label, A) in enumerate(rows):
            for i in range(R):
                ax = axes[r][i]
                ax.imshow(np.asarray(A[i]).reshape(h, w), cmap="gray", vmin=0.0, vmax=1.0,
                          interpolation="nearest")
                ax.set_xticks([])
                ax.set_yticks([])
                if i == 0:
                    ax.set_ylabel(label)
                if r == 0:
                    ax.set_title(f"endmember {i + 1}")
        fig.tight_layout()
        _save(fig, path)


def plot_energy_map(energy, layout, path, title="nonlinear energy"):
    h, w = layout
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.2, 3.2 * h / w + 0.4))
        im = ax.imshow(np.asarray(energy).reshape(h, w), cmap="gray", interpolation="nearest")
        ax.set_title(title)
        ax.set_xticks([])
        ax.set_yticks([])
        fig.colorbar(im, ax=ax, fraction=0.046)
        fig.tight_layout()
        _save(fig, path)


def plot_history(history, path):
    ep = [r.epoch for r in history.records]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.4))
        for key in ("j_data", "j_total"):
            ax.semilogy(ep, [getattr(r, key) for r in history.records], label=key)
        ax.set_xlabel("epoch")
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)
