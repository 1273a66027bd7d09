"""Tight (Parseval) short-time Fourier frame and time-frequency group layouts.

The window is the square root of a periodic Hann scaled so the squared
windows sum to one across overlapping frames, which makes analysis exactly
energy-preserving and synthesis (the adjoint) an exact left inverse.  The
signal is extended periodically, so ``analyze(synthesize(c))`` is an exact
orthogonal projection onto the frame range with no boundary corrections.

Grids are complex arrays of shape ``(n_bins, n_frames)``; flattening to a
coefficient vector is row-major (``grid.ravel()``, frequency-major).  Only
nonnegative-frequency bins are kept; interior bins carry a sqrt(2) weight so
that grid energy equals signal energy for real signals.
"""

from __future__ import annotations

import numpy as np

from .groups import GroupLayout, SuperGroupLayout

__all__ = ["StftFrame", "tf_group_layout"]


class StftFrame:
    """Parseval windowed-DFT frame for real signals of a fixed length.

    ``hop`` must divide both ``window_length`` and ``signal_length``, with at
    least 2x overlap; ``fft_size`` (default ``window_length``) may be larger
    for zero-padded frames.
    """

    def __init__(self, signal_length: int, window_length: int = 960, hop: int = 240,
                 fft_size: int | None = None):
        signal_length, window_length, hop = int(signal_length), int(window_length), int(hop)
        fft_size = window_length if fft_size is None else int(fft_size)
        if hop < 1 or window_length < 2 or signal_length < 1:
            raise ValueError("hop, window_length and signal_length must be positive")
        if window_length % hop != 0 or window_length // hop < 2:
            raise ValueError("hop must divide window_length with overlap factor >= 2")
        if signal_length % hop != 0:
            raise ValueError("hop must divide signal_length (periodic framing)")
        if signal_length < window_length:
            raise ValueError("signal_length must be at least window_length")
        if fft_size < window_length:
            raise ValueError("fft_size must be >= window_length")

        overlap = window_length // hop
        j = np.arange(window_length)
        hann = 0.5 - 0.5 * np.cos(2.0 * np.pi * j / window_length)
        self.window = np.sqrt(hann * (2.0 / overlap))
        self.hop = hop
        self.signal_length = signal_length
        self.fft_size = fft_size

        n_frames = signal_length // hop
        starts = np.arange(n_frames) * hop
        self._frame_idx = (starts[:, None] + j[None, :]) % signal_length
        n_bins = fft_size // 2 + 1
        weight = np.full(n_bins, np.sqrt(2.0))
        weight[0] = 1.0
        if fft_size % 2 == 0:
            weight[-1] = 1.0
        self._ana_scale = weight / np.sqrt(fft_size)
        self._syn_scale = self._ana_scale * fft_size / 2.0
        self._edge_scale = self._ana_scale * fft_size

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def n_frames(self) -> int:
        return self.signal_length // self.hop

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.n_bins, self.n_frames

    def analyze(self, x) -> np.ndarray:
        """Windowed DFT of all (periodic) frames; energy-preserving."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.signal_length,):
            raise ValueError(f"expected signal of length {self.signal_length}, got shape {x.shape}")
        frames = x[self._frame_idx] * self.window
        spec = np.fft.rfft(frames, n=self.fft_size, axis=1) * self._ana_scale
        return spec.T.copy()

    def synthesize(self, grid) -> np.ndarray:
        """Adjoint of :meth:`analyze`; exact left inverse on the frame range."""
        grid = np.asarray(grid)
        if grid.shape != self.grid_shape:
            raise ValueError(f"expected grid of shape {self.grid_shape}, got {grid.shape}")
        C = grid.T.astype(complex, copy=True)
        E = C * self._syn_scale
        E[:, 0] = self._edge_scale[0] * C[:, 0].real
        if self.fft_size % 2 == 0:
            E[:, -1] = self._edge_scale[-1] * C[:, -1].real
        d = np.fft.irfft(E, n=self.fft_size, axis=1)[:, : self.window.size] * self.window
        return np.bincount(self._frame_idx.ravel(), weights=d.ravel(),
                           minlength=self.signal_length)

    def project_range(self, grid) -> np.ndarray:
        """Orthogonal projection onto the range of the analysis operator."""
        return self.analyze(self.synthesize(grid))


def tf_group_layout(frame: StftFrame, width_freq: int, length_time: int,
                    supergroup_stack: int | None = None):
    """Rectangular time-frequency tiles as coefficient groups.

    Tiles span ``width_freq`` bins by ``length_time`` frames over the grid,
    with partial tiles at the upper edges.  Tiles are ordered time-major so
    frequency-adjacent tiles are consecutive; with ``supergroup_stack`` set,
    that many frequency-adjacent tiles are stacked into each super-group.
    Indices refer to the row-major flattening of the grid.
    """
    if width_freq < 1 or length_time < 1:
        raise ValueError("tile dimensions must be positive")
    if supergroup_stack is not None and supergroup_stack < 1:
        raise ValueError("supergroup_stack must be positive")
    n_bins, n_frames = frame.grid_shape
    f_edges = list(range(0, n_bins, width_freq)) + [n_bins]
    t_edges = list(range(0, n_frames, length_time)) + [n_frames]
    flat = np.arange(n_bins * n_frames).reshape(n_bins, n_frames)

    groups = []
    for t0, t1 in zip(t_edges[:-1], t_edges[1:]):
        for f0, f1 in zip(f_edges[:-1], f_edges[1:]):
            groups.append(flat[f0:f1, t0:t1].ravel())
    layout = GroupLayout(n_bins * n_frames, groups)
    if supergroup_stack is None:
        return layout

    n_freq_tiles = len(f_edges) - 1
    runs = []
    for tb in range(len(t_edges) - 1):
        base = tb * n_freq_tiles
        for f0 in range(0, n_freq_tiles, supergroup_stack):
            runs.append((base + f0, base + min(f0 + supergroup_stack, n_freq_tiles)))
    return SuperGroupLayout(layout, runs)
