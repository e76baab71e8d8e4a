"""
Compressor static curves and gain smoothing
===========================================

The three base settings differ mostly in threshold and ratio. Print their
static curves side by side, then watch the smoother react to a loud burst.
"""

import numpy as np

from drcgenre import AudioBuffer, base_settings, compress
from drcgenre.compressor import db_from_linear, static_gain_soft_knee

levels = np.arange(-40.0, 1.0, 5.0)
bases = base_settings()
print("input dB " + "".join(f"{b.name:>10}" for b in bases))
for x in levels:
    row = [static_gain_soft_knee(x, b.settings.threshold_db, b.settings.ratio, b.settings.knee_width_db)
           for b in bases]
    print(f"{x:8.1f} " + "".join(f"{y:10.2f}" for y in row))

###############################################################################
# A 0.1 s burst at -3 dBFS between two quiet stretches. The attack time sets
# how fast the gain falls when the burst starts; release sets the recovery.

fs = 16000
t = np.arange(int(0.5 * fs)) / fs
env = np.where((t > 0.2) & (t < 0.3), 0.7, 0.05)
burst = AudioBuffer(env * np.sin(2 * np.pi * 220 * t), fs)
for b in bases:
    out = compress(burst, b.settings)
    peak_in = db_from_linear(np.abs(burst.samples[int(0.2 * fs):int(0.3 * fs)]).max())
    peak_out = db_from_linear(np.abs(out.samples[int(0.2 * fs):int(0.3 * fs)]).max())
    print(f"{b.name:>6}: burst peak {peak_in:6.2f} dB -> {peak_out:6.2f} dB")
