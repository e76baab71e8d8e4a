"""
A small compressor sweep
========================

Train on clean clips, compress only the test clips, and rank every grid
entry by mean accuracy. This uses a handful of grid entries and short clips
so it finishes in a few seconds; ``drcgenre sweep --synthetic`` runs all 90.
"""

from drcgenre import build_grid, run_sweep
from drcgenre.audio_io import DEFAULT_GENRES, synth_clip
from drcgenre.experiment import clips_from_buffers, format_table

clips = clips_from_buffers([(g.name, synth_clip(g, seed=i, duration=3.0))
                            for g in DEFAULT_GENRES for i in range(10)])
grid = [g for g in build_grid() if g.name in {"HT1", "HT5", "LM2", "LM1", "MR5", "HM5"}]
report = run_sweep(clips, grid, iterations=3, seed=1)
print(format_table(report, top_k=6))
