"""Dynamic range compression and music genre classification.

Modules
-------
audio_io     WAV I/O, mono buffers, synthetic genre clips
compressor   soft-knee feed-forward compressor
features     MFCC, tempo, zero-crossing rate, tonal centroid
svm          dual SMO solver, RBF kernel, one-vs-one voting
experiment   90-setting compressor sweep and ranking
"""

from .audio_io import AudioBuffer, GenreSpec, read_wav, synth_clip, write_wav
from .compressor import CompressorSettings, compress
from .experiment import base_settings, build_grid, run_sweep
from .features import FeatureVector, extract_feature_vector
from .svm import predict_ovo, train_ovo

__version__ = "0.1.0"
