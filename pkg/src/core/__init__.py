from .errors import LocsepError
from .geometry import ArrayGeometry, SourceDirection, steering_vector, tdoa
from .signal import Spectrogram, TimeSignal, istft, stft
from .storage import atomic_write, load_json, save_json
from .validator import ArrayValidator
from .wavio import read_wav, write_wav
