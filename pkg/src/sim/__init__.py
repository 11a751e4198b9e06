from .noise import NoiseSpec, synth_noise
from .room import Rir, RoomSpec, estimate_rt60, simulate_rir
from .scene import SamplerConfig, SceneSpec, SceneTruth, SourceRef, render_scene, sample_scene
from .sources import load_source, synth_speech
