from src.channel.fading import sample_rayleigh, sample_rician, sample_shadowed_rician
from src.channel.geometry import beam_gain, los_path_loss_db, nlos_path_loss_db, steering_vector
from src.channel.params import FadingParams, GeometryConfig
from src.channel.realization import ChannelRealization, draw_realization

__all__ = [
    "ChannelRealization",
    "FadingParams",
    "GeometryConfig",
    "beam_gain",
    "draw_realization",
    "los_path_loss_db",
    "nlos_path_loss_db",
    "sample_rayleigh",
    "sample_rician",
    "sample_shadowed_rician",
    "steering_vector",
]
