from ksrecon.phantom.generator import (
    add_noise,
    default_phantom_spec,
    gen_phantom,
    gen_sensitivities,
    load_phantom_spec,
    simulate_kspace,
    vessel_probe,
)
from ksrecon.phantom.models import CoilMaps, EllipsoidSpec, PhantomSpec, VesselProbe, VesselSpec

__all__ = [
    "CoilMaps",
    "EllipsoidSpec",
    "PhantomSpec",
    "VesselProbe",
    "VesselSpec",
    "add_noise",
    "default_phantom_spec",
    "gen_phantom",
    "gen_sensitivities",
    "load_phantom_spec",
    "simulate_kspace",
    "vessel_probe",
]
