"""SI to laboratory-unit conversions used only when rendering reports."""

GHZ = 1e9
PICOAMP = 1e-12
PER_CM2 = 1e4  # m^-2 per cm^-2
MICRON = 1e-6
NANOSECOND = 1e-9
PICOSECOND = 1e-12


def to_ghz(hz):
    return hz / GHZ


def to_pa(amperes):
    return amperes / PICOAMP


def to_per_cm2(per_m2):
    return per_m2 / PER_CM2


def to_um(meters):
    return meters / MICRON


def to_ns(seconds):
    return seconds / NANOSECOND
