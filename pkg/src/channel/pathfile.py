"""
Path and tap text format for the bdris-wideband project.

One whitespace-separated record per line, '#' starts a comment:

    # link attenuation delay_s azimuth_rad elevation_rad
    static 1.2e-06 2.1e-07 0.0 0.0
    tx 1.4e-04 1.9e-07 -0.785398 0.0

    # tap kind i j real imag      (kind is 'static' or 'cascaded'; i, j are 0-based)
    0 static - - 0.5 0.0
    3 cascaded 0 1 1e-08 -2e-08

Floats are written with 17 significant digits so values survive a round trip.
"""

import numpy as np

from src.channel.models import ChannelError, Path, PathSet, TapSet

LINKS = ("static", "tx", "rx")


def _records(lines):
    for number, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield number, line.split()


def format_paths(paths: PathSet):
    lines = ["# link attenuation delay_s azimuth_rad elevation_rad"]
    for link, group in zip(LINKS, (paths.static_paths, paths.tx_paths, paths.rx_paths)):
        for p in group:
            lines.append(f"{link} {p.attenuation:.17g} {p.delay:.17g} {p.azimuth:.17g} {p.elevation:.17g}")
    return "\n".join(lines) + "\n"


def parse_paths(text):
    groups = {link: [] for link in LINKS}
    for number, fields in _records(text.splitlines()):
        if len(fields) != 5 or fields[0] not in groups:
            raise ChannelError(f"line {number}: expected '<link> <attenuation> <delay_s> <azimuth_rad> <elevation_rad>'")
        attenuation, delay, azimuth, elevation = (float(x) for x in fields[1:])
        groups[fields[0]].append(Path(attenuation, delay, azimuth, elevation))
    return PathSet(groups["static"], groups["tx"], groups["rx"])


def write_paths(paths: PathSet, filename):
    with open(filename, "w") as f:
        f.write(format_paths(paths))


def read_paths(filename):
    with open(filename) as f:
        return parse_paths(f.read())


def format_taps(taps: TapSet):
    lines = ["# tap kind i j real imag"]
    for ell, value in enumerate(taps.static_taps):
        lines.append(f"{ell} static - - {value.real:.17g} {value.imag:.17g}")
    num_tx, num_rx, _ = taps.cascaded_taps.shape
    for i in range(num_tx):
        for j in range(num_rx):
            for ell, value in enumerate(taps.cascaded_taps[i, j]):
                lines.append(f"{ell} cascaded {i} {j} {value.real:.17g} {value.imag:.17g}")
    return "\n".join(lines) + "\n"


def parse_taps(text):
    static, cascaded = {}, {}
    for number, fields in _records(text.splitlines()):
        if len(fields) != 6 or fields[1] not in ("static", "cascaded"):
            raise ChannelError(f"line {number}: expected '<tap> <kind> <i> <j> <real> <imag>'")
        ell = int(fields[0])
        value = complex(float(fields[4]), float(fields[5]))
        if fields[1] == "static":
            static[ell] = value
        else:
            cascaded[(int(fields[2]), int(fields[3]), ell)] = value

    num_taps = max(static) + 1 if static else 0
    if not cascaded:
        raise ChannelError("tap file has no cascaded taps")
    num_tx = max(k[0] for k in cascaded) + 1
    num_rx = max(k[1] for k in cascaded) + 1
    num_taps = max(num_taps, max(k[2] for k in cascaded) + 1)

    static_taps = np.zeros(num_taps, dtype=complex)
    for ell, value in static.items():
        static_taps[ell] = value
    cascaded_taps = np.zeros((num_tx, num_rx, num_taps), dtype=complex)
    for key, value in cascaded.items():
        cascaded_taps[key] = value
    return TapSet(static_taps, cascaded_taps)


def write_taps(taps: TapSet, filename):
    with open(filename, "w") as f:
        f.write(format_taps(taps))


def read_taps(filename):
    with open(filename) as f:
        return parse_taps(f.read())
