"""
Plot data module for the bdris-wideband project.
This module pivots a result table into one file per figure: a sweep_value
column followed by one mean-capacity column per scheme.
"""

import csv
import logging
import os

logger = logging.getLogger(__name__)


def plot_data_path(output_path):
    stem, _ = os.path.splitext(output_path)
    return f"{stem}_plot.csv"


def emit_plot_data(rows, output_path, schemes=None):
    """Write the pivoted table next to output_path and return its path."""
    if schemes is None:
        schemes = list(dict.fromkeys(row.scheme for row in rows))
    values = list(dict.fromkeys(row.sweep_value for row in rows))
    table = {(row.sweep_value, row.scheme): row.mean_capacity for row in rows}

    path = plot_data_path(output_path)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["sweep_value"] + list(schemes))
        for value in values:
            cells = [table.get((value, scheme), float("nan")) for scheme in schemes]
            writer.writerow([f"{value:.12g}"] + [f"{c:.12g}" for c in cells])
    logger.info(f"Plot data written to {path}")
    return path


def parse_plot_data(path):
    """(header, rows of floats) of a file written by emit_plot_data."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(cell) for cell in record] for record in reader if record]
    return header, rows
