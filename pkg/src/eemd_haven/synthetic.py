"""
Synthetic stand-in for the post-election daily panel: 99 observations
from 2016-11-08 to 2017-02-15 (25 Dec missing), columns SPI, BP, gold,
silver and WTI, plus a monthly price index for deflation.

``python -m eemd_haven.synthetic DIR`` regenerates the bundled files.
"""

import os
import sys

import numpy as np

from .series import TimeSeries, write_csv

N_OBS = 99
SEED = 20161108


def panel_calendar():
    days = np.arange(np.datetime64("2016-11-08"), np.datetime64("2017-02-16"))
    return days[days != np.datetime64("2016-12-25")]


def make_panel(seed=SEED):
    """Return the five synthetic price series on the shared calendar.

    Every series is a sum of sinusoidal cycles (periods between about 3 and
    50 days) plus drift or a random walk. SPI loads with weight -0.3 on
    BP's fastest cycle, so a short-horizon negative BP coefficient is
    built in.
    """
    rng = np.random.default_rng(seed)
    dates = panel_calendar()
    t = np.arange(dates.size, dtype=float)

    def cycle(amplitude, period, phase):
        return amplitude * np.sin(2 * np.pi * t / period + phase)

    def noise(scale):
        return scale * rng.standard_normal(t.size)

    bp_fast = cycle(22.0, 3.6, 0.0)
    bp = (760.0 + 1.2 * t + bp_fast + cycle(18.0, 7.9, 1.0) + cycle(15.0, 12.0, 0.3)
          + cycle(25.0, 25.0, 2.0) + cycle(30.0, 50.0, 0.5) + noise(3.0))
    spi = (2180.0 + 0.4 * t - 0.3 * bp_fast + cycle(8.0, 4.3, 0.5) + cycle(7.0, 7.7, 2.1)
           + cycle(5.0, 13.2, 1.2) + cycle(9.0, 38.0, 0.1) + noise(2.0))
    gold = (1220.0 + cycle(6.0, 3.3, 0.2) + cycle(7.0, 8.4, 1.3) + cycle(8.0, 14.0, 0.8)
            + cycle(12.0, 30.0, 2.5) + np.cumsum(noise(3.0)))
    silver = (17.0 + cycle(0.10, 3.9, 1.1) + cycle(0.12, 7.1, 0.6) + cycle(0.15, 11.5, 2.9)
              + cycle(0.25, 28.0, 1.9) + np.cumsum(noise(0.08)))
    wti = (50.0 + cycle(0.5, 4.1, 0.9) + cycle(0.6, 9.2, 0.2) + cycle(0.7, 15.0, 1.7)
           + cycle(1.2, 33.0, 0.4) + np.cumsum(noise(0.3)))

    values = {"SPI": spi, "BP": bp, "gold": gold, "silver": silver, "WTI": wti}
    return [TimeSeries(name, dates, np.round(v, 4)) for name, v in values.items()]


def make_price_index():
    """Monthly index anchored on the first of each month, Nov 2016 - Mar 2017."""
    dates = np.array(["2016-11-01", "2016-12-01", "2017-01-01", "2017-02-01", "2017-03-01"],
                     dtype="datetime64[D]")
    return TimeSeries("CPI", dates, [241.35, 241.43, 242.84, 243.60, 243.80])


def write_bundle(directory):
    os.makedirs(directory, exist_ok=True)
    write_csv(os.path.join(directory, "synthetic_panel.csv"), make_panel())
    write_csv(os.path.join(directory, "cpi_monthly.csv"), make_price_index())


def data_path(name):
    return os.path.join(os.path.dirname(os.path.abspath(__file__)), "data", name)


if __name__ == "__main__":
    write_bundle(sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(data_path("x")))
