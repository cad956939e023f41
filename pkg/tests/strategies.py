"""Hypothesis strategies shared by the property tests."""

import math

from hypothesis import strategies as st

from nanosphere import MeasurementParams, SystemParams

rates = st.floats(0.05, 4.0)


@st.composite
def system_params(draw, g_min=0.0):
    return SystemParams(
        1.0,
        draw(st.floats(-6.0, 6.0)),
        draw(st.floats(g_min, 3.0)),
        draw(rates),
        draw(st.floats(0.01, 1.0)),
    )


@st.composite
def measurement_params(draw, monitored=False):
    eta1 = draw(st.floats(0.0, 1.0))
    eta2 = draw(st.floats(0.0, 1.0))
    if monitored and eta1 + eta2 < 0.05:
        eta2 = 0.5
    return MeasurementParams(eta1, eta2, draw(st.floats(0.0, math.pi, exclude_max=True)))
