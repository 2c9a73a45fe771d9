"""Stand-alone scalar evaluation of the TR 38.901 formulas used as a test
oracle. Written from the standard's tables with the math module only; it
shares no code with the package."""

import math



def bp(h_bs, h_ut, fc_ghz):
    # breakpoint distance d'BP with h_E = 1 m, c = 3.0e8 m/s
    return 4.0 * (h_bs - 1.0) * (h_ut - 1.0) * fc_ghz * 1.0e9 / 3.0e8


def uma(los, d2d, h_bs, h_ut, fc):
    d3d = math.sqrt(d2d * d2d + (h_bs - h_ut) ** 2)
    dbp = bp(h_bs, h_ut, fc)
    if d2d <= dbp:
        pl_los = 28.0 + 22.0 * math.log10(d3d) + 20.0 * math.log10(fc)
    else:
        pl_los = (28.0 + 40.0 * math.log10(d3d) + 20.0 * math.log10(fc)
                  - 9.0 * math.log10(dbp * dbp + (h_bs - h_ut) ** 2))
    if los:
        return pl_los
    pl_n = 13.54 + 39.08 * math.log10(d3d) + 20.0 * math.log10(fc) - 0.6 * (h_ut - 1.5)
    return max(pl_los, pl_n)


def umi(los, d2d, h_bs, h_ut, fc):
    d3d = math.sqrt(d2d * d2d + (h_bs - h_ut) ** 2)
    dbp = bp(h_bs, h_ut, fc)
    if d2d <= dbp:
        pl_los = 32.4 + 21.0 * math.log10(d3d) + 20.0 * math.log10(fc)
    else:
        pl_los = (32.4 + 40.0 * math.log10(d3d) + 20.0 * math.log10(fc)
                  - 9.5 * math.log10(dbp * dbp + (h_bs - h_ut) ** 2))
    if los:
        return pl_los
    pl_n = 35.3 * math.log10(d3d) + 22.4 + 21.3 * math.log10(fc) - 0.3 * (h_ut - 1.5)
    return max(pl_los, pl_n)


def inh(los, d3d, fc):
    pl_los = 32.4 + 17.3 * math.log10(d3d) + 20.0 * math.log10(fc)
    if los:
        return pl_los
    return max(pl_los, 38.3 * math.log10(d3d) + 17.30 + 24.9 * math.log10(fc))


def p_los_uma(d2d, h_ut):
    if d2d <= 18.0:
        return 1.0
    if h_ut <= 13.0:
        c = 0.0
    else:
        c = ((h_ut - 13.0) / 10.0) ** 1.5
    return ((18.0 / d2d + math.exp(-d2d / 63.0) * (1.0 - 18.0 / d2d))
            * (1.0 + c * 5.0 / 4.0 * (d2d / 100.0) ** 3 * math.exp(-d2d / 150.0)))


def p_los_umi(d2d):
    if d2d <= 18.0:
        return 1.0
    return 18.0 / d2d + math.exp(-d2d / 36.0) * (1.0 - 18.0 / d2d)


def p_los_inh_mixed(d2d):
    if d2d <= 1.2:
        return 1.0
    if d2d < 6.5:
        return math.exp(-(d2d - 1.2) / 4.7)
    return math.exp(-(d2d - 6.5) / 32.6) * 0.32


def element_db(theta_deg, phi_deg, g_max=8.0):
    """3GPP single element: vertical and horizontal cuts combined."""
    av = -min(12.0 * ((theta_deg - 90.0) / 65.0) ** 2, 30.0)
    ah = -min(12.0 * (phi_deg / 65.0) ** 2, 30.0)
    return g_max - min(-(av + ah), 30.0)
