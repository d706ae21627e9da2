"""Printed ratio tables used as oracles (values at 4 decimals)."""

MIXTURE_RATIOS = {
    1: (0.0000, 0.0000, 0.0000, 0.0000, None),
    2: (1.0448, 0.3947, 0.2460, 0.2356, 1.7968),
    3: (1.0239, 0.9986, 0.9925, 0.9922, 1.8207),
    4: (1.0010, 0.9799, 0.9606, 0.8719, 11.7075),
    5: (1.0436, 0.8826, 0.7822, 0.7414, 3.1606),
    6: (1.7434, 0.9980, 0.7705, 0.7696, 1.9394),
    7: (1.4821, 0.9829, 0.8524, 0.8485, 1.8541),
    8: (1.5398, 1.0114, 0.9007, 0.8892, 1.7651),
    9: (1.3088, 1.0010, 0.9178, 0.9159, 1.8706),
    10: (1.0512, 0.9947, 0.9791, 0.9788, 1.8787),
    11: (1.0003, 1.0000, 0.9999, 0.9999, 1.8597),
    12: (1.0236, 1.0036, 1.0025, 1.0007, 1.5589),
    13: (1.0005, 1.0000, 0.9999, 0.9999, 1.7840),
    14: (1.0030, 1.0004, 1.0002, 1.0000, 1.5897),
    15: (1.0127, 1.0013, 1.0001, 0.9994, 1.6190),
}

SKEW_NORMAL_RATIOS = {
    0: (0.0000, 0.0000, 0.0000, 0.0000, None),
    1: (0.0762, 0.0232, 0.0134, 0.0118, 1.7270),
    2: (0.7636, 0.2669, 0.1645, 0.1531, 1.7594),
    3: (1.4625, 0.5783, 0.3945, 0.3748, 1.7624),
    4: (1.7888, 0.7836, 0.5839, 0.5583, 1.7480),
    5: (1.8678, 0.8963, 0.7133, 0.6850, 1.7320),
}

TOL = 5e-3


def row_errors(row, printed):
    """Absolute errors of the four ratio cells and of alpha_o (None when blank)."""
    got = (row.ratios[0.0], row.ratios[1.0], row.ratios[2.0], row.ratio_at_alpha_o)
    errs = [abs(g - p) for g, p in zip(got, printed[:4])]
    if printed[4] is None:
        ao_err = None if row.alpha_o is None else float("inf")
    else:
        ao_err = abs(row.alpha_o - printed[4])
    return errs, ao_err
