"""Published glass-fibre results used for side-by-side diagnostics.

The values are the fitted vectors and fit statistics reported for the
63-point glass-fibre strength data.  They are only used for reporting;
nothing in the library is tuned to them.
"""

GLASS_PARAMS = {
    "MOEGG": (2.2193, 0.6791, 1.3929, 19.1052),
    "MOEGE": (34.8741, 5.6105, 158.5649),
    "MOEGL": (27.3356, 6.0619, 176.9702),
    "BG": (0.0357, 2.8487, 1.6357, 1.0650),
    "McG": (0.0699, 2.1279, 2.0612, 2.6692, 4.8180),
    "GG": (1.6253, 0.0368, 2.8647),
    "GE": (31.3068, 2.6106),
    "Gompertz": (0.0091, 3.6262),
}

# second centre quoted for the MOEGG intervals; differs from GLASS_PARAMS
GLASS_MOEGG_INTERVAL_CENTRE = (2.2137, 0.7011, 1.3739, 20.1122)

GLASS_MOEGG_COVARIANCE_DIAGONAL = (4.03019, 0.51935, 0.38014, 902.45416)

GLASS_STATS = {
    "MOEGG": {"neg_loglik": 12.0571, "aic": 32.1143, "caic": 32.6660, "bic": 40.6868, "ks": 0.1008, "p_value": 0.5443, "cm": 0.0937, "ad": 0.5333},
    "MOEGE": {"neg_loglik": 16.1898, "aic": 38.3796, "caic": 38.6847, "bic": 44.8090, "ks": 0.1353, "p_value": 0.1993, "cm": 0.2861, "ad": 1.5587},
    "MOEGL": {"neg_loglik": 15.9565, "aic": 37.9129, "caic": 38.2180, "bic": 44.3423, "ks": 0.1309, "p_value": 0.2304, "cm": 0.2747, "ad": 1.4968},
    "BG": {"neg_loglik": 14.1443, "aic": 36.2886, "caic": 36.8403, "bic": 44.8611, "ks": 0.1323, "p_value": 0.2205, "cm": 0.1624, "ad": 0.9091},
    "McG": {"neg_loglik": 13.8548, "aic": 37.7097, "caic": 38.5868, "bic": 48.4253, "ks": 0.1316, "p_value": 0.2254, "cm": 0.1546, "ad": 0.8658},
    "GG": {"neg_loglik": 14.1456, "aic": 34.2912, "caic": 34.5963, "bic": 40.7206, "ks": 0.1321, "p_value": 0.2213, "cm": 0.1623, "ad": 0.9085},
    "GE": {"neg_loglik": 31.3835, "aic": 66.7670, "caic": 66.9003, "bic": 71.0532, "ks": 0.2290, "p_value": 0.0027, "cm": 0.7798, "ad": 4.2334},
    "Gompertz": {"neg_loglik": 14.8100, "aic": 33.6200, "caic": 33.7533, "bic": 37.9063, "ks": 0.2382, "p_value": 0.2458, "cm": 0.1460, "ad": 0.8348},
}

# reported p-values that cannot follow from their own K-S statistic at n = 63
INCONSISTENT_P_VALUES = ("Gompertz",)
