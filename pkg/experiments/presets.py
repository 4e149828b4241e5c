"""
Named partial configs for the published experiments. A config file and the
command-line flags are merged on top of the preset.
"""

PRESETS = {
    'fig3a': {'transmitters': {'spacing': 0.5}, 'sweep': {'grid_resolution': 0.05}},
    'fig3b': {'transmitters': {'spacing': 1.0}, 'sweep': {'grid_resolution': 0.05}},
    'fig3c': {'transmitters': {'spacing': 2.0}, 'sweep': {'grid_resolution': 0.05}},
    # BER against spacing
    'fig4': {'sweep': {'spacings': [0.25, 0.5, 1.0], 'snr_start': 50.0, 'snr_stop': 90.0}},
    # BER against the half-power semi-angle
    'fig5': {
        'transmitters': {'spacing': 1.0},
        'sweep': {'semi_angles': [15.0, 30.0, 45.0], 'snr_start': 50.0, 'snr_stop': 100.0},
    },
    'fig6': {
        'transmitters': {'spacing': 1.0},
        'sweep': {'snr_start': 50.0, 'snr_stop': 90.0},
        'mobility': {'velocity': 1.0, 'elapsed_times': [0.05, 0.1, 0.2], 'model': 'uniform'},
    },
    'fig7': {'transmitters': {'spacing': 0.5}, 'sweep': {'mimo_orders': [2, 4, 8], 'snr_start': 50.0, 'snr_stop': 100.0}},
    'fig8': {'transmitters': {'spacing': 0.5}, 'sweep': {'mimo_orders': [2, 4, 8], 'snr_start': 40.0, 'snr_stop': 90.0}},
}


def preset(name):
    """A copy of the named preset; KeyError lists the known names"""
    try:
        config = PRESETS[name]
    except KeyError:
        raise KeyError(f'unknown preset {name!r}, expected one of {", ".join(sorted(PRESETS))}') from None
    return {section: dict(values) for section, values in config.items()}
