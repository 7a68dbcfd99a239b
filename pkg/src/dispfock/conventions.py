"""Phase and sign conventions used throughout the package.

Everything convention-dependent is fixed here and nowhere else.

Displacement
    ``D(delta) = exp(delta * a^dag - conj(delta) * a)``. Hence
    ``<1|D(delta)|0> = delta * exp(-|delta|^2 / 2)`` and
    ``<0|D(delta)|1> = -conj(delta) * exp(-|delta|^2 / 2)``.

Mode ordering
    Two signal modes, index 0 = H (horizontal), index 1 = V (vertical).
    Two-mode core operators are flattened with ``index = n_H * d + n_V``
    where ``d = cutoff + 1``.

Passive transforms
    A 2x2 unitary ``U`` maps creation operators as
    ``a_k^dag -> sum_j U[j, k] a_j^dag``. Single-photon amplitude vectors
    and coherent amplitudes therefore both transform as ``v -> U @ v``.

Half-wave plate
    ``hwp(theta) = [[cos 2theta, sin 2theta], [sin 2theta, -cos 2theta]]``
    (fast axis at ``theta`` from H, global phase dropped). It is real,
    symmetric and an involution. ``hwp(0)`` flips the sign of V, which is
    the blind operation; ``hwp(22.5 deg)`` is the shuffling operation.

Readout
    After the shuffling plate a PBS sends H to detector D2 and V to D3.
    ``M3 = +1`` is a D2-only click, ``M3 = -1`` a D3-only click. With these
    choices the noise-free disturbance is ``+2 sin(4 theta)``; flip
    :data:`M3_SIGN` to adopt the opposite port labelling.

Angles
    Library functions take radians. The CLI and plan files take degrees.
"""

import numpy as np

from .errors import ValidationError

H, V = 0, 1
MODES = {"H": H, "V": V}

#: +1 assigns M3=+1 to the D2 (H) port.
M3_SIGN = 1

BLIND_ANGLE = 0.0
SHUFFLE_ANGLE = np.pi / 8


def mode_index(mode):
    """Accept ``'H'``, ``'V'``, 0 or 1 and return the integer index."""
    if isinstance(mode, str):
        try:
            return MODES[mode.upper()]
        except KeyError:
            raise ValidationError(f"unknown mode {mode!r}; expected 'H' or 'V'") from None
    if mode in (0, 1):
        return int(mode)
    raise ValidationError(f"unknown mode {mode!r}; expected 'H' or 'V'")
