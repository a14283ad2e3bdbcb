"""Independent reference calculations used by the tests.

None of these import the package. They restate each quantity from first
principles (symbol counting, linear-power link budgets, byte sums) so a test
can compare the library against a second, separately written evaluation.
"""

import math

# 802.11a OFDM framing constants, from the standard
PREAMBLE_US = 16
SIGNAL_US = 4
SYMBOL_US = 4
SERVICE_BITS = 16
TAIL_BITS = 6


def airtime_by_symbols(mpdu_bytes, rate_mbps):
    """PPDU duration by filling OFDM symbols one at a time."""
    bits_per_symbol = rate_mbps * SYMBOL_US
    payload_bits = SERVICE_BITS + 8 * mpdu_bytes + TAIL_BITS
    symbols = 0
    carried = 0
    while carried < payload_bits:
        carried += bits_per_symbol
        symbols += 1
    return PREAMBLE_US + SIGNAL_US + symbols * SYMBOL_US


# Values worked out by hand from the formula before the library existed.
HAND_AIRTIMES = {
    (200, 54): 52,   # 1622 bits / 216 per symbol -> 8 symbols
    (14, 6): 44,     # 134 / 24 -> 6 symbols
    (0, 6): 24,      # 22 / 24 -> 1 symbol
    (28, 6): 64,     # 246 / 24 -> 11 symbols
    (228, 54): 56,   # 1846 / 216 -> 9 symbols
}


def difs(sifs, slot):
    return sifs + 2 * slot


def pifs(sifs, slot):
    return sifs + slot


def mean_uniform_backoff(cw, slot):
    """E[k * slot] for k uniform on {0, ..., cw}."""
    return sum(k * slot for k in range(cw + 1)) / (cw + 1)


def cw_sequence(cw_min, cw_max, steps):
    out = [cw_min]
    for _ in range(steps):
        out.append(min(2 * out[-1] + 1, cw_max))
    return out


def dbm_to_mw(p):
    return 10 ** (p / 10)


def mw_to_dbm(p):
    return 10 * math.log10(p)


def two_ray_dbm(pt_dbm, gain_dbi, freq_hz, h, d):
    """Received power using linear-unit link budgets.

    Friis below the crossover distance, ht^2 hr^2 / d^4 at and beyond it.
    """
    lam = 299_792_458.0 / freq_hz
    pt = dbm_to_mw(pt_dbm)
    g = dbm_to_mw(gain_dbi)  # dBi to linear uses the same 10*log10 rule
    d_c = 4 * math.pi * h * h / lam
    if d < d_c:
        pr = pt * g * g * lam ** 2 / (4 * math.pi * d) ** 2
    else:
        pr = pt * g * g * h ** 2 * h ** 2 / d ** 4
    return mw_to_dbm(pr)


def crossover(h, freq_hz):
    return 4 * math.pi * h * h / (299_792_458.0 / freq_hz)


def codec_payload_bytes(bit_rate, frame_ms, frames=1):
    bits = bit_rate * frame_ms * frames / 1000
    return math.ceil(bits / 8)


RTP, UDP, IP = 12, 8, 20


def voip_wire_bytes(payload):
    return payload + RTP + UDP + IP


SIP_SIZES = {"REGISTER": 300, "INVITE": 620, "OK200": 450, "ACK": 250, "BYE": 250,
             "CANCEL": 250}
H323_SIZES = {"RAS": 120, "Q931": 260, "CAPS": 380, "OLC": 150}


def sip_initiator_bytes():
    """(sent, received) for a lossless SIP call set-up at the initiator."""
    sent = SIP_SIZES["REGISTER"] + SIP_SIZES["INVITE"] + SIP_SIZES["ACK"] + 3 * (UDP + IP)
    received = SIP_SIZES["OK200"] + (UDP + IP)
    return sent, received


def sip_setup_total():
    legs = ["INVITE", "OK200", "ACK"]
    return sum(SIP_SIZES[k] for k in legs)


def h323_setup_total():
    # ARQ, ACF, Setup, CallProceeding, Alerting, Connect, 2x caps, 2x OLC, 2x OLC ack
    return (2 * H323_SIZES["RAS"] + 4 * H323_SIZES["Q931"] + 2 * H323_SIZES["CAPS"]
            + 4 * H323_SIZES["OLC"])


def jitter_deadline(first_arrival, depth, seq, first_seq, period):
    return first_arrival + depth + (seq - first_seq) * period
