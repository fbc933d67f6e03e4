"""Coherent information of the qubit-edge-qubit channel.

One rank-one factor per side never transmits; two chiral factors with
non-commuting detector axes approach a perfect channel as J grows.
"""
from udwqc.channel import capacity_sweep
from udwqc.cli import preset_text
from udwqc.config import parse_config

two = parse_config(preset_text("two_rank_one"))
one = parse_config(preset_text("single_rank_one"))

print(f"{'J':>6} {'two rank-one':>13} {'one rank-one':>13}")
Js = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 80.0]
a = capacity_sweep(two.setup(), Js, coupling="matched")
b = capacity_sweep(one.setup(), Js)
for ra, rb in zip(a, b):
    print(f"{ra.J:6.1f} {ra.coherent_info:13.4f} {rb.coherent_info:13.4f}")
